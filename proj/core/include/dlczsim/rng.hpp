// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

namespace dlczsim {

/// Small counter-style PRNG (splitmix64 core). Deterministic across
/// platforms, cheap to construct, so every trial can own an independent
/// stream derived from (master seed, trial index).
class TrialRng {
public:
    explicit TrialRng(std::uint64_t seed) : state_(seed) {}

    /// Stream for trial `index` under a master seed. Streams for distinct
    /// indices are decorrelated by the splitmix64 finalizer.
    static TrialRng for_trial(std::uint64_t master_seed, std::uint64_t index) {
        return TrialRng(mix(master_seed + 0x9e3779b97f4a7c15ULL * (index + 1)));
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    /// Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (pairs cached).
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    /// Index of the first cumulative bin exceeding a uniform draw;
    /// `probabilities` need not be normalized if `total` is their sum.
    template <typename Container>
    int next_categorical(const Container& probabilities, double total = 1.0) {
        double u = next_double() * total;
        int k = 0;
        const int last = static_cast<int>(probabilities.size()) - 1;
        for (const double p : probabilities) {
            if (u < p || k == last) return k;
            u -= p;
            ++k;
        }
        return last;
    }

    bool next_bernoulli(double p) { return next_double() < p; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Binomial(n, p) draw: exact Bernoulli loop for small n, normal
/// approximation (rounded, clamped) when n p (1-p) is large.
inline long long sample_binomial(TrialRng& rng, long long n, double p) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    if (n <= 64 || n * p * (1.0 - p) < 100.0) {
        long long k = 0;
        for (long long i = 0; i < n; ++i) k += rng.next_bernoulli(p);
        return k;
    }
    const double mean = static_cast<double>(n) * p;
    const double sd = std::sqrt(mean * (1.0 - p));
    const double draw = std::round(mean + sd * rng.next_gaussian());
    if (draw < 0.0) return 0;
    if (draw > static_cast<double>(n)) return n;
    return static_cast<long long>(draw);
}

/// Poisson(lambda) draw: Knuth product method for small lambda, normal
/// approximation for large.
inline long long sample_poisson(TrialRng& rng, double lambda) {
    if (lambda <= 0.0) return 0;
    if (lambda < 30.0) {
        const double limit = std::exp(-lambda);
        long long k = 0;
        double prod = rng.next_double();
        while (prod > limit) {
            ++k;
            prod *= rng.next_double();
        }
        return k;
    }
    const double draw = std::round(lambda + std::sqrt(lambda) * rng.next_gaussian());
    return draw < 0.0 ? 0 : static_cast<long long>(draw);
}

} // namespace dlczsim
