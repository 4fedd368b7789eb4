// SPDX-License-Identifier: Apache-2.0
#include "dlczsim/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dlczsim/errors.hpp"

namespace dlczsim::est {

using fock::Complex;

namespace {

constexpr double kProbFloor = 1e-12;

Eigen::Matrix2cd pauli_x() {
    Eigen::Matrix2cd m;
    m << 0, 1, 1, 0;
    return m;
}

Eigen::Matrix2cd pauli_y() {
    Eigen::Matrix2cd m;
    m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
    return m;
}

Eigen::Matrix2cd pauli_z() {
    Eigen::Matrix2cd m;
    m << 1, 0, 0, -1;
    return m;
}

Matrix kron2(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
    Matrix out(4, 4);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return out;
}

} // namespace

// --- fringe fitting -------------------------------------------------------------

FringeFit fit_fringe(const std::vector<double>& phases, const std::vector<double>& counts) {
    if (phases.size() != counts.size())
        throw ShapeError("fit_fringe: phases and counts differ in length");
    std::vector<double> distinct = phases;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end(),
                               [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                   distinct.end());
    if (distinct.size() < 5)
        throw DomainError("fit_fringe: need at least 5 distinct phase settings");
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    if (!(total > 0.0)) throw DomainError("fit_fringe: total counts must be positive");

    const auto n = static_cast<Eigen::Index>(phases.size());
    Eigen::MatrixXd x(n, 3);
    Eigen::VectorXd y(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = std::cos(phases[i]);
        x(i, 2) = std::sin(phases[i]);
        y(i) = counts[i];
        w(i) = 1.0 / std::max(counts[i], 1.0); // Poisson variance, floored at 1
    }
    const Eigen::MatrixXd xtw = x.transpose() * w.asDiagonal();
    const Eigen::Matrix3d normal = xtw * x;
    const Eigen::Vector3d rhs = xtw * y;
    const Eigen::Matrix3d cov = normal.inverse();
    const Eigen::Vector3d a = cov * rhs;

    FringeFit fit;
    fit.amplitude = a(0);
    const double r = std::hypot(a(1), a(2));
    if (!(a(0) > 0.0)) {
        fit.degenerate = true;
        fit.sigma_visibility = 1.0;
        fit.sigma_phase = M_PI;
        return fit;
    }
    fit.visibility = r / a(0);
    fit.phase_offset = std::atan2(a(2), a(1));

    // First-order propagation through V = r/a0, phi0 = atan2(a2, a1).
    Eigen::Vector3d gv, gp;
    if (r > 1e-300) {
        gv << -fit.visibility / a(0), a(1) / (a(0) * r), a(2) / (a(0) * r);
        gp << 0.0, -a(2) / (r * r), a(1) / (r * r);
    } else {
        gv << 0.0, 1.0 / a(0), 1.0 / a(0);
        gp << 0.0, 0.0, 0.0;
        fit.degenerate = true;
    }
    fit.sigma_visibility = std::sqrt(std::max(0.0, gv.dot(cov * gv)));
    fit.sigma_phase = r > 1e-300 ? std::sqrt(std::max(0.0, gp.dot(cov * gp))) : M_PI;

    if (fit.visibility > 1.0) {
        fit.visibility = 1.0;
        fit.clamped = true;
    }
    // No resolvable modulation: the fitted contrast is within noise of zero.
    if (fit.visibility < 2.0 * fit.sigma_visibility && fit.visibility < 0.05)
        fit.degenerate = true;
    return fit;
}

FringeFitPair fit_fringe(const FringeDataset& data) {
    std::vector<double> phases, plus, minus;
    phases.reserve(data.rows.size());
    for (const auto& row : data.rows) {
        if (row.n_plus < 0 || row.n_minus < 0 || row.heralds < 0)
            throw DomainError("fit_fringe: counts must be nonnegative");
        phases.push_back(row.phase);
        plus.push_back(static_cast<double>(row.n_plus));
        minus.push_back(static_cast<double>(row.n_minus));
    }
    return FringeFitPair{fit_fringe(phases, plus), fit_fringe(phases, minus)};
}

// --- mode matrix & concurrence ---------------------------------------------------

ModeDensityMatrix mode_matrix(const ModeCounts& counts, double visibility,
                              double sigma_visibility) {
    if (counts.heralds <= 0)
        throw DomainError("mode_matrix: estimate undefined without heralds");
    if (counts.n_l_only < 0 || counts.n_r_only < 0 || counts.n_both < 0)
        throw DomainError("mode_matrix: counts must be nonnegative");
    if (visibility < 0.0 || visibility > 1.0)
        throw DomainError("mode_matrix: visibility outside [0, 1]");

    const double nh = static_cast<double>(counts.heralds);
    ModeDensityMatrix m;
    m.p10 = counts.n_l_only / nh;
    m.p01 = counts.n_r_only / nh;
    m.p11 = counts.n_both / nh;
    m.p00 = 1.0 - m.p01 - m.p10 - m.p11;

    // Poisson sigma with the one-count floor for empty bins.
    const auto psig = [nh](long long n) {
        return std::sqrt(std::max(static_cast<double>(n), 1.0)) / nh;
    };
    m.sigma_p10 = psig(counts.n_l_only);
    m.sigma_p01 = psig(counts.n_r_only);
    m.sigma_p11 = psig(counts.n_both);
    m.sigma_p00 = std::sqrt(m.sigma_p01 * m.sigma_p01 + m.sigma_p10 * m.sigma_p10 +
                            m.sigma_p11 * m.sigma_p11);

    const double psum = m.p01 + m.p10;
    m.d = visibility * psum / 2.0;
    const double var_d =
        std::pow(psum / 2.0 * sigma_visibility, 2) +
        std::pow(visibility / 2.0, 2) *
            (m.sigma_p01 * m.sigma_p01 + m.sigma_p10 * m.sigma_p10);
    m.sigma_d = std::sqrt(var_d);

    const double coh_cap = std::sqrt(m.p01 * m.p10);
    m.coherence_unphysical = m.d > coh_cap + 3.0 * m.sigma_d;
    return m;
}

ConcurrenceBound concurrence_bound(const ModeDensityMatrix& m) {
    const double root = std::sqrt(std::max(0.0, m.p00 * m.p11));
    ConcurrenceBound out;
    out.value = 2.0 * std::max(0.0, std::abs(m.d) - root);

    // First-order propagation; at p11 = 0 the sqrt derivative is singular,
    // so use the finite one-sigma excursion instead.
    const double var_d = 4.0 * m.sigma_d * m.sigma_d;
    double var_p00 = 0.0, var_p11 = 0.0;
    if (m.p11 > 0.0 && m.p00 > 0.0) {
        var_p00 = m.p11 / m.p00 * m.sigma_p00 * m.sigma_p00;
        var_p11 = m.p00 / m.p11 * m.sigma_p11 * m.sigma_p11;
    } else {
        const double excursion = 2.0 * std::sqrt(std::max(0.0, m.p00) * m.sigma_p11);
        var_p11 = excursion * excursion;
    }
    out.sigma = std::sqrt(var_d + var_p00 + var_p11);
    return out;
}

ConcurrenceBound bootstrap_concurrence(const FringeDataset& fringe,
                                       const ModeCounts& counts, int n_resamples,
                                       std::uint64_t seed) {
    if (n_resamples < 2) throw DomainError("bootstrap_concurrence: need >= 2 resamples");
    std::vector<double> values;
    values.reserve(n_resamples);
    for (int b = 0; b < n_resamples; ++b) {
        TrialRng rng = TrialRng::for_trial(seed, static_cast<std::uint64_t>(b));
        FringeDataset fb = fringe;
        for (auto& row : fb.rows) {
            row.n_plus = sample_poisson(rng, static_cast<double>(row.n_plus));
            row.n_minus = sample_poisson(rng, static_cast<double>(row.n_minus));
        }
        ModeCounts cb = counts;
        cb.n_l_only = sample_poisson(rng, static_cast<double>(counts.n_l_only));
        cb.n_r_only = sample_poisson(rng, static_cast<double>(counts.n_r_only));
        cb.n_both = sample_poisson(rng, static_cast<double>(counts.n_both));
        try {
            const FringeFitPair fits = fit_fringe(fb);
            const ModeDensityMatrix mb =
                mode_matrix(cb, fits.plus.visibility, fits.plus.sigma_visibility);
            values.push_back(concurrence_bound(mb).value);
        } catch (const std::exception&) {
            // Degenerate resample (all counts zero); contributes a zero bound.
            values.push_back(0.0);
        }
    }
    std::sort(values.begin(), values.end());
    const auto quantile = [&](double q) {
        const double pos = q * (values.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        const double f = pos - lo;
        return values[lo] * (1.0 - f) + values[hi] * f;
    };
    ConcurrenceBound out;
    out.value = quantile(0.5);
    out.sigma = (quantile(0.841344746) - quantile(0.158655254)) / 2.0;
    return out;
}

// --- tomography -----------------------------------------------------------------

Eigen::Vector2cd analyzer_state(char label) {
    const double s = 1.0 / std::sqrt(2.0);
    Eigen::Vector2cd v;
    switch (label) {
        case 'H': v << 1, 0; break;
        case 'V': v << 0, 1; break;
        case 'D': v << s, s; break;
        case 'A': v << s, -s; break;
        case 'R': v << s, Complex(0, -s); break;
        case 'L': v << s, Complex(0, s); break;
        default:
            throw DomainError(std::string("analyzer_state: unknown label '") + label + "'");
    }
    return v;
}

Matrix setting_projector(char stokes, char anti_stokes) {
    const Eigen::Vector2cd a = analyzer_state(stokes);
    const Eigen::Vector2cd b = analyzer_state(anti_stokes);
    Eigen::Vector4cd v;
    v << a(0) * b(0), a(0) * b(1), a(1) * b(0), a(1) * b(1);
    return v * v.adjoint();
}

std::vector<TomoCount> sixteen_settings(long long shots_per_setting) {
    const char labels[4] = {'H', 'V', 'D', 'R'};
    std::vector<TomoCount> out;
    out.reserve(16);
    for (char s : labels)
        for (char a : labels) out.push_back(TomoCount{s, a, 0, shots_per_setting});
    return out;
}

namespace {

// 16 Hermitian basis operators (Pauli products) for rank checks and linear
// inversion.
std::vector<Matrix> pauli_basis() {
    std::vector<Eigen::Matrix2cd> single{Eigen::Matrix2cd::Identity(), pauli_x(),
                                         pauli_y(), pauli_z()};
    std::vector<Matrix> basis;
    basis.reserve(16);
    for (const auto& a : single)
        for (const auto& b : single) basis.push_back(kron2(a, b));
    return basis;
}

Matrix linear_inversion_seed(const std::vector<TomoCount>& counts,
                             const std::vector<Matrix>& projectors) {
    const auto basis = pauli_basis();
    const auto k = static_cast<Eigen::Index>(counts.size());
    Eigen::MatrixXd design(k, 16);
    Eigen::VectorXd freq(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < 16; ++j)
            design(i, j) = (projectors[i] * basis[j]).trace().real() / 4.0;
        freq(i) = counts[i].shots > 0
                      ? static_cast<double>(counts[i].clicks) / counts[i].shots
                      : 0.0;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(design,
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-9);
    if (svd.rank() < 16)
        throw ValidationError("tomography: setting set is rank-deficient (rank " +
                              std::to_string(svd.rank()) + " of 16)");
    const Eigen::VectorXd s = svd.solve(freq);
    Matrix rho = Matrix::Zero(4, 4);
    for (Eigen::Index j = 0; j < 16; ++j) rho += s(j) * basis[j] / 4.0;
    rho = ((rho + rho.adjoint()) / 2.0).eval();
    // Project to the physical set before taking a Cholesky factor.
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(1e-6);
    ev /= ev.sum();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

// Lower-triangular Cholesky-style parameterization: 4 real diagonal entries
// followed by re/im of the 6 sub-diagonal entries.
Matrix unpack_t(const Eigen::VectorXd& x) {
    Matrix t = Matrix::Zero(4, 4);
    t(0, 0) = x(0);
    t(1, 1) = x(1);
    t(2, 2) = x(2);
    t(3, 3) = x(3);
    int k = 4;
    const int pairs[6][2] = {{1, 0}, {2, 0}, {2, 1}, {3, 0}, {3, 1}, {3, 2}};
    for (const auto& ij : pairs) {
        t(ij[0], ij[1]) = Complex(x(k), x(k + 1));
        k += 2;
    }
    return t;
}

Eigen::VectorXd pack_t(const Matrix& t) {
    Eigen::VectorXd x(16);
    x(0) = t(0, 0).real();
    x(1) = t(1, 1).real();
    x(2) = t(2, 2).real();
    x(3) = t(3, 3).real();
    int k = 4;
    const int pairs[6][2] = {{1, 0}, {2, 0}, {2, 1}, {3, 0}, {3, 1}, {3, 2}};
    for (const auto& ij : pairs) {
        x(k) = t(ij[0], ij[1]).real();
        x(k + 1) = t(ij[0], ij[1]).imag();
        k += 2;
    }
    return x;
}

Matrix rho_from_t(const Matrix& t) {
    Matrix s = t * t.adjoint();
    const double tau = s.trace().real();
    return s / tau;
}

struct Likelihood {
    const std::vector<TomoCount>* counts;
    const std::vector<Matrix>* projectors;

    double value(const Eigen::VectorXd& x) const {
        const Matrix rho = rho_from_t(unpack_t(x));
        double ll = 0.0;
        for (std::size_t i = 0; i < counts->size(); ++i) {
            const auto& c = (*counts)[i];
            if (c.shots <= 0) continue;
            const double p = std::clamp(((*projectors)[i] * rho).trace().real(),
                                        kProbFloor, 1.0 - kProbFloor);
            ll += c.clicks * std::log(p) + (c.shots - c.clicks) * std::log1p(-p);
        }
        return ll;
    }

    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const {
        const Matrix t = unpack_t(x);
        const Matrix s = t * t.adjoint();
        const double tau = s.trace().real();
        const Matrix rho = s / tau;
        Matrix g = Matrix::Zero(4, 4);
        for (std::size_t i = 0; i < counts->size(); ++i) {
            const auto& c = (*counts)[i];
            if (c.shots <= 0) continue;
            const double p = std::clamp(((*projectors)[i] * rho).trace().real(),
                                        kProbFloor, 1.0 - kProbFloor);
            const double coeff = c.clicks / p - (c.shots - c.clicks) / (1.0 - p);
            g += coeff * (*projectors)[i];
        }
        const Matrix gt = (g - (g * rho).trace().real() * Matrix::Identity(4, 4)) * t;
        Eigen::VectorXd grad(16);
        grad(0) = 2.0 / tau * gt(0, 0).real();
        grad(1) = 2.0 / tau * gt(1, 1).real();
        grad(2) = 2.0 / tau * gt(2, 2).real();
        grad(3) = 2.0 / tau * gt(3, 3).real();
        int k = 4;
        const int pairs[6][2] = {{1, 0}, {2, 0}, {2, 1}, {3, 0}, {3, 1}, {3, 2}};
        for (const auto& ij : pairs) {
            grad(k) = 2.0 / tau * gt(ij[0], ij[1]).real();
            grad(k + 1) = 2.0 / tau * gt(ij[0], ij[1]).imag();
            k += 2;
        }
        return grad;
    }
};

struct MleOutcome {
    Eigen::VectorXd x;
    double log_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;
};

// L-BFGS (two-loop recursion) maximizing the binomial log-likelihood over
// the Cholesky parameters.
MleOutcome maximize_likelihood(const Likelihood& lik, Eigen::VectorXd x,
                               double tol, int max_iter) {
    const int memory = 10;
    std::vector<Eigen::VectorXd> s_hist, y_hist;
    std::vector<double> rho_hist;

    double f = lik.value(x);
    Eigen::VectorXd g = lik.gradient(x);

    MleOutcome out;
    for (int iter = 0; iter < max_iter; ++iter) {
        // two-loop recursion on the ascent direction
        Eigen::VectorXd q = g;
        std::vector<double> alpha(s_hist.size());
        for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
            alpha[i] = rho_hist[i] * s_hist[i].dot(q);
            q -= alpha[i] * y_hist[i];
        }
        if (!s_hist.empty()) {
            const double gamma =
                s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
            q *= gamma;
        }
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            const double beta = rho_hist[i] * y_hist[i].dot(q);
            q += (alpha[i] - beta) * s_hist[i];
        }
        Eigen::VectorXd dir = q;
        if (dir.dot(g) <= 0.0) dir = g; // fall back to steepest ascent

        // Armijo backtracking
        double step = 1.0;
        const double slope = dir.dot(g);
        double f_new = f;
        Eigen::VectorXd x_new = x;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = x + step * dir;
            f_new = lik.value(x_new);
            if (f_new >= f + 1e-4 * step * slope) break;
            step *= 0.5;
        }
        const Eigen::VectorXd g_new = lik.gradient(x_new);
        const Eigen::VectorXd s_vec = x_new - x;
        const Eigen::VectorXd y_vec = g - g_new; // ascent: curvature pair sign-flipped
        const double sy = s_vec.dot(y_vec);
        if (sy > 1e-12) {
            s_hist.push_back(s_vec);
            y_hist.push_back(y_vec);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > memory) {
                s_hist.erase(s_hist.begin());
                y_hist.erase(y_hist.begin());
                rho_hist.erase(rho_hist.begin());
            }
        }
        const double delta = f_new - f;
        x = x_new;
        g = g_new;
        f = f_new;
        out.iterations = iter + 1;
        if (std::abs(delta) < tol) {
            out.converged = true;
            break;
        }
    }
    out.x = x;
    out.log_likelihood = f;
    return out;
}

} // namespace

TwoQubitTomoResult tomography(const std::vector<TomoCount>& counts,
                              const TomoOptions& options) {
    if (counts.empty()) throw ValidationError("tomography: no settings given");
    long long total = 0;
    for (const auto& c : counts) {
        if (c.clicks < 0 || c.shots < 0 || c.clicks > c.shots)
            throw DomainError("tomography: invalid counts");
        total += c.clicks;
    }
    if (total <= 0) throw DomainError("tomography: total counts must be positive");

    std::vector<Matrix> projectors;
    projectors.reserve(counts.size());
    for (const auto& c : counts)
        projectors.push_back(setting_projector(c.stokes, c.anti_stokes));

    const Matrix seed = linear_inversion_seed(counts, projectors);
    const Eigen::LLT<Matrix> llt(seed + 1e-9 * Matrix::Identity(4, 4));
    Eigen::VectorXd x0 = pack_t(llt.matrixL());

    const Likelihood lik{&counts, &projectors};
    const MleOutcome mle =
        maximize_likelihood(lik, x0, options.tol_log_likelihood, options.max_iterations);

    TwoQubitTomoResult result;
    result.rho = rho_from_t(unpack_t(mle.x));
    result.log_likelihood = mle.log_likelihood;
    result.iterations = mle.iterations;
    result.converged = mle.converged;
    result.concurrence = wootters_concurrence(result.rho);
    result.fidelity = fidelity(result.rho, [] {
        Vector v = Vector::Zero(4);
        v(0) = v(3) = 1.0 / std::sqrt(2.0);
        return v;
    }());

    if (options.bootstrap_resamples > 0) {
        std::vector<double> cs, fs;
        cs.reserve(options.bootstrap_resamples);
        fs.reserve(options.bootstrap_resamples);
        for (int b = 0; b < options.bootstrap_resamples; ++b) {
            TrialRng rng = TrialRng::for_trial(options.bootstrap_seed,
                                               static_cast<std::uint64_t>(b));
            std::vector<TomoCount> resampled = counts;
            for (std::size_t i = 0; i < counts.size(); ++i) {
                const double p_hat =
                    counts[i].shots > 0
                        ? static_cast<double>(counts[i].clicks) / counts[i].shots
                        : 0.0;
                resampled[i].clicks = sample_binomial(rng, counts[i].shots, p_hat);
            }
            // warm start from the point estimate: a handful of refinement steps
            const Likelihood lik_b{&resampled, &projectors};
            const MleOutcome mb = maximize_likelihood(lik_b, mle.x,
                                                      options.tol_log_likelihood, 200);
            const Matrix rho_b = rho_from_t(unpack_t(mb.x));
            cs.push_back(wootters_concurrence(rho_b));
            Vector bell = Vector::Zero(4);
            bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
            fs.push_back(fidelity(rho_b, bell));
        }
        const auto stddev = [](std::vector<double>& v) {
            const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
            double acc = 0.0;
            for (double x : v) acc += (x - mean) * (x - mean);
            return std::sqrt(acc / (v.size() - 1));
        };
        result.sigma_concurrence = stddev(cs);
        result.sigma_fidelity = stddev(fs);
    }
    return result;
}

double wootters_concurrence(const Matrix& rho) {
    if (rho.rows() != 4 || rho.cols() != 4)
        throw ShapeError("wootters_concurrence: expected a 4x4 matrix");
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-8)
        throw ValidationError("wootters_concurrence: matrix not Hermitian");
    if (std::abs(rho.trace().real() - 1.0) > 1e-6)
        throw ValidationError("wootters_concurrence: trace != 1");
    Eigen::SelfAdjointEigenSolver<Matrix> check(rho);
    if (check.eigenvalues().minCoeff() < -1e-8)
        throw ValidationError("wootters_concurrence: matrix not positive semidefinite");

    const Matrix yy = kron2(pauli_y(), pauli_y());
    const Matrix rho_tilde = yy * rho.conjugate() * yy;
    Eigen::ComplexEigenSolver<Matrix> es(rho * rho_tilde);
    std::array<double, 4> lam{};
    for (int i = 0; i < 4; ++i)
        lam[i] = std::sqrt(std::max(0.0, es.eigenvalues()(i).real()));
    std::sort(lam.begin(), lam.end(), std::greater<>());
    return std::max(0.0, lam[0] - lam[1] - lam[2] - lam[3]);
}

double fidelity(const Matrix& rho, const Vector& target) {
    if (rho.rows() != rho.cols() || rho.rows() != target.size())
        throw ShapeError("fidelity: dimension mismatch");
    const double f = (target.adjoint() * rho * target)(0).real();
    return std::clamp(f, 0.0, 1.0);
}

// --- CHSH -------------------------------------------------------------------------

namespace {

Eigen::Matrix2cd coherence_observable(double theta, bool mirrored) {
    const double sign = mirrored ? -1.0 : 1.0;
    return std::cos(theta) * pauli_x() + sign * std::sin(theta) * pauli_y();
}

} // namespace

ChshResult chsh(const std::array<ChshSettingCounts, 4>& counts) {
    ChshResult out;
    double var_s = 0.0;
    for (int k = 0; k < 4; ++k) {
        const auto& c = counts[k];
        const long long tot = c.total();
        if (tot <= 0)
            throw DomainError("chsh: setting " + std::to_string(k) + " has no counts");
        const double e =
            static_cast<double>(c.n_pp + c.n_mm - c.n_pm - c.n_mp) / tot;
        out.correlations[k] = e;
        const double var = (1.0 - e * e) / static_cast<double>(tot);
        out.sigma_correlations[k] = std::sqrt(std::max(var, 0.0));
        var_s += var;
    }
    out.s = std::abs(out.correlations[0] - out.correlations[1] + out.correlations[2] +
                     out.correlations[3]);
    out.sigma_s = std::sqrt(var_s);
    return out;
}

ChshResult chsh_from_state(const Matrix& rho, const ChshAngles& angles) {
    if (rho.rows() != 4 || rho.cols() != 4)
        throw ShapeError("chsh_from_state: expected a 4x4 matrix");
    const std::array<std::pair<double, double>, 4> settings{
        std::pair{angles.a, angles.b}, {angles.a, angles.b_prime},
        {angles.a_prime, angles.b}, {angles.a_prime, angles.b_prime}};
    ChshResult out;
    for (int k = 0; k < 4; ++k) {
        const Matrix obs = kron2(coherence_observable(settings[k].first, false),
                                 coherence_observable(settings[k].second, true));
        out.correlations[k] = (obs * rho).trace().real();
        out.sigma_correlations[k] = 0.0;
    }
    out.s = std::abs(out.correlations[0] - out.correlations[1] + out.correlations[2] +
                     out.correlations[3]);
    out.sigma_s = 0.0;
    return out;
}

std::array<double, 4> chsh_outcome_probabilities(const Matrix& rho, double a_angle,
                                                 double b_angle) {
    if (rho.rows() != 4 || rho.cols() != 4)
        throw ShapeError("chsh_outcome_probabilities: expected a 4x4 matrix");
    const Eigen::Matrix2cd oa = coherence_observable(a_angle, false);
    const Eigen::Matrix2cd ob = coherence_observable(b_angle, true);
    const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
    const auto proj = [&](const Eigen::Matrix2cd& o, int sign) {
        return ((id + static_cast<double>(sign) * o) / 2.0).eval();
    };
    std::array<double, 4> p{};
    int k = 0;
    for (int sa : {+1, -1})
        for (int sb : {+1, -1}) {
            p[k] = std::max(0.0, (kron2(proj(oa, sa), proj(ob, sb)) * rho).trace().real());
            ++k;
        }
    const double tot = p[0] + p[1] + p[2] + p[3];
    for (double& v : p) v /= tot;
    return p;
}

// --- CSV ----------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) fields.push_back(field);
    return fields;
}

} // namespace

std::vector<CountRow> read_count_table(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("read_count_table: cannot open " + path);
    std::vector<CountRow> rows;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (first && fields.size() >= 3 && fields[0] == "setting") {
            first = false;
            continue;
        }
        first = false;
        if (fields.size() < 4)
            throw ValidationError("read_count_table: expected 4 columns, got line '" +
                                  line + "'");
        CountRow row;
        row.setting = fields[0];
        row.outcome = fields[1];
        try {
            row.counts = std::stoll(fields[2]);
            row.shots = std::stoll(fields[3]);
        } catch (const std::exception&) {
            throw ValidationError("read_count_table: non-numeric counts in line '" +
                                  line + "'");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_count_table(const std::string& path, const std::vector<CountRow>& rows) {
    std::ofstream f(path);
    if (!f) throw ValidationError("write_count_table: cannot open " + path);
    f << "setting,outcome,counts,shots\n";
    for (const auto& r : rows)
        f << r.setting << "," << r.outcome << "," << r.counts << "," << r.shots << "\n";
}

std::vector<TomoCount> tomo_counts_from_table(const std::vector<CountRow>& rows) {
    std::vector<TomoCount> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        if (r.setting.size() != 2)
            throw ValidationError("tomo_counts_from_table: setting must be two analyzer "
                                  "labels, got '" + r.setting + "'");
        out.push_back(TomoCount{r.setting[0], r.setting[1], r.counts, r.shots});
    }
    return out;
}

std::vector<CountRow> tomo_counts_to_table(const std::vector<TomoCount>& counts) {
    std::vector<CountRow> rows;
    rows.reserve(counts.size());
    for (const auto& c : counts) {
        CountRow r;
        r.setting = std::string{c.stokes, c.anti_stokes};
        r.outcome = "click";
        r.counts = c.clicks;
        r.shots = c.shots;
        rows.push_back(std::move(r));
    }
    return rows;
}

namespace {

const std::array<std::string, 4> kChshSettingNames{"ab", "ab'", "a'b", "a'b'"};
const std::array<std::string, 4> kChshOutcomeNames{"++", "+-", "-+", "--"};

} // namespace

std::array<ChshSettingCounts, 4> chsh_counts_from_table(const std::vector<CountRow>& rows) {
    std::array<ChshSettingCounts, 4> out{};
    std::array<bool, 4> seen{};
    for (const auto& r : rows) {
        const auto sit =
            std::find(kChshSettingNames.begin(), kChshSettingNames.end(), r.setting);
        if (sit == kChshSettingNames.end())
            throw ValidationError("chsh_counts_from_table: unknown setting '" +
                                  r.setting + "'");
        const int k = static_cast<int>(sit - kChshSettingNames.begin());
        seen[k] = true;
        if (r.outcome == "++") out[k].n_pp = r.counts;
        else if (r.outcome == "+-") out[k].n_pm = r.counts;
        else if (r.outcome == "-+") out[k].n_mp = r.counts;
        else if (r.outcome == "--") out[k].n_mm = r.counts;
        else
            throw ValidationError("chsh_counts_from_table: unknown outcome '" +
                                  r.outcome + "'");
    }
    for (int k = 0; k < 4; ++k)
        if (!seen[k])
            throw ValidationError("chsh_counts_from_table: setting " +
                                  kChshSettingNames[k] + " missing");
    return out;
}

std::vector<CountRow> chsh_counts_to_table(const std::array<ChshSettingCounts, 4>& counts) {
    std::vector<CountRow> rows;
    for (int k = 0; k < 4; ++k) {
        const long long vals[4] = {counts[k].n_pp, counts[k].n_pm, counts[k].n_mp,
                                   counts[k].n_mm};
        for (int o = 0; o < 4; ++o) {
            CountRow r;
            r.setting = kChshSettingNames[k];
            r.outcome = kChshOutcomeNames[o];
            r.counts = vals[o];
            r.shots = counts[k].total();
            rows.push_back(std::move(r));
        }
    }
    return rows;
}

void write_fringe_csv(const std::string& path, const FringeDataset& data) {
    std::ofstream f(path);
    if (!f) throw ValidationError("write_fringe_csv: cannot open " + path);
    f << "phase,n_plus,n_minus,heralds\n";
    for (const auto& r : data.rows)
        f << r.phase << "," << r.n_plus << "," << r.n_minus << "," << r.heralds << "\n";
}

FringeDataset read_fringe_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("read_fringe_csv: cannot open " + path);
    FringeDataset data;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (first && !fields.empty() && fields[0] == "phase") {
            first = false;
            continue;
        }
        first = false;
        if (fields.size() < 4)
            throw ValidationError("read_fringe_csv: expected 4 columns in '" + line + "'");
        FringeRow row;
        row.phase = std::stod(fields[0]);
        row.n_plus = std::stoll(fields[1]);
        row.n_minus = std::stoll(fields[2]);
        row.heralds = std::stoll(fields[3]);
        data.rows.push_back(row);
    }
    return data;
}

} // namespace dlczsim::est
