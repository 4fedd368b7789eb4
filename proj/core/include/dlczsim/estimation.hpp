// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dlczsim/fock.hpp"
#include "dlczsim/rng.hpp"

namespace dlczsim::est {

using fock::Matrix;
using fock::Vector;

// --- fringe fitting ---------------------------------------------------------

struct FringeRow {
    double phase = 0.0;
    long long n_plus = 0;
    long long n_minus = 0;
    long long heralds = 0;
};

/// Coincidence counts versus the scanned analyzer phase.
struct FringeDataset {
    std::vector<FringeRow> rows;
};

struct FringeFit {
    double visibility = 0.0;
    double sigma_visibility = 0.0;
    double phase_offset = 0.0;   ///< rad, location of the fringe maximum
    double sigma_phase = 0.0;
    double amplitude = 0.0;      ///< mean counts A in N = A (1 + V cos)
    bool clamped = false;        ///< fit wanted V > 1; reported at the bound
    bool degenerate = false;     ///< no resolvable modulation
};

struct FringeFitPair {
    FringeFit plus;
    FringeFit minus;
};

/// Poisson-weighted least squares of N(phi) = A (1 + V cos(phi - phi0)).
/// Linear in (A, A V cos phi0, A V sin phi0); V is clamped into [0, 1].
FringeFit fit_fringe(const std::vector<double>& phases,
                     const std::vector<double>& counts);

/// Fits the N_plus and N_minus columns of a dataset. Requires at least five
/// distinct phase settings and a nonzero total count.
FringeFitPair fit_fringe(const FringeDataset& data);

// --- mode-occupation matrix ---------------------------------------------------

/// Heralded verify-stage counts in the spatial-mode basis.
struct ModeCounts {
    long long heralds = 0;
    long long n_l_only = 0; ///< anti-Stokes photon in the L arm only
    long long n_r_only = 0; ///< anti-Stokes photon in the R arm only
    long long n_both = 0;   ///< both arms (double excitation or dark count)
};

/// The heralded single-photon density matrix summary {p_ij, d}: p_ij is the
/// probability of i photons in L and j in R given a herald, and d the
/// coherence magnitude inferred from the fringe visibility.
struct ModeDensityMatrix {
    double p00 = 1.0, p01 = 0.0, p10 = 0.0, p11 = 0.0;
    double d = 0.0;
    double sigma_p00 = 0.0, sigma_p01 = 0.0, sigma_p10 = 0.0, sigma_p11 = 0.0;
    double sigma_d = 0.0;
    bool coherence_unphysical = false; ///< d exceeds sqrt(p01 p10) by > 3 sigma
};

/// d = V (p01 + p10) / 2 with Poisson-propagated uncertainties.
/// Throws DomainError when there are no heralds to condition on.
ModeDensityMatrix mode_matrix(const ModeCounts& counts, double visibility,
                              double sigma_visibility = 0.0);

struct ConcurrenceBound {
    double value = 0.0;
    double sigma = 0.0;
};

/// Lower bound C = 2 max(0, |d| - sqrt(p00 p11)) with first-order error
/// propagation.
ConcurrenceBound concurrence_bound(const ModeDensityMatrix& m);

/// Percentile bootstrap of the concurrence bound: Poisson-resamples the
/// fringe table and the mode counts, refits V, recomputes C.
ConcurrenceBound bootstrap_concurrence(const FringeDataset& fringe,
                                       const ModeCounts& counts,
                                       int n_resamples, std::uint64_t seed);

// --- two-qubit polarization tomography ----------------------------------------

/// One projective setting of the two-qubit measurement: single-qubit
/// analyzer labels from {H, V, D, A, R, L} for the Stokes and anti-Stokes
/// photons, coincidences seen, and pairs measured.
struct TomoCount {
    char stokes = 'H';
    char anti_stokes = 'H';
    long long clicks = 0;
    long long shots = 0;
};

/// Single-qubit analyzer state for a label (H, V, D, A, R, L).
Eigen::Vector2cd analyzer_state(char label);
/// Rank-1 two-qubit projector for a setting.
Matrix setting_projector(char stokes, char anti_stokes);

/// The canonical 16-projector set {H, V, D, R} x {H, V, D, R}.
std::vector<TomoCount> sixteen_settings(long long shots_per_setting);

struct TwoQubitTomoResult {
    Matrix rho;                ///< 4x4 on {HH, HV, VH, VV}, PSD, unit trace
    double concurrence = 0.0;
    double fidelity = 0.0;     ///< overlap with (|HH> + |VV>)/sqrt(2)
    double log_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;
    double sigma_concurrence = 0.0; ///< bootstrap
    double sigma_fidelity = 0.0;    ///< bootstrap
};

struct TomoOptions {
    double tol_log_likelihood = 1e-10;
    int max_iterations = 10000;
    int bootstrap_resamples = 200; ///< 0 disables the bootstrap
    std::uint64_t bootstrap_seed = 1;
};

/// Linear-inversion seed followed by maximum-likelihood refinement over a
/// Cholesky factor (rho = T T^dag / tr), so iterates stay physical.
/// Throws ValidationError when the setting set is rank-deficient.
TwoQubitTomoResult tomography(const std::vector<TomoCount>& counts,
                              const TomoOptions& options = {});

/// Wootters concurrence of a physical 4x4 density matrix.
double wootters_concurrence(const Matrix& rho);

/// F = <target| rho |target>.
double fidelity(const Matrix& rho, const Vector& target);

// --- CHSH -----------------------------------------------------------------------

/// Measurement phases (rad) on the coherence plane of the Bloch sphere;
/// analyzers project onto (|H> +- e^{i theta} |V>)/sqrt(2).
struct ChshAngles {
    double a = 0.0;
    double a_prime = M_PI / 2.0;
    double b = M_PI / 4.0;
    double b_prime = 3.0 * M_PI / 4.0;
};

struct ChshSettingCounts {
    long long n_pp = 0, n_pm = 0, n_mp = 0, n_mm = 0;
    long long total() const { return n_pp + n_pm + n_mp + n_mm; }
};

struct ChshResult {
    std::array<double, 4> correlations{};   ///< E(a,b), E(a,b'), E(a',b), E(a',b')
    std::array<double, 4> sigma_correlations{};
    double s = 0.0;
    double sigma_s = 0.0;
};

/// S = E(a,b) - E(a,b') + E(a',b) + E(a',b') from coincidence counts, with
/// multinomial error propagation. All four settings must carry counts.
ChshResult chsh(const std::array<ChshSettingCounts, 4>& counts);

/// Exact correlation values and S for a two-qubit state at the given angles.
ChshResult chsh_from_state(const Matrix& rho, const ChshAngles& angles = {});

/// Outcome probabilities {pp, pm, mp, mm} for one setting pair; used to
/// generate synthetic CHSH counts.
std::array<double, 4> chsh_outcome_probabilities(const Matrix& rho, double a_angle,
                                                 double b_angle);

// --- CSV count tables ------------------------------------------------------------

/// Generic row of the documented count-table schema
/// (setting id, outcome id, counts, shots).
struct CountRow {
    std::string setting;
    std::string outcome;
    long long counts = 0;
    long long shots = 0;
};

std::vector<CountRow> read_count_table(const std::string& path);
void write_count_table(const std::string& path, const std::vector<CountRow>& rows);

std::vector<TomoCount> tomo_counts_from_table(const std::vector<CountRow>& rows);
std::vector<CountRow> tomo_counts_to_table(const std::vector<TomoCount>& counts);

std::array<ChshSettingCounts, 4> chsh_counts_from_table(const std::vector<CountRow>& rows);
std::vector<CountRow> chsh_counts_to_table(const std::array<ChshSettingCounts, 4>& counts);

void write_fringe_csv(const std::string& path, const FringeDataset& data);
FringeDataset read_fringe_csv(const std::string& path);

} // namespace dlczsim::est
