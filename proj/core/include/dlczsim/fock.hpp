// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dlczsim/errors.hpp"

namespace dlczsim::fock {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

enum class Site : std::uint8_t { L, R, None };
enum class Species : std::uint8_t { SpinWave, Stokes, AntiStokes };
enum class Pol : std::uint8_t { H, V, None };

/// One bosonic mode of the simulation: which cell it belongs to, what kind
/// of excitation it carries and (for photons) its polarization slot.
struct ModeLabel {
    Site site = Site::None;
    Species species = Species::Stokes;
    Pol pol = Pol::None;

    bool operator==(const ModeLabel&) const = default;
    std::string str() const;
};

ModeLabel spin_wave(Site site);
ModeLabel stokes(Site site, Pol pol = Pol::None);
ModeLabel anti_stokes(Site site, Pol pol = Pol::None);

/// Ordered set of modes plus the per-mode photon-number truncation.
///
/// Basis order is lexicographic in the occupation tuple with the *last*
/// mode varying fastest: index = sum_j n_j * (n_max+1)^(m-1-j) for modes
/// j = 0..m-1. Dimension is (n_max+1)^m.
class ModeRegister {
public:
    ModeRegister() = default;
    ModeRegister(std::vector<ModeLabel> modes, int n_max);

    int n_max() const { return n_max_; }
    int num_modes() const { return static_cast<int>(modes_.size()); }
    Eigen::Index dim() const { return dim_; }
    const std::vector<ModeLabel>& modes() const { return modes_; }

    bool contains(const ModeLabel& m) const;
    int position(const ModeLabel& m) const; // throws DomainError if absent

    std::vector<int> occupations(Eigen::Index basis_index) const;
    Eigen::Index basis_index(std::span<const int> occupations) const;

    /// Register with the same truncation over a subset of modes (in this
    /// register's order).
    ModeRegister subset(std::span<const ModeLabel> keep) const;
    /// Same layout, new names; used when a physical process converts one
    /// species into another (spin wave -> anti-Stokes photon on readout).
    ModeRegister relabeled(std::span<const ModeLabel> new_labels) const;

    bool operator==(const ModeRegister& other) const;
    std::string str() const;

private:
    std::vector<ModeLabel> modes_;
    int n_max_ = 0;
    Eigen::Index dim_ = 0;
};

class DensityOperator;

/// Normalized complex amplitude vector over a register's basis.
class PureState {
public:
    PureState(ModeRegister reg, Vector amplitudes);

    const ModeRegister& reg() const { return reg_; }
    const Vector& amplitudes() const { return amp_; }
    Complex amplitude(std::span<const int> occupations) const;

    double norm() const { return amp_.norm(); }
    PureState normalized() const;
    DensityOperator density() const;

private:
    ModeRegister reg_;
    Vector amp_;
};

/// Hermitian, unit-trace, positive-semidefinite operator over a register.
/// Channel application re-Hermitizes and clips eigenvalues in [-1e-9, 0);
/// anything more negative is treated as a bug and throws.
class DensityOperator {
public:
    DensityOperator(ModeRegister reg, Matrix matrix);

    const ModeRegister& reg() const { return reg_; }
    const Matrix& matrix() const { return mat_; }
    Matrix& matrix() { return mat_; }

    double trace_real() const { return mat_.trace().real(); }
    double min_eigenvalue() const;
    void validate(double herm_tol = 1e-10, double trace_tol = 1e-10,
                  double eig_floor = -1e-9) const;

    /// (rho + rho^dagger)/2, eigenvalue clip in [-1e-9, 0) with
    /// renormalization; throws ValidationError below the floor.
    void enforce_physical(double eig_floor = -1e-9);

private:
    ModeRegister reg_;
    Matrix mat_;
};

/// Abstract optical element / decoherence map. `Unitary` carries a full
/// product-space matrix over its target modes; `Loss` a transmission on one
/// mode; `Dephasing` a coherence factor on a mode pair (random differential
/// phase between the two, so the |10><01| element picks up exactly lambda).
struct QuantumChannel {
    enum class Kind { Unitary, Loss, Dephasing };

    Kind kind = Kind::Unitary;
    Matrix unitary;                  // Kind::Unitary
    std::vector<ModeLabel> targets;  // all kinds
    double eta = 1.0;                // Kind::Loss
    double lambda = 1.0;             // Kind::Dephasing

    static QuantumChannel make_unitary(Matrix u, std::vector<ModeLabel> targets);
    static QuantumChannel make_loss(ModeLabel mode, double eta);
    static QuantumChannel make_dephasing(ModeLabel a, ModeLabel b, double lambda);

    /// Unitarity / Kraus-completeness check against a register (1e-10).
    void validate(const ModeRegister& reg) const;
};

// --- operator construction -------------------------------------------------

/// Truncated annihilation operator, (n_max+1) x (n_max+1).
Matrix annihilation(int n_max);

/// Identity on the register.
Matrix identity(const ModeRegister& reg);

/// Embed an operator acting on `targets` (product-space ordering = order of
/// `targets`, last fastest) into the full register space.
Matrix embed(const ModeRegister& reg, const Matrix& op,
             std::span<const ModeLabel> targets);

/// Second-quantize a k x k mode-mixing unitary V (a_i^dag -> sum_j V_ji
/// a_j^dag) into the (n_max+1)^k product space of the target modes. The
/// result is exactly unitary on the truncated space.
Matrix lift_mode_unitary(const ModeRegister& reg, const Matrix& mode_matrix,
                         std::span<const ModeLabel> targets);

/// Projector onto |n> of one mode.
Matrix number_projector(const ModeRegister& reg, const ModeLabel& mode, int n);

/// Threshold-detector POVM on one mode: returns {E_noclick, E_click} with
/// E_noclick = (1-dark) * |0><0| so a dark count fires even on vacuum.
std::pair<Matrix, Matrix> click_povm(const ModeRegister& reg,
                                     const ModeLabel& mode, double dark_prob);

// --- states ------------------------------------------------------------------

/// Two-mode squeezed write state: sum_n chi^(n/2) |n,n> over (a, b),
/// normalized, truncated at n_max. chi is the excitation probability per
/// pulse, i.e. P(n)/P(n-1) = chi.
PureState make_two_mode_squeezed(double chi, int n_max, const ModeLabel& a,
                                 const ModeLabel& b);

/// Kronecker product; left factor's modes become the slow indices.
PureState tensor(const PureState& a, const PureState& b);

// --- channel application ------------------------------------------------------

PureState apply_unitary(const PureState& state, const Matrix& u,
                        std::span<const ModeLabel> targets);
DensityOperator apply_unitary(const DensityOperator& rho, const Matrix& u,
                              std::span<const ModeLabel> targets);

/// Convenience: lift a k x k mode-mixing matrix and apply it.
PureState apply_mode_unitary(const PureState& state, const Matrix& mode_matrix,
                             std::span<const ModeLabel> targets);
DensityOperator apply_mode_unitary(const DensityOperator& rho,
                                   const Matrix& mode_matrix,
                                   std::span<const ModeLabel> targets);

/// Phase e^{i n phi} on one mode (1x1 mode unitary, special-cased).
PureState phase_shift(const PureState& state, const ModeLabel& mode, double phi);
DensityOperator phase_shift(const DensityOperator& rho, const ModeLabel& mode,
                            double phi);

/// Photon loss with transmission eta on one mode (binomial Kraus map).
DensityOperator loss_channel(const DensityOperator& rho, const ModeLabel& mode,
                             double eta);

/// Random differential phase between modes a and b, Gaussian-averaged:
/// matrix elements are scaled by lambda^(d^2) with
/// d = ((n_a - n_b) - (m_a - m_b)) / 2, so the single-excitation coherence
/// |10><01| is scaled by exactly lambda. Mixture of unitaries, hence CPTP.
DensityOperator dephasing_channel(const DensityOperator& rho, const ModeLabel& a,
                                  const ModeLabel& b, double lambda);

DensityOperator apply(const QuantumChannel& channel, const DensityOperator& rho);

// --- reduction & measurement ----------------------------------------------------

DensityOperator partial_trace(const DensityOperator& rho,
                              std::span<const ModeLabel> keep);

/// Drop modes whose population outside vacuum is below `tol`; throws
/// ValidationError otherwise. Callers are expected to log the prune.
DensityOperator prune_vacuum(const DensityOperator& rho,
                             std::span<const ModeLabel> drop, double tol = 1e-9);

/// Conditional state on `keep` given POVM element `effect` acting on the
/// complement modes: Tr_meas[E rho] / p. Returns {state, p}.
std::pair<DensityOperator, double> condition_on(const DensityOperator& rho,
                                                const Matrix& effect_full,
                                                std::span<const ModeLabel> keep);

/// Outcome probabilities of a POVM {E_k}: validates completeness
/// (sum E_k = I within 1e-10) and positivity, returns Tr(E_k rho) >= 0.
Eigen::VectorXd outcome_probabilities(const DensityOperator& rho,
                                      const std::vector<Matrix>& povm);
Eigen::VectorXd outcome_probabilities(const PureState& state,
                                      const std::vector<Matrix>& povm);

} // namespace dlczsim::fock
