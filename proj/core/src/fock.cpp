// SPDX-License-Identifier: Apache-2.0
#include "dlczsim/fock.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <sstream>

namespace dlczsim::fock {

namespace {

const char* site_name(Site s) {
    switch (s) {
        case Site::L: return "L";
        case Site::R: return "R";
        default: return "-";
    }
}

const char* species_name(Species s) {
    switch (s) {
        case Species::SpinWave: return "sw";
        case Species::Stokes: return "S";
        default: return "AS";
    }
}

const char* pol_name(Pol p) {
    switch (p) {
        case Pol::H: return "H";
        case Pol::V: return "V";
        default: return "";
    }
}

Eigen::Index checked_pow(int base, int exp) {
    Eigen::Index d = 1;
    for (int i = 0; i < exp; ++i) {
        d *= base;
        if (d > (Eigen::Index(1) << 24))
            throw DomainError("fock: register dimension exceeds 2^24; "
                              "reduce mode count or n_max");
    }
    return d;
}

} // namespace

std::string ModeLabel::str() const {
    std::ostringstream os;
    os << site_name(site) << "." << species_name(species);
    if (pol != Pol::None) os << "." << pol_name(pol);
    return os.str();
}

ModeLabel spin_wave(Site site) { return {site, Species::SpinWave, Pol::None}; }
ModeLabel stokes(Site site, Pol pol) { return {site, Species::Stokes, pol}; }
ModeLabel anti_stokes(Site site, Pol pol) { return {site, Species::AntiStokes, pol}; }

ModeRegister::ModeRegister(std::vector<ModeLabel> modes, int n_max)
    : modes_(std::move(modes)), n_max_(n_max) {
    if (n_max_ < 1) throw DomainError("ModeRegister: n_max must be >= 1");
    if (modes_.empty()) throw DomainError("ModeRegister: needs at least one mode");
    for (std::size_t i = 0; i < modes_.size(); ++i)
        for (std::size_t j = i + 1; j < modes_.size(); ++j)
            if (modes_[i] == modes_[j])
                throw DomainError("ModeRegister: duplicate mode label " + modes_[i].str());
    dim_ = checked_pow(n_max_ + 1, num_modes());
}

bool ModeRegister::contains(const ModeLabel& m) const {
    return std::find(modes_.begin(), modes_.end(), m) != modes_.end();
}

int ModeRegister::position(const ModeLabel& m) const {
    auto it = std::find(modes_.begin(), modes_.end(), m);
    if (it == modes_.end())
        throw DomainError("ModeRegister: mode " + m.str() + " not in register " + str());
    return static_cast<int>(it - modes_.begin());
}

std::vector<int> ModeRegister::occupations(Eigen::Index basis_index) const {
    std::vector<int> occ(modes_.size());
    const int d = n_max_ + 1;
    for (int j = num_modes() - 1; j >= 0; --j) {
        occ[j] = static_cast<int>(basis_index % d);
        basis_index /= d;
    }
    return occ;
}

Eigen::Index ModeRegister::basis_index(std::span<const int> occ) const {
    if (static_cast<int>(occ.size()) != num_modes())
        throw ShapeError("ModeRegister: occupation tuple size mismatch");
    Eigen::Index idx = 0;
    for (int j = 0; j < num_modes(); ++j) {
        if (occ[j] < 0 || occ[j] > n_max_)
            throw DomainError("ModeRegister: occupation outside [0, n_max]");
        idx = idx * (n_max_ + 1) + occ[j];
    }
    return idx;
}

ModeRegister ModeRegister::subset(std::span<const ModeLabel> keep) const {
    std::vector<ModeLabel> sub;
    for (const auto& m : modes_)
        if (std::find(keep.begin(), keep.end(), m) != keep.end()) sub.push_back(m);
    if (sub.size() != keep.size())
        throw DomainError("ModeRegister: subset contains modes not in register");
    return ModeRegister(std::move(sub), n_max_);
}

ModeRegister ModeRegister::relabeled(std::span<const ModeLabel> new_labels) const {
    if (static_cast<int>(new_labels.size()) != num_modes())
        throw ShapeError("ModeRegister: relabel needs one label per mode");
    return ModeRegister(std::vector<ModeLabel>(new_labels.begin(), new_labels.end()), n_max_);
}

bool ModeRegister::operator==(const ModeRegister& other) const {
    return n_max_ == other.n_max_ && modes_ == other.modes_;
}

std::string ModeRegister::str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < modes_.size(); ++i) {
        if (i) os << ", ";
        os << modes_[i].str();
    }
    os << "; n_max=" << n_max_ << "]";
    return os.str();
}

PureState::PureState(ModeRegister reg, Vector amplitudes)
    : reg_(std::move(reg)), amp_(std::move(amplitudes)) {
    if (amp_.size() != reg_.dim())
        throw ShapeError("PureState: amplitude vector does not match register dimension");
}

Complex PureState::amplitude(std::span<const int> occ) const {
    return amp_(reg_.basis_index(occ));
}

PureState PureState::normalized() const {
    const double n = amp_.norm();
    if (n == 0.0) throw ValidationError("PureState: cannot normalize zero vector");
    return PureState(reg_, amp_ / n);
}

DensityOperator PureState::density() const {
    return DensityOperator(reg_, amp_ * amp_.adjoint());
}

DensityOperator::DensityOperator(ModeRegister reg, Matrix matrix)
    : reg_(std::move(reg)), mat_(std::move(matrix)) {
    if (mat_.rows() != reg_.dim() || mat_.cols() != reg_.dim())
        throw ShapeError("DensityOperator: matrix does not match register dimension");
}

double DensityOperator::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es((mat_ + mat_.adjoint()) / 2.0);
    return es.eigenvalues().minCoeff();
}

void DensityOperator::validate(double herm_tol, double trace_tol, double eig_floor) const {
    const double herm = (mat_ - mat_.adjoint()).cwiseAbs().maxCoeff();
    if (herm > herm_tol)
        throw ValidationError("DensityOperator: not Hermitian (max dev " +
                              std::to_string(herm) + ")");
    const double tr = trace_real();
    if (std::abs(tr - 1.0) > trace_tol)
        throw ValidationError("DensityOperator: trace " + std::to_string(tr) + " != 1");
    const double lam = min_eigenvalue();
    if (lam < eig_floor)
        throw ValidationError("DensityOperator: eigenvalue " + std::to_string(lam) +
                              " below floor");
}

void DensityOperator::enforce_physical(double eig_floor) {
    mat_ = ((mat_ + mat_.adjoint()) / 2.0).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(mat_);
    Eigen::VectorXd ev = es.eigenvalues();
    const double lam_min = ev.minCoeff();
    if (lam_min >= 0.0) return;
    if (lam_min < eig_floor)
        throw ValidationError("DensityOperator: eigenvalue " + std::to_string(lam_min) +
                              " below clip floor " + std::to_string(eig_floor));
    // clip the tiny negatives and rescale back to the original trace
    const double tr_before = ev.sum();
    ev = ev.cwiseMax(0.0);
    const double tr_after = ev.sum();
    if (tr_after <= 0.0) throw ValidationError("DensityOperator: clipped to zero trace");
    ev *= tr_before / tr_after;
    mat_ = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

QuantumChannel QuantumChannel::make_unitary(Matrix u, std::vector<ModeLabel> targets) {
    QuantumChannel c;
    c.kind = Kind::Unitary;
    c.unitary = std::move(u);
    c.targets = std::move(targets);
    return c;
}

QuantumChannel QuantumChannel::make_loss(ModeLabel mode, double eta) {
    if (eta < 0.0 || eta > 1.0) throw DomainError("loss channel: eta outside [0, 1]");
    QuantumChannel c;
    c.kind = Kind::Loss;
    c.targets = {mode};
    c.eta = eta;
    return c;
}

QuantumChannel QuantumChannel::make_dephasing(ModeLabel a, ModeLabel b, double lambda) {
    if (lambda < 0.0 || lambda > 1.0)
        throw DomainError("dephasing channel: lambda outside [0, 1]");
    QuantumChannel c;
    c.kind = Kind::Dephasing;
    c.targets = {a, b};
    c.lambda = lambda;
    return c;
}

void QuantumChannel::validate(const ModeRegister& reg) const {
    for (const auto& m : targets) (void)reg.position(m);
    switch (kind) {
        case Kind::Unitary: {
            const Eigen::Index d = checked_pow(reg.n_max() + 1,
                                               static_cast<int>(targets.size()));
            if (unitary.rows() != d || unitary.cols() != d)
                throw ShapeError("channel: unitary dimension does not match targets");
            const double dev =
                (unitary.adjoint() * unitary - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
            if (dev > 1e-10)
                throw ValidationError("channel: matrix is not unitary (dev " +
                                      std::to_string(dev) + ")");
            break;
        }
        case Kind::Loss: {
            // Kraus completeness of the binomial map: sum_m K_m^dag K_m = I.
            const int d = reg.n_max() + 1;
            Matrix acc = Matrix::Zero(d, d);
            for (int m = 0; m <= reg.n_max(); ++m) {
                Matrix k = Matrix::Zero(d, d);
                for (int n = m; n <= reg.n_max(); ++n) {
                    double binom = 1.0;
                    for (int i = 0; i < m; ++i)
                        binom *= static_cast<double>(n - i) / (i + 1);
                    k(n - m, n) = std::sqrt(binom * std::pow(eta, n - m) *
                                            std::pow(1.0 - eta, m));
                }
                acc += k.adjoint() * k;
            }
            if ((acc - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-10)
                throw ValidationError("loss channel: Kraus set not complete");
            break;
        }
        case Kind::Dephasing:
            if (targets.size() != 2 || targets[0] == targets[1])
                throw DomainError("dephasing channel: needs two distinct modes");
            break;
    }
}

Matrix annihilation(int n_max) {
    Matrix a = Matrix::Zero(n_max + 1, n_max + 1);
    for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

Matrix identity(const ModeRegister& reg) {
    return Matrix::Identity(reg.dim(), reg.dim());
}

namespace {

// Decompose a full-register basis index into (target-subspace index, rest
// index) for a fixed ordered target set.
struct IndexSplit {
    std::vector<Eigen::Index> target_part;
    std::vector<Eigen::Index> rest_part;
};

IndexSplit split_indices(const ModeRegister& reg, std::span<const ModeLabel> targets) {
    std::vector<int> tpos;
    tpos.reserve(targets.size());
    for (const auto& m : targets) tpos.push_back(reg.position(m));

    IndexSplit out;
    out.target_part.resize(reg.dim());
    out.rest_part.resize(reg.dim());
    const int d = reg.n_max() + 1;
    for (Eigen::Index i = 0; i < reg.dim(); ++i) {
        const auto occ = reg.occupations(i);
        Eigen::Index t = 0;
        for (int p : tpos) t = t * d + occ[p];
        Eigen::Index r = 0;
        for (int j = 0; j < reg.num_modes(); ++j) {
            if (std::find(tpos.begin(), tpos.end(), j) == tpos.end())
                r = r * d + occ[j];
        }
        out.target_part[i] = t;
        out.rest_part[i] = r;
    }
    return out;
}

} // namespace

Matrix embed(const ModeRegister& reg, const Matrix& op, std::span<const ModeLabel> targets) {
    const Eigen::Index dt = checked_pow(reg.n_max() + 1, static_cast<int>(targets.size()));
    if (op.rows() != dt || op.cols() != dt)
        throw ShapeError("embed: operator dimension " + std::to_string(op.rows()) +
                         " does not match target product space " + std::to_string(dt));
    if (static_cast<int>(targets.size()) == reg.num_modes()) {
        // Same space up to mode order; fall through to the generic path only
        // when the order differs.
        bool same_order = true;
        for (int j = 0; j < reg.num_modes(); ++j)
            if (!(reg.modes()[j] == targets[j])) { same_order = false; break; }
        if (same_order) return op;
    }
    const IndexSplit ix = split_indices(reg, targets);
    Matrix full = Matrix::Zero(reg.dim(), reg.dim());
    for (Eigen::Index i = 0; i < reg.dim(); ++i)
        for (Eigen::Index j = 0; j < reg.dim(); ++j)
            if (ix.rest_part[i] == ix.rest_part[j])
                full(i, j) = op(ix.target_part[i], ix.target_part[j]);
    return full;
}

Matrix lift_mode_unitary(const ModeRegister& reg, const Matrix& mode_matrix,
                         std::span<const ModeLabel> targets) {
    const int k = static_cast<int>(targets.size());
    if (mode_matrix.rows() != k || mode_matrix.cols() != k)
        throw ShapeError("lift_mode_unitary: mode matrix must be k x k for k targets");
    const Eigen::Index dk = checked_pow(reg.n_max() + 1, k);
    const double udev =
        (mode_matrix.adjoint() * mode_matrix - Matrix::Identity(k, k)).cwiseAbs().maxCoeff();
    if (udev > 1e-10)
        throw ValidationError("lift_mode_unitary: mode matrix is not unitary");

    // V = exp(A) with A anti-Hermitian; the second quantization
    // dG(A) = sum_ij A_ij a_i^dag a_j is anti-Hermitian on the truncated
    // space as well, so exp(dG(A)) is exactly unitary there.
    Eigen::ComplexEigenSolver<Matrix> ces(mode_matrix);
    Matrix w = ces.eigenvectors();
    Vector lambda = ces.eigenvalues();
    Vector loglam(k);
    for (int i = 0; i < k; ++i) loglam(i) = std::log(lambda(i));
    Matrix a_gen = w * loglam.asDiagonal() * w.inverse();
    a_gen = ((a_gen - a_gen.adjoint()) / 2.0).eval(); // re-anti-Hermitize

    // Build dG(A) on the k-mode product space (target order, last fastest).
    std::vector<ModeLabel> tmodes(targets.begin(), targets.end());
    ModeRegister treg(tmodes, reg.n_max());
    const Matrix a_single = annihilation(reg.n_max());
    Matrix gen = Matrix::Zero(dk, dk);
    for (int i = 0; i < k; ++i) {
        std::array<ModeLabel, 1> mi{tmodes[i]};
        const Matrix adag_i = embed(treg, a_single.adjoint(), mi);
        for (int j = 0; j < k; ++j) {
            if (a_gen(i, j) == Complex(0.0, 0.0)) continue;
            std::array<ModeLabel, 1> mj{tmodes[j]};
            gen += a_gen(i, j) * (adag_i * embed(treg, a_single, mj));
        }
    }
    // gen = -i H with H Hermitian; exponentiate through the spectrum of H.
    Matrix h = Complex(0.0, 1.0) * gen;
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    Vector phase(dk);
    for (Eigen::Index n = 0; n < dk; ++n)
        phase(n) = std::exp(Complex(0.0, -es.eigenvalues()(n)));
    return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

Matrix number_projector(const ModeRegister& reg, const ModeLabel& mode, int n) {
    if (n < 0 || n > reg.n_max()) throw DomainError("number_projector: n outside truncation");
    const int pos = reg.position(mode);
    Matrix p = Matrix::Zero(reg.dim(), reg.dim());
    for (Eigen::Index i = 0; i < reg.dim(); ++i)
        if (reg.occupations(i)[pos] == n) p(i, i) = 1.0;
    return p;
}

std::pair<Matrix, Matrix> click_povm(const ModeRegister& reg, const ModeLabel& mode,
                                     double dark_prob) {
    if (dark_prob < 0.0 || dark_prob > 1.0)
        throw DomainError("click_povm: dark_prob outside [0, 1]");
    const Matrix vac = number_projector(reg, mode, 0);
    Matrix no_click = (1.0 - dark_prob) * vac;
    Matrix click = identity(reg) - no_click;
    return {no_click, click};
}

PureState make_two_mode_squeezed(double chi, int n_max, const ModeLabel& a,
                                 const ModeLabel& b) {
    if (chi < 0.0 || chi >= 1.0)
        throw DomainError("make_two_mode_squeezed: chi must lie in [0, 1)");
    if (n_max < 1) throw DomainError("make_two_mode_squeezed: n_max must be >= 1");
    ModeRegister reg({a, b}, n_max);
    Vector amp = Vector::Zero(reg.dim());
    for (int n = 0; n <= n_max; ++n) {
        std::array<int, 2> occ{n, n};
        amp(reg.basis_index(occ)) = std::pow(chi, n / 2.0);
    }
    return PureState(reg, amp).normalized();
}

PureState tensor(const PureState& a, const PureState& b) {
    if (a.reg().n_max() != b.reg().n_max())
        throw ShapeError("tensor: registers must share n_max");
    std::vector<ModeLabel> modes = a.reg().modes();
    modes.insert(modes.end(), b.reg().modes().begin(), b.reg().modes().end());
    ModeRegister reg(std::move(modes), a.reg().n_max());
    Vector amp(reg.dim());
    for (Eigen::Index i = 0; i < a.reg().dim(); ++i)
        for (Eigen::Index j = 0; j < b.reg().dim(); ++j)
            amp(i * b.reg().dim() + j) = a.amplitudes()(i) * b.amplitudes()(j);
    return PureState(reg, std::move(amp));
}

namespace {

void check_unitary_dim(const ModeRegister& reg, const Matrix& u,
                       std::span<const ModeLabel> targets) {
    const Eigen::Index d = checked_pow(reg.n_max() + 1, static_cast<int>(targets.size()));
    if (u.rows() != d || u.cols() != d)
        throw ShapeError("apply_unitary: operator is " + std::to_string(u.rows()) +
                         "-dimensional, target product space is " + std::to_string(d));
    const double dev = (u.adjoint() * u - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
    if (dev > 1e-10)
        throw ValidationError("apply_unitary: matrix is not unitary (dev " +
                              std::to_string(dev) + ")");
}

} // namespace

PureState apply_unitary(const PureState& state, const Matrix& u,
                        std::span<const ModeLabel> targets) {
    check_unitary_dim(state.reg(), u, targets);
    const Matrix full = embed(state.reg(), u, targets);
    return PureState(state.reg(), full * state.amplitudes());
}

DensityOperator apply_unitary(const DensityOperator& rho, const Matrix& u,
                              std::span<const ModeLabel> targets) {
    check_unitary_dim(rho.reg(), u, targets);
    const Matrix full = embed(rho.reg(), u, targets);
    DensityOperator out(rho.reg(), full * rho.matrix() * full.adjoint());
    out.enforce_physical();
    return out;
}

PureState apply_mode_unitary(const PureState& state, const Matrix& mode_matrix,
                             std::span<const ModeLabel> targets) {
    return apply_unitary(state, lift_mode_unitary(state.reg(), mode_matrix, targets),
                         targets);
}

DensityOperator apply_mode_unitary(const DensityOperator& rho, const Matrix& mode_matrix,
                                   std::span<const ModeLabel> targets) {
    return apply_unitary(rho, lift_mode_unitary(rho.reg(), mode_matrix, targets), targets);
}

PureState phase_shift(const PureState& state, const ModeLabel& mode, double phi) {
    const int pos = state.reg().position(mode);
    Vector amp = state.amplitudes();
    for (Eigen::Index i = 0; i < state.reg().dim(); ++i) {
        const int n = state.reg().occupations(i)[pos];
        amp(i) *= std::exp(Complex(0.0, n * phi));
    }
    return PureState(state.reg(), std::move(amp));
}

DensityOperator phase_shift(const DensityOperator& rho, const ModeLabel& mode, double phi) {
    const int pos = rho.reg().position(mode);
    Matrix m = rho.matrix();
    const Eigen::Index d = rho.reg().dim();
    std::vector<int> occ(d);
    for (Eigen::Index i = 0; i < d; ++i) occ[i] = rho.reg().occupations(i)[pos];
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            m(i, j) *= std::exp(Complex(0.0, (occ[i] - occ[j]) * phi));
    return DensityOperator(rho.reg(), std::move(m));
}

DensityOperator loss_channel(const DensityOperator& rho, const ModeLabel& mode, double eta) {
    if (eta < 0.0 || eta > 1.0) throw DomainError("loss_channel: eta outside [0, 1]");
    const int n_max = rho.reg().n_max();
    const int d = n_max + 1;
    std::array<ModeLabel, 1> target{mode};

    Matrix acc = Matrix::Zero(rho.reg().dim(), rho.reg().dim());
    for (int m = 0; m <= n_max; ++m) {
        Matrix k = Matrix::Zero(d, d);
        for (int n = m; n <= n_max; ++n) {
            double binom = 1.0;
            for (int i = 0; i < m; ++i) binom *= static_cast<double>(n - i) / (i + 1);
            k(n - m, n) =
                std::sqrt(binom * std::pow(eta, n - m) * std::pow(1.0 - eta, m));
        }
        const Matrix kf = embed(rho.reg(), k, target);
        acc += kf * rho.matrix() * kf.adjoint();
    }
    DensityOperator out(rho.reg(), std::move(acc));
    out.enforce_physical();
    return out;
}

DensityOperator dephasing_channel(const DensityOperator& rho, const ModeLabel& a,
                                  const ModeLabel& b, double lambda) {
    if (lambda < 0.0 || lambda > 1.0)
        throw DomainError("dephasing_channel: lambda outside [0, 1]");
    const int pa = rho.reg().position(a);
    const int pb = rho.reg().position(b);
    if (pa == pb) throw DomainError("dephasing_channel: modes must differ");

    const Eigen::Index dim = rho.reg().dim();
    std::vector<int> diff(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        const auto occ = rho.reg().occupations(i);
        diff[i] = occ[pa] - occ[pb];
    }
    Matrix m = rho.matrix();
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) {
            const double half = 0.5 * (diff[i] - diff[j]);
            if (half != 0.0) m(i, j) *= std::pow(lambda, half * half);
        }
    DensityOperator out(rho.reg(), std::move(m));
    out.enforce_physical();
    return out;
}

DensityOperator apply(const QuantumChannel& channel, const DensityOperator& rho) {
    channel.validate(rho.reg());
    switch (channel.kind) {
        case QuantumChannel::Kind::Unitary:
            return apply_unitary(rho, channel.unitary, channel.targets);
        case QuantumChannel::Kind::Loss:
            return loss_channel(rho, channel.targets[0], channel.eta);
        case QuantumChannel::Kind::Dephasing:
        default:
            return dephasing_channel(rho, channel.targets[0], channel.targets[1],
                                     channel.lambda);
    }
}

DensityOperator partial_trace(const DensityOperator& rho, std::span<const ModeLabel> keep) {
    if (keep.empty()) throw DomainError("partial_trace: keep set must be nonempty");
    const ModeRegister sub = rho.reg().subset(keep);
    if (sub.num_modes() == rho.reg().num_modes()) return rho;

    const IndexSplit ix = split_indices(rho.reg(), sub.modes());
    Matrix out = Matrix::Zero(sub.dim(), sub.dim());
    for (Eigen::Index i = 0; i < rho.reg().dim(); ++i)
        for (Eigen::Index j = 0; j < rho.reg().dim(); ++j)
            if (ix.rest_part[i] == ix.rest_part[j])
                out(ix.target_part[i], ix.target_part[j]) += rho.matrix()(i, j);
    return DensityOperator(sub, std::move(out));
}

DensityOperator prune_vacuum(const DensityOperator& rho, std::span<const ModeLabel> drop,
                             double tol) {
    for (const auto& m : drop) {
        const Matrix p0 = number_projector(rho.reg(), m, 0);
        const double vac_weight = (p0 * rho.matrix()).trace().real();
        if (1.0 - vac_weight > tol)
            throw ValidationError("prune_vacuum: mode " + m.str() + " holds population " +
                                  std::to_string(1.0 - vac_weight));
    }
    std::vector<ModeLabel> keep;
    for (const auto& m : rho.reg().modes())
        if (std::find(drop.begin(), drop.end(), m) == drop.end()) keep.push_back(m);
    return partial_trace(rho, keep);
}

std::pair<DensityOperator, double> condition_on(const DensityOperator& rho,
                                                const Matrix& effect_full,
                                                std::span<const ModeLabel> keep) {
    if (effect_full.rows() != rho.reg().dim() || effect_full.cols() != rho.reg().dim())
        throw ShapeError("condition_on: effect dimension mismatch");
    const double p = (effect_full * rho.matrix()).trace().real();
    if (p <= 0.0)
        throw HeraldImpossibleError("condition_on: outcome has zero probability");
    DensityOperator weighted(rho.reg(), effect_full * rho.matrix());
    DensityOperator reduced = partial_trace(weighted, keep);
    reduced.matrix() /= p;
    reduced.enforce_physical();
    return {std::move(reduced), p};
}

namespace {

Eigen::VectorXd povm_probabilities(const std::vector<Matrix>& povm, Eigen::Index dim,
                                   const std::function<double(const Matrix&)>& expect) {
    if (povm.empty()) throw ValidationError("outcome_probabilities: empty POVM");
    Matrix sum = Matrix::Zero(dim, dim);
    for (const auto& e : povm) {
        if (e.rows() != dim || e.cols() != dim)
            throw ShapeError("outcome_probabilities: POVM element dimension mismatch");
        Eigen::SelfAdjointEigenSolver<Matrix> es((e + e.adjoint()) / 2.0);
        if (es.eigenvalues().minCoeff() < -1e-9)
            throw ValidationError("outcome_probabilities: POVM element not PSD");
        sum += e;
    }
    if ((sum - Matrix::Identity(dim, dim)).cwiseAbs().maxCoeff() > 1e-10)
        throw ValidationError("outcome_probabilities: POVM does not sum to identity");

    Eigen::VectorXd p(static_cast<Eigen::Index>(povm.size()));
    for (std::size_t k = 0; k < povm.size(); ++k)
        p(static_cast<Eigen::Index>(k)) = std::max(0.0, expect(povm[k]));
    return p;
}

} // namespace

Eigen::VectorXd outcome_probabilities(const DensityOperator& rho,
                                      const std::vector<Matrix>& povm) {
    return povm_probabilities(povm, rho.reg().dim(), [&](const Matrix& e) {
        return (e * rho.matrix()).trace().real();
    });
}

Eigen::VectorXd outcome_probabilities(const PureState& state,
                                      const std::vector<Matrix>& povm) {
    return povm_probabilities(povm, state.reg().dim(), [&](const Matrix& e) {
        return (state.amplitudes().adjoint() * e * state.amplitudes())(0).real();
    });
}

} // namespace dlczsim::fock
