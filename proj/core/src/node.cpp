// SPDX-License-Identifier: Apache-2.0
#include "dlczsim/node.hpp"

#include <array>
#include <cmath>

namespace dlczsim::node {

using fock::Complex;
using fock::DensityOperator;
using fock::Matrix;
using fock::ModeLabel;
using fock::PureState;
using fock::Vector;

namespace {

void check_unit_interval(double x, const char* name) {
    if (!(x >= 0.0 && x <= 1.0))
        throw DomainError(std::string("NoiseParams: ") + name + " outside [0, 1]");
}

const ModeLabel kSwL = fock::spin_wave(fock::Site::L);
const ModeLabel kSwR = fock::spin_wave(fock::Site::R);
const ModeLabel kStokesL = fock::stokes(fock::Site::L);
const ModeLabel kStokesR = fock::stokes(fock::Site::R);
const ModeLabel kAsL = fock::anti_stokes(fock::Site::L);
const ModeLabel kAsR = fock::anti_stokes(fock::Site::R);

// 50:50 path-erasing merge of the two Stokes modes. After it, the former
// S_L slot is the D1 port and the former S_R slot the D2 port.
Matrix stokes_merge() {
    Matrix bs(2, 2);
    const double s = 1.0 / std::sqrt(2.0);
    bs << s, s, s, -s;
    return bs;
}

} // namespace

void NoiseParams::validate() const {
    if (!(chi >= 0.0 && chi < 1.0)) throw DomainError("NoiseParams: chi outside [0, 1)");
    check_unit_interval(eta_ret, "eta_ret");
    check_unit_interval(eta_trans, "eta_trans");
    check_unit_interval(eta_det, "eta_det");
    check_unit_interval(dark_prob, "dark_prob");
    if (sigma_phi < 0.0) throw DomainError("NoiseParams: sigma_phi must be >= 0");
    if (!(tau_mem_ns > 0.0)) throw DomainError("NoiseParams: tau_mem_ns must be > 0");
    if (!(tau_amp_ns > 0.0)) throw DomainError("NoiseParams: tau_amp_ns must be > 0");
    if (!(eta_asym > 0.0)) throw DomainError("NoiseParams: eta_asym must be > 0");
    if (anti_stokes_eta_l() > 1.0 || anti_stokes_eta_r() > 1.0)
        throw DomainError("NoiseParams: per-arm anti-Stokes efficiency exceeds 1");
    if (n_max < 1) throw DomainError("NoiseParams: n_max must be >= 1");
}

std::vector<std::string> NoiseParams::warnings() const {
    std::vector<std::string> w;
    if (chi > 0.1)
        w.push_back("chi = " + std::to_string(chi) +
                    " is outside the weak-excitation regime (chi << 1)");
    return w;
}

double NoiseParams::anti_stokes_eta_l() const {
    return eta_ret * 2.0 / (1.0 + eta_asym);
}

double NoiseParams::anti_stokes_eta_r() const {
    return eta_ret * 2.0 * eta_asym / (1.0 + eta_asym);
}

void EnsembleNode::validate() const {
    if (!(tau_mem_ns > 0.0)) throw DomainError("EnsembleNode: tau_mem_ns must be > 0");
    check_unit_interval(eta_ret, "eta_ret");
}

PureState symmetric_write(const NoiseParams& params, double phi_s) {
    params.validate();
    const PureState left =
        fock::make_two_mode_squeezed(params.chi, params.n_max, kSwL, kStokesL);
    PureState right =
        fock::make_two_mode_squeezed(params.chi, params.n_max, kSwR, kStokesR);
    right = fock::phase_shift(right, kStokesR, phi_s);
    return fock::tensor(left, right);
}

HeraldedState herald(const PureState& joint, StokesDetector detector,
                     const NoiseParams& params) {
    params.validate();
    if (!joint.reg().contains(kStokesL) || !joint.reg().contains(kStokesR))
        throw ShapeError("herald: joint state lacks the two Stokes modes");

    const std::array<ModeLabel, 2> stokes_modes{kStokesL, kStokesR};
    const PureState merged = fock::apply_mode_unitary(joint, stokes_merge(), stokes_modes);

    DensityOperator rho = merged.density();
    const double eta_s = params.stokes_detection_eta();
    rho = fock::loss_channel(rho, kStokesL, eta_s);
    rho = fock::loss_channel(rho, kStokesR, eta_s);

    const ModeLabel port = (detector == StokesDetector::D1) ? kStokesL : kStokesR;
    const auto [no_click, click] = fock::click_povm(rho.reg(), port, params.dark_prob);
    (void)no_click;

    const std::array<ModeLabel, 2> keep{kSwL, kSwR};
    auto [conditional, p] = fock::condition_on(rho, click, keep);
    return HeraldedState{std::move(conditional),
                         detector == StokesDetector::D1 ? +1 : -1, p};
}

HeraldedState store(const HeraldedState& state, double tau_ns, const NoiseParams& params) {
    if (tau_ns < 0.0) throw DomainError("store: tau must be >= 0");
    params.validate();
    const double lambda = std::exp(-tau_ns / params.tau_mem_ns);
    DensityOperator rho = fock::dephasing_channel(state.rho, kSwL, kSwR, lambda);
    if (std::isfinite(params.tau_amp_ns)) {
        const double eta_amp = std::exp(-tau_ns / params.tau_amp_ns);
        rho = fock::loss_channel(rho, kSwL, eta_amp);
        rho = fock::loss_channel(rho, kSwR, eta_amp);
    }
    return HeraldedState{std::move(rho), state.herald_sign, state.herald_probability};
}

DensityOperator read(const HeraldedState& state, const NoiseParams& params, double phi_as) {
    params.validate();
    const std::array<ModeLabel, 2> as_modes{kAsL, kAsR};
    DensityOperator rho(state.rho.reg().relabeled(as_modes), state.rho.matrix());
    rho = fock::loss_channel(rho, kAsL, params.anti_stokes_eta_l());
    rho = fock::loss_channel(rho, kAsR, params.anti_stokes_eta_r());
    rho = fock::phase_shift(rho, kAsR, phi_as);
    return rho;
}

DensityOperator joint_polarization_state(const NoiseParams& params) {
    params.validate();
    const double v = std::exp(-params.sigma_phi * params.sigma_phi / 2.0);
    Matrix m = Matrix::Zero(4, 4);
    m(0, 0) = 0.5;
    m(3, 3) = 0.5;
    m(0, 3) = v / 2.0;
    m(3, 0) = v / 2.0;
    return DensityOperator(polarization_pair_register(), std::move(m));
}

Vector bell_phi_plus() {
    Vector v = Vector::Zero(4);
    v(0) = 1.0 / std::sqrt(2.0);
    v(3) = 1.0 / std::sqrt(2.0);
    return v;
}

fock::ModeRegister polarization_pair_register() {
    return fock::ModeRegister({fock::stokes(fock::Site::None, fock::Pol::None),
                               fock::anti_stokes(fock::Site::None, fock::Pol::None)},
                              1);
}

PureState heralded_target(int sign, double phi, int n_max) {
    fock::ModeRegister reg({kSwL, kSwR}, n_max);
    Vector amp = Vector::Zero(reg.dim());
    const std::array<int, 2> one_zero{1, 0};
    const std::array<int, 2> zero_one{0, 1};
    amp(reg.basis_index(one_zero)) = 1.0 / std::sqrt(2.0);
    amp(reg.basis_index(zero_one)) =
        static_cast<double>(sign) * std::exp(Complex(0.0, phi)) / std::sqrt(2.0);
    return PureState(reg, std::move(amp));
}

} // namespace dlczsim::node
