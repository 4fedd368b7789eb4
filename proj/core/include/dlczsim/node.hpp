// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>
#include <vector>

#include "dlczsim/fock.hpp"

namespace dlczsim::node {

/// Physical noise parameters of one generation/verification cycle.
/// Efficiencies are probabilities in [0, 1]; chi is the excitation
/// probability per write pulse pair and is expected to be small.
/// Defaults are the calibrated working point: heralded occupations
/// p10 = 3.5e-3, p01 = 3.1e-3, p11 = 5.5e-7 and fringe visibility 0.875.
struct NoiseParams {
    double chi = 1.663004e-2;  ///< excitation probability per pulse pair
    double eta_ret = 1.355404e-2; ///< spin wave -> anti-Stokes retrieval efficiency
    double eta_trans = 0.85;   ///< optical path transmission (filter cavities etc.)
    double eta_det = 0.55;     ///< detector quantum efficiency
    double dark_prob = 1e-6;   ///< dark-count probability per detector per gate
    double sigma_phi = 0.4394; ///< residual interferometer phase jitter, rad (std dev)
    double tau_mem_ns = 5e4;   ///< memory coherence lifetime
    double tau_amp_ns = std::numeric_limits<double>::infinity(); ///< amplitude lifetime
    double eta_asym = 0.8858;  ///< R-arm/L-arm readout efficiency ratio
    int n_max = 2;             ///< Fock truncation per mode

    void validate() const;
    /// Non-fatal advisories (chi above the weak-excitation regime, ...).
    std::vector<std::string> warnings() const;

    double stokes_detection_eta() const { return eta_trans * eta_det; }
    /// Retrieval efficiency of the left / right anti-Stokes arm: eta_ret
    /// split by the asymmetry ratio with the mean held at eta_ret. Path and
    /// detector losses are applied downstream by the optics chain.
    double anti_stokes_eta_l() const;
    double anti_stokes_eta_r() const;
};

/// One atomic ensemble acting as a memory node.
struct EnsembleNode {
    fock::Site site = fock::Site::L;
    fock::ModeLabel spin_wave_mode = fock::spin_wave(fock::Site::L);
    double tau_mem_ns = 5e4;
    double eta_ret = 0.05;

    void validate() const;
};

enum class StokesDetector { D1, D2 };

/// Conditional atomic state after a Stokes click, over the two spin-wave
/// modes. herald_sign tracks the detector-dependent sign of the coherence.
struct HeraldedState {
    fock::DensityOperator rho;
    int herald_sign = +1;
    double herald_probability = 0.0;
};

/// Joint write state over {sw_L, S_L, sw_R, S_R}: equal two-mode-squeezed
/// states in both ensembles with the right Stokes branch carrying
/// e^{i phi_s} per photon.
fock::PureState symmetric_write(const NoiseParams& params, double phi_s);

/// Mix the Stokes modes on the path-erasing analyzer, apply the Stokes-arm
/// losses and dark counts, and condition on a click in the given detector.
HeraldedState herald(const fock::PureState& joint, StokesDetector detector,
                     const NoiseParams& params);

/// Memory storage for tau: coherence decays by exp(-tau/tau_mem), populations
/// by the optional amplitude lifetime (identity when tau_amp is infinite).
HeraldedState store(const HeraldedState& state, double tau_ns, const NoiseParams& params);

/// Retrieve the spin waves into anti-Stokes modes {AS_L, AS_R} with the
/// per-arm retrieval-chain efficiencies; the R branch picks up phi_as.
fock::DensityOperator read(const HeraldedState& state, const NoiseParams& params,
                           double phi_as);

/// Post-selected Stokes/anti-Stokes polarization pair on {HH, HV, VH, VV}:
/// a Bell state whose HH<->VV coherence is damped by exp(-sigma_phi^2/2).
/// Vacuum and higher-order components are excluded by the post-selection.
fock::DensityOperator joint_polarization_state(const NoiseParams& params);

/// The two-qubit target of the polarization measurement, (|HH>+|VV>)/sqrt(2),
/// as amplitudes over {HH, HV, VH, VV}.
fock::Vector bell_phi_plus();

/// Register used for polarization-qubit pairs: two modes with n_max = 1 and
/// occupation 0 <-> H, 1 <-> V, basis order {HH, HV, VH, VV}.
fock::ModeRegister polarization_pair_register();

/// Analytic heralded target over {sw_L, sw_R} (n_max = 1 layout),
/// (|10> + sign * e^{i phi} |01>)/sqrt(2), for fidelity checks.
fock::PureState heralded_target(int sign, double phi, int n_max);

} // namespace dlczsim::node
