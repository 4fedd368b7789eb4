// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "dlczsim/runner.hpp"

namespace dlczsim::run {

/// Observables the calibration inverts: heralded occupation probabilities
/// and the conditional-fringe visibility.
struct CalibrationTargets {
    double p01 = 0.0;
    double p10 = 0.0;
    double p11 = 0.0;
    double visibility = 0.0;

    void validate() const;
};

struct CalibrationOptions {
    int max_iterations = 200;
    double tol = 1e-10; ///< on the squared relative residual norm
};

struct CalibrationResult {
    node::NoiseParams params;
    std::vector<double> residuals; ///< relative, order {p01, p10, p11, V}
    double residual_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<std::string> notes; ///< identifiability remarks
};

/// Fit (chi, readout-efficiency product, arm asymmetry) to {p01, p10, p11}
/// with the exact-probability engine, then set sigma_phi in closed form from
/// the visibility target. dark_prob is held at its configured value (it is
/// degenerate with sigma_phi through V alone); the efficiency product is
/// constrained only as a product. Throws ValidationError on infeasible
/// targets (V above what the zero-jitter model can reach, V > 1, ...).
CalibrationResult calibrate(const CalibrationTargets& targets,
                            const ExperimentConfig& base,
                            const CalibrationOptions& options = {});

/// One-dimensional inverse: the sigma_phi whose jitter-averaged fringe
/// visibility equals v_target for this config (bisection; V is monotone in
/// sigma_phi). Throws ValidationError when v_target is unreachable.
double calibrate_sigma_phi_for_visibility(const ExperimentConfig& config,
                                          double v_target);

} // namespace dlczsim::run
