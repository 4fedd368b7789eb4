// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dlczsim/rng.hpp"

namespace dlczsim::phaselock {

/// Unlocked interferometer phase dynamics: Ornstein-Uhlenbeck relaxation
/// toward zero plus a deterministic linear drift, integrated with
/// Euler-Maruyama steps of size dt.
struct DriftModel {
    double kappa = 0.0;    ///< mean-reversion rate, 1/s
    double sigma_w = 0.0;  ///< diffusion strength, rad/sqrt(s)
    double v_drift = 0.0;  ///< deterministic drift, rad/s
    double dt = 1e-4;      ///< integration step, s
    double phi0 = 0.0;     ///< initial phase, rad

    void validate() const;
};

/// Integral (optionally proportional) feedback acting on the piezo.
struct Controller {
    double k_i = 0.0;            ///< integral gain
    double k_p = 0.0;            ///< optional proportional gain
    double update_period = 1e-3; ///< controller period, s
    double actuator_range = 20.0;///< actuator saturation, rad
    double setpoint = M_PI / 2.0;///< locked phase (side of fringe by default)
    double lock_threshold = 0.1; ///< residual std below which the lock counts
    double settle_band = 0.1;    ///< |phi - setpoint| band for settling time

    void validate(double dt) const;
};

struct Trajectory {
    double dt = 0.0;
    std::vector<double> phi;
    std::vector<double> error;
    std::vector<double> actuator;
};

struct LockReport {
    double residual_std = 0.0;      ///< sigma_phi over the post-settling window
    bool lock_acquired = false;
    double settling_time = 0.0;     ///< s; first entry into the settle band
    double saturation_fraction = 0.0;
    double mean_phi = 0.0;
    std::size_t steps = 0;
};

/// Free-running phase trajectory over `duration` seconds.
Trajectory evolve_unlocked(const DriftModel& model, double duration, TrialRng& rng);

/// Auxiliary-fringe error: I(phi) - I(setpoint) with I(phi) = (1 + cos phi)/2.
double error_signal(double phi, double setpoint);

/// Closed-loop run. The same noise stream drives the drift as in the
/// unlocked case, so zero gains reproduce evolve_unlocked exactly.
/// Saturation on more than half the steps marks the lock as failed rather
/// than throwing. Pass `out` to capture the trajectory.
LockReport run_locked(const DriftModel& model, const Controller& controller,
                      double duration, TrialRng& rng, Trajectory* out = nullptr);

/// CSV dump with columns time_s, phi_rad, error, actuator_rad.
void write_trajectory_csv(const std::string& path, const Trajectory& trajectory);

} // namespace dlczsim::phaselock
