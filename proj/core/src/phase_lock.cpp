// SPDX-License-Identifier: Apache-2.0
#include "dlczsim/phase_lock.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "dlczsim/errors.hpp"

namespace dlczsim::phaselock {

void DriftModel::validate() const {
    if (kappa < 0.0) throw DomainError("DriftModel: kappa must be >= 0");
    if (sigma_w < 0.0) throw DomainError("DriftModel: sigma_w must be >= 0");
    if (!(dt > 0.0)) throw DomainError("DriftModel: dt must be > 0");
}

void Controller::validate(double dt) const {
    if (update_period < dt)
        throw DomainError("Controller: update_period must be >= model dt");
    if (!(actuator_range > 0.0))
        throw DomainError("Controller: actuator_range must be > 0");
}

Trajectory evolve_unlocked(const DriftModel& model, double duration, TrialRng& rng) {
    model.validate();
    if (!(duration > 0.0)) throw DomainError("evolve_unlocked: duration must be > 0");

    const std::size_t steps = static_cast<std::size_t>(std::ceil(duration / model.dt));
    Trajectory traj;
    traj.dt = model.dt;
    traj.phi.reserve(steps + 1);
    traj.phi.push_back(model.phi0);

    const double sq = model.sigma_w * std::sqrt(model.dt);
    double phi = model.phi0;
    for (std::size_t k = 0; k < steps; ++k) {
        phi += (-model.kappa * phi + model.v_drift) * model.dt + sq * rng.next_gaussian();
        traj.phi.push_back(phi);
    }
    return traj;
}

double error_signal(double phi, double setpoint) {
    return 0.5 * (1.0 + std::cos(phi)) - 0.5 * (1.0 + std::cos(setpoint));
}

LockReport run_locked(const DriftModel& model, const Controller& controller,
                      double duration, TrialRng& rng, Trajectory* out) {
    model.validate();
    controller.validate(model.dt);
    if (!(duration > 0.0)) throw DomainError("run_locked: duration must be > 0");

    const std::size_t steps = static_cast<std::size_t>(std::ceil(duration / model.dt));
    const std::size_t steps_per_update = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(controller.update_period / model.dt)));

    Trajectory traj;
    traj.dt = model.dt;
    traj.phi.reserve(steps + 1);
    traj.error.reserve(steps + 1);
    traj.actuator.reserve(steps + 1);

    const double sq = model.sigma_w * std::sqrt(model.dt);
    // drift holds the free-running part; the total phase is drift + actuator.
    double drift = model.phi0;
    double integ = 0.0;
    double actuator = 0.0;
    std::size_t saturated = 0;
    double settling_time = -1.0;

    double phi = drift + actuator;
    traj.phi.push_back(phi);
    traj.error.push_back(error_signal(phi, controller.setpoint));
    traj.actuator.push_back(actuator);
    if (std::abs(phi - controller.setpoint) <= controller.settle_band) settling_time = 0.0;

    for (std::size_t k = 0; k < steps; ++k) {
        drift += (-model.kappa * drift + model.v_drift) * model.dt + sq * rng.next_gaussian();

        if (k % steps_per_update == 0) {
            const double e = error_signal(drift + actuator, controller.setpoint);
            integ += controller.k_i * e * controller.update_period;
            const double u = integ + controller.k_p * e;
            actuator = std::clamp(u, -controller.actuator_range, controller.actuator_range);
            if (u > controller.actuator_range || u < -controller.actuator_range)
                ++saturated;
            integ = std::clamp(integ, -controller.actuator_range, controller.actuator_range);
        }

        phi = drift + actuator;
        traj.phi.push_back(phi);
        traj.error.push_back(error_signal(phi, controller.setpoint));
        traj.actuator.push_back(actuator);
        if (settling_time < 0.0 &&
            std::abs(phi - controller.setpoint) <= controller.settle_band)
            settling_time = (k + 1) * model.dt;
    }

    // Residual statistics over the second half of the run.
    const std::size_t from = traj.phi.size() / 2;
    const std::size_t n = traj.phi.size() - from;
    double mean = 0.0;
    for (std::size_t k = from; k < traj.phi.size(); ++k) mean += traj.phi[k];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t k = from; k < traj.phi.size(); ++k) {
        const double d = traj.phi[k] - controller.setpoint;
        var += d * d;
    }
    var /= static_cast<double>(n);

    LockReport report;
    report.residual_std = std::sqrt(var);
    report.settling_time = settling_time < 0.0 ? duration : settling_time;
    report.saturation_fraction =
        static_cast<double>(saturated) /
        static_cast<double>(std::max<std::size_t>(1, steps / steps_per_update));
    report.mean_phi = mean;
    report.steps = steps;
    report.lock_acquired = report.residual_std <= controller.lock_threshold &&
                           report.saturation_fraction <= 0.5;
    if (out) *out = std::move(traj);
    return report;
}

void write_trajectory_csv(const std::string& path, const Trajectory& trajectory) {
    std::ofstream f(path);
    if (!f) throw ValidationError("write_trajectory_csv: cannot open " + path);
    f << "time_s,phi_rad,error,actuator_rad\n";
    for (std::size_t k = 0; k < trajectory.phi.size(); ++k) {
        const double err = k < trajectory.error.size() ? trajectory.error[k] : 0.0;
        const double act = k < trajectory.actuator.size() ? trajectory.actuator[k] : 0.0;
        f << k * trajectory.dt << "," << trajectory.phi[k] << "," << err << "," << act
          << "\n";
    }
}

} // namespace dlczsim::phaselock
