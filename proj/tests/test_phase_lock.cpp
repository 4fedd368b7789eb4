// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <vector>

#include "dlczsim/phase_lock.hpp"
#include "dlczsim/errors.hpp"

using namespace dlczsim;
using namespace dlczsim::phaselock;

TEST_SUITE_BEGIN("phase-lock");

TEST_CASE("evolve_unlocked: no noise, no drift stays at zero") {
    DriftModel model;
    model.sigma_w = 0.0;
    model.v_drift = 0.0;
    model.kappa = 3.0;
    model.dt = 1e-3;
    TrialRng rng(1);
    const Trajectory traj = evolve_unlocked(model, 0.5, rng);
    for (double phi : traj.phi) CHECK(phi == 0.0);
}

TEST_CASE("evolve_unlocked: kappa = 0 gives Wiener variance growth") {
    // oracle: Var[phi(t)] = sigma_w^2 t for a pure random walk
    DriftModel model;
    model.sigma_w = 0.8;
    model.dt = 1e-3;
    const double t_end = 1.0;
    const int paths = 1000;
    double acc = 0.0;
    for (int p = 0; p < paths; ++p) {
        TrialRng rng = TrialRng::for_trial(97, p);
        const Trajectory traj = evolve_unlocked(model, t_end, rng);
        acc += traj.phi.back() * traj.phi.back();
    }
    const double var = acc / paths;
    const double expected = model.sigma_w * model.sigma_w * t_end;
    // MC error on a chi^2 mean with 1000 paths is ~4.5% at one sigma
    CHECK(std::abs(var - expected) / expected < 0.15);
}

TEST_CASE("evolve_unlocked: OU stationary variance sigma_w^2 / (2 kappa)") {
    DriftModel model;
    model.kappa = 20.0;
    model.sigma_w = 0.5;
    model.dt = 2e-4;
    const double t_end = 2.0; // >> 1/kappa, the tail is stationary
    const int paths = 1000;
    double acc = 0.0;
    int count = 0;
    for (int p = 0; p < paths; ++p) {
        TrialRng rng = TrialRng::for_trial(131, p);
        const Trajectory traj = evolve_unlocked(model, t_end, rng);
        for (std::size_t k = traj.phi.size() / 2; k < traj.phi.size(); k += 107) {
            acc += traj.phi[k] * traj.phi[k];
            ++count;
        }
    }
    const double var = acc / count;
    const double expected = model.sigma_w * model.sigma_w / (2.0 * model.kappa);
    CHECK(std::abs(var - expected) / expected < 0.05);
}

TEST_CASE("error_signal basics") {
    CHECK(error_signal(0.7, 0.7) == 0.0);
    // max slope at the side of fringe: error ~ -delta/2
    const double sp = M_PI / 2.0;
    for (double delta : {1e-4, -1e-4, 3e-3}) {
        CHECK(error_signal(sp + delta, sp) ==
              doctest::Approx(-delta / 2.0).epsilon(5e-3));
    }
    for (double phi : {-2.0, 0.0, 1.0, 4.0}) {
        CHECK(error_signal(phi, 0.0) >= -1.0);
        CHECK(error_signal(phi, 0.0) <= 1.0);
    }
}

TEST_CASE("run_locked: quiet plant at the setpoint reports zero residual") {
    DriftModel model;
    model.sigma_w = 0.0;
    model.v_drift = 0.0;
    model.dt = 1e-3;
    model.phi0 = M_PI / 2.0;
    Controller ctrl;
    ctrl.k_i = 1.0;
    ctrl.update_period = 1e-2;
    TrialRng rng(7);
    const LockReport report = run_locked(model, ctrl, 1.0, rng);
    CHECK(report.residual_std == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(report.settling_time == 0.0);
    CHECK(report.lock_acquired);
}

TEST_CASE("run_locked: zero gains reproduce the unlocked trajectory") {
    DriftModel model;
    model.sigma_w = 0.4;
    model.v_drift = 0.5;
    model.dt = 1e-3;
    Controller ctrl;
    ctrl.k_i = 0.0;
    ctrl.k_p = 0.0;
    ctrl.update_period = 1e-2;

    TrialRng rng_a(11), rng_b(11);
    const Trajectory unlocked = evolve_unlocked(model, 0.8, rng_a);
    Trajectory locked;
    (void)run_locked(model, ctrl, 0.8, rng_b, &locked);
    REQUIRE(locked.phi.size() == unlocked.phi.size());
    for (std::size_t k = 0; k < locked.phi.size(); ++k)
        CHECK(locked.phi[k] == doctest::Approx(unlocked.phi[k]).epsilon(1e-12));
}

TEST_CASE("run_locked: a gain exists that beats the visibility budget") {
    // residual must allow exp(-sigma^2/2) >= 0.875, i.e. sigma <= 0.517 rad
    DriftModel model;
    model.sigma_w = 1.5;   // rad/sqrt(s): substantial ambient drift
    model.v_drift = 0.8;   // slow thermal ramp
    model.dt = 1e-4;
    model.phi0 = M_PI / 2.0;
    Controller ctrl;
    ctrl.update_period = 1e-3;
    ctrl.setpoint = M_PI / 2.0;

    double best = 1e9;
    double best_gain = 0.0;
    for (double gain : {20.0, 60.0, 200.0, 600.0, 2000.0}) {
        ctrl.k_i = gain;
        TrialRng rng(202);
        const LockReport report = run_locked(model, ctrl, 2.0, rng);
        if (report.residual_std < best) {
            best = report.residual_std;
            best_gain = gain;
        }
    }
    CHECK(best <= 0.52);
    CHECK(best_gain > 0.0);
}

TEST_CASE("run_locked: closed loop never loses to open loop on a gain grid") {
    DriftModel model;
    model.sigma_w = 1.0;
    model.v_drift = 0.4;
    model.dt = 1e-4;
    model.phi0 = M_PI / 2.0;
    Controller ctrl;
    ctrl.update_period = 1e-3;

    // open loop = zero gain, same seed
    ctrl.k_i = 0.0;
    TrialRng rng_open(404);
    const double open_std = run_locked(model, ctrl, 1.0, rng_open).residual_std;

    for (double gain : {30.0, 100.0, 300.0, 1000.0}) {
        ctrl.k_i = gain;
        TrialRng rng(404);
        const LockReport report = run_locked(model, ctrl, 1.0, rng);
        CHECK(report.residual_std <= open_std + 1e-9);
    }
}

TEST_CASE("run_locked: reports are deterministic in (model, controller, seed)") {
    DriftModel model;
    model.sigma_w = 0.9;
    model.dt = 1e-3;
    Controller ctrl;
    ctrl.k_i = 50.0;
    ctrl.update_period = 1e-2;
    TrialRng a(5050), b(5050);
    const LockReport ra = run_locked(model, ctrl, 1.0, a);
    const LockReport rb = run_locked(model, ctrl, 1.0, b);
    CHECK(ra.residual_std == rb.residual_std);
    CHECK(ra.settling_time == rb.settling_time);
    CHECK(ra.saturation_fraction == rb.saturation_fraction);
}

TEST_CASE("run_locked: persistent saturation is a failed lock, not an exception") {
    DriftModel model;
    model.sigma_w = 0.0;
    model.v_drift = 50.0; // ramp far beyond the actuator
    model.dt = 1e-3;
    model.phi0 = M_PI / 2.0;
    Controller ctrl;
    ctrl.k_i = 500.0;
    ctrl.update_period = 1e-2;
    ctrl.actuator_range = 0.5;
    TrialRng rng(6060);
    const LockReport report = run_locked(model, ctrl, 2.0, rng);
    CHECK(report.saturation_fraction > 0.5);
    CHECK_FALSE(report.lock_acquired);
}

TEST_CASE("model validation") {
    DriftModel model;
    model.dt = 0.0;
    TrialRng rng(1);
    CHECK_THROWS_AS(evolve_unlocked(model, 1.0, rng), DomainError);
    model.dt = 1e-3;
    CHECK_THROWS_AS(evolve_unlocked(model, -1.0, rng), DomainError);
    Controller ctrl;
    ctrl.update_period = 1e-4; // below dt
    CHECK_THROWS_AS(run_locked(model, ctrl, 1.0, rng), DomainError);
}

TEST_SUITE_END();
