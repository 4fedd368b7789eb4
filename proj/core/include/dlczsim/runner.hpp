// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dlczsim/estimation.hpp"
#include "dlczsim/node.hpp"
#include "dlczsim/optics.hpp"
#include "dlczsim/phase_lock.hpp"

namespace dlczsim::run {

enum class Engine { Exact, Sampling };
enum class JitterSource { Gaussian, Trajectory };

/// Pulse timing of one trial, ns unless stated.
struct Schedule {
    double pump_us = 2.0;          ///< initialization pulse
    double control_ns = 2.0;       ///< write/read control pulse width
    double storage_ns = 100.0;     ///< spin-wave storage before readout
    double stokes_delay_ns = 160.0;///< delay of the Stokes projection measurement
    double gate_ns = 100.0;        ///< detector gate width

    void validate() const;
};

struct Geometry {
    double cell_separation_m = 0.30;
    double herald_position_m = 0.0;
    double verify_position_m = 0.30;
};

struct ExperimentConfig {
    node::NoiseParams noise;
    optics::InterferometerConfig interferometer;
    optics::DetectorModel d1{"D1", 1.0, 1e-6, 0.0, 100.0};
    optics::DetectorModel d2{"D2", 1.0, 1e-6, 0.0, 100.0};
    optics::DetectorModel d3{"D3", 1.0, 1e-6, 0.30, 100.0};
    optics::DetectorModel d4{"D4", 1.0, 1e-6, 0.30, 100.0};
    Schedule schedule;
    Geometry geometry;
    long long trials = 1000000;
    std::uint64_t seed = 20260314;
    Engine engine = Engine::Sampling;
    optics::AnalyzerBasis analyzer = optics::AnalyzerBasis::Fringe;
    JitterSource jitter_source = JitterSource::Gaussian;
    phaselock::DriftModel lock_drift;
    phaselock::Controller lock_controller;
    double lock_duration_s = 2.0;
    long long record_cap = 100000;

    void validate() const;
};

/// Band-limited response p(delta) = a0 + sum_k (b_k cos k delta +
/// c_k sin k delta) of a detection probability to an extra phase on the R
/// branch. With per-mode truncation n_max the response is exactly limited to
/// n_max harmonics, so sampling 2 n_max + 1 phases recovers it exactly.
struct TrigPoly {
    double a0 = 0.0;
    std::vector<double> b, c; // harmonic k stored at index k-1

    double eval(double delta) const;
    /// E[p(delta0 + xi)] for Gaussian xi: harmonic k damps by e^{-k^2 s^2/2}.
    double gaussian_average(double delta0, double sigma) const;
};

/// Exact per-trial outcome probabilities for one analyzer/storage setting:
/// the oracle the sampling engine draws from.
struct TrialProbabilities {
    double herald_prob = 0.0;
    /// Joint p(herald AND pattern) versus the per-trial jitter phase,
    /// patterns ordered {none, d3 only, d4 only, both}.
    std::array<TrigPoly, 4> verify;
    /// Jitter-averaged conditional pattern probabilities at delta0 = 0.
    std::array<double, 4> averaged_conditional{};
    /// Jitter-averaged conditional-fringe visibility of the D3 pattern.
    double visibility = 0.0;
};

TrialProbabilities exact_trial_probabilities(const ExperimentConfig& config,
                                             double storage_ns,
                                             optics::AnalyzerBasis basis);

struct TrialRecord {
    std::int64_t trial_id = 0;
    bool heralded = false;
    double herald_time_ns = 0.0;
    double phase_jitter = 0.0;
    int verify_pattern = 0; ///< 0 none, 1 d3, 2 d4, 3 both
    double verify_time_ns = 0.0;
};

struct TrialAggregates {
    long long trials = 0;
    long long heralds = 0;
    long long verify_none = 0;
    long long verify_d3 = 0;
    long long verify_d4 = 0;
    long long verify_both = 0;
};

struct RunResult {
    TrialAggregates aggregates;
    std::vector<TrialRecord> records; ///< capped at config.record_cap
    bool records_truncated = false;
    TrialProbabilities oracle;
};

/// Run config.trials trials at the configured analyzer basis and storage
/// time. The sampling engine derives one RNG stream per trial from the
/// master seed; the exact engine reports expected counts.
RunResult run_trials(const ExperimentConfig& config);

/// Heralded coincidence counts versus the scanned analyzer phase.
/// config.trials is the total budget, split evenly across the grid; each
/// grid point gets an independent sub-seed.
est::FringeDataset phase_sweep(const ExperimentConfig& config,
                               const std::vector<double>& phases);

enum class DetectionOrder { StokesFirst, Simultaneous, AntiStokesFirst };
const char* to_string(DetectionOrder order);

enum class IntervalClass { Timelike, Lightlike, Spacelike };
const char* to_string(IntervalClass c);

struct SpaceTimeEvent {
    std::string label; ///< "S" or "AS"
    double t_ns = 0.0;
    double x_m = 0.0;
};

struct IntervalClassification {
    IntervalClass interval = IntervalClass::Timelike;
    int time_order = 0; ///< -1: e1 earlier, 0: simultaneous, +1: e1 later
    double s2 = 0.0;    ///< c^2 dt^2 - dx^2 in m^2
};

/// Minkowski classification with c = 0.299792458 m/ns; simultaneity within
/// `tol_ns`, lightlike within relative tolerance 1e-12.
IntervalClassification classify_interval(const SpaceTimeEvent& e1,
                                         const SpaceTimeEvent& e2,
                                         double tol_ns = 2.0);

struct DelayChoicePoint {
    double delay_ns = 0.0;
    DetectionOrder order = DetectionOrder::Simultaneous;
    IntervalClass interval = IntervalClass::Timelike;
    double visibility = 0.0;
    double sigma_visibility = 0.0;
    double concurrence = 0.0;
    double sigma_concurrence = 0.0;
};

struct DelayChoiceResult {
    std::vector<DelayChoicePoint> points; ///< sorted by delay
};

/// Sweep the storage time: per delay, a fringe scan for V and a mode-basis
/// run for the occupation matrix and the concurrence bound. The detection
/// order compares the (fixed) Stokes measurement delay with the readout time.
DelayChoiceResult delay_choice_sweep(const ExperimentConfig& config,
                                     std::vector<double> delays_ns,
                                     int fringe_points = 12);

} // namespace dlczsim::run
