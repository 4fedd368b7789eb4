// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dlczsim/fock.hpp"
#include "dlczsim/rng.hpp"

namespace dlczsim::optics {

/// Wave plate with its fast axis at `angle_rad`.
struct WavePlate {
    enum class Kind { Quarter, Half };
    Kind kind = Kind::Half;
    double angle_rad = 0.0;
};

/// Jones matrix of a wave plate, convention
/// J = R(theta) diag(1, e^{i Gamma}) R(-theta).
Eigen::Matrix2cd jones(const WavePlate& plate);

/// Geometric phase shifter: QWP(45 deg) . HWP((phi - pi)/4) . QWP(45 deg),
/// composed from the actual Jones matrices. Equals diag(1, e^{i phi}) up to
/// a global phase.
Eigen::Matrix2cd pb_phase_unitary(double phi);

/// Analyzer settings and path properties of the verification interferometer.
struct InterferometerConfig {
    double phi_s = 0.0;     ///< Stokes-path phase offset
    double phi_as = 0.0;    ///< anti-Stokes-path phase offset
    double pb_phase = 0.0;  ///< scanned geometric phase
    double eta_path = 1.0;  ///< analyzer-path transmission in front of the detectors
    std::vector<WavePlate> extra_elements; ///< additional plates before the analyzer

    void validate() const;
};

struct DetectorModel {
    std::string id = "D?";
    double eta_det = 1.0;
    double dark_prob = 0.0;
    double position_m = 0.0;
    double gate_ns = 100.0;

    void validate() const;
};

struct DetectionEvent {
    std::string detector;
    double time_ns = 0.0;
    double position_m = 0.0;
    std::int64_t trial = 0;
};

enum class AnalyzerBasis {
    Fringe, ///< superposition basis: phase shifter + half-wave plate + PBS
    Mode    ///< spatial-mode basis: D3 watches the L arm, D4 the R arm
};

/// Joint threshold-click probabilities of the two verify detectors.
struct ClickPattern {
    double none = 0.0;
    double d3_only = 0.0;
    double d4_only = 0.0;
    double both = 0.0;
};

/// Full detection model for a two-mode anti-Stokes state: analyzer optics
/// per `basis`, per-detector efficiency, dark counts.
ClickPattern detector_outcomes(const fock::DensityOperator& rho_as,
                               const InterferometerConfig& config,
                               const DetectorModel& d3, const DetectorModel& d4,
                               AnalyzerBasis basis = AnalyzerBasis::Fringe);

struct FringeProbabilities {
    double p_d3 = 0.0;
    double p_d4 = 0.0;
    double p_noclick = 0.0;
};

/// Fringe projection probabilities; the rare double-click pattern is split
/// evenly between the two detectors so the three entries sum to one.
FringeProbabilities detect_fringe_probabilities(const fock::DensityOperator& rho_as,
                                                const InterferometerConfig& config,
                                                const DetectorModel& d3,
                                                const DetectorModel& d4);

/// Bernoulli sampling of real clicks plus independently injected dark counts,
/// one gate per detector. `probabilities[k]` is the real-photon click
/// probability at detectors[k].
std::vector<DetectionEvent> sample_clicks(std::span<const double> probabilities,
                                          std::span<const DetectorModel> detectors,
                                          TrialRng& rng, double gate_open_ns,
                                          std::int64_t trial_id);

/// One AOM routing window. Events inside go to `stream`.
struct AomWindow {
    std::string stream; ///< "heralding" or "verifying"
    double t_start_ns = 0.0;
    double t_end_ns = 0.0;
};

struct RoutedEvents {
    std::vector<DetectionEvent> heralding;
    std::vector<DetectionEvent> verifying;
    std::vector<std::pair<DetectionEvent, std::string>> dropped; ///< event + reason
};

/// Assign events to streams by time window. A boundary hit goes to the
/// earlier window; events outside every window are dropped with a reason.
RoutedEvents route_by_time(std::span<const DetectionEvent> events,
                           std::span<const AomWindow> schedule);

} // namespace dlczsim::optics
