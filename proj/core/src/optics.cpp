// SPDX-License-Identifier: Apache-2.0
#include "dlczsim/optics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace dlczsim::optics {

using fock::Complex;
using fock::DensityOperator;
using fock::Matrix;
using fock::ModeLabel;

Eigen::Matrix2cd jones(const WavePlate& plate) {
    if (!std::isfinite(plate.angle_rad))
        throw DomainError("jones: wave-plate angle must be finite");
    const double gamma = plate.kind == WavePlate::Kind::Quarter ? M_PI / 2.0 : M_PI;
    const double c = std::cos(plate.angle_rad);
    const double s = std::sin(plate.angle_rad);
    Eigen::Matrix2cd rot, ret;
    rot << c, -s, s, c;
    ret << 1.0, 0.0, 0.0, std::exp(Complex(0.0, gamma));
    return rot * ret * rot.transpose();
}

Eigen::Matrix2cd pb_phase_unitary(double phi) {
    const WavePlate qwp{WavePlate::Kind::Quarter, M_PI / 4.0};
    const WavePlate hwp{WavePlate::Kind::Half, (phi - M_PI) / 4.0};
    return jones(qwp) * jones(hwp) * jones(qwp);
}

void InterferometerConfig::validate() const {
    if (!std::isfinite(phi_s) || !std::isfinite(phi_as) || !std::isfinite(pb_phase))
        throw DomainError("InterferometerConfig: phases must be finite");
    if (!(eta_path >= 0.0 && eta_path <= 1.0))
        throw DomainError("InterferometerConfig: eta_path outside [0, 1]");
    for (const auto& p : extra_elements)
        if (p.kind != WavePlate::Kind::Quarter && p.kind != WavePlate::Kind::Half)
            throw DomainError("InterferometerConfig: unknown element kind");
}

void DetectorModel::validate() const {
    if (!(eta_det >= 0.0 && eta_det <= 1.0))
        throw DomainError("DetectorModel: eta_det outside [0, 1]");
    if (!(dark_prob >= 0.0 && dark_prob <= 1.0))
        throw DomainError("DetectorModel: dark_prob outside [0, 1]");
    if (!(gate_ns > 0.0)) throw DomainError("DetectorModel: gate must be > 0");
}

ClickPattern detector_outcomes(const DensityOperator& rho_as,
                               const InterferometerConfig& config,
                               const DetectorModel& d3, const DetectorModel& d4,
                               AnalyzerBasis basis) {
    config.validate();
    d3.validate();
    d4.validate();
    if (rho_as.reg().num_modes() != 2)
        throw ShapeError("detector_outcomes: expected a two-mode anti-Stokes state");

    const std::array<ModeLabel, 2> modes{rho_as.reg().modes()[0], rho_as.reg().modes()[1]};
    DensityOperator rho = rho_as;

    Eigen::Matrix2cd analyzer = Eigen::Matrix2cd::Identity();
    for (const auto& plate : config.extra_elements) analyzer = jones(plate) * analyzer;
    if (basis == AnalyzerBasis::Fringe) {
        const WavePlate merge{WavePlate::Kind::Half, M_PI / 8.0};
        analyzer = jones(merge) * pb_phase_unitary(config.pb_phase) * analyzer;
    }
    if (!analyzer.isApprox(Eigen::Matrix2cd::Identity(), 1e-14))
        rho = fock::apply_mode_unitary(rho, analyzer, modes);

    rho = fock::loss_channel(rho, modes[0], config.eta_path * d3.eta_det);
    rho = fock::loss_channel(rho, modes[1], config.eta_path * d4.eta_det);

    const auto [n3, c3] = fock::click_povm(rho.reg(), modes[0], d3.dark_prob);
    const auto [n4, c4] = fock::click_povm(rho.reg(), modes[1], d4.dark_prob);

    // POVM elements act on distinct modes and are diagonal, so the joint
    // outcome operators are plain products.
    const auto expect = [&](const Matrix& e) {
        return std::max(0.0, (e * rho.matrix()).trace().real());
    };
    ClickPattern out;
    out.none = expect(n3 * n4);
    out.d3_only = expect(c3 * n4);
    out.d4_only = expect(n3 * c4);
    out.both = expect(c3 * c4);
    const double total = out.none + out.d3_only + out.d4_only + out.both;
    out.none /= total;
    out.d3_only /= total;
    out.d4_only /= total;
    out.both /= total;
    return out;
}

FringeProbabilities detect_fringe_probabilities(const DensityOperator& rho_as,
                                                const InterferometerConfig& config,
                                                const DetectorModel& d3,
                                                const DetectorModel& d4) {
    const ClickPattern p =
        detector_outcomes(rho_as, config, d3, d4, AnalyzerBasis::Fringe);
    // Double clicks are O(chi * eta^2) rare; splitting them evenly keeps the
    // three reported entries an exact partition.
    return FringeProbabilities{p.d3_only + p.both / 2.0, p.d4_only + p.both / 2.0,
                               p.none};
}

std::vector<DetectionEvent> sample_clicks(std::span<const double> probabilities,
                                          std::span<const DetectorModel> detectors,
                                          TrialRng& rng, double gate_open_ns,
                                          std::int64_t trial_id) {
    if (probabilities.size() != detectors.size())
        throw ShapeError("sample_clicks: one probability per detector required");
    std::vector<DetectionEvent> events;
    for (std::size_t k = 0; k < detectors.size(); ++k) {
        const double p = probabilities[k];
        if (!(p >= 0.0 && p <= 1.0))
            throw DomainError("sample_clicks: probability outside [0, 1]");
        const bool real_click = rng.next_bernoulli(p);
        const bool dark_click = rng.next_bernoulli(detectors[k].dark_prob);
        if (real_click || dark_click)
            events.push_back(DetectionEvent{detectors[k].id, gate_open_ns,
                                            detectors[k].position_m, trial_id});
    }
    return events;
}

RoutedEvents route_by_time(std::span<const DetectionEvent> events,
                           std::span<const AomWindow> schedule) {
    std::vector<AomWindow> windows(schedule.begin(), schedule.end());
    std::sort(windows.begin(), windows.end(),
              [](const AomWindow& a, const AomWindow& b) {
                  return a.t_start_ns < b.t_start_ns;
              });
    for (std::size_t i = 0; i < windows.size(); ++i) {
        if (!(windows[i].t_end_ns > windows[i].t_start_ns))
            throw DomainError("route_by_time: window must have positive width");
        if (windows[i].stream != "heralding" && windows[i].stream != "verifying")
            throw DomainError("route_by_time: unknown stream " + windows[i].stream);
        if (i > 0 && windows[i].t_start_ns < windows[i - 1].t_end_ns)
            throw DomainError("route_by_time: windows overlap");
    }

    RoutedEvents out;
    for (const auto& e : events) {
        const AomWindow* hit = nullptr;
        for (const auto& w : windows) {
            // Inclusive on both ends; scanning in time order sends a shared
            // boundary to the earlier window.
            if (e.time_ns >= w.t_start_ns && e.time_ns <= w.t_end_ns) {
                hit = &w;
                break;
            }
        }
        if (!hit) {
            out.dropped.emplace_back(e, "outside all AOM windows");
        } else if (hit->stream == "heralding") {
            out.heralding.push_back(e);
        } else {
            out.verifying.push_back(e);
        }
    }
    return out;
}

} // namespace dlczsim::optics
