// SPDX-License-Identifier: Apache-2.0
#include "dlczsim/runner.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace dlczsim::run {

using fock::ModeLabel;

namespace {

constexpr double kSpeedOfLightMPerNs = 0.299792458;

const ModeLabel kAsR = fock::anti_stokes(fock::Site::R);

} // namespace

void Schedule::validate() const {
    if (!(pump_us > 0.0) || !(control_ns > 0.0) || !(gate_ns > 0.0))
        throw DomainError("Schedule: durations must be > 0");
    if (storage_ns < 0.0) throw DomainError("Schedule: storage_ns must be >= 0");
    if (stokes_delay_ns < 0.0) throw DomainError("Schedule: stokes_delay_ns must be >= 0");
}

void ExperimentConfig::validate() const {
    noise.validate();
    interferometer.validate();
    d1.validate();
    d2.validate();
    d3.validate();
    d4.validate();
    schedule.validate();
    if (trials <= 0) throw DomainError("ExperimentConfig: trials must be > 0");
    if (record_cap < 0) throw DomainError("ExperimentConfig: record_cap must be >= 0");
    // The herald gate must open while the verify gate can still be related
    // to it within one trial.
    if (schedule.stokes_delay_ns > schedule.storage_ns + schedule.gate_ns +
                                       schedule.stokes_delay_ns)
        throw DomainError("ExperimentConfig: inconsistent schedule windows");
}

double TrigPoly::eval(double delta) const {
    double v = a0;
    for (std::size_t k = 0; k < b.size(); ++k) {
        const double kk = static_cast<double>(k + 1);
        v += b[k] * std::cos(kk * delta) + c[k] * std::sin(kk * delta);
    }
    return v;
}

double TrigPoly::gaussian_average(double delta0, double sigma) const {
    double v = a0;
    for (std::size_t k = 0; k < b.size(); ++k) {
        const double kk = static_cast<double>(k + 1);
        const double damping = std::exp(-kk * kk * sigma * sigma / 2.0);
        v += damping * (b[k] * std::cos(kk * delta0) + c[k] * std::sin(kk * delta0));
    }
    return v;
}

TrialProbabilities exact_trial_probabilities(const ExperimentConfig& config,
                                             double storage_ns,
                                             optics::AnalyzerBasis basis) {
    config.validate();
    const auto& noise = config.noise;

    TrialProbabilities out;
    const int n_harmonics = noise.n_max;
    for (auto& poly : out.verify) {
        poly.b.assign(n_harmonics, 0.0);
        poly.c.assign(n_harmonics, 0.0);
    }

    const fock::PureState joint = node::symmetric_write(noise, config.interferometer.phi_s);
    std::optional<node::HeraldedState> heralded;
    try {
        heralded = node::herald(joint, node::StokesDetector::D1, noise);
    } catch (const HeraldImpossibleError&) {
        // chi = 0 with no dark counts: no heralds ever, all tables stay zero.
        return out;
    }
    out.herald_prob = heralded->herald_probability;

    *heralded = node::store(*heralded, storage_ns, noise);
    const fock::DensityOperator rho_as =
        node::read(*heralded, noise, config.interferometer.phi_as);

    // The runner derives the verify chain from NoiseParams; the configured
    // detector models contribute identity, position and gate only.
    optics::InterferometerConfig ic = config.interferometer;
    ic.eta_path = noise.eta_trans;
    optics::DetectorModel d3 = config.d3;
    optics::DetectorModel d4 = config.d4;
    d3.eta_det = noise.eta_det;
    d4.eta_det = noise.eta_det;
    d3.dark_prob = noise.dark_prob;
    d4.dark_prob = noise.dark_prob;

    // Sample the response at 2 n_max + 1 phases; the per-mode truncation
    // bounds the harmonic content, so the discrete Fourier solve is exact.
    const int n_samples = 2 * n_harmonics + 1;
    std::array<std::vector<double>, 4> samples;
    for (auto& s : samples) s.resize(n_samples);
    for (int j = 0; j < n_samples; ++j) {
        const double delta = 2.0 * M_PI * j / n_samples;
        const fock::DensityOperator rho_j = fock::phase_shift(rho_as, kAsR, delta);
        const optics::ClickPattern pat = optics::detector_outcomes(rho_j, ic, d3, d4, basis);
        samples[0][j] = pat.none * out.herald_prob;
        samples[1][j] = pat.d3_only * out.herald_prob;
        samples[2][j] = pat.d4_only * out.herald_prob;
        samples[3][j] = pat.both * out.herald_prob;
    }
    for (int pattern = 0; pattern < 4; ++pattern) {
        TrigPoly& poly = out.verify[pattern];
        double a0 = 0.0;
        for (int j = 0; j < n_samples; ++j) a0 += samples[pattern][j];
        poly.a0 = a0 / n_samples;
        for (int k = 1; k <= n_harmonics; ++k) {
            double bk = 0.0, ck = 0.0;
            for (int j = 0; j < n_samples; ++j) {
                const double angle = 2.0 * M_PI * j * k / n_samples;
                bk += samples[pattern][j] * std::cos(angle);
                ck += samples[pattern][j] * std::sin(angle);
            }
            poly.b[k - 1] = 2.0 * bk / n_samples;
            poly.c[k - 1] = 2.0 * ck / n_samples;
        }
    }

    const double sigma = noise.sigma_phi;
    double cond_total = 0.0;
    for (int pattern = 0; pattern < 4; ++pattern) {
        out.averaged_conditional[pattern] =
            std::max(0.0, out.verify[pattern].gaussian_average(0.0, sigma)) /
            out.herald_prob;
        cond_total += out.averaged_conditional[pattern];
    }
    if (cond_total > 0.0)
        for (auto& v : out.averaged_conditional) v /= cond_total;

    const TrigPoly& d3_poly = out.verify[1];
    if (d3_poly.a0 > 0.0 && !d3_poly.b.empty()) {
        const double first_harmonic = std::hypot(d3_poly.b[0], d3_poly.c[0]);
        out.visibility =
            std::exp(-sigma * sigma / 2.0) * first_harmonic / d3_poly.a0;
    }
    return out;
}

namespace {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return TrialRng::for_trial(master, stream).next_u64();
}

} // namespace

RunResult run_trials(const ExperimentConfig& config) {
    config.validate();
    RunResult result;
    result.oracle =
        exact_trial_probabilities(config, config.schedule.storage_ns, config.analyzer);
    result.aggregates.trials = config.trials;

    const double p_h = result.oracle.herald_prob;
    const double herald_time = config.schedule.stokes_delay_ns;
    const double verify_time = config.schedule.storage_ns;

    if (config.engine == Engine::Exact) {
        // Expected counts, rounded; the "none" bucket absorbs the rounding so
        // the patterns still sum to the herald count.
        const long long heralds =
            std::llround(static_cast<double>(config.trials) * p_h);
        result.aggregates.heralds = heralds;
        const auto& cond = result.oracle.averaged_conditional;
        result.aggregates.verify_d3 = std::llround(heralds * cond[1]);
        result.aggregates.verify_d4 = std::llround(heralds * cond[2]);
        result.aggregates.verify_both = std::llround(heralds * cond[3]);
        result.aggregates.verify_none = heralds - result.aggregates.verify_d3 -
                                        result.aggregates.verify_d4 -
                                        result.aggregates.verify_both;
        return result;
    }

    // Trajectory-coupled jitter: draw per-trial phases from the residuals of
    // a locked phase-lock run instead of a Gaussian.
    std::vector<double> trajectory_residuals;
    if (config.jitter_source == JitterSource::Trajectory) {
        TrialRng lock_rng(derive_seed(config.seed, 0x70c4));
        phaselock::Trajectory traj;
        (void)phaselock::run_locked(config.lock_drift, config.lock_controller,
                                    config.lock_duration_s, lock_rng, &traj);
        const std::size_t from = traj.phi.size() / 2;
        for (std::size_t k = from; k < traj.phi.size(); ++k)
            trajectory_residuals.push_back(traj.phi[k] - config.lock_controller.setpoint);
        if (trajectory_residuals.empty()) trajectory_residuals.push_back(0.0);
    }

    const bool gaussian = config.jitter_source == JitterSource::Gaussian;
    const double sigma = config.noise.sigma_phi;
    std::array<double, 4> joint{};

    for (long long i = 0; i < config.trials; ++i) {
        TrialRng rng = TrialRng::for_trial(config.seed, static_cast<std::uint64_t>(i));
        double delta = 0.0;
        if (gaussian) {
            if (sigma > 0.0) delta = sigma * rng.next_gaussian();
        } else {
            const std::size_t idx = static_cast<std::size_t>(
                rng.next_double() * static_cast<double>(trajectory_residuals.size()));
            delta = trajectory_residuals[std::min(idx, trajectory_residuals.size() - 1)];
        }

        TrialRecord record;
        record.trial_id = i;
        record.phase_jitter = delta;
        record.herald_time_ns = herald_time;
        record.verify_time_ns = verify_time;

        if (rng.next_double() < p_h) {
            record.heralded = true;
            ++result.aggregates.heralds;
            for (int k = 0; k < 4; ++k)
                joint[k] = std::max(0.0, result.oracle.verify[k].eval(delta));
            const double total = joint[0] + joint[1] + joint[2] + joint[3];
            const int pattern = rng.next_categorical(joint, total);
            record.verify_pattern = pattern;
            switch (pattern) {
                case 1: ++result.aggregates.verify_d3; break;
                case 2: ++result.aggregates.verify_d4; break;
                case 3: ++result.aggregates.verify_both; break;
                default: ++result.aggregates.verify_none; break;
            }
        }
        if (static_cast<long long>(result.records.size()) < config.record_cap)
            result.records.push_back(record);
        else
            result.records_truncated = true;
    }
    return result;
}

est::FringeDataset phase_sweep(const ExperimentConfig& config,
                               const std::vector<double>& phases) {
    if (phases.size() < 5)
        throw DomainError("phase_sweep: need at least 5 phase settings");
    const long long per_point =
        std::max<long long>(1, config.trials / static_cast<long long>(phases.size()));

    est::FringeDataset data;
    data.rows.reserve(phases.size());
    for (std::size_t p = 0; p < phases.size(); ++p) {
        ExperimentConfig point = config;
        point.analyzer = optics::AnalyzerBasis::Fringe;
        point.interferometer.pb_phase = phases[p];
        point.trials = per_point;
        point.seed = derive_seed(config.seed, static_cast<std::uint64_t>(p) + 1);
        point.record_cap = 0;
        const RunResult run = run_trials(point);
        est::FringeRow row;
        row.phase = phases[p];
        row.n_plus = run.aggregates.verify_d3;
        row.n_minus = run.aggregates.verify_d4;
        row.heralds = run.aggregates.heralds;
        data.rows.push_back(row);
    }
    return data;
}

const char* to_string(DetectionOrder order) {
    switch (order) {
        case DetectionOrder::StokesFirst: return "stokes-first";
        case DetectionOrder::Simultaneous: return "simultaneous";
        default: return "anti-stokes-first";
    }
}

const char* to_string(IntervalClass c) {
    switch (c) {
        case IntervalClass::Timelike: return "timelike";
        case IntervalClass::Lightlike: return "lightlike";
        default: return "spacelike";
    }
}

IntervalClassification classify_interval(const SpaceTimeEvent& e1,
                                         const SpaceTimeEvent& e2, double tol_ns) {
    const double dt = e2.t_ns - e1.t_ns;
    const double dx = e2.x_m - e1.x_m;
    const double ct = kSpeedOfLightMPerNs * dt;
    IntervalClassification out;
    out.s2 = ct * ct - dx * dx;
    const double scale = std::max(ct * ct, dx * dx);
    if (scale == 0.0 || std::abs(out.s2) <= 1e-12 * scale)
        out.interval = IntervalClass::Lightlike;
    else if (out.s2 > 0.0)
        out.interval = IntervalClass::Timelike;
    else
        out.interval = IntervalClass::Spacelike;

    if (std::abs(dt) <= tol_ns)
        out.time_order = 0;
    else
        out.time_order = dt > 0.0 ? -1 : +1;
    return out;
}

DelayChoiceResult delay_choice_sweep(const ExperimentConfig& config,
                                     std::vector<double> delays_ns, int fringe_points) {
    if (delays_ns.empty()) throw DomainError("delay_choice_sweep: no delays given");
    for (double d : delays_ns)
        if (d < 0.0) throw DomainError("delay_choice_sweep: delays must be >= 0");
    std::sort(delays_ns.begin(), delays_ns.end());
    if (fringe_points < 5)
        throw DomainError("delay_choice_sweep: need at least 5 fringe points");

    std::vector<double> grid(fringe_points);
    for (int i = 0; i < fringe_points; ++i) grid[i] = 2.0 * M_PI * i / fringe_points;

    DelayChoiceResult result;
    result.points.reserve(delays_ns.size());
    for (std::size_t k = 0; k < delays_ns.size(); ++k) {
        const double tau = delays_ns[k];
        ExperimentConfig point = config;
        point.schedule.storage_ns = tau;
        point.seed = derive_seed(config.seed, 0x5000 + k);

        const est::FringeDataset fringe = phase_sweep(point, grid);
        const est::FringeFit fit = est::fit_fringe(fringe).plus;

        ExperimentConfig mode_cfg = point;
        mode_cfg.analyzer = optics::AnalyzerBasis::Mode;
        mode_cfg.seed = derive_seed(config.seed, 0x6000 + k);
        mode_cfg.record_cap = 0;
        const RunResult mode_run = run_trials(mode_cfg);
        est::ModeCounts counts;
        counts.heralds = mode_run.aggregates.heralds;
        counts.n_l_only = mode_run.aggregates.verify_d3;
        counts.n_r_only = mode_run.aggregates.verify_d4;
        counts.n_both = mode_run.aggregates.verify_both;
        const est::ModeDensityMatrix m =
            est::mode_matrix(counts, fit.visibility, fit.sigma_visibility);
        const est::ConcurrenceBound cb = est::concurrence_bound(m);

        DelayChoicePoint row;
        row.delay_ns = tau;
        row.visibility = fit.visibility;
        row.sigma_visibility = fit.sigma_visibility;
        row.concurrence = cb.value;
        row.sigma_concurrence = cb.sigma;

        const double t_stokes = config.schedule.stokes_delay_ns;
        if (std::abs(tau - t_stokes) <= config.schedule.control_ns)
            row.order = DetectionOrder::Simultaneous;
        else if (t_stokes < tau)
            row.order = DetectionOrder::StokesFirst;
        else
            row.order = DetectionOrder::AntiStokesFirst;

        const SpaceTimeEvent stokes_event{"S", t_stokes, config.geometry.herald_position_m};
        const SpaceTimeEvent as_event{"AS", tau, config.geometry.verify_position_m};
        row.interval = classify_interval(stokes_event, as_event,
                                         config.schedule.control_ns).interval;
        result.points.push_back(row);
    }
    return result;
}

} // namespace dlczsim::run
