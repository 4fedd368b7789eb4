// SPDX-License-Identifier: Apache-2.0
#include "dlczsim/report.hpp"

#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

namespace dlczsim::report {

using nlohmann::json;
using run::ExperimentConfig;

namespace {

json detector_to_json(const optics::DetectorModel& d) {
    return json{{"id", d.id},
                {"eta_det", d.eta_det},
                {"dark_prob", d.dark_prob},
                {"position_m", d.position_m},
                {"gate_ns", d.gate_ns}};
}

optics::DetectorModel detector_from_json(const json& j, const std::string& path) {
    optics::DetectorModel d;
    d.id = j.value("id", d.id);
    d.eta_det = j.value("eta_det", d.eta_det);
    d.dark_prob = j.value("dark_prob", d.dark_prob);
    d.position_m = j.value("position_m", d.position_m);
    d.gate_ns = j.value("gate_ns", d.gate_ns);
    for (const auto& [key, value] : j.items()) {
        (void)value;
        static const std::set<std::string> known{"id", "eta_det", "dark_prob",
                                                 "position_m", "gate_ns"};
        if (!known.count(key))
            throw ValidationError("config: unknown field " + path + "." + key);
    }
    return d;
}

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& path) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!known.count(key))
            throw ValidationError("config: unknown field " + path + "." + key);
    }
}

} // namespace

std::string config_to_json(const ExperimentConfig& c) {
    json j;
    j["noise"] = {{"chi", c.noise.chi},
                  {"eta_ret", c.noise.eta_ret},
                  {"eta_trans", c.noise.eta_trans},
                  {"eta_det", c.noise.eta_det},
                  {"dark_prob", c.noise.dark_prob},
                  {"sigma_phi", c.noise.sigma_phi},
                  {"tau_mem_ns", c.noise.tau_mem_ns},
                  {"tau_amp_ns", std::isfinite(c.noise.tau_amp_ns)
                                     ? json(c.noise.tau_amp_ns)
                                     : json(nullptr)},
                  {"eta_asym", c.noise.eta_asym},
                  {"n_max", c.noise.n_max}};
    j["interferometer"] = {{"phi_s", c.interferometer.phi_s},
                           {"phi_as", c.interferometer.phi_as},
                           {"pb_phase", c.interferometer.pb_phase},
                           {"eta_path", c.interferometer.eta_path}};
    j["detectors"] = {detector_to_json(c.d1), detector_to_json(c.d2),
                      detector_to_json(c.d3), detector_to_json(c.d4)};
    j["schedule"] = {{"pump_us", c.schedule.pump_us},
                     {"control_ns", c.schedule.control_ns},
                     {"storage_ns", c.schedule.storage_ns},
                     {"stokes_delay_ns", c.schedule.stokes_delay_ns},
                     {"gate_ns", c.schedule.gate_ns}};
    j["geometry"] = {{"cell_separation_m", c.geometry.cell_separation_m},
                     {"herald_position_m", c.geometry.herald_position_m},
                     {"verify_position_m", c.geometry.verify_position_m}};
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    j["engine"] = c.engine == run::Engine::Exact ? "exact" : "sampling";
    j["analyzer"] =
        c.analyzer == optics::AnalyzerBasis::Fringe ? "fringe" : "mode";
    j["jitter_source"] =
        c.jitter_source == run::JitterSource::Gaussian ? "gaussian" : "trajectory";
    j["lock"] = {{"kappa", c.lock_drift.kappa},
                 {"sigma_w", c.lock_drift.sigma_w},
                 {"v_drift", c.lock_drift.v_drift},
                 {"dt", c.lock_drift.dt},
                 {"phi0", c.lock_drift.phi0},
                 {"k_i", c.lock_controller.k_i},
                 {"k_p", c.lock_controller.k_p},
                 {"update_period", c.lock_controller.update_period},
                 {"actuator_range", c.lock_controller.actuator_range},
                 {"setpoint", c.lock_controller.setpoint},
                 {"lock_threshold", c.lock_controller.lock_threshold},
                 {"settle_band", c.lock_controller.settle_band},
                 {"duration_s", c.lock_duration_s}};
    j["record_cap"] = c.record_cap;
    return j.dump(2);
}

ExperimentConfig config_from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }

    ExperimentConfig c;
    reject_unknown(j, {"noise", "interferometer", "detectors", "schedule", "geometry",
                       "trials", "seed", "engine", "analyzer", "jitter_source", "lock",
                       "record_cap"},
                   "$");
    try {
        if (j.contains("noise")) {
            const auto& n = j["noise"];
            reject_unknown(n,
                           {"chi", "eta_ret", "eta_trans", "eta_det", "dark_prob",
                            "sigma_phi", "tau_mem_ns", "tau_amp_ns", "eta_asym", "n_max"},
                           "$.noise");
            c.noise.chi = n.value("chi", c.noise.chi);
            c.noise.eta_ret = n.value("eta_ret", c.noise.eta_ret);
            c.noise.eta_trans = n.value("eta_trans", c.noise.eta_trans);
            c.noise.eta_det = n.value("eta_det", c.noise.eta_det);
            c.noise.dark_prob = n.value("dark_prob", c.noise.dark_prob);
            c.noise.sigma_phi = n.value("sigma_phi", c.noise.sigma_phi);
            c.noise.tau_mem_ns = n.value("tau_mem_ns", c.noise.tau_mem_ns);
            if (n.contains("tau_amp_ns") && !n["tau_amp_ns"].is_null())
                c.noise.tau_amp_ns = n["tau_amp_ns"].get<double>();
            c.noise.eta_asym = n.value("eta_asym", c.noise.eta_asym);
            c.noise.n_max = n.value("n_max", c.noise.n_max);
        }
        if (j.contains("interferometer")) {
            const auto& i = j["interferometer"];
            reject_unknown(i, {"phi_s", "phi_as", "pb_phase", "eta_path"},
                           "$.interferometer");
            c.interferometer.phi_s = i.value("phi_s", 0.0);
            c.interferometer.phi_as = i.value("phi_as", 0.0);
            c.interferometer.pb_phase = i.value("pb_phase", 0.0);
            c.interferometer.eta_path = i.value("eta_path", 1.0);
        }
        if (j.contains("detectors")) {
            const auto& d = j["detectors"];
            if (!d.is_array() || d.size() != 4)
                throw ValidationError("config: $.detectors must list D1..D4");
            c.d1 = detector_from_json(d[0], "$.detectors[0]");
            c.d2 = detector_from_json(d[1], "$.detectors[1]");
            c.d3 = detector_from_json(d[2], "$.detectors[2]");
            c.d4 = detector_from_json(d[3], "$.detectors[3]");
        }
        if (j.contains("schedule")) {
            const auto& s = j["schedule"];
            reject_unknown(
                s, {"pump_us", "control_ns", "storage_ns", "stokes_delay_ns", "gate_ns"},
                "$.schedule");
            c.schedule.pump_us = s.value("pump_us", c.schedule.pump_us);
            c.schedule.control_ns = s.value("control_ns", c.schedule.control_ns);
            c.schedule.storage_ns = s.value("storage_ns", c.schedule.storage_ns);
            c.schedule.stokes_delay_ns =
                s.value("stokes_delay_ns", c.schedule.stokes_delay_ns);
            c.schedule.gate_ns = s.value("gate_ns", c.schedule.gate_ns);
        }
        if (j.contains("geometry")) {
            const auto& g = j["geometry"];
            reject_unknown(g, {"cell_separation_m", "herald_position_m",
                               "verify_position_m"},
                           "$.geometry");
            c.geometry.cell_separation_m =
                g.value("cell_separation_m", c.geometry.cell_separation_m);
            c.geometry.herald_position_m =
                g.value("herald_position_m", c.geometry.herald_position_m);
            c.geometry.verify_position_m =
                g.value("verify_position_m", c.geometry.verify_position_m);
        }
        c.trials = j.value("trials", c.trials);
        c.seed = j.value("seed", c.seed);
        if (j.contains("engine")) {
            const std::string e = j["engine"].get<std::string>();
            if (e == "exact") c.engine = run::Engine::Exact;
            else if (e == "sampling") c.engine = run::Engine::Sampling;
            else throw ValidationError("config: $.engine must be exact|sampling");
        }
        if (j.contains("analyzer")) {
            const std::string a = j["analyzer"].get<std::string>();
            if (a == "fringe") c.analyzer = optics::AnalyzerBasis::Fringe;
            else if (a == "mode") c.analyzer = optics::AnalyzerBasis::Mode;
            else throw ValidationError("config: $.analyzer must be fringe|mode");
        }
        if (j.contains("jitter_source")) {
            const std::string s = j["jitter_source"].get<std::string>();
            if (s == "gaussian") c.jitter_source = run::JitterSource::Gaussian;
            else if (s == "trajectory") c.jitter_source = run::JitterSource::Trajectory;
            else
                throw ValidationError("config: $.jitter_source must be "
                                      "gaussian|trajectory");
        }
        if (j.contains("lock")) {
            const auto& l = j["lock"];
            reject_unknown(l,
                           {"kappa", "sigma_w", "v_drift", "dt", "phi0", "k_i", "k_p",
                            "update_period", "actuator_range", "setpoint",
                            "lock_threshold", "settle_band", "duration_s"},
                           "$.lock");
            c.lock_drift.kappa = l.value("kappa", c.lock_drift.kappa);
            c.lock_drift.sigma_w = l.value("sigma_w", c.lock_drift.sigma_w);
            c.lock_drift.v_drift = l.value("v_drift", c.lock_drift.v_drift);
            c.lock_drift.dt = l.value("dt", c.lock_drift.dt);
            c.lock_drift.phi0 = l.value("phi0", c.lock_drift.phi0);
            c.lock_controller.k_i = l.value("k_i", c.lock_controller.k_i);
            c.lock_controller.k_p = l.value("k_p", c.lock_controller.k_p);
            c.lock_controller.update_period =
                l.value("update_period", c.lock_controller.update_period);
            c.lock_controller.actuator_range =
                l.value("actuator_range", c.lock_controller.actuator_range);
            c.lock_controller.setpoint = l.value("setpoint", c.lock_controller.setpoint);
            c.lock_controller.lock_threshold =
                l.value("lock_threshold", c.lock_controller.lock_threshold);
            c.lock_controller.settle_band =
                l.value("settle_band", c.lock_controller.settle_band);
            c.lock_duration_s = l.value("duration_s", c.lock_duration_s);
        }
        c.record_cap = j.value("record_cap", c.record_cap);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    return c;
}

ExperimentConfig config_from_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("config: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
    return config_from_json_string(text);
}

std::uint64_t config_hash(const ExperimentConfig& config) {
    const std::string dump = config_to_json(config);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path);
    if (!f) throw ValidationError("write_text_file: cannot open " + path);
    f << content;
}

} // namespace dlczsim::report
