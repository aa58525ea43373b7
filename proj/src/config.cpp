#include "spinshot/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace spinshot {

namespace {

using nlohmann::json;

const json& member(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) throw ConfigError(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(path + "." + key, "missing field");
    return *it;
}

double number(const json& obj, const std::string& key, const std::string& path) {
    const json& v = member(obj, key, path);
    if (!v.is_number()) throw ConfigError(path + "." + key, "expected a number");
    return v.get<double>();
}

double number_or(const json& obj, const std::string& key, const std::string& path,
                 double fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(path + "." + key, "expected a number");
    return v.get<double>();
}

std::uint64_t unsigned_int(const json& obj, const std::string& key, const std::string& path) {
    const json& v = member(obj, key, path);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        throw ConfigError(path + "." + key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& path) {
    if (!obj.is_object()) return;
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!known.count(it.key())) throw ConfigError(path + "." + it.key(), "unknown field");
}

EmitterParams parse_emitter(const json& doc) {
    const json& e = member(doc, "emitter", "config");
    reject_unknown(e,
                   {"gamma", "lifetime_ns", "lambda_cyc", "p_sat", "delta", "eta", "noise_a",
                    "noise_b", "eps0", "eps1"},
                   "emitter");
    EmitterParams p;
    const bool has_gamma = e.contains("gamma");
    const bool has_lifetime = e.contains("lifetime_ns");
    if (has_gamma == has_lifetime)
        throw ConfigError("emitter.gamma", "give exactly one of 'gamma' (s^-1) or 'lifetime_ns'");
    if (has_gamma) {
        p.gamma = number(e, "gamma", "emitter");
    } else {
        const double lifetime_ns = number(e, "lifetime_ns", "emitter");
        if (!(lifetime_ns > 0.0)) throw ConfigError("emitter.lifetime_ns", "must be > 0");
        p.gamma = 1.0 / (lifetime_ns * 1e-9);
    }
    p.lambda_cyc = number(e, "lambda_cyc", "emitter");
    p.p_sat = number(e, "p_sat", "emitter");
    p.delta = number_or(e, "delta", "emitter", 0.0);
    p.eta = number(e, "eta", "emitter");
    p.noise_a = number_or(e, "noise_a", "emitter", 0.0);
    p.noise_b = number_or(e, "noise_b", "emitter", 0.0);
    p.eps0 = number_or(e, "eps0", "emitter", 0.0);
    p.eps1 = number_or(e, "eps1", "emitter", 0.0);
    p.validate();
    return p;
}

PulseProgram parse_windows(const json& list, const std::string& path) {
    if (!list.is_array() || list.empty()) throw ConfigError(path, "expected a non-empty array");
    PulseProgram program;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const json& w = list[i];
        const std::string wp = path + "[" + std::to_string(i) + "]";
        reject_unknown(w, {"kind", "start_ns", "duration_ns", "power", "collect", "init_up", "label"},
                       wp);
        Window window;
        const json& kind = member(w, "kind", wp);
        if (!kind.is_string()) throw ConfigError(wp + ".kind", "expected a string");
        window.kind = window_kind_from_string(kind.get<std::string>(), wp + ".kind");
        window.start = number(w, "start_ns", wp) * 1e-9;
        window.duration = number(w, "duration_ns", wp) * 1e-9;
        window.power = number_or(w, "power", wp, 0.0);
        if (w.contains("collect")) {
            if (!w.at("collect").is_boolean()) throw ConfigError(wp + ".collect", "expected a bool");
            window.collect = w.at("collect").get<bool>();
        }
        if (w.contains("init_up")) {
            if (!w.at("init_up").is_boolean()) throw ConfigError(wp + ".init_up", "expected a bool");
            window.init_up = w.at("init_up").get<bool>();
        }
        if (w.contains("label")) {
            if (!w.at("label").is_string()) throw ConfigError(wp + ".label", "expected a string");
            window.label = w.at("label").get<std::string>();
        }
        if (window.label.empty())
            window.label = std::string(to_string(window.kind)) + "_" + std::to_string(i);
        program.windows.push_back(std::move(window));
    }
    program.validate();
    return program;
}

}  // namespace

Config validate_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config", "expected a JSON object");
    reject_unknown(doc, {"emitter", "program", "run"}, "config");

    Config config;
    config.emitter = parse_emitter(doc);

    const json& run = member(doc, "run", "config");
    reject_unknown(run, {"cycles", "master_seed", "preset", "preset_params"}, "run");
    config.run.cycles = unsigned_int(run, "cycles", "run");
    config.run.master_seed = unsigned_int(run, "master_seed", "run");
    if (run.contains("preset")) {
        if (!run.at("preset").is_string()) throw ConfigError("run.preset", "expected a string");
        config.run.preset = run.at("preset").get<std::string>();
    }
    if (run.contains("preset_params")) {
        if (!run.at("preset_params").is_object())
            throw ConfigError("run.preset_params", "expected an object");
        config.preset_params = run.at("preset_params");
    } else {
        config.preset_params = json::object();
    }

    const bool has_program = doc.contains("program") && doc.at("program").contains("windows");
    if (has_program) config.program = parse_windows(doc.at("program").at("windows"), "program.windows");
    if (!has_program && config.run.preset.empty())
        throw ConfigError("program", "give 'program.windows' or 'run.preset'");
    return config;
}

Config load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot read '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& err) {
        throw ConfigError("config", std::string("parse error: ") + err.what());
    }
    return validate_config(doc);
}

json serialize_config(const Config& config) {
    json e;
    e["gamma"] = config.emitter.gamma;
    e["lambda_cyc"] = config.emitter.lambda_cyc;
    e["p_sat"] = config.emitter.p_sat;
    e["delta"] = config.emitter.delta;
    e["eta"] = config.emitter.eta;
    e["noise_a"] = config.emitter.noise_a;
    e["noise_b"] = config.emitter.noise_b;
    e["eps0"] = config.emitter.eps0;
    e["eps1"] = config.emitter.eps1;

    json run;
    run["cycles"] = config.run.cycles;
    run["master_seed"] = config.run.master_seed;
    if (!config.run.preset.empty()) run["preset"] = config.run.preset;
    if (!config.preset_params.empty()) run["preset_params"] = config.preset_params;

    json doc;
    doc["emitter"] = e;
    doc["run"] = run;
    if (config.program) {
        json windows = json::array();
        for (const auto& w : config.program->windows) {
            json jw;
            jw["kind"] = to_string(w.kind);
            jw["start_ns"] = w.start * 1e9;
            jw["duration_ns"] = w.duration * 1e9;
            jw["power"] = w.power;
            jw["collect"] = w.collect;
            if (w.kind == WindowKind::init) jw["init_up"] = w.init_up;
            jw["label"] = w.label;
            windows.push_back(std::move(jw));
        }
        doc["program"]["windows"] = std::move(windows);
    }
    return doc;
}

}  // namespace spinshot
