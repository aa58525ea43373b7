#include "spinshot/presets.hpp"

#include <cmath>
#include <set>

namespace spinshot {

namespace {

using nlohmann::json;

double get_num(const json& obj, const std::string& key, const std::string& path, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_number()) throw ConfigError(path + "." + key, "expected a number");
    return obj.at(key).get<double>();
}

std::vector<double> get_array(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key) || !obj.at(key).is_array() || obj.at(key).empty())
        throw ConfigError(path + "." + key, "expected a non-empty array");
    std::vector<double> out;
    for (const auto& v : obj.at(key)) {
        if (!v.is_number()) throw ConfigError(path + "." + key, "expected numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

}  // namespace

const char* to_string(PresetKind kind) {
    switch (kind) {
        case PresetKind::readout_wfmA: return "readout_wfmA";
        case PresetKind::readout_wfmB: return "readout_wfmB";
        case PresetKind::polarization_decay: return "polarization_decay";
        case PresetKind::power_sweep: return "power_sweep";
        case PresetKind::dephasing_sweep: return "dephasing_sweep";
        case PresetKind::quantum_jumps: return "quantum_jumps";
        case PresetKind::crc_statistics: return "crc_statistics";
        case PresetKind::custom: return "custom";
    }
    return "?";
}

PresetKind preset_kind_from_string(const std::string& name, const std::string& path) {
    for (PresetKind kind :
         {PresetKind::readout_wfmA, PresetKind::readout_wfmB, PresetKind::polarization_decay,
          PresetKind::power_sweep, PresetKind::dephasing_sweep, PresetKind::quantum_jumps,
          PresetKind::crc_statistics})
        if (name == to_string(kind)) return kind;
    throw ConfigError(path, "unknown preset '" + name + "'");
}

ExperimentPreset parse_preset(PresetKind kind, const json& params, const EmitterParams& emitter) {
    const std::string path = "run.preset_params";
    static const std::set<std::string> known = {
        "pi_error",        "repump_ns",          "init_ns",          "init_power",
        "readout_power",   "readout_ns",         "repolarize_ns",    "repolarize_power",
        "include_crc",     "crc_power",          "crc_ns",           "crc_rate_factor",
        "crc_threshold",   "powers",             "weak_durations_ns", "decay_window_ns",
        "mixing_rate",     "trace_ns",           "trace_bin_ns",     "blink"};
    if (params.is_object())
        for (auto it = params.begin(); it != params.end(); ++it)
            if (!known.count(it.key())) throw ConfigError(path + "." + it.key(), "unknown field");

    ExperimentPreset preset;
    preset.kind = kind;
    preset.pi_error = get_num(params, "pi_error", path, 0.0);
    if (preset.pi_error < 0.0 || preset.pi_error > 1.0)
        throw ConfigError(path + ".pi_error", "must be in [0, 1]");
    preset.repump = get_num(params, "repump_ns", path, 10000.0) * 1e-9;
    preset.init_duration = get_num(params, "init_ns", path, 80000.0) * 1e-9;
    preset.init_power = get_num(params, "init_power", path, 20.0 * emitter.p_sat);
    preset.readout_power = get_num(params, "readout_power", path, emitter.p_sat);
    preset.readout_duration = get_num(params, "readout_ns", path, 50000.0) * 1e-9;
    preset.repolarize_duration = get_num(params, "repolarize_ns", path, 80000.0) * 1e-9;
    preset.repolarize_power = get_num(params, "repolarize_power", path, preset.init_power);
    if (params.contains("include_crc")) {
        if (!params.at("include_crc").is_boolean())
            throw ConfigError(path + ".include_crc", "expected a bool");
        preset.include_crc = params.at("include_crc").get<bool>();
    } else {
        preset.include_crc =
            kind == PresetKind::crc_statistics || kind == PresetKind::quantum_jumps;
    }
    preset.crc_power = get_num(params, "crc_power", path, 5.0 * emitter.p_sat);
    preset.crc_duration = get_num(params, "crc_ns", path, 150000.0) * 1e-9;
    preset.crc_rate_factor = get_num(params, "crc_rate_factor", path, 2.0);
    preset.crc_threshold =
        static_cast<std::uint32_t>(get_num(params, "crc_threshold", path, 30.0));

    if (kind == PresetKind::power_sweep || kind == PresetKind::dephasing_sweep) {
        preset.powers = get_array(params, "powers", path);
        for (double p : preset.powers)
            if (!(p >= 0.0)) throw ConfigError(path + ".powers", "powers must be >= 0");
    }
    if (kind == PresetKind::dephasing_sweep) {
        preset.weak_durations.clear();
        for (double ns : get_array(params, "weak_durations_ns", path)) {
            if (!(ns > 0.0)) throw ConfigError(path + ".weak_durations_ns", "must be > 0");
            preset.weak_durations.push_back(ns * 1e-9);
        }
    }
    if (kind == PresetKind::polarization_decay) {
        const double window_ns = get_num(params, "decay_window_ns", path, 0.0);
        if (!(window_ns > 0.0)) throw ConfigError(path + ".decay_window_ns", "required and > 0");
        preset.decay_window = window_ns * 1e-9;
    }
    if (kind == PresetKind::quantum_jumps) {
        preset.mixing_rate = get_num(params, "mixing_rate", path, 0.0);
        if (preset.mixing_rate < 0.0) throw ConfigError(path + ".mixing_rate", "must be >= 0");
        preset.trace_duration = get_num(params, "trace_ns", path, 1e9) * 1e-9;
        preset.trace_bin = get_num(params, "trace_bin_ns", path, 5000.0) * 1e-9;
        if (!(preset.trace_bin > 0.0) || preset.trace_duration < preset.trace_bin)
            throw ConfigError(path + ".trace_bin_ns", "need duration >> bin > 0");
    }

    if (params.contains("blink")) {
        const json& b = params.at("blink");
        if (!b.is_object()) throw ConfigError(path + ".blink", "expected an object");
        for (auto it = b.begin(); it != b.end(); ++it)
            if (it.key() != "k_off" && it.key() != "k_on_repump" && it.key() != "n_pass_target")
                throw ConfigError(path + ".blink." + it.key(), "unknown field");
        preset.blink.k_on_repump = get_num(b, "k_on_repump", path + ".blink", 0.0);
        if (b.contains("n_pass_target")) {
            // resolved against the built program below
            preset.blink.k_off = -1.0;
            preset.blink.k_on_repump = get_num(b, "k_on_repump", path + ".blink", 0.0);
            const double target = get_num(b, "n_pass_target", path + ".blink", 0.0);
            auto sweep_probe = preset;
            sweep_probe.blink = BlinkModel{};
            const auto points = build_sweep(sweep_probe);
            preset.blink = calibrate_blink(target, preset.blink.k_on_repump,
                                           optical_exposure(points.front().program));
        } else {
            preset.blink.k_off = get_num(b, "k_off", path + ".blink", 0.0);
        }
        preset.blink.validate();
    }
    return preset;
}

namespace {

struct ProgramBuilder {
    PulseProgram program;
    double t = 0.0;
    double gap = 2e-6;

    void add(WindowKind kind, double duration, double power, bool collect, std::string label,
             bool init_up = true) {
        Window w;
        w.kind = kind;
        w.start = t;
        w.duration = duration;
        w.power = power;
        w.collect = collect;
        w.init_up = init_up;
        w.label = std::move(label);
        program.windows.push_back(std::move(w));
        t += duration + gap;
    }
};

PulseProgram readout_pair_program(const ExperimentPreset& p, bool with_pi, bool prep_up,
                                  double readout_power) {
    ProgramBuilder b;
    b.add(WindowKind::repump, p.repump, 0.0, false, "repump");
    if (p.include_crc) b.add(WindowKind::crc, p.crc_duration, p.crc_power, false, "crc1");
    b.add(WindowKind::init, p.init_duration, p.init_power, false, "init", prep_up);
    b.add(WindowKind::readout, p.readout_duration, readout_power, true, "readout1");
    b.add(WindowKind::readout, p.repolarize_duration, p.repolarize_power, false, "repolarize");
    if (with_pi) b.add(WindowKind::microwave_pi, p.pi_duration, 0.0, false, "pi");
    b.add(WindowKind::readout, p.readout_duration, readout_power, true, "readout2");
    if (p.include_crc) b.add(WindowKind::crc, p.crc_duration, p.crc_power, false, "crc2");
    b.program.validate();
    return b.program;
}

}  // namespace

std::vector<SweepPoint> build_sweep(const ExperimentPreset& preset) {
    std::vector<SweepPoint> points;
    switch (preset.kind) {
        case PresetKind::readout_wfmA:
        case PresetKind::crc_statistics:
            points.push_back({"p0", preset.readout_power, 0.0,
                              readout_pair_program(preset, true, true, preset.readout_power)});
            break;
        case PresetKind::readout_wfmB:
            points.push_back({"p0", preset.readout_power, 0.0,
                              readout_pair_program(preset, false, false, preset.readout_power)});
            break;
        case PresetKind::power_sweep: {
            int i = 0;
            for (double p : preset.powers)
                points.push_back({"p" + std::to_string(i++), p, 0.0,
                                  readout_pair_program(preset, true, true, p)});
            break;
        }
        case PresetKind::polarization_decay: {
            ProgramBuilder b;
            b.add(WindowKind::repump, preset.repump, 0.0, false, "repump");
            b.add(WindowKind::init, preset.init_duration, preset.init_power, false, "init",
                  /*init_up=*/false);
            b.add(WindowKind::readout, preset.decay_window, preset.readout_power, true, "decay");
            b.program.validate();
            points.push_back({"p0", preset.readout_power, 0.0, std::move(b.program)});
            break;
        }
        case PresetKind::dephasing_sweep: {
            int i = 0;
            for (double p : preset.powers) {
                for (double tau : preset.weak_durations) {
                    ProgramBuilder b;
                    b.add(WindowKind::repump, preset.repump, 0.0, false, "repump");
                    b.add(WindowKind::init, preset.init_duration, preset.init_power, false,
                          "init", /*init_up=*/false);
                    b.add(WindowKind::weak_measure, tau, p, false, "weak");
                    b.add(WindowKind::readout, preset.readout_duration, preset.readout_power,
                          true, "readout");
                    b.program.validate();
                    points.push_back({"p" + std::to_string(i++), p, tau, std::move(b.program)});
                }
            }
            break;
        }
        case PresetKind::quantum_jumps: {
            ProgramBuilder b;
            b.add(WindowKind::repump, preset.repump, 0.0, false, "repump");
            if (preset.include_crc)
                b.add(WindowKind::crc, preset.crc_duration, preset.crc_power, false, "crc1");
            b.add(WindowKind::init, preset.init_duration, preset.init_power, false, "init", true);
            b.add(WindowKind::readout, preset.trace_duration, preset.readout_power, true, "trace");
            if (preset.include_crc)
                b.add(WindowKind::crc, preset.crc_duration, preset.crc_power, false, "crc2");
            b.program.validate();
            points.push_back({"p0", preset.readout_power, 0.0, std::move(b.program)});
            break;
        }
        case PresetKind::custom:
            throw std::logic_error("build_sweep: custom programs come from the config");
    }
    return points;
}

double optical_exposure(const PulseProgram& program) {
    double total = 0.0;
    for (const auto& w : program.windows)
        switch (w.kind) {
            case WindowKind::init:
            case WindowKind::readout:
            case WindowKind::weak_measure:
            case WindowKind::crc:
                total += w.duration;
                break;
            default:
                break;
        }
    return total;
}

}  // namespace spinshot
