#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "spinshot/blink.hpp"
#include "spinshot/types.hpp"

namespace spinshot {

enum class PresetKind {
    readout_wfmA,
    readout_wfmB,
    polarization_decay,
    power_sweep,
    dephasing_sweep,
    quantum_jumps,
    crc_statistics,
    custom,  // explicit window list from the config
};

const char* to_string(PresetKind kind);
PresetKind preset_kind_from_string(const std::string& name, const std::string& path);

/// Resolved experiment recipe: window timings, drive powers and the
/// stochastic knobs that are not part of EmitterParams.
struct ExperimentPreset {
    PresetKind kind = PresetKind::custom;
    double pi_error = 0.0;

    double repump = 10e-6;          // s
    double init_duration = 80e-6;   // s
    double init_power = 0.0;        // nW; defaults to 20 p_sat
    double readout_power = 0.0;     // nW; defaults to p_sat
    double readout_duration = 50e-6;
    double repolarize_duration = 80e-6;
    double repolarize_power = 0.0;  // defaults to init_power
    double pi_duration = 100e-9;

    bool include_crc = true;
    double crc_power = 0.0;  // defaults to 5 p_sat
    double crc_duration = 150e-6;
    double crc_rate_factor = 2.0;   // both spin-preserving transitions driven
    std::uint32_t crc_threshold = 30;

    std::vector<double> powers;             // power_sweep / dephasing_sweep, nW
    std::vector<double> weak_durations;     // dephasing_sweep, s
    double decay_window = 0.0;              // polarization_decay, s

    double mixing_rate = 0.0;   // quantum_jumps, s^-1
    double trace_duration = 0;  // quantum_jumps, s
    double trace_bin = 5e-6;    // quantum_jumps, s

    BlinkModel blink;
};

/// One element of the sweep grid with its fully-built pulse program.
struct SweepPoint {
    std::string id;
    double power = 0.0;          // nW, when swept
    double weak_duration = 0.0;  // s, when swept
    PulseProgram program;
};

/// Parse run.preset_params for the named preset; unknown keys are rejected.
ExperimentPreset parse_preset(PresetKind kind, const nlohmann::json& params,
                              const EmitterParams& emitter);

/// Expand the preset into its sweep grid of pulse programs.
std::vector<SweepPoint> build_sweep(const ExperimentPreset& preset);

/// Total optically driven time per cycle (blink exposure).
double optical_exposure(const PulseProgram& program);

}  // namespace spinshot
