#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinshot/config.hpp"
#include "spinshot/presets.hpp"
#include "spinshot/types.hpp"

namespace spinshot {

/// Simulate one experiment cycle. All randomness derives from `seed`; the
/// charge state is threaded through so cycles chain into a blink history.
CycleRecord simulate_cycle(const ExperimentPreset& preset, const EmitterParams& params,
                           const BlinkModel& blink, const PulseProgram& program,
                           std::uint64_t seed, bool charge_on_in = true,
                           bool* charge_on_out = nullptr);

/// Binned fluorescence trace of a continuously read spin with a weak
/// microwave drive mixing the ground states. Returns counts per bin.
std::vector<std::uint32_t> simulate_quantum_jumps(const EmitterParams& params,
                                                  double readout_power, double mixing_rate,
                                                  double duration, double bin,
                                                  std::uint64_t seed);

struct PointData {
    SweepPoint point;
    std::uint64_t seed = 0;
    std::vector<CycleRecord> records;
    std::vector<std::uint32_t> trace;  // quantum_jumps preset only
};

struct Dataset {
    ExperimentPreset preset;
    EmitterParams emitter;
    std::vector<PointData> points;
    nlohmann::json manifest;
};

/// Run every sweep point of the configured experiment. Records depend only on
/// the config (not on thread count); workers own derived per-cycle seeds.
Dataset run_experiment(const Config& config, int threads = 1);

/// Write `data_<point>.csv` files plus `manifest.json` into out_dir.
void write_dataset(const Dataset& dataset, const std::string& out_dir);

/// Reload a dataset written by write_dataset (counts and timestamps only).
Dataset read_dataset(const std::string& dir);

std::uint64_t fnv1a64(const void* data, std::size_t size);
std::string fnv1a64_hex_of_file(const std::string& path);

inline constexpr const char* kToolVersion = "spinshot 0.1.0";

}  // namespace spinshot
