#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "spinshot/types.hpp"

namespace spinshot {

/// Validated run configuration. Times are stored in seconds, rates in s^-1 and
/// powers in nW; the external JSON uses ns for all time fields.
struct Config {
    EmitterParams emitter;
    RunSettings run;
    std::optional<PulseProgram> program;  // explicit window list, if given
    nlohmann::json preset_params;         // preset-specific knobs, consumed downstream
};

Config validate_config(const nlohmann::json& doc);
Config load_config_file(const std::string& path);

/// Normalized echo of a validated config; validate_config(serialize_config(c))
/// reproduces c exactly.
nlohmann::json serialize_config(const Config& config);

}  // namespace spinshot
