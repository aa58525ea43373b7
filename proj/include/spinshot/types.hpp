#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace spinshot {

/// Error carrying the config path of the offending field ("emitter.eta", ...).
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& message)
        : std::runtime_error("[" + path + "] " + message), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

/// Physical rates and efficiencies of the emitter-detector chain.
/// All rates are e-folding rates in s^-1, powers in nW, times in s.
struct EmitterParams {
    double gamma = 0.0;       // optical decay rate, s^-1
    double lambda_cyc = 0.0;  // cyclicity, dimensionless
    double p_sat = 0.0;       // on-resonance saturation power, nW
    double delta = 0.0;       // drive detuning from transition, s^-1 (angular)
    double eta = 0.0;         // measurement efficiency, [0, 1]
    double noise_a = 0.0;     // background count rate, counts/s
    double noise_b = 0.0;     // power-proportional scatter, counts/(s*nW)
    double eps0 = 0.0;        // P(prepared up | attempted down)
    double eps1 = 0.0;        // P(prepared down | attempted up)

    void validate(const std::string& path = "emitter") const;
};

// Finite stand-in for "no spin-flip decay"; larger values are rejected.
inline constexpr double kLambdaCap = 1e9;

enum class WindowKind { repump, init, microwave_pi, weak_measure, readout, crc };

const char* to_string(WindowKind kind);
WindowKind window_kind_from_string(const std::string& name, const std::string& path);

/// One timed segment of a pulse sequence. Times in seconds, power in nW.
struct Window {
    WindowKind kind = WindowKind::readout;
    double start = 0.0;
    double duration = 0.0;
    double power = 0.0;
    bool collect = false;
    bool init_up = true;  // init windows only: target spin state
    std::string label;
};

/// Time-ordered, non-overlapping sequence of windows.
struct PulseProgram {
    std::vector<Window> windows;

    void validate(const std::string& path = "program") const;
    /// Total duration of readout windows with collect=true (integration window).
    double integration_time() const;
    double cycle_time() const;
    int index_of(const std::string& label) const;  // -1 if absent
};

/// Per-cycle simulation output. Timestamps are ns relative to window start and
/// are kept only for collect=true windows; counts are kept for every window.
struct CycleRecord {
    std::uint64_t cycle_index = 0;
    std::vector<std::uint32_t> counts;
    std::vector<std::vector<std::uint64_t>> stamps_ns;
    std::vector<std::uint8_t> charge_ok;  // simulation metadata, not exported
    std::uint64_t seed_used = 0;
};

/// Integer count distribution over selected cycles of one window.
struct CountHistogram {
    std::map<std::uint32_t, std::uint64_t> bins;
    std::uint64_t total = 0;
    std::string selection;

    void add(std::uint32_t count) {
        ++bins[count];
        ++total;
    }
    bool empty() const { return total == 0; }
    double mean() const;
    std::uint32_t max_count() const;
    /// Fraction of cycles with count < threshold.
    double frac_below(std::uint32_t threshold) const;
};

struct FitParam {
    double value = 0.0;
    double sigma = 0.0;
};

/// Result of a nonlinear least-squares fit.
struct FitResult {
    std::map<std::string, FitParam> params;
    double rss = 0.0;
    int iterations = 0;
    bool converged = false;

    double value(const std::string& name) const;
    double sigma(const std::string& name) const;
};

struct RunSettings {
    std::uint64_t cycles = 0;
    std::uint64_t master_seed = 0;
    std::string preset;  // empty when the program is given explicitly
};

}  // namespace spinshot
