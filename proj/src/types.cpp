#include "spinshot/types.hpp"

#include <algorithm>
#include <cmath>

namespace spinshot {

namespace {

void require(bool ok, const std::string& path, const std::string& message) {
    if (!ok) throw ConfigError(path, message);
}

}  // namespace

void EmitterParams::validate(const std::string& path) const {
    require(std::isfinite(gamma) && gamma > 0.0, path + ".gamma", "must be > 0 (s^-1)");
    require(std::isfinite(lambda_cyc) && lambda_cyc > 0.0, path + ".lambda_cyc", "must be > 0");
    require(lambda_cyc <= kLambdaCap, path + ".lambda_cyc", "exceeds cap of 1e9");
    require(std::isfinite(p_sat) && p_sat > 0.0, path + ".p_sat", "must be > 0 (nW)");
    require(std::isfinite(delta), path + ".delta", "must be finite (s^-1)");
    require(eta >= 0.0 && eta <= 1.0, path + ".eta", "must be in [0, 1]");
    require(noise_a >= 0.0, path + ".noise_a", "must be >= 0 (counts/s)");
    require(noise_b >= 0.0, path + ".noise_b", "must be >= 0 (counts/(s*nW))");
    require(eps0 >= 0.0 && eps0 <= 1.0, path + ".eps0", "must be in [0, 1]");
    require(eps1 >= 0.0 && eps1 <= 1.0, path + ".eps1", "must be in [0, 1]");
    require(eps0 + eps1 < 1.0, path + ".eps0", "eps0 + eps1 must be < 1");
}

const char* to_string(WindowKind kind) {
    switch (kind) {
        case WindowKind::repump: return "repump";
        case WindowKind::init: return "init";
        case WindowKind::microwave_pi: return "microwave_pi";
        case WindowKind::weak_measure: return "weak_measure";
        case WindowKind::readout: return "readout";
        case WindowKind::crc: return "crc";
    }
    return "?";
}

WindowKind window_kind_from_string(const std::string& name, const std::string& path) {
    if (name == "repump") return WindowKind::repump;
    if (name == "init") return WindowKind::init;
    if (name == "microwave_pi") return WindowKind::microwave_pi;
    if (name == "weak_measure") return WindowKind::weak_measure;
    if (name == "readout") return WindowKind::readout;
    if (name == "crc") return WindowKind::crc;
    throw ConfigError(path, "unknown window kind '" + name + "'");
}

void PulseProgram::validate(const std::string& path) const {
    require(!windows.empty(), path + ".windows", "program has no windows");
    for (std::size_t i = 0; i < windows.size(); ++i) {
        const auto& w = windows[i];
        const std::string wp = path + ".windows[" + std::to_string(i) + "]";
        require(std::isfinite(w.start) && w.start >= 0.0, wp + ".start", "must be >= 0");
        require(std::isfinite(w.duration) && w.duration > 0.0, wp + ".duration", "must be > 0");
        require(w.power >= 0.0, wp + ".power", "must be >= 0 (nW)");
        if (i > 0) {
            const auto& prev = windows[i - 1];
            require(w.start >= prev.start + prev.duration, wp + ".start",
                    "overlaps window '" + prev.label + "'");
        }
    }
}

double PulseProgram::integration_time() const {
    double tau = 0.0;
    for (const auto& w : windows)
        if (w.kind == WindowKind::readout && w.collect) tau += w.duration;
    return tau;
}

double PulseProgram::cycle_time() const {
    if (windows.empty()) return 0.0;
    const auto& last = windows.back();
    return last.start + last.duration;
}

int PulseProgram::index_of(const std::string& label) const {
    for (std::size_t i = 0; i < windows.size(); ++i)
        if (windows[i].label == label) return static_cast<int>(i);
    return -1;
}

double CountHistogram::mean() const {
    if (total == 0) return 0.0;
    double sum = 0.0;
    for (const auto& [k, n] : bins) sum += static_cast<double>(k) * static_cast<double>(n);
    return sum / static_cast<double>(total);
}

std::uint32_t CountHistogram::max_count() const {
    return bins.empty() ? 0u : bins.rbegin()->first;
}

double CountHistogram::frac_below(std::uint32_t threshold) const {
    if (total == 0) return 0.0;
    std::uint64_t below = 0;
    for (const auto& [k, n] : bins) {
        if (k >= threshold) break;
        below += n;
    }
    return static_cast<double>(below) / static_cast<double>(total);
}

double FitResult::value(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) throw std::out_of_range("no fit parameter '" + name + "'");
    return it->second.value;
}

double FitResult::sigma(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) throw std::out_of_range("no fit parameter '" + name + "'");
    return it->second.sigma;
}

}  // namespace spinshot
