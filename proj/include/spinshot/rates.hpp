#pragma once

#include <cmath>

#include "spinshot/types.hpp"

namespace spinshot {

/// Effective optical pumping rate at drive power p (nW). Monotone in p,
/// bounded by gamma/2.
inline double pump_rate(double p, const EmitterParams& params) {
    if (p < 0.0) throw std::invalid_argument("pump_rate: p must be >= 0");
    const double s = p / params.p_sat;
    const double d = params.delta / (params.gamma / 2.0);
    return 0.5 * params.gamma * s / (1.0 + s + d * d);
}

/// Rate at which resonant driving pumps the spin into the dark state.
inline double polarization_rate(double pump, double lambda_cyc) {
    if (!(lambda_cyc >= 0.0))
        throw std::invalid_argument("polarization_rate: lambda_cyc must be >= 0");
    return pump / (lambda_cyc + 1.0);
}

/// Measurement-induced dephasing rate of a spin superposition.
inline double dephasing_rate(double pump) {
    if (pump < 0.0) throw std::invalid_argument("dephasing_rate: pump must be >= 0");
    return 0.5 * pump;
}

/// Resonant saturation parameter p/p_sat for a given optical Rabi frequency.
inline double saturation_from_rabi(double omega, double gamma) {
    return 2.0 * omega * omega / (gamma * gamma);
}

inline double rabi_from_saturation(double saturation, double gamma) {
    return gamma * std::sqrt(saturation / 2.0);
}

}  // namespace spinshot
