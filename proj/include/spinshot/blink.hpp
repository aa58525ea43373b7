#pragma once

#include <cmath>
#include <stdexcept>

namespace spinshot {

/// Charge-state blinking: a one-way off switch while optically driven,
/// restored only by a repump window.
struct BlinkModel {
    double k_off = 0.0;        // off-switch rate while driven, s^-1
    double k_on_repump = 0.0;  // probability a repump restores the on state

    void validate() const {
        if (k_off < 0.0) throw std::invalid_argument("blink: k_off must be >= 0");
        if (k_on_repump < 0.0 || k_on_repump > 1.0)
            throw std::invalid_argument("blink: k_on_repump must be in [0, 1]");
    }
};

/// Choose k_off so that the pass-to-pass survival of a charge check repeated
/// once per cycle equals exp(-1/n_pass), given the optical exposure per cycle.
/// The observable survival q_seq = q + (1-q) k_on_repump accounts for blinks
/// that are repumped away before the next check.
inline BlinkModel calibrate_blink(double n_pass, double k_on_repump,
                                  double optical_time_per_cycle) {
    if (!(n_pass > 0.0)) throw std::invalid_argument("calibrate_blink: n_pass must be > 0");
    if (!(optical_time_per_cycle > 0.0))
        throw std::invalid_argument("calibrate_blink: optical time must be > 0");
    const double q_seq = std::exp(-1.0 / n_pass);
    const double q = (q_seq - k_on_repump) / (1.0 - k_on_repump);
    if (!(q > 0.0) || q >= 1.0)
        throw std::invalid_argument("calibrate_blink: unreachable survival target");
    return {-std::log(q) / optical_time_per_cycle, k_on_repump};
}

}  // namespace spinshot
