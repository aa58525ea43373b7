#pragma once

#include <stdexcept>
#include <utility>

namespace spinshot::cqed {

enum class Spin { down, up };

/// Probed-cavity parameters; rates in s^-1 (kappa > 0), drive in the same
/// units so that epsilon^2 tracks drive power.
struct CavityParams {
    double kappa = 0.0;    // total cavity linewidth
    double chi = 0.0;      // dispersive shift
    double epsilon = 0.0;  // drive rate
    double delta = 0.0;    // probe detuning from the bare cavity

    void validate() const {
        if (!(kappa > 0.0)) throw std::invalid_argument("cavity: kappa must be > 0");
    }
};

/// Steady-state intracavity field magnitude for the given spin branch.
double cavity_field(const CavityParams& params, Spin spin);

/// Spin coherence magnitude left after projective measurement of the probe,
/// starting from an equal superposition (coherence 1/2).
double post_measurement_coherence(double alpha_down, double alpha_up);

struct DispersiveCounts {
    double n_bright = 0.0;
    double n_dark = 0.0;
    bool steady_state_ok = true;  // false when tau is short against 1/kappa
};

/// Mean detected counts over window tau for the two spin branches.
DispersiveCounts dispersive_counts(double eta, double kappa, double tau, double alpha_down,
                                   double alpha_up);

/// Measurement-induced dephasing rate of the probed spin.
double dispersive_dephasing(double kappa, double alpha_down, double alpha_up);

/// Geometry factor relating signal and dephasing slopes to efficiency.
double f_factor(const CavityParams& params);

/// Efficiency from the measured signal slope A (counts/power), dephasing
/// slope B (rate/power) and integration window tau. Throws on a degenerate
/// probe point where the two branches have equal magnitude.
double dispersive_efficiency(double slope_a, double slope_b, double tau,
                             const CavityParams& params);

}  // namespace spinshot::cqed
