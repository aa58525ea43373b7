#include "spinshot/cqed.hpp"

#include <cmath>

namespace spinshot::cqed {

double cavity_field(const CavityParams& params, Spin spin) {
    params.validate();
    const double shift = spin == Spin::down ? params.delta + params.chi : params.delta - params.chi;
    return params.epsilon / std::sqrt(0.25 * params.kappa * params.kappa + shift * shift);
}

double post_measurement_coherence(double alpha_down, double alpha_up) {
    if (!std::isfinite(alpha_down) || !std::isfinite(alpha_up))
        throw std::invalid_argument("post_measurement_coherence: amplitudes must be finite");
    const double d = alpha_down - alpha_up;
    return 0.5 * std::exp(-0.5 * d * d);
}

DispersiveCounts dispersive_counts(double eta, double kappa, double tau, double alpha_down,
                                   double alpha_up) {
    if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("dispersive_counts: eta in [0, 1]");
    if (!(kappa > 0.0) || !(tau > 0.0))
        throw std::invalid_argument("dispersive_counts: kappa and tau must be > 0");
    DispersiveCounts out;
    out.n_bright = eta * kappa * tau * alpha_down * alpha_down;
    out.n_dark = eta * kappa * tau * alpha_up * alpha_up;
    out.steady_state_ok = tau * kappa >= 10.0;
    return out;
}

double dispersive_dephasing(double kappa, double alpha_down, double alpha_up) {
    if (!(kappa > 0.0)) throw std::invalid_argument("dispersive_dephasing: kappa must be > 0");
    const double d = alpha_down - alpha_up;
    return 0.5 * d * d * kappa;
}

double f_factor(const CavityParams& params) {
    const double ad = cavity_field(params, Spin::down);
    const double au = cavity_field(params, Spin::up);
    const double signal = ad * ad - au * au;
    if (signal == 0.0)
        throw std::invalid_argument("f_factor: degenerate probe point, |a_down| == |a_up|");
    const double d = ad - au;
    return d * d / signal;
}

double dispersive_efficiency(double slope_a, double slope_b, double tau,
                             const CavityParams& params) {
    if (!(slope_b > 0.0) || !(tau > 0.0))
        throw std::invalid_argument("dispersive_efficiency: slope_b and tau must be > 0");
    return slope_a / (2.0 * slope_b * tau) * f_factor(params);
}

}  // namespace spinshot::cqed
