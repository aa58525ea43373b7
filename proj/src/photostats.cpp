#include "spinshot/photostats.hpp"

#include <cmath>
#include <stdexcept>

#include "spinshot/rates.hpp"

namespace spinshot {

double emission_rate(double t, double alpha2, double pump, double gamma_p) {
    if (alpha2 < 0.0 || alpha2 > 1.0)
        throw std::invalid_argument("emission_rate: alpha2 must be in [0, 1]");
    if (t < 0.0) throw std::invalid_argument("emission_rate: t must be >= 0");
    return alpha2 * pump * std::exp(-gamma_p * t);
}

namespace {

double cyclicity_factor(double lambda_cyc) {
    return lambda_cyc > 100.0 ? lambda_cyc : lambda_cyc + 1.0;
}

}  // namespace

double expected_counts(const EmitterParams& params, double p, double tau, Prep prep) {
    if (!(tau >= 0.0)) throw std::invalid_argument("expected_counts: tau must be >= 0");
    const double dark = (params.noise_a + params.noise_b * p) * tau;
    if (prep == Prep::dark) return dark;
    const double pump = pump_rate(p, params);
    const double gamma_p = polarization_rate(pump, params.lambda_cyc);
    const double signal =
        params.eta * cyclicity_factor(params.lambda_cyc) * (1.0 - std::exp(-gamma_p * tau));
    return dark + signal;
}

std::pair<double, double> expected_counts_pair(const EmitterParams& params, double p, double tau) {
    return {expected_counts(params, p, tau, Prep::bright),
            expected_counts(params, p, tau, Prep::dark)};
}

double poisson_pmf(std::uint32_t k, double mean) {
    if (mean < 0.0) throw std::invalid_argument("poisson_pmf: mean must be >= 0");
    if (mean == 0.0) return k == 0 ? 1.0 : 0.0;
    return std::exp(k * std::log(mean) - mean - std::lgamma(static_cast<double>(k) + 1.0));
}

double poisson_cdf(std::uint32_t k, double mean) {
    if (mean < 0.0) throw std::invalid_argument("poisson_cdf: mean must be >= 0");
    if (mean == 0.0) return 1.0;
    // upward recurrence in linear space, rescued by log space for large means
    double term = std::exp(-mean);
    if (term > 0.0) {
        double sum = term;
        for (std::uint32_t i = 1; i <= k; ++i) {
            term *= mean / i;
            sum += term;
        }
        return std::min(sum, 1.0);
    }
    double sum = 0.0;
    for (std::uint32_t i = 0; i <= k; ++i) sum += poisson_pmf(i, mean);
    return std::min(sum, 1.0);
}

void ReadoutModelInputs::validate() const {
    if (n_dark < 0.0 || n_bright < n_dark)
        throw std::invalid_argument("readout model requires n_bright >= n_dark >= 0");
    if (n_r < 1) throw std::invalid_argument("readout model requires n_r >= 1");
    if (!(f0 > 0.0) || f0 > 1.0) throw std::invalid_argument("readout model requires f0 in (0, 1]");
}

double fidelity_model(const ReadoutModelInputs& inputs) {
    inputs.validate();
    if (inputs.n_r == 1)
        return 0.5 + 0.5 * inputs.f0 * (std::exp(-inputs.n_dark) - std::exp(-inputs.n_bright));
    const double below_dark = poisson_cdf(inputs.n_r - 1, inputs.n_dark);
    const double below_bright = poisson_cdf(inputs.n_r - 1, inputs.n_bright);
    return 0.5 + 0.5 * inputs.f0 * (below_dark - below_bright);
}

double empirical_fidelity(const CountHistogram& hist_down, const CountHistogram& hist_up,
                          std::uint32_t n_r) {
    if (hist_down.empty() || hist_up.empty())
        throw std::invalid_argument("empirical_fidelity: empty histogram");
    const double p1_given_down = hist_down.frac_below(n_r);
    const double p0_given_up = 1.0 - hist_up.frac_below(n_r);
    return 1.0 - 0.5 * p1_given_down - 0.5 * p0_given_up;
}

std::optional<double> conditional_fidelity(const JointCounts& joint) {
    const double hi = static_cast<double>(std::max(joint.n[0][1], joint.n[1][0]));
    const double lo = static_cast<double>(std::min(joint.n[0][1], joint.n[1][0]));
    if (hi + lo == 0.0) return std::nullopt;
    return hi / (hi + lo);
}

double qnd_fidelity(const JointCounts& joint) {
    const double total = static_cast<double>(joint.total());
    if (total == 0.0) throw std::invalid_argument("qnd_fidelity: empty joint table");
    return static_cast<double>(joint.anticorrelated()) / total;
}

double polarization_fidelity(double peak_rate, double floor_rate) {
    if (!(peak_rate > 0.0)) throw std::invalid_argument("polarization_fidelity: peak must be > 0");
    if (floor_rate < 0.0 || floor_rate > 2.0 * peak_rate)
        throw std::invalid_argument("polarization_fidelity: floor must be in [0, 2*peak]");
    return 1.0 - floor_rate / (2.0 * peak_rate);
}

double loss_budget(const std::vector<std::pair<std::string, double>>& factors) {
    double total = 1.0;
    for (const auto& [name, value] : factors) {
        if (value < 0.0 || value > 1.0)
            throw std::invalid_argument("loss_budget: factor '" + name + "' must be in [0, 1]");
        total *= value;
    }
    return total;
}

}  // namespace spinshot
