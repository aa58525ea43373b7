#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spinshot/types.hpp"

namespace spinshot {

enum class Prep { bright, dark };

/// Ensemble-averaged photon scattering rate at time t after drive onset,
/// for initial driven-state population alpha2.
double emission_rate(double t, double alpha2, double pump, double gamma_p);

/// Mean detected counts in a window of length tau at drive power p (nW).
/// Dark preparation collects noise only; bright preparation adds the emitted
/// signal. The cyclicity factor uses lambda above 100 and lambda+1 below it.
double expected_counts(const EmitterParams& params, double p, double tau, Prep prep);
std::pair<double, double> expected_counts_pair(const EmitterParams& params, double p,
                                               double tau);  // (bright, dark)

/// Poisson probability mass, stable in log space up to k ~ 1e4.
double poisson_pmf(std::uint32_t k, double mean);
/// P(X <= k) for X ~ Poisson(mean).
double poisson_cdf(std::uint32_t k, double mean);

struct ReadoutModelInputs {
    double n_dark = 0.0;     // mean counts, dark distribution
    double n_bright = 0.0;   // mean counts, bright distribution
    std::uint32_t n_r = 1;   // discrimination threshold
    double f0 = 1.0;         // maximum attainable fidelity, 1 - eps0 - eps1

    void validate() const;
};

/// Closed-form readout fidelity for Poisson count statistics; reduces to
/// 1/2 + (f0/2) (exp(-n_d) - exp(-n_b)) at threshold 1.
double fidelity_model(const ReadoutModelInputs& inputs);

/// Fidelity of discriminating two measured count histograms at threshold n_r.
/// Outcome "1" is counts < n_r, outcome "0" counts >= n_r.
double empirical_fidelity(const CountHistogram& hist_down, const CountHistogram& hist_up,
                          std::uint32_t n_r);

/// Joint outcome counts of two consecutive readouts, indexed [first][second]
/// with outcome 1 = below threshold (spin up), 0 = at/above (spin down).
struct JointCounts {
    std::uint64_t n[2][2] = {{0, 0}, {0, 0}};

    std::uint64_t total() const { return n[0][0] + n[0][1] + n[1][0] + n[1][1]; }
    std::uint64_t anticorrelated() const { return n[0][1] + n[1][0]; }
};

/// Fraction of the dominant anticorrelated order among anticorrelated pairs.
/// Undefined (nullopt) when no anticorrelated event was observed.
std::optional<double> conditional_fidelity(const JointCounts& joint);

/// Probability that a pair of consecutive readouts is anticorrelated, i.e.
/// that the qubit sits in its expected post-measurement eigenstate.
double qnd_fidelity(const JointCounts& joint);

/// Spin polarization fidelity from the peak count rate a and floor rate b.
double polarization_fidelity(double peak_rate, double floor_rate);

/// Product of named efficiency factors, each in [0, 1].
double loss_budget(const std::vector<std::pair<std::string, double>>& factors);

}  // namespace spinshot
