#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spinshot/fit.hpp"
#include "spinshot/photostats.hpp"
#include "spinshot/simulate.hpp"
#include "spinshot/types.hpp"

namespace spinshot::analysis {

using spinshot::CountHistogram;
using spinshot::FitResult;
using spinshot::JointCounts;

/// Joint outcome table of two consecutive readouts; alias of the photostats
/// counts with the window labels used to build it.
struct JointOutcomeTable {
    JointCounts counts;
    std::string first_label;
    std::string second_label;
};

/// Count histogram of one labelled window over the selected cycles.
/// An empty selection selects every cycle.
CountHistogram histogram_window(const PointData& data, const std::string& label,
                                const std::vector<std::uint8_t>& selection = {});

/// Exhaustive threshold scan; ties break toward the smaller threshold.
std::pair<std::uint32_t, double> optimize_threshold(const CountHistogram& hist_down,
                                                    const CountHistogram& hist_up);

enum class CrcSelect { none, first, second, both };
CrcSelect crc_select_from_string(const std::string& name);

struct CrcStats {
    std::vector<std::uint8_t> mask;
    double pass_first = 0.0;
    double pass_second = 0.0;
    double pass_both = 0.0;
    double second_given_first = 0.0;
    std::uint64_t selected = 0;
};

/// Post-selection mask from the charge-resonance-check counts at threshold n_c.
CrcStats crc_postselect(const PointData& data, std::uint32_t n_c, CrcSelect which);

/// Joint outcome table of two readout windows at threshold n_r
/// (outcome 1 = counts below threshold).
JointOutcomeTable joint_outcomes(const PointData& data, const std::string& first,
                                 const std::string& second, std::uint32_t n_r,
                                 const std::vector<std::uint8_t>& selection = {});

/// Exponential decay constant of consecutive-pass run lengths. Requires at
/// least one fail; run lengths >= 1 enter the fit.
FitResult consecutive_pass_fit(const std::vector<std::uint8_t>& pass_sequence);

/// Exponential decay (amp - floor) e^{-gamma_p t} + floor of binned counts.
FitResult fit_polarization_decay(const std::vector<double>& t, const std::vector<double>& counts);

/// Saturation of the mean signal counts vs drive power. lambda_free adds the
/// cyclicity as a third parameter; otherwise params.lambda_cyc is held fixed.
FitResult fit_saturation(const std::vector<std::pair<double, double>>& power_vs_signal,
                         double tau, const EmitterParams& params, bool lambda_free = false);

struct DephasingCurve {
    double power = 0.0;                           // nW
    std::vector<std::pair<double, double>> taus;  // (weak duration s, signal)
};

struct DephasingFit {
    std::vector<std::pair<double, FitResult>> per_power;  // (power, exponential fit)
    FitResult saturation;                                 // p_sat from the rate-vs-power fit
};

/// Per-power exponential fits of the coherence signal, then the power
/// dependence of the extracted dephasing rate.
DephasingFit fit_dephasing(const std::vector<DephasingCurve>& curves,
                           const EmitterParams& params);

struct Slopes {
    double a = 0.0;        // counts per nW
    double a_sigma = 0.0;
    double b = 0.0;        // dephasing rate per nW, s^-1/nW
    double b_sigma = 0.0;
};

/// Through-origin slopes of the low-power signal and dephasing data. Callers
/// restrict both point sets to the linear window (p below p_sat/3).
Slopes low_power_slopes(const std::vector<std::pair<double, double>>& emission_points,
                        const std::vector<std::pair<double, double>>& dephasing_points);

double efficiency_from_slopes(double a, double b, double tau);

/// Least-squares fit of amp * exp(-(t/tau)^xi).
FitResult fit_stretched_exponential(const std::vector<std::pair<double, double>>& points);

/// Threshold assignment of a binned trace: 0 (bright) when counts >= n_r,
/// else 1 (dark).
std::vector<std::uint8_t> assign_jump_states(const std::vector<std::uint32_t>& bins,
                                             std::uint32_t n_r);

/// Lengths of the maximal constant-state segments with the given state label.
std::vector<std::uint64_t> dwell_lengths(const std::vector<std::uint8_t>& states,
                                         std::uint8_t which);

}  // namespace spinshot::analysis
