#include "spinshot/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spinshot/rates.hpp"

namespace spinshot::analysis {

namespace {

int require_window(const PointData& data, const std::string& label) {
    const int index = data.point.program.index_of(label);
    if (index < 0) throw std::invalid_argument("unknown window label '" + label + "'");
    return index;
}

bool selected(const std::vector<std::uint8_t>& selection, std::size_t i) {
    return selection.empty() || selection[i] != 0;
}

}  // namespace

CountHistogram histogram_window(const PointData& data, const std::string& label,
                                const std::vector<std::uint8_t>& selection) {
    const int wi = require_window(data, label);
    CountHistogram hist;
    hist.selection = selection.empty() ? "all" : "masked";
    for (std::size_t i = 0; i < data.records.size(); ++i)
        if (selected(selection, i)) hist.add(data.records[i].counts[wi]);
    return hist;
}

std::pair<std::uint32_t, double> optimize_threshold(const CountHistogram& hist_down,
                                                    const CountHistogram& hist_up) {
    if (hist_down.empty() || hist_up.empty())
        throw std::invalid_argument("optimize_threshold: empty histogram");
    const std::uint32_t max_n = std::max(hist_down.max_count(), hist_up.max_count()) + 1;
    std::uint32_t best_n = 1;
    double best_f = -1.0;
    for (std::uint32_t n = 1; n <= max_n; ++n) {
        const double f = empirical_fidelity(hist_down, hist_up, n);
        if (f > best_f + 1e-15) {
            best_f = f;
            best_n = n;
        }
    }
    return {best_n, best_f};
}

CrcSelect crc_select_from_string(const std::string& name) {
    if (name == "none") return CrcSelect::none;
    if (name == "first") return CrcSelect::first;
    if (name == "second") return CrcSelect::second;
    if (name == "both") return CrcSelect::both;
    throw std::invalid_argument("unknown CRC selection '" + name + "'");
}

CrcStats crc_postselect(const PointData& data, std::uint32_t n_c, CrcSelect which) {
    const int first = data.point.program.index_of("crc1");
    const int second = data.point.program.index_of("crc2");
    if (first < 0 && second < 0)
        throw std::invalid_argument("dataset has no charge-resonance-check windows");

    CrcStats stats;
    stats.mask.resize(data.records.size(), 0);
    std::uint64_t n1 = 0, n2 = 0, nb = 0;
    for (std::size_t i = 0; i < data.records.size(); ++i) {
        const auto& rec = data.records[i];
        const bool p1 = first >= 0 && rec.counts[first] >= n_c;
        const bool p2 = second >= 0 && rec.counts[second] >= n_c;
        n1 += p1;
        n2 += p2;
        nb += p1 && p2;
        bool keep = true;
        switch (which) {
            case CrcSelect::none: keep = true; break;
            case CrcSelect::first: keep = p1; break;
            case CrcSelect::second: keep = p2; break;
            case CrcSelect::both: keep = p1 && p2; break;
        }
        stats.mask[i] = keep ? 1 : 0;
        stats.selected += keep;
    }
    const double total = static_cast<double>(std::max<std::size_t>(1, data.records.size()));
    stats.pass_first = n1 / total;
    stats.pass_second = n2 / total;
    stats.pass_both = nb / total;
    stats.second_given_first = n1 ? static_cast<double>(nb) / n1 : 0.0;
    return stats;
}

JointOutcomeTable joint_outcomes(const PointData& data, const std::string& first,
                                 const std::string& second, std::uint32_t n_r,
                                 const std::vector<std::uint8_t>& selection) {
    const int wi1 = require_window(data, first);
    const int wi2 = require_window(data, second);
    JointOutcomeTable table;
    table.first_label = first;
    table.second_label = second;
    for (std::size_t i = 0; i < data.records.size(); ++i) {
        if (!selected(selection, i)) continue;
        const int o1 = data.records[i].counts[wi1] < n_r ? 1 : 0;
        const int o2 = data.records[i].counts[wi2] < n_r ? 1 : 0;
        ++table.counts.n[o1][o2];
    }
    return table;
}

FitResult consecutive_pass_fit(const std::vector<std::uint8_t>& pass_sequence) {
    std::vector<std::uint64_t> runs;
    std::uint64_t current = 0;
    std::uint64_t fails = 0;
    for (std::uint8_t p : pass_sequence) {
        if (p) {
            ++current;
        } else {
            ++fails;
            runs.push_back(current);
            current = 0;
        }
    }
    if (fails == 0) throw std::invalid_argument("consecutive_pass_fit: no fail event");

    std::vector<std::uint64_t> hist;
    for (std::uint64_t r : runs) {
        if (r >= hist.size()) hist.resize(r + 1, 0);
        ++hist[r];
    }
    // run lengths >= 1 carry the survival law; the zero bin holds the
    // off-state dwell statistics instead
    fit::Data data;
    for (std::size_t n = 1; n < hist.size(); ++n) {
        if (hist[n] == 0) continue;
        data.x.push_back(static_cast<double>(n));
        data.y.push_back(static_cast<double>(hist[n]));
        data.w.push_back(1.0 / static_cast<double>(hist[n]));
    }
    if (data.x.size() < 2)
        throw std::invalid_argument("consecutive_pass_fit: too few distinct run lengths");

    const double n_scale = data.x.back();
    fit::ParamSpec amp{"amp", data.y.front() * std::exp(data.x.front()), true, 0.0, 0.0};
    fit::ParamSpec n_pass{"n_pass", 1.0, true, std::max(0.05, n_scale / 100.0), n_scale * 10.0};
    const fit::Model model = [](double x, const double* th) {
        return th[0] * std::exp(-x / th[1]);
    };
    FitResult result = fit_curve(model, data, {amp, n_pass});
    // Poisson weights from the fitted model rather than the observations;
    // observed-count weights bias shallow tails toward faster decay
    for (std::size_t i = 0; i < data.x.size(); ++i) {
        const double th[2] = {result.value("amp"), result.value("n_pass")};
        data.w[i] = 1.0 / std::max(0.5, model(data.x[i], th));
    }
    result = fit_curve(model, data, {amp, n_pass});
    result.params.erase("amp");
    return result;
}

FitResult fit_polarization_decay(const std::vector<double>& t, const std::vector<double>& counts) {
    if (t.size() != counts.size() || t.size() < 3)
        throw std::invalid_argument("fit_polarization_decay: need >= 3 bins");
    fit::Data data;
    data.x = t;
    data.y = counts;
    for (double c : counts) data.w.push_back(1.0 / std::max(1.0, c));  // Poisson weights

    const double peak = *std::max_element(counts.begin(), counts.end());
    const double floor_guess = std::max(1e-3, counts.back());
    const double span = t.back() - t.front();
    fit::ParamSpec amp{"a", std::max(peak, 1e-3), true, 0.0, 0.0};
    fit::ParamSpec floor{"b", floor_guess, true, 0.0, 0.0};
    fit::ParamSpec rate{"gamma_p", 1.0 / span, true, 0.01 / span, 100.0 / span};
    const fit::Model model = [](double x, const double* th) {
        return (th[0] - th[1]) * std::exp(-th[2] * x) + th[1];
    };
    FitResult result = fit_curve(model, data, {amp, floor, rate});
    if (result.value("gamma_p") * span < 0.5) result.converged = false;
    return result;
}

FitResult fit_saturation(const std::vector<std::pair<double, double>>& power_vs_signal,
                         double tau, const EmitterParams& params, bool lambda_free) {
    if (power_vs_signal.size() < (lambda_free ? 4u : 2u))
        throw std::invalid_argument("fit_saturation: too few powers");
    bool below = false, above = false;
    fit::Data data;
    for (const auto& [p, y] : power_vs_signal) {
        data.x.push_back(p);
        data.y.push_back(y);
        data.w.push_back(1.0 / std::max(0.05, y));
        below = below || p < params.p_sat;
        above = above || p > params.p_sat;
    }
    if (lambda_free && !(below && above))
        throw std::invalid_argument(
            "fit_saturation: free-cyclicity fit needs powers below and above saturation");

    const double gamma = params.gamma;
    const double p_max = data.x.back();
    const auto signal_model = [gamma, tau](double p, double p_sat, double eta, double lambda) {
        const double s = p / p_sat;
        const double pump = 0.5 * gamma * s / (1.0 + s);
        const double gamma_p = pump / (lambda + 1.0);
        const double factor = lambda > 100.0 ? lambda : lambda + 1.0;
        return eta * factor * (1.0 - std::exp(-gamma_p * tau));
    };

    fit::ParamSpec p_sat{"p_sat", params.p_sat, true, p_max * 1e-3, p_max * 10.0};
    fit::ParamSpec eta{"eta", std::max(params.eta, 1e-6), true, 1e-6, 1.0};
    if (lambda_free) {
        fit::ParamSpec lambda{"lambda_cyc", params.lambda_cyc, true, 1.0, 1e7};
        const fit::Model model = [signal_model](double p, const double* th) {
            return signal_model(p, th[0], th[1], th[2]);
        };
        return fit_curve(model, data, {p_sat, eta, lambda});
    }
    const double lambda_fixed = params.lambda_cyc;
    const fit::Model model = [signal_model, lambda_fixed](double p, const double* th) {
        return signal_model(p, th[0], th[1], lambda_fixed);
    };
    return fit_curve(model, data, {p_sat, eta});
}

DephasingFit fit_dephasing(const std::vector<DephasingCurve>& curves,
                           const EmitterParams& params) {
    DephasingFit out;
    fit::Data rate_data;
    for (const auto& curve : curves) {
        if (curve.taus.size() < 3)
            throw std::invalid_argument("fit_dephasing: need >= 3 durations per power");
        fit::Data data;
        double y_max = 0.0, y_min = 1e300;
        for (const auto& [tau, y] : curve.taus) {
            data.x.push_back(tau);
            data.y.push_back(y);
            y_max = std::max(y_max, y);
            y_min = std::min(y_min, y);
        }
        if (!(y_max > y_min))
            throw std::invalid_argument("fit_dephasing: non-decaying contrast curve");
        const double span = data.x.back() - data.x.front();
        fit::ParamSpec floor{"floor", std::max(1e-6, y_min - 0.25 * (y_max - y_min)), false, 0, 0};
        fit::ParamSpec amp{"amp", y_max - y_min, true, 0.0, 0.0};
        fit::ParamSpec rate{"gamma_phi", 1.0 / span, true, 0.01 / span, 1000.0 / span};
        const fit::Model model = [](double x, const double* th) {
            return th[0] + th[1] * std::exp(-x * th[2]);
        };
        FitResult fit = fit_curve(model, data, {floor, amp, rate});
        if (!(fit.value("gamma_phi") > 0.0)) fit.converged = false;
        rate_data.x.push_back(curve.power);
        rate_data.y.push_back(fit.value("gamma_phi"));
        rate_data.w.push_back(1.0);
        out.per_power.emplace_back(curve.power, std::move(fit));
    }

    if (curves.size() >= 2) {
        const double gamma = params.gamma;
        const fit::Model model = [gamma](double p, const double* th) {
            const double s = p / th[0];
            return 0.25 * gamma * s / (1.0 + s);
        };
        fit::ParamSpec p_sat{"p_sat", params.p_sat, true, rate_data.x.front() * 1e-2,
                             rate_data.x.back() * 1e2};
        out.saturation = fit_curve(model, rate_data, {p_sat});
    }
    return out;
}

Slopes low_power_slopes(const std::vector<std::pair<double, double>>& emission_points,
                        const std::vector<std::pair<double, double>>& dephasing_points) {
    const auto through_origin = [](const std::vector<std::pair<double, double>>& pts,
                                   double& slope, double& sigma) {
        if (pts.size() < 2)
            throw std::invalid_argument("low_power_slopes: fewer than 2 points in window");
        double sxx = 0.0, sxy = 0.0;
        for (const auto& [x, y] : pts) {
            sxx += x * x;
            sxy += x * y;
        }
        if (!(sxx > 0.0)) throw std::invalid_argument("low_power_slopes: degenerate powers");
        slope = sxy / sxx;
        double ss = 0.0;
        for (const auto& [x, y] : pts) ss += (y - slope * x) * (y - slope * x);
        sigma = std::sqrt(ss / std::max<std::size_t>(1, pts.size() - 1) / sxx);
    };
    Slopes slopes;
    through_origin(emission_points, slopes.a, slopes.a_sigma);
    through_origin(dephasing_points, slopes.b, slopes.b_sigma);
    return slopes;
}

double efficiency_from_slopes(double a, double b, double tau) {
    if (!(b > 0.0) || !(tau > 0.0))
        throw std::invalid_argument("efficiency_from_slopes: b and tau must be > 0");
    return a / (2.0 * b * tau);
}

FitResult fit_stretched_exponential(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 5)
        throw std::invalid_argument("fit_stretched_exponential: need >= 5 points");
    fit::Data data;
    for (const auto& [t, y] : points) {
        data.x.push_back(t);
        data.y.push_back(y);
    }
    const double span = data.x.back() - data.x.front();
    fit::ParamSpec amp{"amp", std::max(1e-6, *std::max_element(data.y.begin(), data.y.end())),
                       true, 0.0, 0.0};
    fit::ParamSpec tau{"tau", 0.5 * span, true, span * 1e-2, span * 1e2};
    fit::ParamSpec xi{"xi", 1.0, true, 0.25, 4.0};
    const fit::Model model = [](double t, const double* th) {
        if (t <= 0.0) return th[0];
        return th[0] * std::exp(-std::pow(t / th[1], th[2]));
    };
    FitResult result = fit_curve(model, data, {amp, tau, xi});
    if (!(result.value("tau") > 0.0)) result.converged = false;
    return result;
}

std::vector<std::uint8_t> assign_jump_states(const std::vector<std::uint32_t>& bins,
                                             std::uint32_t n_r) {
    std::vector<std::uint8_t> states(bins.size());
    for (std::size_t i = 0; i < bins.size(); ++i) states[i] = bins[i] >= n_r ? 0 : 1;
    return states;
}

std::vector<std::uint64_t> dwell_lengths(const std::vector<std::uint8_t>& states,
                                         std::uint8_t which) {
    std::vector<std::uint64_t> dwells;
    std::uint64_t run = 0;
    for (std::uint8_t s : states) {
        if (s == which) {
            ++run;
        } else if (run > 0) {
            dwells.push_back(run);
            run = 0;
        }
    }
    if (run > 0) dwells.push_back(run);
    return dwells;
}

}  // namespace spinshot::analysis
