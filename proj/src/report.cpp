#include "spinshot/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "spinshot/rates.hpp"

namespace spinshot::report {

namespace {

using analysis::CrcSelect;
using nlohmann::json;

json number_entry(double value, double sigma, const std::string& model,
                  const std::string& window, const std::string& selection) {
    json j;
    j["value"] = value;
    j["sigma"] = sigma;
    j["model"] = model;
    j["window"] = window;
    j["selection"] = selection;
    return j;
}

json rate_entry(double value, double sigma, const std::string& model, const std::string& window,
                const std::string& selection) {
    json j = number_entry(value, sigma, model, window, selection);
    j["value_over_2pi_hz"] = value / (2.0 * M_PI);  // display-only convention
    return j;
}

std::string histogram_csv(const CountHistogram& hist) {
    std::ostringstream out;
    out << "count,occurrences\n";
    for (const auto& [k, n] : hist.bins) out << k << ',' << n << '\n';
    return out.str();
}

std::string selection_name(CrcSelect select) {
    switch (select) {
        case CrcSelect::none: return "none";
        case CrcSelect::first: return "first";
        case CrcSelect::second: return "second";
        case CrcSelect::both: return "both";
    }
    return "?";
}

bool has_crc(const PointData& data) {
    return data.point.program.index_of("crc1") >= 0 || data.point.program.index_of("crc2") >= 0;
}

struct ReadoutAnalysis {
    CountHistogram hist_up;
    CountHistogram hist_down;
    std::uint32_t n_r = 1;
    double f_r = 0.0;
    analysis::JointOutcomeTable joint;
};

// Histograms, threshold and joint table of a two-readout waveform.
// prep_up says whether the first readout follows preparation of the dark
// state; the other readout then supplies the bright distribution.
ReadoutAnalysis analyze_readout_pair(const PointData& data, bool prep_up,
                                     const std::vector<std::uint8_t>& mask,
                                     std::optional<std::uint32_t> threshold) {
    ReadoutAnalysis out;
    const auto first = analysis::histogram_window(data, "readout1", mask);
    const auto second = analysis::histogram_window(data, "readout2", mask);
    out.hist_up = prep_up ? first : second;
    out.hist_down = prep_up ? second : first;
    if (threshold) {
        out.n_r = *threshold;
        out.f_r = empirical_fidelity(out.hist_down, out.hist_up, out.n_r);
    } else {
        std::tie(out.n_r, out.f_r) = analysis::optimize_threshold(out.hist_down, out.hist_up);
    }
    out.joint = analysis::joint_outcomes(data, "readout1", "readout2", out.n_r, mask);
    return out;
}

void report_readout(json& report, std::map<std::string, std::string>& tables,
                    const PointData& data, bool prep_up, const std::vector<std::uint8_t>& mask,
                    const std::string& selection, const AnalyzeOptions& options) {
    const auto ro = analyze_readout_pair(data, prep_up, mask, options.threshold);
    json j;
    j["n_r"] = ro.n_r;
    j["threshold_source"] = options.threshold ? "override" : "optimized";
    j["f_r"] = number_entry(ro.f_r, 0.0, "empirical threshold fidelity", "readout1+readout2",
                            selection);
    j["n_bar_bright"] =
        number_entry(ro.hist_down.mean(), 0.0, "histogram mean",
                     prep_up ? "readout2" : "readout1", selection);
    j["n_bar_dark"] = number_entry(ro.hist_up.mean(), 0.0, "histogram mean",
                                   prep_up ? "readout1" : "readout2", selection);
    const auto f_c = conditional_fidelity(ro.joint.counts);
    if (f_c)
        j["f_c"] = number_entry(*f_c, 0.0, "dominant anticorrelated fraction",
                                "readout1,readout2", selection);
    else
        j["f_c"] = "undefined (no anticorrelated events)";
    j["f_q"] = number_entry(qnd_fidelity(ro.joint.counts), 0.0, "anticorrelated probability",
                            "readout1,readout2", selection);
    json jt;
    jt["n11"] = ro.joint.counts.n[1][1];
    jt["n10"] = ro.joint.counts.n[1][0];
    jt["n01"] = ro.joint.counts.n[0][1];
    jt["n00"] = ro.joint.counts.n[0][0];
    j["joint"] = jt;
    report["readout"] = j;

    tables["hist_readout1.csv"] =
        histogram_csv(analysis::histogram_window(data, "readout1", mask));
    tables["hist_readout2.csv"] =
        histogram_csv(analysis::histogram_window(data, "readout2", mask));
    std::ostringstream joint_csv;
    joint_csv << "first,second,occurrences\n";
    for (int a = 1; a >= 0; --a)
        for (int b = 1; b >= 0; --b)
            joint_csv << a << ',' << b << ',' << ro.joint.counts.n[a][b] << '\n';
    tables["joint_outcomes.csv"] = joint_csv.str();
}

void report_crc(json& report, std::map<std::string, std::string>& tables, const PointData& data,
                std::uint32_t n_c, const analysis::CrcStats& stats, bool fit_runs) {
    json j;
    j["n_c"] = n_c;
    j["pass_first"] = stats.pass_first;
    j["pass_second"] = stats.pass_second;
    j["pass_both"] = stats.pass_both;
    j["second_given_first"] = stats.second_given_first;
    j["selected_cycles"] = stats.selected;

    const int wi1 = data.point.program.index_of("crc1");
    if (wi1 >= 0) {
        tables["hist_crc1.csv"] = histogram_csv(analysis::histogram_window(data, "crc1"));
        if (fit_runs) {
            std::vector<std::uint8_t> seq(data.records.size());
            for (std::size_t i = 0; i < data.records.size(); ++i)
                seq[i] = data.records[i].counts[wi1] >= n_c ? 1 : 0;
            bool all_pass = std::all_of(seq.begin(), seq.end(), [](auto p) { return p != 0; });
            if (!all_pass) {
                const FitResult fit = analysis::consecutive_pass_fit(seq);
                j["n_pass_first"] = number_entry(fit.value("n_pass"), fit.sigma("n_pass"),
                                                 "exponential run-length fit", "crc1", "all");
                std::ostringstream runs_csv;
                runs_csv << "run_length,occurrences\n";
                std::uint64_t run = 0;
                std::map<std::uint64_t, std::uint64_t> hist;
                for (auto p : seq) {
                    if (p)
                        ++run;
                    else {
                        ++hist[run];
                        run = 0;
                    }
                }
                for (const auto& [n, c] : hist) runs_csv << n << ',' << c << '\n';
                tables["crc_consecutive_passes.csv"] = runs_csv.str();
            }
        }
    }
    report["crc"] = j;
}

void analyze_readout_like(const Dataset& dataset, const AnalyzeOptions& options, json& report,
                          std::map<std::string, std::string>& tables) {
    const PointData& data = dataset.points.front();
    const bool crc_present = has_crc(data);
    CrcSelect select = options.select.value_or(crc_present ? CrcSelect::both : CrcSelect::none);
    if (select != CrcSelect::none && !crc_present)
        throw AnalysisError("CRC post-selection requested but the dataset has no CRC windows");

    std::vector<std::uint8_t> mask;
    const std::uint32_t n_c = options.crc_threshold.value_or(dataset.preset.crc_threshold);
    if (crc_present) {
        const auto stats = analysis::crc_postselect(data, n_c, select);
        report_crc(report, tables, data, n_c, stats,
                   dataset.preset.kind == PresetKind::crc_statistics);
        if (select != CrcSelect::none) mask = stats.mask;
    }
    const bool prep_up = dataset.preset.kind != PresetKind::readout_wfmB;
    report_readout(report, tables, data, prep_up, mask, selection_name(select), options);
}

void analyze_polarization_decay(const Dataset& dataset, json& report,
                                std::map<std::string, std::string>& tables) {
    const PointData& data = dataset.points.front();
    const int wi = data.point.program.index_of("decay");
    if (wi < 0) throw AnalysisError("polarization analysis needs a 'decay' window");
    const double window = data.point.program.windows[wi].duration;
    const std::size_t n_bins = 120;
    const double bin = window / n_bins;
    std::vector<double> t(n_bins), counts(n_bins, 0.0);
    for (std::size_t b = 0; b < n_bins; ++b) t[b] = (b + 0.5) * bin;
    for (const auto& rec : data.records)
        for (std::uint64_t stamp : rec.stamps_ns[wi]) {
            const auto b =
                std::min(n_bins - 1, static_cast<std::size_t>(stamp * 1e-9 / bin));
            counts[b] += 1.0;
        }
    const FitResult fit = analysis::fit_polarization_decay(t, counts);
    const double gamma_p = fit.value("gamma_p");
    const double pump = pump_rate(data.point.power, dataset.emitter);
    json j;
    j["gamma_p"] = rate_entry(gamma_p, fit.sigma("gamma_p"), "exponential decay fit", "decay",
                              "all");
    j["lambda_cyc_implied"] = number_entry(
        pump / gamma_p - 1.0, fit.sigma("gamma_p") * pump / (gamma_p * gamma_p),
        "pump rate over polarization rate", "decay", "all");
    j["converged"] = fit.converged;
    report["polarization_decay"] = j;

    std::ostringstream csv;
    csv << "t_us,counts,fit\n";
    const double a = fit.value("a"), b2 = fit.value("b");
    for (std::size_t i = 0; i < n_bins; ++i)
        csv << t[i] * 1e6 << ',' << counts[i] << ','
            << (a - b2) * std::exp(-gamma_p * t[i]) + b2 << '\n';
    tables["polarization_decay.csv"] = csv.str();
}

void analyze_power_sweep(const Dataset& dataset, const AnalyzeOptions& options, json& report,
                         std::map<std::string, std::string>& tables) {
    const std::uint32_t n_c = options.crc_threshold.value_or(dataset.preset.crc_threshold);
    std::vector<std::pair<double, double>> signal;
    std::ostringstream csv;
    csv << "p_nw,n_b,n_d,signal\n";
    for (const auto& data : dataset.points) {
        std::vector<std::uint8_t> mask;
        if (has_crc(data))
            mask = analysis::crc_postselect(data, n_c,
                                            options.select.value_or(CrcSelect::first))
                       .mask;
        const double n_d = analysis::histogram_window(data, "readout1", mask).mean();
        const double n_b = analysis::histogram_window(data, "readout2", mask).mean();
        signal.emplace_back(data.point.power, n_b - n_d);
        csv << data.point.power << ',' << n_b << ',' << n_d << ',' << n_b - n_d << '\n';
    }
    tables["saturation.csv"] = csv.str();

    const double tau = dataset.points.front().point.program.windows
                           [dataset.points.front().point.program.index_of("readout1")]
                               .duration;
    json j;
    const FitResult fixed = analysis::fit_saturation(signal, tau, dataset.emitter, false);
    j["fixed_lambda"] = {
        {"p_sat", number_entry(fixed.value("p_sat"), fixed.sigma("p_sat"), "saturation fit",
                               "readout1,readout2", "first")},
        {"eta", number_entry(fixed.value("eta"), fixed.sigma("eta"), "saturation fit",
                             "readout1,readout2", "first")},
        {"converged", fixed.converged}};
    if (signal.size() >= 4) {
        try {
            const FitResult free = analysis::fit_saturation(signal, tau, dataset.emitter, true);
            j["free_lambda"] = {
                {"p_sat", number_entry(free.value("p_sat"), free.sigma("p_sat"),
                                       "saturation fit (free cyclicity)", "readout1,readout2",
                                       "first")},
                {"eta", number_entry(free.value("eta"), free.sigma("eta"),
                                     "saturation fit (free cyclicity)", "readout1,readout2",
                                     "first")},
                {"lambda_cyc", number_entry(free.value("lambda_cyc"), free.sigma("lambda_cyc"),
                                            "saturation fit (free cyclicity)",
                                            "readout1,readout2", "first")},
                {"converged", free.converged}};
        } catch (const std::invalid_argument& err) {
            j["free_lambda"] = std::string("skipped: ") + err.what();
        }
    }

    // low-power signal slope within the fitted linear window
    const double p_sat_fit = fixed.value("p_sat");
    std::vector<std::pair<double, double>> window_points;
    for (const auto& pt : signal)
        if (pt.first < p_sat_fit / 3.0) window_points.push_back(pt);
    if (window_points.size() >= 2) {
        double slope = 0.0, sigma = 0.0;
        double sxx = 0.0, sxy = 0.0;
        for (const auto& [x, y] : window_points) {
            sxx += x * x;
            sxy += x * y;
        }
        slope = sxy / sxx;
        double ss = 0.0;
        for (const auto& [x, y] : window_points) ss += (y - slope * x) * (y - slope * x);
        sigma = std::sqrt(ss / std::max<std::size_t>(1, window_points.size() - 1) / sxx);
        j["signal_slope_per_nw"] = number_entry(slope, sigma, "through-origin linear fit",
                                                "readout1,readout2", "first");
    }
    report["saturation"] = j;
}

void analyze_dephasing_sweep(const Dataset& dataset, const AnalyzeOptions& options, json& report,
                             std::map<std::string, std::string>& tables) {
    const std::uint32_t n_r = options.threshold.value_or(1);
    std::map<double, analysis::DephasingCurve> curves;
    for (const auto& data : dataset.points) {
        const int wi = data.point.program.index_of("readout");
        if (wi < 0) throw AnalysisError("dephasing analysis needs a 'readout' window");
        std::uint64_t bright = 0;
        for (const auto& rec : data.records) bright += rec.counts[wi] >= n_r;
        auto& curve = curves[data.point.power];
        curve.power = data.point.power;
        curve.taus.emplace_back(data.point.weak_duration,
                                static_cast<double>(bright) / data.records.size());
    }
    std::vector<analysis::DephasingCurve> curve_list;
    std::ostringstream curves_csv;
    curves_csv << "p_nw,tau_us,bright_fraction\n";
    for (auto& [power, curve] : curves) {
        std::sort(curve.taus.begin(), curve.taus.end());
        for (const auto& [tau, y] : curve.taus)
            curves_csv << power << ',' << tau * 1e6 << ',' << y << '\n';
        curve_list.push_back(curve);
    }
    tables["dephasing_curves.csv"] = curves_csv.str();

    const auto fit = analysis::fit_dephasing(curve_list, dataset.emitter);
    json per_power = json::array();
    std::ostringstream rates_csv;
    rates_csv << "p_nw,gamma_phi,sigma\n";
    for (const auto& [power, f] : fit.per_power) {
        per_power.push_back({{"p_nw", power},
                             {"gamma_phi", rate_entry(f.value("gamma_phi"), f.sigma("gamma_phi"),
                                                      "exponential contrast fit", "readout",
                                                      "all")},
                             {"converged", f.converged}});
        rates_csv << power << ',' << f.value("gamma_phi") << ',' << f.sigma("gamma_phi") << '\n';
    }
    tables["dephasing_rates.csv"] = rates_csv.str();

    json j;
    j["per_power"] = per_power;
    if (!fit.saturation.params.empty()) {
        j["p_sat"] = number_entry(fit.saturation.value("p_sat"), fit.saturation.sigma("p_sat"),
                                  "dephasing saturation fit", "readout", "all");
        j["plateau_rate"] = rate_entry(0.25 * dataset.emitter.gamma, 0.0,
                                       "gamma/4 high-power limit", "readout", "all");
        // dephasing slope over the linear window of the fitted saturation power
        std::vector<std::pair<double, double>> window_points;
        for (const auto& [power, f] : fit.per_power)
            if (power < fit.saturation.value("p_sat") / 3.0)
                window_points.emplace_back(power, f.value("gamma_phi"));
        if (window_points.size() >= 2) {
            double sxx = 0.0, sxy = 0.0;
            for (const auto& [x, y] : window_points) {
                sxx += x * x;
                sxy += x * y;
            }
            j["dephasing_slope_per_nw"] = rate_entry(sxy / sxx, 0.0, "through-origin linear fit",
                                                     "readout", "all");
        }
    }
    report["dephasing"] = j;
}

void analyze_quantum_jumps(const Dataset& dataset, const AnalyzeOptions& options, json& report,
                           std::map<std::string, std::string>& tables) {
    const PointData& data = dataset.points.front();
    if (data.trace.empty()) throw AnalysisError("quantum-jump analysis needs a binned trace");
    const std::uint32_t n_r = options.threshold.value_or(1);
    const auto states = analysis::assign_jump_states(data.trace, n_r);
    const auto bright = analysis::dwell_lengths(states, 0);
    const auto dark = analysis::dwell_lengths(states, 1);
    const double bin = dataset.preset.trace_bin;

    auto mean = [](const std::vector<std::uint64_t>& v) {
        if (v.empty()) return 0.0;
        double s = 0.0;
        for (auto x : v) s += static_cast<double>(x);
        return s / v.size();
    };
    json j;
    j["n_r"] = n_r;
    j["bins"] = data.trace.size();
    j["bright_fraction"] =
        bright.empty() ? 0.0
                       : mean(bright) * bright.size() / static_cast<double>(states.size());
    j["bright_dwell_mean_s"] = mean(bright) * bin;
    j["dark_dwell_mean_s"] = mean(dark) * bin;
    if (!bright.empty())
        j["implied_gamma_p"] = rate_entry(1.0 / (mean(bright) * bin), 0.0,
                                          "inverse mean bright dwell", "trace", "all");
    report["quantum_jumps"] = j;

    std::ostringstream trace_csv;
    trace_csv << "bin,t_us,counts,state\n";
    for (std::size_t b = 0; b < data.trace.size(); ++b)
        trace_csv << b << ',' << b * bin * 1e6 << ',' << data.trace[b] << ','
                  << static_cast<int>(states[b]) << '\n';
    tables["jump_trace.csv"] = trace_csv.str();

    std::ostringstream dwell_csv;
    dwell_csv << "state,dwell_bins\n";
    for (auto d : bright) dwell_csv << "0," << d << '\n';
    for (auto d : dark) dwell_csv << "1," << d << '\n';
    tables["jump_dwells.csv"] = dwell_csv.str();
}

}  // namespace

AnalyzeResult analyze_dataset(const Dataset& dataset, const AnalyzeOptions& options) {
    if (dataset.points.empty()) throw AnalysisError("dataset has no sweep points");
    AnalyzeResult result;
    result.report["tool_version"] = kToolVersion;
    result.report["preset"] = to_string(dataset.preset.kind);
    result.report["cycles"] = dataset.points.front().records.size();

    switch (dataset.preset.kind) {
        case PresetKind::readout_wfmA:
        case PresetKind::readout_wfmB:
        case PresetKind::crc_statistics:
            analyze_readout_like(dataset, options, result.report, result.tables);
            break;
        case PresetKind::polarization_decay:
            analyze_polarization_decay(dataset, result.report, result.tables);
            break;
        case PresetKind::power_sweep:
            analyze_power_sweep(dataset, options, result.report, result.tables);
            break;
        case PresetKind::dephasing_sweep:
            analyze_dephasing_sweep(dataset, options, result.report, result.tables);
            break;
        case PresetKind::quantum_jumps:
            analyze_quantum_jumps(dataset, options, result.report, result.tables);
            break;
        case PresetKind::custom:
            throw AnalysisError("no preset analysis is defined for custom programs");
    }
    json files = json::array();
    for (const auto& [name, _] : result.tables) files.push_back(name);
    result.report["tables"] = files;
    return result;
}

void write_analysis(const AnalyzeResult& result, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    std::ofstream rep(out_dir + "/report.json");
    if (!rep) throw std::runtime_error("cannot write report in '" + out_dir + "'");
    rep << result.report.dump(2) << '\n';
    for (const auto& [name, content] : result.tables) {
        std::ofstream out(out_dir + "/" + name);
        if (!out) throw std::runtime_error("cannot write table '" + name + "'");
        out << content;
    }
}

}  // namespace spinshot::report
