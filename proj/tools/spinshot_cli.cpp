#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "spinshot/config.hpp"
#include "spinshot/cqed.hpp"
#include "spinshot/photostats.hpp"
#include "spinshot/rates.hpp"
#include "spinshot/report.hpp"
#include "spinshot/simulate.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitAnalysis = 3;
constexpr int kExitIo = 4;

std::map<std::string, double> parse_params(const std::vector<std::string>& kvs) {
    std::map<std::string, double> params;
    for (const auto& kv : kvs) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw spinshot::ConfigError("param", "expected k=v, got '" + kv + "'");
        try {
            params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
        } catch (const std::exception&) {
            throw spinshot::ConfigError("param." + kv.substr(0, eq), "not a number");
        }
    }
    return params;
}

double param_or(const std::map<std::string, double>& params, const std::string& key,
                double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir, long long cycles,
                 long long seed, int threads) {
    spinshot::Config config = spinshot::load_config_file(config_path);
    if (cycles >= 0) config.run.cycles = static_cast<std::uint64_t>(cycles);
    if (seed >= 0) config.run.master_seed = static_cast<std::uint64_t>(seed);

    const auto t0 = std::chrono::steady_clock::now();
    spinshot::Dataset dataset = spinshot::run_experiment(config, threads);
    const auto t1 = std::chrono::steady_clock::now();
    dataset.manifest["wall_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
    spinshot::write_dataset(dataset, out_dir);
    std::cout << "wrote " << dataset.points.size() << " sweep point(s) to " << out_dir << "\n";
    return kExitOk;
}

int cmd_analyze(const std::string& data_dir, const std::string& out_dir,
                const spinshot::report::AnalyzeOptions& options) {
    const spinshot::Dataset dataset = spinshot::read_dataset(data_dir);
    const auto result = spinshot::report::analyze_dataset(dataset, options);
    spinshot::report::write_analysis(result, out_dir);
    std::cout << "wrote report.json and " << result.tables.size() << " table(s) to " << out_dir
              << "\n";
    return kExitOk;
}

int cmd_model(const std::string& name, const std::map<std::string, double>& params,
              const std::string& out_path) {
    std::ostringstream csv;
    if (name == "saturation") {
        spinshot::EmitterParams e;
        e.gamma = param_or(params, "gamma", 2.2222e8);
        e.lambda_cyc = param_or(params, "lambda_cyc", 2244.0);
        e.p_sat = param_or(params, "p_sat", 313.0);
        e.eta = param_or(params, "eta", 0.992e-3);
        e.noise_a = param_or(params, "noise_a", 4000.0);
        e.noise_b = param_or(params, "noise_b", 0.0);
        e.validate();
        const double tau = param_or(params, "tau_us", 50.0) * 1e-6;
        const double p_lo = param_or(params, "p_min", e.p_sat / 100.0);
        const double p_hi = param_or(params, "p_max", e.p_sat * 30.0);
        const int n = static_cast<int>(param_or(params, "points", 60));
        csv << "p_nw,n_b,n_d,signal\n";
        for (int i = 0; i < n; ++i) {
            const double p = p_lo * std::pow(p_hi / p_lo, i / double(n - 1));
            const auto [n_b, n_d] = spinshot::expected_counts_pair(e, p, tau);
            csv << p << ',' << n_b << ',' << n_d << ',' << n_b - n_d << '\n';
        }
    } else if (name == "fidelity_map") {
        spinshot::EmitterParams e;
        e.gamma = param_or(params, "gamma", 2.2222e8);
        e.lambda_cyc = param_or(params, "lambda_cyc", 2.2e3);
        e.p_sat = param_or(params, "p_sat", 313.0);
        e.eta = 1.0;
        e.noise_a = param_or(params, "noise_a", 4000.0);
        e.noise_b = param_or(params, "noise_b", 0.0);
        e.validate();
        const double tau = param_or(params, "tau_us", 50.0) * 1e-6;
        const double f0 = param_or(params, "f0", 1.0);
        const int n = static_cast<int>(param_or(params, "points", 40));
        csv << "p_nw,eta,n_b,n_d,f_r_pred\n";
        for (int i = 0; i < n; ++i) {
            const double p = e.p_sat * std::pow(100.0, i / double(n - 1)) / 10.0;
            for (int j = 0; j < n; ++j) {
                const double eta = std::pow(10.0, -4.0 + 3.0 * j / double(n - 1));
                spinshot::EmitterParams point = e;
                point.eta = eta;
                const auto [n_b, n_d] = spinshot::expected_counts_pair(point, p, tau);
                spinshot::ReadoutModelInputs inputs{n_d, n_b, 1, f0};
                csv << p << ',' << eta << ',' << n_b << ',' << n_d << ','
                    << spinshot::fidelity_model(inputs) << '\n';
            }
        }
    } else if (name == "dephasing") {
        spinshot::EmitterParams e;
        e.gamma = param_or(params, "gamma", 2.2222e8);
        e.lambda_cyc = param_or(params, "lambda_cyc", 2244.0);
        e.p_sat = param_or(params, "p_sat", 1436.0);
        e.eta = 1.0;
        e.validate();
        const double p_lo = param_or(params, "p_min", e.p_sat / 100.0);
        const double p_hi = param_or(params, "p_max", e.p_sat * 30.0);
        const int n = static_cast<int>(param_or(params, "points", 60));
        csv << "p_nw,gamma_phi\n";
        for (int i = 0; i < n; ++i) {
            const double p = p_lo * std::pow(p_hi / p_lo, i / double(n - 1));
            csv << p << ',' << spinshot::dephasing_rate(spinshot::pump_rate(p, e)) << '\n';
        }
    } else if (name == "dispersive_transmission") {
        spinshot::cqed::CavityParams cavity;
        cavity.kappa = param_or(params, "kappa", 1.0);
        cavity.chi = param_or(params, "chi", 2.0);
        cavity.epsilon = param_or(params, "epsilon", 1.0);
        cavity.validate();
        const double span = param_or(params, "span", 4.0 * (std::fabs(cavity.chi) + cavity.kappa));
        const int n = static_cast<int>(param_or(params, "points", 201));
        csv << "delta,alpha_down_sq,alpha_up_sq\n";
        for (int i = 0; i < n; ++i) {
            cavity.delta = -span + 2.0 * span * i / double(n - 1);
            const double ad = spinshot::cqed::cavity_field(cavity, spinshot::cqed::Spin::down);
            const double au = spinshot::cqed::cavity_field(cavity, spinshot::cqed::Spin::up);
            csv << cavity.delta << ',' << ad * ad << ',' << au * au << '\n';
        }
    } else {
        throw spinshot::ConfigError("model.name", "unknown model '" + name + "'");
    }

    if (out_path.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
        out << csv.str();
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"single-shot spin readout simulator and analysis toolkit"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "generate a time-tagged dataset");
    std::string config_path, sim_out;
    long long override_cycles = -1, override_seed = -1;
    int threads = 1;
    sim->add_option("--config", config_path, "config JSON")->required();
    sim->add_option("--out", sim_out, "output directory")->required();
    sim->add_option("--cycles", override_cycles, "override run.cycles");
    sim->add_option("--seed", override_seed, "override run.master_seed");
    sim->add_option("--threads", threads, "worker threads");

    auto* ana = app.add_subcommand("analyze", "analyze a simulated dataset");
    std::string data_dir, ana_out, select;
    long long nr = -1, nc = -1;
    ana->add_option("--data", data_dir, "dataset directory")->required();
    ana->add_option("--out", ana_out, "output directory (default <data>/analysis)");
    ana->add_option("--threshold", nr, "readout threshold override");
    ana->add_option("--crc-threshold", nc, "CRC pass threshold override");
    ana->add_option("--select", select, "CRC selection: both|first|second|none");

    auto* mod = app.add_subcommand("model", "emit a closed-form model curve as CSV");
    std::string model_name, model_out;
    std::vector<std::string> model_params;
    mod->add_option("--name", model_name, "saturation|fidelity_map|dephasing|dispersive_transmission")
        ->required();
    mod->add_option("--param", model_params, "model parameter k=v (repeatable)");
    mod->add_option("--out", model_out, "output CSV file (default stdout)");

    try {
        app.parse(argc, argv);
        if (sim->parsed()) return cmd_simulate(config_path, sim_out, override_cycles,
                                               override_seed, threads);
        if (ana->parsed()) {
            spinshot::report::AnalyzeOptions options;
            if (nr >= 0) options.threshold = static_cast<std::uint32_t>(nr);
            if (nc >= 0) options.crc_threshold = static_cast<std::uint32_t>(nc);
            if (!select.empty())
                options.select = spinshot::analysis::crc_select_from_string(select);
            if (ana_out.empty()) ana_out = data_dir + "/analysis";
            return cmd_analyze(data_dir, ana_out, options);
        }
        if (mod->parsed()) return cmd_model(model_name, parse_params(model_params), model_out);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kExitOk : kExitConfig;
    } catch (const spinshot::ConfigError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return kExitConfig;
    } catch (const spinshot::report::AnalysisError& err) {
        std::cerr << "analysis error: " << err.what() << "\n";
        return kExitAnalysis;
    } catch (const std::invalid_argument& err) {
        std::cerr << "analysis error: " << err.what() << "\n";
        return kExitAnalysis;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}
