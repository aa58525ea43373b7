#include <doctest.h>

#include <cmath>

#include "spinshot/analysis.hpp"
#include "spinshot/photostats.hpp"
#include "spinshot/rates.hpp"
#include "spinshot/seeding.hpp"
#include "spinshot/simulate.hpp"

using namespace spinshot;
using nlohmann::json;

namespace {

// Poisson-statistics operating point: high cyclicity keeps spin flips out of
// the collection window while init/repolarize still run above saturation.
json readout_config(std::uint64_t cycles, double eps1 = 0.0, double pi_error = 0.0,
                    bool include_crc = false) {
    const double gamma = 2.2222e8;
    const double p_sat = 313.0;
    const double signal_rate = 3.8 / (0.5 * 50e-6);  // eta=0.5, 3.8 mean signal counts
    const double s = signal_rate / (0.5 * gamma - signal_rate);
    json config;
    config["emitter"] = {{"gamma", gamma},   {"lambda_cyc", 949.0}, {"p_sat", p_sat},
                         {"eta", 0.5},       {"noise_a", 4000.0},   {"eps0", 0.0},
                         {"eps1", eps1}};
    config["run"] = {{"cycles", cycles},
                     {"master_seed", 421},
                     {"preset", "readout_wfmA"},
                     {"preset_params",
                      {{"pi_error", pi_error},
                       {"readout_power", s * p_sat},
                       {"readout_ns", 50000.0},
                       {"init_power", 100.0 * p_sat},
                       {"init_ns", 80000.0},
                       {"repolarize_ns", 80000.0},
                       {"include_crc", include_crc}}}};
    return config;
}

}  // namespace

TEST_CASE("simulate_cycle: noise-only readout counts are Poisson(0.2)") {
    EmitterParams params;
    params.gamma = 2.2222e8;
    params.lambda_cyc = 2244.0;
    params.p_sat = 313.0;
    params.eta = 0.0;
    params.noise_a = 4000.0;
    ExperimentPreset preset = parse_preset(PresetKind::readout_wfmA, json::object(), params);
    preset.include_crc = false;
    const auto points = build_sweep(preset);
    const PulseProgram& program = points.front().program;
    const int wi = program.index_of("readout1");

    const int n = 100000;
    double sum = 0.0;
    std::uint64_t zeros = 0;
    for (int i = 0; i < n; ++i) {
        const auto rec = simulate_cycle(preset, params, {}, program, derive_cycle_seed(9, i));
        sum += rec.counts[wi];
        zeros += rec.counts[wi] == 0;
        CHECK(rec.counts[wi] == rec.stamps_ns[wi].size());
    }
    const double mean = sum / n;
    CHECK(std::fabs(mean - 0.2) < 3.0 * std::sqrt(0.2 / n));
    const double p0 = std::exp(-0.2);
    CHECK(std::fabs(double(zeros) / n - p0) < 3.0 * std::sqrt(p0 * (1 - p0) / n));
}

TEST_CASE("simulate_cycle: window means track the closed-form expectation") {
    EmitterParams params;
    params.gamma = 2.2222e8;
    params.lambda_cyc = 2244.0;
    params.p_sat = 313.0;
    params.eta = 0.001;
    params.noise_a = 4000.0;
    const double power = 10.0 * params.p_sat;
    json preset_params = {{"readout_power", power}, {"include_crc", false}};
    ExperimentPreset preset = parse_preset(PresetKind::readout_wfmA, preset_params, params);
    const auto points = build_sweep(preset);
    const PulseProgram& program = points.front().program;
    const int dark_wi = program.index_of("readout1");
    const int bright_wi = program.index_of("readout2");
    const double tau = program.windows[dark_wi].duration;

    const int n = 100000;
    double dark_sum = 0.0, bright_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto rec = simulate_cycle(preset, params, {}, program, derive_cycle_seed(10, i));
        dark_sum += rec.counts[dark_wi];
        bright_sum += rec.counts[bright_wi];
    }
    const auto [n_b, n_d] = expected_counts_pair(params, power, tau);
    // bright counts are overdispersed by the spin-flip mixing; widen the
    // allowance with the exponential-mixture variance
    const double pump = pump_rate(power, params);
    const double extra = std::pow(params.eta * pump / polarization_rate(pump, params.lambda_cyc),
                                  2.0);
    CHECK(std::fabs(dark_sum / n - n_d) < 3.0 * std::sqrt(n_d / n));
    CHECK(std::fabs(bright_sum / n - n_b) < 3.0 * std::sqrt((n_b + extra) / n));
}

TEST_CASE("simulate_cycle: outcome pairs anticorrelate up to the count-overlap errors") {
    const Config config = validate_config(readout_config(100000));
    const Dataset dataset = run_experiment(config, 2);
    const auto& data = dataset.points.front();

    const auto table = analysis::joint_outcomes(data, "readout1", "readout2", 1);
    const double total = static_cast<double>(table.counts.total());
    // closed-form overlap errors of the two Poisson distributions
    const double p_first_1 = std::exp(-0.2);
    const double p_second_0 = 1.0 - std::exp(-4.0);
    const double expect_10 = p_first_1 * p_second_0;
    const double expect_01 = (1.0 - p_first_1) * (1.0 - p_second_0);
    const double got_10 = table.counts.n[1][0] / total;
    const double got_01 = table.counts.n[0][1] / total;
    CHECK(std::fabs(got_10 - expect_10) < 3.0 * std::sqrt(expect_10 / total) + 0.003);
    CHECK(std::fabs(got_01 - expect_01) < 3.0 * std::sqrt(expect_01 / total + 1e-9) + 0.001);
    CHECK(qnd_fidelity(table.counts) ==
          doctest::Approx(expect_10 + expect_01).epsilon(0.02));
}

TEST_CASE("run_experiment: zero cycles still yields a valid manifest") {
    json config_json = readout_config(0);
    const Dataset dataset = run_experiment(validate_config(config_json));
    CHECK(dataset.points.size() == 1);
    CHECK(dataset.points.front().records.empty());
    CHECK(dataset.manifest.at("points").size() == 1);
    CHECK(dataset.manifest.at("cycles") == 0);
}

TEST_CASE("run_experiment: reruns and worker counts do not change the data") {
    const Config config = validate_config(readout_config(6000, 0.02, 0.01));
    const Dataset a = run_experiment(config, 1);
    const Dataset b = run_experiment(config, 4);
    REQUIRE(a.points.front().records.size() == b.points.front().records.size());
    for (std::size_t i = 0; i < a.points.front().records.size(); ++i) {
        const auto& ra = a.points.front().records[i];
        const auto& rb = b.points.front().records[i];
        CHECK(ra.seed_used == rb.seed_used);
        CHECK(ra.counts == rb.counts);
        CHECK(ra.stamps_ns == rb.stamps_ns);
    }
}

TEST_CASE("run_experiment: dataset files are byte-stable across reruns") {
    const Config config = validate_config(readout_config(2000, 0.02, 0.01, true));
    for (const std::string dir : {"/tmp/spinshot_test_ds1", "/tmp/spinshot_test_ds2"}) {
        const Dataset dataset = run_experiment(config, 2);
        write_dataset(dataset, dir);
    }
    CHECK(fnv1a64_hex_of_file("/tmp/spinshot_test_ds1/data_p0.csv") ==
          fnv1a64_hex_of_file("/tmp/spinshot_test_ds2/data_p0.csv"));

    // and the reader reproduces what was written
    const Dataset reread = read_dataset("/tmp/spinshot_test_ds1");
    const Dataset fresh = run_experiment(config, 1);
    REQUIRE(reread.points.front().records.size() == fresh.points.front().records.size());
    for (std::size_t i = 0; i < reread.points.front().records.size(); i += 97) {
        CHECK(reread.points.front().records[i].counts == fresh.points.front().records[i].counts);
        CHECK(reread.points.front().records[i].stamps_ns ==
              fresh.points.front().records[i].stamps_ns);
    }
}

TEST_CASE("power sweep emits one dataset per power with sane means") {
    json config;
    config["emitter"] = {{"gamma", 2.2222e8}, {"lambda_cyc", 2244.0}, {"p_sat", 313.0},
                         {"eta", 0.001},      {"noise_a", 4000.0}};
    json powers = json::array();
    for (int i = 0; i < 12; ++i) powers.push_back(313.0 * std::pow(10.0, -1.0 + i / 5.0));
    config["run"] = {{"cycles", 3000},
                     {"master_seed", 5},
                     {"preset", "power_sweep"},
                     {"preset_params", {{"powers", powers}, {"include_crc", false}}}};
    const Dataset dataset = run_experiment(validate_config(config), 2);
    REQUIRE(dataset.points.size() == 12);
    for (const auto& point : dataset.points) {
        const auto hist_d = analysis::histogram_window(point, "readout1");
        const auto hist_b = analysis::histogram_window(point, "readout2");
        const auto [n_b, n_d] =
            expected_counts_pair(dataset.emitter, point.point.power, 50e-6);
        CHECK(std::fabs(hist_d.mean() - n_d) < 4.0 * std::sqrt(n_d / 3000.0) + 0.01);
        CHECK(std::fabs(hist_b.mean() - n_b) < 4.0 * std::sqrt(4.0 * n_b / 3000.0) + 0.02);
    }
}

TEST_CASE("blink chain: consecutive-pass statistics follow the calibrated survival") {
    json config = readout_config(60000, 0.0, 0.0, true);
    config["run"]["preset"] = "crc_statistics";
    config["run"]["preset_params"]["blink"] = {{"n_pass_target", 2.27}, {"k_on_repump", 0.045}};
    const Dataset dataset = run_experiment(validate_config(config), 2);
    const auto& data = dataset.points.front();

    const int wi = data.point.program.index_of("crc1");
    REQUIRE(wi >= 0);
    std::vector<std::uint8_t> seq(data.records.size());
    for (std::size_t i = 0; i < data.records.size(); ++i)
        seq[i] = data.records[i].counts[wi] >= 30 ? 1 : 0;
    const FitResult fit = analysis::consecutive_pass_fit(seq);
    CHECK(std::fabs(fit.value("n_pass") - 2.27) < 0.1);

    const auto stats = analysis::crc_postselect(data, 30, analysis::CrcSelect::both);
    CHECK(stats.pass_both > 0.04);
    CHECK(stats.pass_both < 0.12);
}

TEST_CASE("threshold 1 is optimal for the overdispersed flip-time statistics") {
    // at the measured operating scale the spin polarizes inside the window,
    // piling bright counts near zero; the threshold scan must settle at 1
    EmitterParams params;
    params.gamma = 2.2222e8;
    params.lambda_cyc = 2244.0;
    params.p_sat = 313.0;
    params.noise_a = 4000.0;
    const double power = 10.0 * params.p_sat;
    const double tau = 50e-6;
    const double pump = pump_rate(power, params);
    const double gamma_p = polarization_rate(pump, params.lambda_cyc);
    params.eta = 3.8 / ((params.lambda_cyc + 1.0) * (1.0 - std::exp(-gamma_p * tau)));

    // oracle: scan the exponential-mixture count model by quadrature
    const auto mixture_below = [&](std::uint32_t n_r) {
        const double rate = params.eta * pump;
        const int steps = 4000;
        double below = std::exp(-gamma_p * tau) * poisson_cdf(n_r - 1, 0.2 + rate * tau);
        for (int i = 0; i < steps; ++i) {
            const double t = (i + 0.5) * tau / steps;
            below += gamma_p * std::exp(-gamma_p * t) * (tau / steps) *
                     poisson_cdf(n_r - 1, 0.2 + rate * t);
        }
        return below;
    };
    std::uint32_t oracle_best = 1;
    double oracle_f = -1.0;
    for (std::uint32_t n = 1; n <= 12; ++n) {
        const double f = 1.0 - 0.5 * mixture_below(n) - 0.5 * (1.0 - poisson_cdf(n - 1, 0.2));
        if (f > oracle_f) {
            oracle_f = f;
            oracle_best = n;
        }
    }
    CHECK(oracle_best == 1);

    json preset_params = {{"readout_power", power}, {"include_crc", false}};
    ExperimentPreset preset = parse_preset(PresetKind::readout_wfmA, preset_params, params);
    const auto points = build_sweep(preset);
    CountHistogram down, up;
    for (int i = 0; i < 60000; ++i) {
        const auto rec =
            simulate_cycle(preset, params, {}, points.front().program, derive_cycle_seed(77, i));
        up.add(rec.counts[points.front().program.index_of("readout1")]);
        down.add(rec.counts[points.front().program.index_of("readout2")]);
    }
    const auto [n_r, f_r] = analysis::optimize_threshold(down, up);
    CHECK(n_r == oracle_best);
    CHECK(f_r == doctest::Approx(oracle_f).epsilon(0.01));
}

TEST_CASE("polarization decay: click times histogram to an exponential at the pumping rate") {
    json config;
    config["emitter"] = {{"gamma", 2.2222e8}, {"lambda_cyc", 100.0}, {"p_sat", 313.0},
                         {"eta", 0.02},       {"noise_a", 2000.0}};
    config["run"] = {{"cycles", 30000},
                     {"master_seed", 11},
                     {"preset", "polarization_decay"},
                     {"preset_params",
                      {{"readout_power", 2.0 * 313.0}, {"decay_window_ns", 500000.0}}}};
    const Config cfg = validate_config(config);
    const Dataset dataset = run_experiment(cfg, 2);
    const auto& data = dataset.points.front();

    const double pump = pump_rate(2.0 * 313.0, cfg.emitter);
    const double gamma_p = polarization_rate(pump, 100.0);

    const int wi = data.point.program.index_of("decay");
    std::vector<double> t(100), counts(100, 0.0);
    const double bin = 500e-6 / 100.0;
    for (std::size_t b = 0; b < t.size(); ++b) t[b] = (b + 0.5) * bin;
    for (const auto& rec : data.records)
        for (auto stamp : rec.stamps_ns[wi])
            counts[std::min<std::size_t>(99, static_cast<std::size_t>(stamp * 1e-9 / bin))] += 1;
    const FitResult fit = analysis::fit_polarization_decay(t, counts);
    CHECK(fit.converged);
    CHECK(fit.value("gamma_p") == doctest::Approx(gamma_p).epsilon(0.05));
}

TEST_CASE("quantum jumps: telegraph statistics of the binned trace") {
    EmitterParams params;
    params.gamma = 2.2222e8;
    params.lambda_cyc = 2244.0;
    params.p_sat = 313.0;
    params.eta = 0.02;
    params.noise_a = 0.0;

    // no mixing and clean init: nothing but silence
    auto trace = simulate_quantum_jumps(params, 10.0 * params.p_sat, 0.0, 0.1, 5e-6, 3);
    std::uint64_t total = 0;
    for (auto c : trace) total += c;
    CHECK(total == 0);

    // slow mixing: bright bursts last 1/gamma_p on average
    const double pump = pump_rate(10.0 * params.p_sat, params);
    const double gamma_p = polarization_rate(pump, params.lambda_cyc);
    const double mixing = gamma_p / 50.0;
    trace = simulate_quantum_jumps(params, 10.0 * params.p_sat, mixing, 20.0, 2e-6, 4);
    const auto states = analysis::assign_jump_states(trace, 1);
    const auto bright = analysis::dwell_lengths(states, 0);
    REQUIRE(bright.size() > 100);
    double mean_bins = 0.0;
    for (auto d : bright) mean_bins += static_cast<double>(d);
    mean_bins /= bright.size();
    // binning quantization biases the dwell mildly; stay within 25%
    CHECK(mean_bins * 2e-6 == doctest::Approx(1.0 / gamma_p).epsilon(0.25));

    // symmetric telegraph: half the time is spent bright
    trace = simulate_quantum_jumps(params, 10.0 * params.p_sat, gamma_p, 20.0, 5e-6, 5);
    std::uint64_t bright_time_bins = 0;
    for (auto c : trace) bright_time_bins += c > 0;
    const double occupancy = static_cast<double>(bright_time_bins) / trace.size();
    // detection within a bright bin is near-certain at this signal rate
    CHECK(occupancy == doctest::Approx(0.5).epsilon(0.1));
}
