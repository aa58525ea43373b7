#include "spinshot/simulate.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include "spinshot/rates.hpp"
#include "spinshot/rng.hpp"
#include "spinshot/seeding.hpp"

namespace spinshot {

namespace {

constexpr std::uint64_t kChainStream = 0xC4A1;
constexpr std::uint64_t kEventStream = 0xE7E2;

struct WindowChain {
    bool on_at_start = true;
    double blink_at = 0.0;  // time into the window; >= duration when no blink
};

// Charge-state history of one cycle. Uses only the chain substream so the
// scan can be replayed independently of the event sampling.
std::vector<WindowChain> charge_chain(const PulseProgram& program, const BlinkModel& blink,
                                      Rng& rng, bool& on) {
    std::vector<WindowChain> chain(program.windows.size());
    for (std::size_t i = 0; i < program.windows.size(); ++i) {
        const Window& w = program.windows[i];
        if (w.kind == WindowKind::repump && !on) on = rng.bernoulli(blink.k_on_repump);
        chain[i].on_at_start = on;
        chain[i].blink_at = w.duration;
        const bool optical = w.kind == WindowKind::init || w.kind == WindowKind::readout ||
                             w.kind == WindowKind::weak_measure || w.kind == WindowKind::crc;
        if (optical && on && blink.k_off > 0.0) {
            const double t_off = rng.exponential(blink.k_off);
            if (t_off < w.duration) {
                chain[i].blink_at = t_off;
                on = false;
            }
        }
    }
    return chain;
}

void add_clicks(Rng& rng, double rate, double until, double window_ns_end, bool collect,
                std::uint32_t& count, std::vector<std::uint64_t>& stamps) {
    if (rate <= 0.0 || until <= 0.0) return;
    const std::uint32_t n = rng.poisson(rate * until);
    count += n;
    if (!collect) return;
    for (std::uint32_t k = 0; k < n; ++k) {
        const double t_ns = rng.uniform() * until * 1e9;
        stamps.push_back(std::min<std::uint64_t>(static_cast<std::uint64_t>(t_ns),
                                                 static_cast<std::uint64_t>(window_ns_end) - 1));
    }
}

}  // namespace

CycleRecord simulate_cycle(const ExperimentPreset& preset, const EmitterParams& params,
                           const BlinkModel& blink, const PulseProgram& program,
                           std::uint64_t seed, bool charge_on_in, bool* charge_on_out) {
    Rng rng_chain(derive_stream_seed(seed, kChainStream));
    Rng rng(derive_stream_seed(seed, kEventStream));

    bool on = charge_on_in;
    const auto chain = charge_chain(program, blink, rng_chain, on);
    if (charge_on_out) *charge_on_out = on;

    CycleRecord record;
    record.seed_used = seed;
    record.counts.resize(program.windows.size(), 0);
    record.stamps_ns.resize(program.windows.size());
    record.charge_ok.resize(program.windows.size(), 0);

    bool spin_down = false;  // presets initialize before using the spin
    double coherence = 1.0;

    for (std::size_t i = 0; i < program.windows.size(); ++i) {
        const Window& w = program.windows[i];
        const WindowChain& ch = chain[i];
        const bool fully_on = ch.on_at_start && ch.blink_at >= w.duration;
        record.charge_ok[i] = fully_on ? 1 : 0;
        const double on_time = ch.on_at_start ? std::min(ch.blink_at, w.duration) : 0.0;
        const double window_ns = w.duration * 1e9;
        auto& stamps = record.stamps_ns[i];
        std::uint32_t& count = record.counts[i];

        switch (w.kind) {
            case WindowKind::repump:
                break;
            case WindowKind::init:
            case WindowKind::readout:
            case WindowKind::weak_measure: {
                // Echo bookkeeping: the collected readout of a dephasing cycle
                // converts the surviving coherence into a spin-down probability.
                if (preset.kind == PresetKind::dephasing_sweep &&
                    w.kind == WindowKind::readout && w.collect)
                    spin_down = rng.bernoulli(0.5 * (1.0 + coherence));

                const double pump = pump_rate(w.power, params);
                const double gamma_p = polarization_rate(pump, params.lambda_cyc);
                if (spin_down && on_time > 0.0) {
                    const double t_flip = rng.exponential(gamma_p);
                    const double t_emit = std::min(t_flip, on_time);
                    add_clicks(rng, params.eta * pump, t_emit, window_ns, w.collect, count,
                               stamps);
                    if (t_flip <= on_time) spin_down = false;
                }
                if (w.kind == WindowKind::weak_measure)
                    coherence *= std::exp(-dephasing_rate(pump) * on_time);
                if (w.kind == WindowKind::init)
                    spin_down = w.init_up ? rng.bernoulli(params.eps1)
                                          : !rng.bernoulli(params.eps0);
                add_clicks(rng, params.noise_a + params.noise_b * w.power, w.duration, window_ns,
                           w.collect, count, stamps);
                break;
            }
            case WindowKind::microwave_pi:
                if (!rng.bernoulli(preset.pi_error)) spin_down = !spin_down;
                break;
            case WindowKind::crc: {
                const double pump = pump_rate(w.power, params);
                add_clicks(rng, params.eta * preset.crc_rate_factor * pump, on_time, window_ns,
                           w.collect, count, stamps);
                add_clicks(rng, params.noise_a + params.noise_b * w.power, w.duration, window_ns,
                           w.collect, count, stamps);
                // both spin-preserving transitions scatter: the spin leaves mixed
                if (on_time > 0.0) spin_down = rng.bernoulli(0.5);
                break;
            }
        }
        if (w.collect) std::sort(stamps.begin(), stamps.end());
    }
    return record;
}

std::vector<std::uint32_t> simulate_quantum_jumps(const EmitterParams& params,
                                                  double readout_power, double mixing_rate,
                                                  double duration, double bin,
                                                  std::uint64_t seed) {
    if (!(bin > 0.0) || duration < bin)
        throw std::invalid_argument("simulate_quantum_jumps: need duration >= bin > 0");
    const double pump = pump_rate(readout_power, params);
    const double gamma_p = polarization_rate(pump, params.lambda_cyc);
    const double signal_rate = params.eta * pump;
    const double noise_rate = params.noise_a + params.noise_b * readout_power;

    const std::size_t n_bins = static_cast<std::size_t>(duration / bin);
    std::vector<std::uint32_t> bins(n_bins, 0);
    Rng rng(seed);

    auto deposit = [&](double from, double to, double rate) {
        if (rate <= 0.0 || to <= from) return;
        const std::uint32_t n = rng.poisson(rate * (to - from));
        for (std::uint32_t k = 0; k < n; ++k) {
            const double t = from + rng.uniform() * (to - from);
            const std::size_t b = std::min(n_bins - 1, static_cast<std::size_t>(t / bin));
            ++bins[b];
        }
    };

    // two-state telegraph: dark (up) flips at the mixing rate, bright (down)
    // repolarizes at gamma_p
    bool spin_down = rng.bernoulli(params.eps1);
    double t = 0.0;
    const double t_end = static_cast<double>(n_bins) * bin;
    while (t < t_end) {
        const double dwell = rng.exponential(spin_down ? gamma_p : mixing_rate);
        const double seg_end = std::min(t_end, t + dwell);
        if (spin_down) deposit(t, seg_end, signal_rate);
        if (seg_end >= t_end) break;
        spin_down = !spin_down;
        t = seg_end;
    }
    deposit(0.0, t_end, noise_rate);
    return bins;
}

namespace {

PointData simulate_point(const ExperimentPreset& preset, const EmitterParams& emitter,
                         const SweepPoint& point, std::uint64_t point_seed, std::uint64_t cycles,
                         int threads) {
    PointData data;
    data.point = point;
    data.seed = point_seed;

    if (preset.kind == PresetKind::quantum_jumps) {
        data.trace = simulate_quantum_jumps(emitter, preset.readout_power, preset.mixing_rate,
                                            preset.trace_duration, preset.trace_bin, point_seed);
        return data;
    }

    // Charge chain first: a cheap sequential scan makes every cycle's charge
    // input available, after which cycles are independent.
    std::vector<std::uint8_t> charge_in(cycles, 1);
    {
        bool on = true;
        for (std::uint64_t i = 0; i < cycles; ++i) {
            charge_in[i] = on ? 1 : 0;
            Rng rng_chain(derive_stream_seed(derive_cycle_seed(point_seed, i), kChainStream));
            charge_chain(point.program, preset.blink, rng_chain, on);
        }
    }

    data.records.resize(cycles);
    auto worker = [&](std::uint64_t begin, std::uint64_t end) {
        for (std::uint64_t i = begin; i < end; ++i) {
            data.records[i] = simulate_cycle(preset, emitter, preset.blink, point.program,
                                             derive_cycle_seed(point_seed, i), charge_in[i] != 0);
            data.records[i].cycle_index = i;
        }
    };
    if (threads <= 1 || cycles < 4096) {
        worker(0, cycles);
    } else {
        const std::uint64_t chunk = (cycles + threads - 1) / threads;
        std::vector<std::future<void>> futures;
        for (int t = 0; t < threads; ++t) {
            const std::uint64_t begin = t * chunk;
            const std::uint64_t end = std::min(cycles, begin + chunk);
            if (begin >= end) break;
            futures.push_back(std::async(std::launch::async, worker, begin, end));
        }
        for (auto& f : futures) f.get();
    }
    return data;
}

}  // namespace

Dataset run_experiment(const Config& config, int threads) {
    Dataset dataset;
    dataset.emitter = config.emitter;

    std::vector<SweepPoint> points;
    if (!config.run.preset.empty()) {
        const PresetKind kind = preset_kind_from_string(config.run.preset, "run.preset");
        dataset.preset = parse_preset(kind, config.preset_params, config.emitter);
        points = build_sweep(dataset.preset);
    } else {
        dataset.preset.kind = PresetKind::custom;
        points.push_back({"p0", 0.0, 0.0, *config.program});
    }

    for (std::size_t pi = 0; pi < points.size(); ++pi) {
        const std::uint64_t point_seed =
            splitmix64(config.run.master_seed ^ (0x50C5ULL + pi));
        dataset.points.push_back(simulate_point(dataset.preset, config.emitter, points[pi],
                                                point_seed, config.run.cycles, threads));
    }

    nlohmann::json manifest;
    manifest["tool_version"] = kToolVersion;
    manifest["preset"] = config.run.preset.empty() ? "custom" : config.run.preset;
    manifest["master_seed"] = config.run.master_seed;
    manifest["cycles"] = config.run.cycles;
    const nlohmann::json config_echo = serialize_config(config);
    manifest["config"] = config_echo;
    const std::string canonical = config_echo.dump();
    manifest["config_digest"] = [&] {
        std::ostringstream hex;
        hex << std::hex << fnv1a64(canonical.data(), canonical.size());
        return hex.str();
    }();
    manifest["points"] = nlohmann::json::array();
    for (std::size_t pi = 0; pi < dataset.points.size(); ++pi) {
        const auto& pd = dataset.points[pi];
        nlohmann::json jp;
        jp["id"] = pd.point.id;
        jp["power_nw"] = pd.point.power;
        jp["weak_duration_ns"] = pd.point.weak_duration * 1e9;
        jp["seed"] = pd.seed;
        jp["file"] = (dataset.preset.kind == PresetKind::quantum_jumps ? "trace_" : "data_") +
                     pd.point.id + ".csv";
        nlohmann::json labels = nlohmann::json::array();
        for (const auto& w : pd.point.program.windows) {
            nlohmann::json jw;
            jw["label"] = w.label;
            jw["kind"] = to_string(w.kind);
            jw["duration_ns"] = w.duration * 1e9;
            jw["power_nw"] = w.power;
            jw["collect"] = w.collect;
            labels.push_back(std::move(jw));
        }
        jp["windows"] = std::move(labels);
        manifest["points"].push_back(std::move(jp));
    }
    manifest["preset_meta"] = {{"crc_threshold", dataset.preset.crc_threshold},
                               {"trace_bin_ns", dataset.preset.trace_bin * 1e9},
                               {"pi_error", dataset.preset.pi_error},
                               {"readout_power_nw", dataset.preset.readout_power}};
    dataset.manifest = std::move(manifest);
    return dataset;
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t hash = 0xCBF29CE484222325ULL;
    for (std::size_t i = 0; i < size; ++i) {
        hash ^= bytes[i];
        hash *= 0x100000001B3ULL;
    }
    return hash;
}

std::string fnv1a64_hex_of_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();
    std::ostringstream hex;
    hex << std::hex << fnv1a64(bytes.data(), bytes.size());
    return hex.str();
}

void write_dataset(const Dataset& dataset, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);

    nlohmann::json manifest = dataset.manifest;
    for (std::size_t pi = 0; pi < dataset.points.size(); ++pi) {
        const auto& pd = dataset.points[pi];
        const std::string file = manifest["points"][pi]["file"].get<std::string>();
        const std::string path = out_dir + "/" + file;
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write '" + path + "'");
        if (dataset.preset.kind == PresetKind::quantum_jumps) {
            out << "bin,t_start_ns,counts\n";
            const double bin_ns = dataset.preset.trace_bin * 1e9;
            for (std::size_t b = 0; b < pd.trace.size(); ++b)
                out << b << ',' << static_cast<std::uint64_t>(b * bin_ns) << ',' << pd.trace[b]
                    << '\n';
        } else {
            out << "cycle,window_label,count,timestamps_ns\n";
            for (const auto& rec : pd.records) {
                for (std::size_t wi = 0; wi < rec.counts.size(); ++wi) {
                    out << rec.cycle_index << ',' << pd.point.program.windows[wi].label << ','
                        << rec.counts[wi] << ',';
                    const auto& stamps = rec.stamps_ns[wi];
                    for (std::size_t k = 0; k < stamps.size(); ++k) {
                        if (k) out << ';';
                        out << stamps[k];
                    }
                    out << '\n';
                }
            }
        }
        out.close();
        manifest["points"][pi]["digest"] = fnv1a64_hex_of_file(path);
    }
    std::ofstream mout(out_dir + "/manifest.json");
    if (!mout) throw std::runtime_error("cannot write manifest in '" + out_dir + "'");
    mout << manifest.dump(2) << '\n';
}

Dataset read_dataset(const std::string& dir) {
    std::ifstream min(dir + "/manifest.json");
    if (!min) throw std::runtime_error("no manifest.json in '" + dir + "'");
    nlohmann::json manifest;
    min >> manifest;

    Dataset dataset;
    dataset.manifest = manifest;
    const std::string preset_name = manifest.at("preset").get<std::string>();

    Config config = validate_config(manifest.at("config"));
    dataset.emitter = config.emitter;
    if (preset_name != "custom") {
        dataset.preset = parse_preset(preset_kind_from_string(preset_name, "manifest.preset"),
                                      config.preset_params, config.emitter);
    } else {
        dataset.preset.kind = PresetKind::custom;
    }

    for (const auto& jp : manifest.at("points")) {
        PointData pd;
        pd.point.id = jp.at("id").get<std::string>();
        pd.point.power = jp.at("power_nw").get<double>();
        pd.point.weak_duration = jp.at("weak_duration_ns").get<double>() * 1e-9;
        pd.seed = jp.at("seed").get<std::uint64_t>();
        for (const auto& jw : jp.at("windows")) {
            Window w;
            w.label = jw.at("label").get<std::string>();
            w.kind = window_kind_from_string(jw.at("kind").get<std::string>(), "manifest");
            w.duration = jw.at("duration_ns").get<double>() * 1e-9;
            w.power = jw.at("power_nw").get<double>();
            w.collect = jw.at("collect").get<bool>();
            pd.point.program.windows.push_back(std::move(w));
        }
        const std::string path = dir + "/" + jp.at("file").get<std::string>();
        std::ifstream in(path);
        if (!in) throw std::runtime_error("missing dataset file '" + path + "'");
        std::string line;
        std::getline(in, line);  // header
        if (dataset.preset.kind == PresetKind::quantum_jumps) {
            while (std::getline(in, line)) {
                const auto last = line.rfind(',');
                pd.trace.push_back(static_cast<std::uint32_t>(std::stoul(line.substr(last + 1))));
            }
        } else {
            const std::size_t n_windows = pd.point.program.windows.size();
            CycleRecord rec;
            std::size_t wi = 0;
            while (std::getline(in, line)) {
                std::istringstream ls(line);
                std::string cycle_s, label, count_s, stamps_s;
                std::getline(ls, cycle_s, ',');
                std::getline(ls, label, ',');
                std::getline(ls, count_s, ',');
                std::getline(ls, stamps_s);
                if (wi == 0) {
                    rec = CycleRecord{};
                    rec.cycle_index = std::stoull(cycle_s);
                    rec.counts.resize(n_windows, 0);
                    rec.stamps_ns.resize(n_windows);
                }
                rec.counts[wi] = static_cast<std::uint32_t>(std::stoul(count_s));
                if (!stamps_s.empty()) {
                    std::istringstream ss(stamps_s);
                    std::string stamp;
                    while (std::getline(ss, stamp, ';'))
                        rec.stamps_ns[wi].push_back(std::stoull(stamp));
                }
                if (++wi == n_windows) {
                    pd.records.push_back(std::move(rec));
                    wi = 0;
                }
            }
        }
        dataset.points.push_back(std::move(pd));
    }
    return dataset;
}

}  // namespace spinshot
