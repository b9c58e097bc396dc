// snur: spiking phase-unwrapping batch CLI.
//
// Commands: gen, encode, train, unwrap, eval, report. Every command resolves
// a RunConfig (defaults <- TOML <- flags), works inside a run directory named
// by the config hash, and is deterministic given config + seed.
//
// Exit codes: 0 success, 2 config error, 3 domain error, 4 I/O error.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "snur/config.hpp"
#include "snur/encoding.hpp"
#include "snur/energy.hpp"
#include "snur/network.hpp"
#include "snur/plasticity.hpp"
#include "snur/raster_io.hpp"
#include "snur/scene.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace snur;

namespace {

constexpr const char* kSchemaVersion = "1";

// ---- config resolution ------------------------------------------------------

struct CommonFlags {
    std::string config_path;
    std::optional<std::int64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> engine;
    std::optional<std::string> mode;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "TOML config file");
    cmd->add_option("--seed", f.seed, "global RNG seed (the only entropy source)");
    cmd->add_option("--out", f.out, "parent directory for run outputs");
    cmd->add_option("--engine", f.engine, "unwrapping engine: snn | itoh");
    cmd->add_option("--mode", f.mode, "snn inference mode: one_shot | propagating");
}

RunConfig resolve_config(const CommonFlags& f) {
    TomlTable table =
        f.config_path.empty() ? TomlTable::parse("") : TomlTable::parse_file(f.config_path);
    RunConfig c = load_config(table);
    if (f.seed) c.seed = static_cast<std::uint64_t>(*f.seed);
    if (f.out) c.out_dir = *f.out;
    if (f.engine) c.engine = parse_engine(*f.engine, "--engine");
    if (f.mode) c.infer_opts.mode = parse_infer_mode(*f.mode, "--mode");
    return c;
}

fs::path run_dir(const RunConfig& c) { return fs::path(c.out_dir) / config_hash_hex(c); }

fs::path prepare_run_dir(const RunConfig& c) {
    fs::path dir = run_dir(c);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create run directory " + dir.string() + ": " + ec.message());
    std::ofstream f(dir / "config.canonical");
    if (!f) throw IoError("cannot write " + (dir / "config.canonical").string());
    f << canonical_config(c);
    return dir;
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f << j.dump(2) << "\n";
    if (!f) throw IoError("write failed: " + path.string());
}

json read_json(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open for reading: " + path.string());
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw FormatError(FormatError::Kind::BadField,
                          path.string() + ": " + std::string(e.what()));
    }
    return j;
}

std::string scene_file(int index, const char* role) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "scene_%03d_%s.snur", index, role);
    return buf;
}

json base_manifest(const RunConfig& c, const char* command) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = command;
    j["config_hash"] = config_hash_hex(c);
    j["seed"] = c.seed;
    return j;
}

// ---- shared dataset loading -------------------------------------------------

struct SceneFiles {
    PhaseRaster wrapped;
    CoherenceRaster coherence;
    WrapCountRaster truth;
};

SceneFiles load_scene_files(const fs::path& dir, int index) {
    SceneFiles s;
    s.wrapped = read_raster_as<PhaseRaster>(dir / scene_file(index, "wrapped"));
    s.coherence = read_raster_as<CoherenceRaster>(dir / scene_file(index, "coherence"));
    s.truth = read_raster_as<WrapCountRaster>(dir / scene_file(index, "ktruth"));
    return s;
}

int dataset_size(const fs::path& dir) {
    json manifest = read_json(dir / "manifest.json");
    if (!manifest.contains("scenes") || !manifest["scenes"].is_array())
        throw FormatError(FormatError::Kind::BadField, "manifest.json has no scene list");
    return static_cast<int>(manifest["scenes"].size());
}

NetworkTopology build_from_config(const RunConfig& c) {
    return build_network(c.scene.height, c.scene.width, c.encode, c.lif, c.lateral, c.decision,
                         c.init, mix_seed(c.seed, kSeedStreamNetwork));
}

NetworkTopology load_or_build_topology(const RunConfig& c, const fs::path& dir,
                                       const std::string& checkpoint) {
    fs::path path = checkpoint.empty() ? dir / "checkpoint.snut" : fs::path(checkpoint);
    if (fs::exists(path)) return read_topology(path);
    if (!checkpoint.empty()) throw IoError("checkpoint not found: " + path.string());
    return build_from_config(c);
}

EnergyLedger ledger_of(const InferResult& r, const NetworkTopology& topo, int t_sim) {
    EnergyLedger ledger;
    std::uint64_t spikes =
        r.encoder_spikes + r.proc_record.total_spikes() + r.dec_record.total_spikes();
    ledger.add_run(spikes, topo.total_neurons(), static_cast<std::uint64_t>(t_sim));
    return ledger;
}

json energy_json(const RunConfig& c, const InferResult& r, const NetworkTopology& topo,
                 double wall_seconds) {
    const int T = c.encode.rate.t_sim;
    HardwareProfile hw;
    EnergyLedger ledger = ledger_of(r, topo, T);
    GpuBaseline gpu{300.0, c.gpu_t_process > 0.0 ? c.gpu_t_process : wall_seconds};

    ComplexityReport cx;
    cx.m = c.scene.height;
    cx.n = c.scene.width;
    cx.t_steps = T;
    double neurons = static_cast<double>(topo.total_neurons());
    cx.mean_rate_hz = ledger.spikes / (neurons * T * c.lif.dt);
    cx.spikes_per_neuron = ledger.spikes / neurons;
    cx.mean_fan_in =
        static_cast<double>(topo.enc_to_proc.size() + topo.lateral.size() + topo.proc_to_dec.size()) /
        neurons;
    cx.op_count_snn = r.synapse_events;
    cx.op_count_classical = classical_op_estimate(cx.m, cx.n);

    EfficiencyReport rep = efficiency_report(ledger.joules(hw), gpu_energy(gpu), cx);

    json j;
    j["schema_version"] = kSchemaVersion;
    j["hardware"] = hw.label;
    j["spikes"] = ledger.spikes;
    j["neuron_steps"] = ledger.neuron_steps;
    j["snn_joules"] = rep.snn_joules;
    j["gpu_joules"] = rep.gpu_joules;
    j["gpu_watts"] = gpu.p_gpu;
    j["gpu_t_process_s"] = gpu.t_process;
    j["ratio_gpu_over_snn"] = rep.ratio;
    j["ratio_unbounded"] = rep.ratio_unbounded;
    j["caveat"] = rep.caveat;
    j["complexity"] = {{"m", cx.m},
                       {"n", cx.n},
                       {"t_steps", cx.t_steps},
                       {"mean_rate_hz", cx.mean_rate_hz},
                       {"mean_fan_in", cx.mean_fan_in},
                       {"spikes_per_neuron", cx.spikes_per_neuron},
                       {"op_count_snn", cx.op_count_snn},
                       {"op_count_formula", cx.formula_estimate(c.lif.dt)},
                       {"op_count_classical", cx.op_count_classical}};
    return j;
}

json metrics_json(const MetricsReport& m, double mask_gamma) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["accuracy"] = m.accuracy;
    j["rmse_rad"] = m.rmse;
    j["mask_gamma"] = mask_gamma;
    if (m.masked_accuracy)
        j["masked_accuracy"] = *m.masked_accuracy;
    else
        j["masked_accuracy"] = nullptr;
    json conf = json::array();
    for (const auto& [pair, count] : m.confusion)
        conf.push_back({{"true", pair.first}, {"pred", pair.second}, {"count", count}});
    j["confusion"] = conf;
    return j;
}

// ---- commands ---------------------------------------------------------------

int cmd_gen(const RunConfig& c) {
    fs::path dir = prepare_run_dir(c);
    json manifest = base_manifest(c, "gen");
    manifest["width"] = c.scene.width;
    manifest["height"] = c.scene.height;
    manifest["scenes"] = json::array();

    for (int i = 0; i < c.scene_count; ++i) {
        SceneSpec spec = c.scene;
        spec.rng_seed = mix_seed(c.scene.rng_seed, static_cast<std::uint64_t>(i));
        Scene s = synthesize_scene(spec);
        write_raster(s.absolute, dir / scene_file(i, "absolute"));
        write_raster(s.wrapped, dir / scene_file(i, "wrapped"));
        write_raster(s.coherence, dir / scene_file(i, "coherence"));
        write_raster(s.truth, dir / scene_file(i, "ktruth"));
        if (i == 0) write_pgm(s.wrapped, dir / "scene_000_wrapped.pgm");
        manifest["scenes"].push_back({{"index", i},
                                      {"seed", spec.rng_seed},
                                      {"wrapped", scene_file(i, "wrapped")},
                                      {"coherence", scene_file(i, "coherence")},
                                      {"ktruth", scene_file(i, "ktruth")},
                                      {"absolute", scene_file(i, "absolute")}});
    }
    write_json(manifest, dir / "manifest.json");
    std::cout << dir.string() << "\n";
    return 0;
}

int cmd_encode(const RunConfig& c, int scene_index) {
    fs::path dir = run_dir(c);
    SceneFiles s = load_scene_files(dir, scene_index);
    EncodedScene enc = encode_scene(s.wrapped, s.coherence, c.encode);

    std::vector<SpikeTrain> trains;
    trains.reserve(enc.channel_count());
    for (std::size_t ch = 0; ch < enc.channel_count(); ++ch) trains.push_back(enc.channel(ch));
    char name[64];
    std::snprintf(name, sizeof(name), "scene_%03d_spikes.csv", scene_index);
    write_spike_csv(trains, dir / name);

    std::uint64_t channel_spikes = 0;
    for (const auto& t : trains) channel_spikes += t.count();
    double n = static_cast<double>(enc.channel_count());
    double t_total = c.encode.rate.t_sim * c.encode.rate.dt;
    std::size_t active = 0;
    for (const auto& t : trains)
        if (!t.times.empty()) ++active;

    json j = base_manifest(c, "encode");
    j["scene"] = scene_index;
    j["channels"] = enc.channel_count();
    j["total_spikes"] = enc.total_spikes();  // includes the coherence population
    j["channel_spikes"] = channel_spikes;
    j["mean_rate_hz"] = channel_spikes / (n * t_total);
    j["spikes_per_neuron"] = channel_spikes / n;
    j["active_fraction"] = active / n;
    std::snprintf(name, sizeof(name), "scene_%03d_encode.json", scene_index);
    write_json(j, dir / name);
    std::cout << (dir / name).string() << "\n";
    return 0;
}

int count_trace_epochs(const fs::path& csv) {
    std::ifstream f(csv);
    if (!f) throw IoError("cannot open " + csv.string());
    std::string line;
    int n = -1;  // skip the header
    while (std::getline(f, line))
        if (!line.empty()) ++n;
    return std::max(n, 0);
}

int cmd_train(const RunConfig& c, std::optional<int> epochs_flag, bool resume) {
    fs::path dir = run_dir(c);
    int n_scenes = dataset_size(dir);

    std::vector<TrainingScene> dataset;
    dataset.reserve(n_scenes);
    for (int i = 0; i < n_scenes; ++i) {
        SceneFiles s = load_scene_files(dir, i);
        dataset.push_back({std::move(s.wrapped), std::move(s.coherence), std::move(s.truth)});
    }

    fs::path ckpt = dir / "checkpoint.snut";
    fs::path trace_csv = dir / "training_trace.csv";
    NetworkTopology topo;
    int start_epoch = 0;
    if (resume) {
        if (!fs::exists(ckpt)) throw IoError("cannot resume: no checkpoint at " + ckpt.string());
        topo = read_topology(ckpt);
        start_epoch = fs::exists(trace_csv) ? count_trace_epochs(trace_csv) : 0;
    } else {
        topo = build_from_config(c);
        write_training_trace_csv(TrainingTrace{}, trace_csv);  // header only
    }

    int epochs = epochs_flag.value_or(c.learn.epochs);
    TrainParams params{c.stdp, c.learn};
    TrainingTrace trace;
    if (epochs > 0) trace = train(dataset, topo, params, start_epoch, epochs);
    write_training_trace_csv(trace, trace_csv, /*append=*/true);
    write_topology(topo, ckpt);

    json j = base_manifest(c, "train");
    j["scenes"] = n_scenes;
    j["start_epoch"] = start_epoch;
    j["epochs_run"] = epochs;
    j["checkpoint"] = "checkpoint.snut";
    j["trace"] = "training_trace.csv";
    j["topology_hash"] = topology_hash(topo);
    if (!trace.epochs.empty()) {
        j["final_energy"] = trace.epochs.back().energy;
        j["final_accuracy"] = trace.epochs.back().accuracy;
    }
    write_json(j, dir / "train_report.json");
    std::cout << ckpt.string() << "\n";
    return 0;
}

int cmd_unwrap(const RunConfig& c, int scene_index, const std::string& checkpoint) {
    fs::path dir = run_dir(c);
    SceneFiles s = load_scene_files(dir, scene_index);
    char name[64];

    if (c.engine == Engine::itoh) {
        auto residues = detect_residues(s.wrapped);
        if (!residues.empty()) {
            std::cerr << "residues: " << residues.size() << "\n";
            return 3;
        }
        PhaseRaster phi = itoh_unwrap(s.wrapped, 0, 0);
        WrapCountRaster k = wrap_counts(phi, s.wrapped);
        WrapCountRaster k_cmp = counts_with_offset_removed(k, s.truth);
        std::snprintf(name, sizeof(name), "scene_%03d_k_itoh.snur", scene_index);
        write_raster(k, dir / name);
        std::snprintf(name, sizeof(name), "scene_%03d_phi_itoh.snur", scene_index);
        write_raster(phi, dir / name);
        MetricsReport m = evaluate(k_cmp, s.truth, s.coherence, c.mask_gamma);
        std::snprintf(name, sizeof(name), "scene_%03d_metrics.json", scene_index);
        write_json(metrics_json(m, c.mask_gamma), dir / name);
        std::cout << "accuracy " << m.accuracy << "\n";
        return 0;
    }

    NetworkTopology topo = load_or_build_topology(c, dir, checkpoint);
    if (topo.width != s.wrapped.width || topo.height != s.wrapped.height)
        throw InvalidSpec("checkpoint grid does not match the scene");

    auto t0 = std::chrono::steady_clock::now();
    InferResult r = infer(s.wrapped, s.coherence, topo, c.infer_opts);
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    PhaseRaster phi = PhaseRaster::filled(s.wrapped.width, s.wrapped.height, PhaseKind::absolute);
    for (std::size_t i = 0; i < phi.values.size(); ++i)
        phi.values[i] = s.wrapped.values[i] + kTwoPi * r.k.values[i];

    std::snprintf(name, sizeof(name), "scene_%03d_k_snn.snur", scene_index);
    write_raster(r.k, dir / name);
    std::snprintf(name, sizeof(name), "scene_%03d_phi_snn.snur", scene_index);
    write_raster(phi, dir / name);
    std::snprintf(name, sizeof(name), "scene_%03d_trace.jsonl", scene_index);
    write_trace_jsonl(r.trace, dir / name);

    MetricsReport m = evaluate(r.k, s.truth, s.coherence, c.mask_gamma);
    std::snprintf(name, sizeof(name), "scene_%03d_metrics.json", scene_index);
    write_json(metrics_json(m, c.mask_gamma), dir / name);

    std::snprintf(name, sizeof(name), "scene_%03d_energy.json", scene_index);
    write_json(energy_json(c, r, topo, wall), dir / name);

    auto hist = decision_histogram(r.trace);
    std::cout << "accuracy " << m.accuracy << ", undecided " << hist.no_decision << "\n";
    return 0;
}

int cmd_eval(const RunConfig& c, int scene_index, const std::string& pred_path) {
    fs::path dir = run_dir(c);
    char name[64];
    fs::path pred = pred_path;
    if (pred.empty()) {
        std::snprintf(name, sizeof(name), "scene_%03d_k_%s.snur", scene_index,
                      c.engine == Engine::snn ? "snn" : "itoh");
        pred = dir / name;
    }
    WrapCountRaster k = read_raster_as<WrapCountRaster>(pred);
    SceneFiles s = load_scene_files(dir, scene_index);
    WrapCountRaster k_cmp = counts_with_offset_removed(k, s.truth);
    MetricsReport m = evaluate(k_cmp, s.truth, s.coherence, c.mask_gamma);
    std::snprintf(name, sizeof(name), "scene_%03d_metrics.json", scene_index);
    write_json(metrics_json(m, c.mask_gamma), dir / name);
    std::cout << "accuracy " << m.accuracy << ", rmse " << m.rmse << "\n";
    return 0;
}

int cmd_report(const RunConfig& c, int scene_index) {
    fs::path dir = run_dir(c);
    char name[64];
    std::snprintf(name, sizeof(name), "scene_%03d_metrics.json", scene_index);
    fs::path metrics_path = dir / name;
    std::snprintf(name, sizeof(name), "scene_%03d_energy.json", scene_index);
    fs::path energy_path = dir / name;

    std::vector<std::string> missing;
    if (!fs::exists(metrics_path)) missing.push_back(metrics_path.string());
    if (!fs::exists(energy_path)) missing.push_back(energy_path.string());
    if (!missing.empty()) {
        for (const auto& p : missing) std::cerr << "missing artifact: " << p << "\n";
        return 4;
    }

    json report = base_manifest(c, "report");
    report["scene"] = scene_index;
    report["metrics"] = read_json(metrics_path);
    report["energy"] = read_json(energy_path);
    write_json(report, dir / "report.json");

    // the text rendering reuses the JSON values verbatim, so the two variants
    // cannot disagree
    std::ofstream txt(dir / "report.txt", std::ios::trunc);
    if (!txt) throw IoError("cannot write " + (dir / "report.txt").string());
    txt << "schema_version " << report["schema_version"].get<std::string>() << "\n";
    txt << "config_hash " << report["config_hash"].get<std::string>() << "\n";
    txt << "scene " << report["scene"].dump() << "\n";
    txt << "accuracy " << report["metrics"]["accuracy"].dump() << "\n";
    txt << "masked_accuracy " << report["metrics"]["masked_accuracy"].dump() << "\n";
    txt << "rmse_rad " << report["metrics"]["rmse_rad"].dump() << "\n";
    txt << "snn_joules " << report["energy"]["snn_joules"].dump() << "\n";
    txt << "gpu_joules " << report["energy"]["gpu_joules"].dump() << "\n";
    txt << "ratio_gpu_over_snn " << report["energy"]["ratio_gpu_over_snn"].dump() << "\n";
    txt << "op_count_snn " << report["energy"]["complexity"]["op_count_snn"].dump() << "\n";
    txt << "op_count_formula " << report["energy"]["complexity"]["op_count_formula"].dump() << "\n";
    txt << "caveat " << report["energy"]["caveat"].get<std::string>() << "\n";
    std::cout << (dir / "report.json").string() << "\n";
    return 0;
}

// shorthand scene shapes accepted on the command line
SceneShape parse_shape_flag(const std::string& s) {
    if (s == "ramp") return SceneShape::linear_ramp;
    if (s == "bump") return SceneShape::gaussian_bump;
    if (s == "bumps") return SceneShape::superposed_bumps;
    return parse_scene_shape(s, "--shape");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spiking-network phase unwrapping toolkit"};
    app.require_subcommand(1);

    CommonFlags common;
    std::optional<std::string> shape;
    std::optional<int> size, width, height, count;
    std::optional<double> coherence, amplitude, slope;
    std::optional<int> epochs;
    bool resume = false;
    int scene_index = 0;
    std::string checkpoint, pred_path;

    auto add_scene_flags = [&](CLI::App* cmd) {
        cmd->add_option("--shape", shape, "scene shape: ramp | bump | bumps (or full names)");
        cmd->add_option("--size", size, "square scene size (sets width and height)");
        cmd->add_option("--width", width, "scene width");
        cmd->add_option("--height", height, "scene height");
        cmd->add_option("--coherence", coherence, "uniform coherence level in [0, 1]");
        cmd->add_option("--amplitude", amplitude, "peak amplitude, radians");
        cmd->add_option("--slope", slope, "ramp slope, radians per pixel");
        cmd->add_option("--count", count, "number of scenes to generate");
    };

    CLI::App* gen = app.add_subcommand("gen", "synthesize scenes into the run directory");
    add_common_flags(gen, common);
    add_scene_flags(gen);

    CLI::App* encode = app.add_subcommand("encode", "encode a generated scene into spike trains");
    add_common_flags(encode, common);
    add_scene_flags(encode);
    encode->add_option("--scene", scene_index, "scene index within the run");

    CLI::App* train_cmd = app.add_subcommand("train", "train the network on the generated dataset");
    add_common_flags(train_cmd, common);
    add_scene_flags(train_cmd);
    train_cmd->add_option("--epochs", epochs, "epochs to run (overrides config)");
    train_cmd->add_flag("--resume", resume, "continue from the existing checkpoint");

    CLI::App* unwrap = app.add_subcommand("unwrap", "unwrap one scene with snn or itoh engine");
    add_common_flags(unwrap, common);
    add_scene_flags(unwrap);
    unwrap->add_option("--scene", scene_index, "scene index within the run");
    unwrap->add_option("--checkpoint", checkpoint, "topology snapshot to load (snn engine)");

    CLI::App* eval = app.add_subcommand("eval", "score a k raster against the stored truth");
    add_common_flags(eval, common);
    add_scene_flags(eval);
    eval->add_option("--scene", scene_index, "scene index within the run");
    eval->add_option("--pred", pred_path, "k raster to score (defaults to the engine's output)");

    CLI::App* report = app.add_subcommand("report", "merge metrics and energy into one report");
    add_common_flags(report, common);
    add_scene_flags(report);
    report->add_option("--scene", scene_index, "scene index within the run");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        RunConfig c = resolve_config(common);
        if (shape) c.scene.shape = parse_shape_flag(*shape);
        if (size) c.scene.width = c.scene.height = *size;
        if (width) c.scene.width = *width;
        if (height) c.scene.height = *height;
        if (coherence) {
            c.scene.coherence_level = *coherence;
            c.scene.coherence_profile = CoherenceProfile::uniform;
        }
        if (amplitude) c.scene.amplitude = *amplitude;
        if (slope) c.scene.ramp_slope = *slope;
        if (count) c.scene_count = *count;
        try {
            c.validate();
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
        apply_seed(c);

        if (gen->parsed()) return cmd_gen(c);
        if (encode->parsed()) return cmd_encode(c, scene_index);
        if (train_cmd->parsed()) return cmd_train(c, epochs, resume);
        if (unwrap->parsed()) return cmd_unwrap(c, scene_index, checkpoint);
        if (eval->parsed()) return cmd_eval(c, scene_index, pred_path);
        if (report->parsed()) return cmd_report(c, scene_index);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
