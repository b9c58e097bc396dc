#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

#include "snur/energy.hpp"
#include "snur/network.hpp"
#include "snur/plasticity.hpp"
#include "snur/scene.hpp"
#include "snur/toml.hpp"

namespace snur {

enum class Engine { snn, itoh };

// Everything a run needs, resolved from TOML plus flag overrides. The global
// seed is the only entropy source; per-module streams are derived from it.
struct RunConfig {
    std::uint64_t seed = 0;
    std::string out_dir = "runs";

    SceneSpec scene;
    int scene_count = 20;  // scenes per generated dataset

    EncodeParams encode;
    LifParams lif;
    LateralParams lateral;
    DecisionParams decision;
    InitParams init;
    StdpParams stdp;
    LearnParams learn;

    Engine engine = Engine::snn;
    InferOptions infer_opts;
    double mask_gamma = 0.3;     // coherence threshold for masked accuracy
    double gpu_t_process = 0.1;  // seconds, Eq.-13-style baseline window

    void validate() const {
        scene.validate();
        encode.rate.validate();
        encode.temporal.validate(encode.rate.t_sim);
        encode.population.validate();
        lif.validate();
        lateral.validate();
        decision.validate();
        stdp.validate(lif.dt);
        learn.validate();
        if (scene_count < 1) throw ConfigError("scene_count must be >= 1");
        if (mask_gamma < 0.0 || mask_gamma > 1.0) throw ConfigError("mask_gamma outside [0, 1]");
        if (gpu_t_process < 0.0) throw ConfigError("gpu_t_process must be non-negative");
    }
};

// ---- enum names ------------------------------------------------------------

namespace detail {

template <typename E>
E parse_enum(const std::string& s, std::initializer_list<std::pair<const char*, E>> names,
             const std::string& key) {
    for (const auto& [n, e] : names)
        if (s == n) return e;
    std::string opts;
    for (const auto& [n, e] : names) opts += std::string(opts.empty() ? "" : ", ") + n;
    throw ConfigError("key " + key + ": unknown value '" + s + "' (expected one of: " + opts + ")");
}

}  // namespace detail

inline SceneShape parse_scene_shape(const std::string& s, const std::string& key = "scene.shape") {
    return detail::parse_enum<SceneShape>(s,
                                          {{"gaussian_bump", SceneShape::gaussian_bump},
                                           {"linear_ramp", SceneShape::linear_ramp},
                                           {"superposed_bumps", SceneShape::superposed_bumps}},
                                          key);
}

inline CoherenceProfile parse_coherence_profile(const std::string& s,
                                                const std::string& key = "scene.coherence_profile") {
    return detail::parse_enum<CoherenceProfile>(s,
                                                {{"uniform", CoherenceProfile::uniform},
                                                 {"radial", CoherenceProfile::radial},
                                                 {"patchy", CoherenceProfile::patchy}},
                                                key);
}

inline Engine parse_engine(const std::string& s, const std::string& key = "run.engine") {
    return detail::parse_enum<Engine>(s, {{"snn", Engine::snn}, {"itoh", Engine::itoh}}, key);
}

inline InferMode parse_infer_mode(const std::string& s, const std::string& key = "run.mode") {
    return detail::parse_enum<InferMode>(
        s, {{"one_shot", InferMode::one_shot}, {"propagating", InferMode::propagating}}, key);
}

inline std::string to_string(Engine e) { return e == Engine::snn ? "snn" : "itoh"; }
inline std::string to_string(InferMode m) {
    return m == InferMode::one_shot ? "one_shot" : "propagating";
}
inline std::string to_string(Traversal t) {
    return t == Traversal::raster ? "raster" : "coherence_descending";
}
inline std::string to_string(CoherenceGate g) {
    return g == CoherenceGate::geometric_mean ? "geometric_mean" : "min";
}
inline std::string to_string(RateMode m) {
    return m == RateMode::deterministic ? "deterministic" : "poisson";
}
inline std::string to_string(DecisionRule r) {
    return r == DecisionRule::first_spike ? "first_spike" : "spike_count";
}

// ---- loading ---------------------------------------------------------------

inline RunConfig load_config(const TomlTable& t) {
    RunConfig c;
    c.seed = static_cast<std::uint64_t>(t.get_int("seed", 0));
    c.out_dir = t.get_string("run.out_dir", c.out_dir);

    c.scene.width = static_cast<int>(t.get_int("scene.width", c.scene.width));
    c.scene.height = static_cast<int>(t.get_int("scene.height", c.scene.height));
    c.scene.shape = parse_scene_shape(t.get_string("scene.shape", to_string(c.scene.shape)));
    c.scene.amplitude = t.get_double("scene.amplitude", c.scene.amplitude);
    c.scene.ramp_slope = t.get_double("scene.ramp_slope", c.scene.ramp_slope);
    c.scene.coherence_profile = parse_coherence_profile(
        t.get_string("scene.coherence_profile", to_string(c.scene.coherence_profile)));
    c.scene.coherence_level = t.get_double("scene.coherence_level", c.scene.coherence_level);
    c.scene_count = static_cast<int>(t.get_int("scene.count", c.scene_count));

    c.encode.rate.r_max = t.get_double("encode.rate.r_max", c.encode.rate.r_max);
    c.encode.rate.dt = t.get_double("encode.rate.dt", c.encode.rate.dt);
    c.encode.rate.t_sim = static_cast<int>(t.get_int("encode.rate.t_sim", c.encode.rate.t_sim));
    c.encode.rate.mode = detail::parse_enum<RateMode>(
        t.get_string("encode.rate.mode", to_string(c.encode.rate.mode)),
        {{"deterministic", RateMode::deterministic}, {"poisson", RateMode::poisson}},
        "encode.rate.mode");
    c.encode.temporal.t_ref =
        static_cast<int>(t.get_int("encode.temporal.t_ref", c.encode.temporal.t_ref));
    c.encode.temporal.delta_t =
        static_cast<int>(t.get_int("encode.temporal.delta_t", c.encode.temporal.delta_t));
    c.encode.temporal.grad_max = t.get_double("encode.temporal.grad_max", c.encode.temporal.grad_max);
    c.encode.population.n_total =
        static_cast<int>(t.get_int("encode.population.n_total", c.encode.population.n_total));
    c.encode.population.active_rate =
        t.get_double("encode.population.active_rate", c.encode.population.active_rate);
    c.encode.include_y_gradient =
        t.get_bool("encode.include_y_gradient", c.encode.include_y_gradient);

    c.lif.tau_m = t.get_double("lif.tau_m", c.lif.tau_m);
    c.lif.v_threshold = t.get_double("lif.v_threshold", c.lif.v_threshold);
    c.lif.v_reset = t.get_double("lif.v_reset", c.lif.v_reset);
    c.lif.refractory_steps =
        static_cast<int>(t.get_int("lif.refractory_steps", c.lif.refractory_steps));
    c.lif.dt = t.get_double("lif.dt", c.lif.dt);

    c.lateral.w0 = t.get_double("lateral.w0", c.lateral.w0);
    c.lateral.sigma = t.get_double("lateral.sigma", c.lateral.sigma);
    c.lateral.cutoff_radius = t.get_double("lateral.cutoff_radius", c.lateral.cutoff_radius);
    c.lateral.h_mode = detail::parse_enum<CoherenceGate>(
        t.get_string("lateral.h_mode", to_string(c.lateral.h_mode)),
        {{"geometric_mean", CoherenceGate::geometric_mean}, {"min", CoherenceGate::min}},
        "lateral.h_mode");

    int k_min = static_cast<int>(t.get_int("decision.k_min", c.decision.k_values.front()));
    int k_max = static_cast<int>(t.get_int("decision.k_max", c.decision.k_values.back()));
    if (k_min > 0 || k_max < 0 || k_max - k_min > 32)
        throw ConfigError("decision range must contain 0 and span at most 33 values");
    c.decision.k_values.clear();
    for (int k = k_min; k <= k_max; ++k) c.decision.k_values.push_back(k);
    c.decision.decision_window =
        static_cast<int>(t.get_int("decision.window", c.decision.decision_window));
    c.decision.rule = detail::parse_enum<DecisionRule>(
        t.get_string("decision.rule", to_string(c.decision.rule)),
        {{"first_spike", DecisionRule::first_spike}, {"spike_count", DecisionRule::spike_count}},
        "decision.rule");

    c.init.w_init_max = t.get_double("init.w_init_max", c.init.w_init_max);
    c.init.i_target_enc = t.get_double("init.i_target_enc", c.init.i_target_enc);
    c.init.i_target_dec = t.get_double("init.i_target_dec", c.init.i_target_dec);
    c.init.dec_bias_ratio = t.get_double("init.dec_bias_ratio", c.init.dec_bias_ratio);
    c.init.w_prop = t.get_double("init.w_prop", c.init.w_prop);
    c.init.w_prop_cap = t.get_double("init.w_prop_cap", c.init.w_prop_cap);

    c.stdp.a_plus = t.get_double("stdp.a_plus", c.stdp.a_plus);
    c.stdp.a_minus = t.get_double("stdp.a_minus", c.stdp.a_minus);
    c.stdp.tau_plus = t.get_double("stdp.tau_plus", c.stdp.tau_plus);
    c.stdp.tau_minus = t.get_double("stdp.tau_minus", c.stdp.tau_minus);
    c.stdp.window = static_cast<int>(t.get_int("stdp.window", c.stdp.window));

    c.learn.eta1 = t.get_double("learn.eta1", c.learn.eta1);
    c.learn.eta2 = t.get_double("learn.eta2", c.learn.eta2);
    c.learn.beta = t.get_double("learn.beta", c.learn.beta);
    c.learn.lambda = t.get_double("learn.lambda", c.learn.lambda);
    c.learn.epochs = static_cast<int>(t.get_int("learn.epochs", c.learn.epochs));
    c.learn.batch = static_cast<int>(t.get_int("learn.batch", c.learn.batch));
    c.learn.w_min = t.get_double("learn.w_min", c.learn.w_min);
    c.learn.w_max = t.get_double("learn.w_max", c.learn.w_max);

    c.engine = parse_engine(t.get_string("run.engine", to_string(c.engine)));
    c.infer_opts.mode = parse_infer_mode(t.get_string("run.mode", to_string(c.infer_opts.mode)));
    c.infer_opts.traversal = detail::parse_enum<Traversal>(
        t.get_string("run.traversal", to_string(c.infer_opts.traversal)),
        {{"raster", Traversal::raster}, {"coherence_descending", Traversal::coherence_descending}},
        "run.traversal");
    c.mask_gamma = t.get_double("run.mask_gamma", c.mask_gamma);
    c.gpu_t_process = t.get_double("run.gpu_t_process", c.gpu_t_process);

    auto leftover = t.unconsumed();
    if (!leftover.empty()) {
        std::string msg = "unknown config keys:";
        for (const auto& k : leftover) msg += " " + k;
        throw ConfigError(msg);
    }
    try {
        c.validate();
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return c;
}

// derived per-module seed streams; the config seed is the only entropy source
inline constexpr std::uint64_t kSeedStreamScene = 0x10;
inline constexpr std::uint64_t kSeedStreamEncode = 0x20;
inline constexpr std::uint64_t kSeedStreamNetwork = 0x30;
inline constexpr std::uint64_t kSeedStreamLearn = 0x40;

inline void apply_seed(RunConfig& c) {
    c.scene.rng_seed = mix_seed(c.seed, kSeedStreamScene);
    c.encode.rate.rng_seed = mix_seed(c.seed, kSeedStreamEncode);
    c.learn.rng_seed = mix_seed(c.seed, kSeedStreamLearn);
}

// ---- canonical form and hash -----------------------------------------------

// one line per field, fixed order; doubles printed round-trip exact
inline std::string canonical_config(const RunConfig& c) {
    std::string out;
    auto put = [&](const std::string& key, const std::string& val) {
        out += key + "=" + val + "\n";
    };
    auto putd = [&](const std::string& key, double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        put(key, buf);
    };
    auto puti = [&](const std::string& key, std::int64_t v) { put(key, std::to_string(v)); };

    puti("seed", static_cast<std::int64_t>(c.seed));
    puti("scene.width", c.scene.width);
    puti("scene.height", c.scene.height);
    put("scene.shape", to_string(c.scene.shape));
    putd("scene.amplitude", c.scene.amplitude);
    putd("scene.ramp_slope", c.scene.ramp_slope);
    put("scene.coherence_profile", to_string(c.scene.coherence_profile));
    putd("scene.coherence_level", c.scene.coherence_level);
    puti("scene.count", c.scene_count);
    putd("encode.rate.r_max", c.encode.rate.r_max);
    putd("encode.rate.dt", c.encode.rate.dt);
    puti("encode.rate.t_sim", c.encode.rate.t_sim);
    put("encode.rate.mode", to_string(c.encode.rate.mode));
    puti("encode.temporal.t_ref", c.encode.temporal.t_ref);
    puti("encode.temporal.delta_t", c.encode.temporal.delta_t);
    putd("encode.temporal.grad_max", c.encode.temporal.grad_max);
    puti("encode.population.n_total", c.encode.population.n_total);
    putd("encode.population.active_rate", c.encode.population.active_rate);
    put("encode.include_y_gradient", c.encode.include_y_gradient ? "true" : "false");
    putd("lif.tau_m", c.lif.tau_m);
    putd("lif.v_threshold", c.lif.v_threshold);
    putd("lif.v_reset", c.lif.v_reset);
    puti("lif.refractory_steps", c.lif.refractory_steps);
    putd("lif.dt", c.lif.dt);
    putd("lateral.w0", c.lateral.w0);
    putd("lateral.sigma", c.lateral.sigma);
    putd("lateral.cutoff_radius", c.lateral.cutoff_radius);
    put("lateral.h_mode", to_string(c.lateral.h_mode));
    puti("decision.k_min", c.decision.k_values.front());
    puti("decision.k_max", c.decision.k_values.back());
    puti("decision.window", c.decision.decision_window);
    put("decision.rule", to_string(c.decision.rule));
    putd("init.w_init_max", c.init.w_init_max);
    putd("init.i_target_enc", c.init.i_target_enc);
    putd("init.i_target_dec", c.init.i_target_dec);
    putd("init.dec_bias_ratio", c.init.dec_bias_ratio);
    putd("init.w_prop", c.init.w_prop);
    putd("init.w_prop_cap", c.init.w_prop_cap);
    putd("stdp.a_plus", c.stdp.a_plus);
    putd("stdp.a_minus", c.stdp.a_minus);
    putd("stdp.tau_plus", c.stdp.tau_plus);
    putd("stdp.tau_minus", c.stdp.tau_minus);
    puti("stdp.window", c.stdp.window);
    putd("learn.eta1", c.learn.eta1);
    putd("learn.eta2", c.learn.eta2);
    putd("learn.beta", c.learn.beta);
    putd("learn.lambda", c.learn.lambda);
    puti("learn.epochs", c.learn.epochs);
    puti("learn.batch", c.learn.batch);
    putd("learn.w_min", c.learn.w_min);
    putd("learn.w_max", c.learn.w_max);
    // run.* execution options (out_dir, engine, mode, traversal, mask_gamma,
    // gpu_t_process) are deliberately absent: they choose what to compute or
    // report over the same generated experiment, so commands with different
    // engines still share one run directory
    return out;
}

// FNV-1a over the canonical form; names the run directory
inline std::uint64_t config_hash(const RunConfig& c) {
    std::string b = canonical_config(c);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : b) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string config_hash_hex(const RunConfig& c) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(config_hash(c)));
    return buf;
}

}  // namespace snur
