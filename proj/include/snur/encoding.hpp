#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "snur/common.hpp"
#include "snur/raster.hpp"

namespace snur {

// Ordered spike times of one neuron on the shared discrete clock.
struct SpikeTrain {
    std::uint32_t neuron_id = 0;
    std::vector<int> times;

    std::size_t count() const { return times.size(); }
};

enum class RateMode { deterministic, poisson };

struct RateParams {
    double r_max = 100.0;   // Hz
    double dt = 1e-3;       // seconds per timestep
    int t_sim = 100;        // timesteps
    RateMode mode = RateMode::deterministic;
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (r_max * dt > 1.0) throw InvalidSpec("r_max*dt must be <= 1 (one spike per step)");
        if (t_sim < 1) throw InvalidSpec("t_sim must be >= 1");
    }
};

struct TemporalParams {
    int t_ref = 50;
    int delta_t = 40;
    double grad_max = kPi;  // normalizer for |grad phi_w|

    void validate(int t_sim) const {
        if (grad_max <= 0.0) throw InvalidSpec("grad_max must be positive");
        if (t_ref - delta_t < 0 || t_ref + delta_t >= t_sim)
            throw InvalidSpec("temporal coding window [t_ref-dt, t_ref+dt] must fit in t_sim");
    }
};

struct PopulationParams {
    int n_total = 10;          // neurons per pixel population
    double active_rate = 100;  // Hz for active members

    void validate() const {
        if (n_total < 1) throw InvalidSpec("n_total must be >= 1");
    }
};

// ---- gradients -------------------------------------------------------------

enum class Axis { x, y };

// Forward difference W(phi[i+1]-phi[i]) along the axis; the last column/row
// has no forward neighbor and is set to 0.
inline std::vector<double> wrapped_gradient(const PhaseRaster& wrapped, Axis axis) {
    if (wrapped.kind != PhaseKind::wrapped)
        throw InvalidRaster("wrapped_gradient expects a wrapped raster");
    std::vector<double> g(wrapped.values.size(), 0.0);
    for (int y = 0; y < wrapped.height; ++y)
        for (int x = 0; x < wrapped.width; ++x) {
            double d = 0.0;
            if (axis == Axis::x && x + 1 < wrapped.width)
                d = wrap_to_pi(wrapped.at(x + 1, y) - wrapped.at(x, y));
            else if (axis == Axis::y && y + 1 < wrapped.height)
                d = wrap_to_pi(wrapped.at(x, y + 1) - wrapped.at(x, y));
            g[static_cast<std::size_t>(y) * wrapped.width + x] = d;
        }
    return g;
}

// ---- encoders --------------------------------------------------------------

// Evenly spaced spikes at steps floor(n / (rate*dt)), n = 1, 2, ...
inline std::vector<int> regular_train(double rate_hz, double dt, int t_sim) {
    std::vector<int> times;
    double per_step = rate_hz * dt;
    if (per_step <= 0.0) return times;
    for (int n = 1;; ++n) {
        int t = static_cast<int>(std::floor(n / per_step));
        if (t >= t_sim) break;
        if (!times.empty() && times.back() == t) continue;
        times.push_back(t);
    }
    return times;
}

// Rate code: r = r_max * |phi_w + pi| / 2pi. Deterministic mode emits evenly
// spaced spikes; poisson mode draws per-step Bernoulli(r*dt) from a
// per-neuron stream.
inline SpikeTrain encode_rate_value(double phi_w, const RateParams& p, std::uint32_t neuron_id) {
    SpikeTrain train;
    train.neuron_id = neuron_id;
    double rate = p.r_max * std::abs(phi_w + kPi) / kTwoPi;
    if (p.mode == RateMode::deterministic) {
        train.times = regular_train(rate, p.dt, p.t_sim);
    } else {
        double per_step = rate * p.dt;
        std::mt19937_64 rng(mix_seed(p.rng_seed, neuron_id));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int t = 0; t < p.t_sim; ++t)
            if (u(rng) < per_step) train.times.push_back(t);
    }
    return train;
}

inline std::vector<SpikeTrain> encode_rate(const PhaseRaster& wrapped, const RateParams& p) {
    if (wrapped.kind != PhaseKind::wrapped) throw InvalidRaster("encode_rate expects wrapped phase");
    p.validate();
    std::vector<SpikeTrain> out;
    out.reserve(wrapped.values.size());
    for (std::size_t i = 0; i < wrapped.values.size(); ++i)
        out.push_back(encode_rate_value(wrapped.values[i], p, static_cast<std::uint32_t>(i)));
    return out;
}

// Temporal code: exactly one spike at round(t_ref - delta_t * g / grad_max),
// with g clamped to [-grad_max, grad_max] first.
inline int encode_temporal_value(double g, const TemporalParams& p) {
    double gc = std::clamp(g, -p.grad_max, p.grad_max);
    return static_cast<int>(std::llround(p.t_ref - p.delta_t * gc / p.grad_max));
}

inline std::vector<SpikeTrain> encode_temporal(const std::vector<double>& gradient,
                                               const TemporalParams& p, int t_sim) {
    p.validate(t_sim);
    std::vector<SpikeTrain> out;
    out.reserve(gradient.size());
    for (std::size_t i = 0; i < gradient.size(); ++i) {
        SpikeTrain train;
        train.neuron_id = static_cast<std::uint32_t>(i);
        train.times.push_back(encode_temporal_value(gradient[i], p));
        out.push_back(std::move(train));
    }
    return out;
}

// Population code: floor(n_total * gamma) members fire at active_rate with
// deterministic spacing, the rest stay silent.
inline int population_active_count(double gamma, const PopulationParams& p) {
    return static_cast<int>(std::floor(p.n_total * gamma));
}

inline std::vector<std::vector<SpikeTrain>> encode_population(const CoherenceRaster& coherence,
                                                              const PopulationParams& p,
                                                              const RateParams& rate) {
    p.validate();
    std::vector<int> active_times = regular_train(p.active_rate, rate.dt, rate.t_sim);
    std::vector<std::vector<SpikeTrain>> out;
    out.reserve(coherence.values.size());
    for (std::size_t i = 0; i < coherence.values.size(); ++i) {
        int n_active = population_active_count(coherence.values[i], p);
        std::vector<SpikeTrain> pop(p.n_total);
        for (int n = 0; n < p.n_total; ++n) {
            pop[n].neuron_id = static_cast<std::uint32_t>(i * p.n_total + n);
            if (n < n_active) pop[n].times = active_times;
        }
        out.push_back(std::move(pop));
    }
    return out;
}

// ---- whole-scene encoding --------------------------------------------------

struct EncodeParams {
    RateParams rate;
    TemporalParams temporal;
    PopulationParams population;
    bool include_y_gradient = false;  // adds a fourth map (4MN channels)
};

// Channel layout: [phase MN | x-gradient MN | (y-gradient MN) | coherence MN].
// The coherence map exposes one summary neuron per pixel (the union of its
// population's trains); the full population is retained for spike accounting.
struct EncodedScene {
    int width = 0;
    int height = 0;
    bool has_y_gradient = false;
    std::vector<SpikeTrain> phase;
    std::vector<SpikeTrain> gradient_x;
    std::vector<SpikeTrain> gradient_y;
    std::vector<SpikeTrain> coherence_summary;
    std::vector<std::vector<SpikeTrain>> population;

    std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
    std::size_t channel_count() const { return pixels() * (has_y_gradient ? 4 : 3); }

    const SpikeTrain& channel(std::size_t idx) const {
        std::size_t mn = pixels();
        if (idx < mn) return phase[idx];
        idx -= mn;
        if (idx < mn) return gradient_x[idx];
        idx -= mn;
        if (has_y_gradient) {
            if (idx < mn) return gradient_y[idx];
            idx -= mn;
        }
        return coherence_summary[idx];
    }

    // total including the internal population, for energy/sparsity accounting
    std::uint64_t total_spikes() const {
        std::uint64_t n = 0;
        for (const auto& t : phase) n += t.count();
        for (const auto& t : gradient_x) n += t.count();
        for (const auto& t : gradient_y) n += t.count();
        for (const auto& pop : population)
            for (const auto& t : pop) n += t.count();
        return n;
    }
};

inline EncodedScene encode_scene(const PhaseRaster& wrapped, const CoherenceRaster& coherence,
                                 const EncodeParams& p) {
    require_same_shape(wrapped.width, wrapped.height, coherence.width, coherence.height);
    p.rate.validate();
    p.temporal.validate(p.rate.t_sim);
    p.population.validate();

    EncodedScene scene;
    scene.width = wrapped.width;
    scene.height = wrapped.height;
    scene.has_y_gradient = p.include_y_gradient;
    scene.phase = encode_rate(wrapped, p.rate);
    scene.gradient_x = encode_temporal(wrapped_gradient(wrapped, Axis::x), p.temporal, p.rate.t_sim);
    if (p.include_y_gradient)
        scene.gradient_y =
            encode_temporal(wrapped_gradient(wrapped, Axis::y), p.temporal, p.rate.t_sim);
    scene.population = encode_population(coherence, p.population, p.rate);

    scene.coherence_summary.resize(scene.pixels());
    for (std::size_t i = 0; i < scene.pixels(); ++i) {
        scene.coherence_summary[i].neuron_id = static_cast<std::uint32_t>(i);
        // all active members share one deterministic train, so the union is
        // the train of member 0 when anyone is active
        for (const auto& member : scene.population[i])
            if (!member.times.empty()) {
                scene.coherence_summary[i].times = member.times;
                break;
            }
    }
    return scene;
}

// ---- CSV dump --------------------------------------------------------------

inline void write_spike_csv(const std::vector<SpikeTrain>& trains,
                            const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f << "neuron_id,timestep\n";
    for (const auto& train : trains)
        for (int t : train.times) f << train.neuron_id << ',' << t << '\n';
    if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace snur
