#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "snur/common.hpp"
#include "snur/encoding.hpp"
#include "snur/lif.hpp"
#include "snur/raster.hpp"

namespace snur {

enum class CoherenceGate { geometric_mean, min };

struct LateralParams {
    double w0 = 0.5;
    double sigma = 1.0;          // pixels
    double cutoff_radius = 3.0;  // Euclidean pixel distance; weights beyond are exactly 0
    CoherenceGate h_mode = CoherenceGate::geometric_mean;

    void validate() const {
        if (sigma <= 0.0) throw InvalidSpec("sigma must be positive");
        if (cutoff_radius < 1.0) throw InvalidSpec("cutoff_radius must be >= 1");
    }
};

enum class DecisionRule { first_spike, spike_count };

struct DecisionParams {
    std::vector<std::int32_t> k_values = {-2, -1, 0, 1, 2};
    int decision_window = 100;  // timesteps
    DecisionRule rule = DecisionRule::first_spike;

    int k_count() const { return static_cast<int>(k_values.size()); }
    int index_of_zero() const {
        auto it = std::find(k_values.begin(), k_values.end(), 0);
        return static_cast<int>(it - k_values.begin());
    }
    void validate() const {
        if (k_values.empty() || !std::is_sorted(k_values.begin(), k_values.end()) ||
            std::adjacent_find(k_values.begin(), k_values.end()) != k_values.end())
            throw InvalidSpec("k_values must be strictly increasing");
        if (std::find(k_values.begin(), k_values.end(), 0) == k_values.end())
            throw InvalidSpec("k_values must contain 0");
        if (decision_window < 1) throw InvalidSpec("decision_window must be >= 1");
    }
};

// Learnable weights live in the learning clip range (about [-1, 1]); the
// i_target gains scale them into currents at propagation time, the way a
// neuromorphic core separates weight precision from current scale.
struct InitParams {
    double w_init_max = 1.0;
    double i_target_enc = 20.0;   // current gain on encoder -> processing spikes
    double i_target_dec = 20.0;   // current gain on processing -> decision spikes
    double dec_bias_ratio = 0.6;  // non-zero-k fan-in weight sum relative to k=0
    double w_prop = 0.5;          // propagation bias, in V_th units per consensus neighbor
    double w_prop_cap = 2.0;      // saturation, in V_th units
};

// ---- Eq. 7 lateral connectivity -------------------------------------------

// w_ij = w0 * exp(-d^2 / 2 sigma^2) * h(gamma_i, gamma_j) for 0 < d <= cutoff.
// Both h modes are symmetric in their arguments, so the table is bit-exactly
// symmetric by construction.
inline SynapseTable build_lateral_weights(const CoherenceRaster& coherence,
                                          const LateralParams& p) {
    p.validate();
    coherence.validate();
    const int w = coherence.width, h = coherence.height;
    const int r = static_cast<int>(std::floor(p.cutoff_radius));
    const double cut2 = p.cutoff_radius * p.cutoff_radius;
    std::vector<Synapse> entries;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double gi = coherence.at(x, y);
            std::uint32_t i = static_cast<std::uint32_t>(y * w + x);
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    int nx = x + dx, ny = y + dy;
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                    double d2 = static_cast<double>(dx) * dx + static_cast<double>(dy) * dy;
                    if (d2 > cut2) continue;
                    double gj = coherence.at(nx, ny);
                    double gate = p.h_mode == CoherenceGate::geometric_mean
                                      ? std::sqrt(gi * gj)
                                      : std::min(gi, gj);
                    double weight = p.w0 * std::exp(-d2 / (2.0 * p.sigma * p.sigma)) * gate;
                    entries.push_back({i, static_cast<std::uint32_t>(ny * w + nx), weight});
                }
        }
    std::uint32_t n = static_cast<std::uint32_t>(w) * h;
    return SynapseTable(std::move(entries), n, n);
}

// ---- topology --------------------------------------------------------------

struct NetworkTopology {
    int width = 0;
    int height = 0;
    EncodeParams encode;
    LifParams lif;
    LateralParams lateral_params;
    DecisionParams decision;
    InitParams init;
    std::uint64_t rng_seed = 0;
    bool trained = false;

    SynapseTable enc_to_proc;  // channels -> MN processing neurons
    SynapseTable lateral;      // MN -> MN, built for a fully coherent grid
    SynapseTable proc_to_dec;  // MN -> K*MN

    std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
    std::size_t encoding_neurons() const {
        return pixels() * (encode.include_y_gradient ? 4 : 3);
    }
    std::size_t decision_neurons() const { return pixels() * decision.k_count(); }
    // neurons simulated as LIF units plus encoder channels
    std::size_t total_neurons() const {
        return encoding_neurons() + pixels() + decision_neurons();
    }
};

// Pixels within Euclidean distance <= cutoff of (x, y), self included.
inline std::vector<std::uint32_t> neighborhood(int x, int y, int w, int h, double cutoff) {
    std::vector<std::uint32_t> out;
    int r = static_cast<int>(std::floor(cutoff));
    double cut2 = cutoff * cutoff;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
            int nx = x + dx, ny = y + dy;
            if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
            if (static_cast<double>(dx) * dx + static_cast<double>(dy) * dy > cut2) continue;
            out.push_back(static_cast<std::uint32_t>(ny * w + nx));
        }
    std::sort(out.begin(), out.end());
    return out;
}

inline constexpr std::size_t kMaxNetworkNeurons = 1u << 26;

inline NetworkTopology build_network(int height, int width, const EncodeParams& encode,
                                     const LifParams& lif, const LateralParams& lateral,
                                     const DecisionParams& decision, const InitParams& init,
                                     std::uint64_t rng_seed) {
    if (width < 2 || height < 2) throw InvalidSpec("network grid must be at least 2x2");
    decision.validate();
    lateral.validate();
    lif.validate();
    std::size_t mn = static_cast<std::size_t>(width) * height;
    if (mn * (4 + decision.k_values.size()) > kMaxNetworkNeurons)
        throw CapacityError("network size exceeds configured capacity");

    NetworkTopology topo;
    topo.width = width;
    topo.height = height;
    topo.encode = encode;
    topo.lif = lif;
    topo.lateral_params = lateral;
    topo.decision = decision;
    topo.init = init;
    topo.rng_seed = rng_seed;

    const int maps = encode.include_y_gradient ? 4 : 3;
    const int K = decision.k_count();
    std::mt19937_64 rng(mix_seed(rng_seed, 0xe0c0));
    std::uniform_real_distribution<double> u(0.0, init.w_init_max);

    // encoding -> processing: each pixel's processing neuron reads its own
    // pixel's channels from every map; fan-in weights normalized to sum 1 so
    // they stay inside the learning clip range
    {
        std::vector<Synapse> entries;
        entries.reserve(mn * maps);
        for (std::size_t pix = 0; pix < mn; ++pix) {
            std::vector<double> ws(maps);
            double sum = 0.0;
            for (int m = 0; m < maps; ++m) sum += ws[m] = u(rng);
            double scale = sum > 0.0 ? 1.0 / sum : 0.0;
            for (int m = 0; m < maps; ++m)
                entries.push_back({static_cast<std::uint32_t>(m * mn + pix),
                                   static_cast<std::uint32_t>(pix), ws[m] * scale});
        }
        topo.enc_to_proc = SynapseTable(std::move(entries), static_cast<std::uint32_t>(maps * mn),
                                        static_cast<std::uint32_t>(mn));
    }

    topo.lateral = build_lateral_weights(CoherenceRaster::filled(width, height, 1.0), lateral);

    // processing -> decision: each decision neuron reads its pixel's
    // processing neuron and the cutoff neighborhood; the k = 0 neuron gets
    // the larger fan-in weight sum so it is the default winner before
    // training (sums are <= 1, within the learning clip range)
    {
        std::vector<Synapse> entries;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                std::uint32_t pix = static_cast<std::uint32_t>(y * width + x);
                auto sources = neighborhood(x, y, width, height, lateral.cutoff_radius);
                for (int k = 0; k < K; ++k) {
                    std::uint32_t dec = pix * K + k;
                    double target = decision.k_values[k] == 0 ? 1.0 : init.dec_bias_ratio;
                    std::vector<double> ws(sources.size());
                    double sum = 0.0;
                    for (auto& wv : ws) sum += wv = u(rng);
                    double scale = sum > 0.0 ? target / sum : 0.0;
                    for (std::size_t s = 0; s < sources.size(); ++s)
                        entries.push_back({sources[s], dec, ws[s] * scale});
                }
            }
        topo.proc_to_dec = SynapseTable(std::move(entries), static_cast<std::uint32_t>(mn),
                                        static_cast<std::uint32_t>(mn * K));
    }
    return topo;
}

// ---- inference -------------------------------------------------------------

struct PixelDecision {
    int x = 0;
    int y = 0;
    std::int32_t k = 0;
    int latency_steps = -1;  // -1 when no decision neuron fired
    bool decided = false;
};

struct DecisionTrace {
    std::vector<PixelDecision> pixels;  // raster order
    bool untrained = false;             // inference ran on an untrained topology
};

enum class InferMode { one_shot, propagating };
enum class Traversal { raster, coherence_descending };

struct InferOptions {
    InferMode mode = InferMode::one_shot;
    Traversal traversal = Traversal::raster;
    bool keep_artifacts = false;  // retain membrane histories for learning
};

// Forward-pass artifacts needed by the supervised learning rule.
struct ForwardArtifacts {
    bool valid = false;
    std::vector<float> dec_v;              // [t * n_dec + i], pre-reset membrane
    std::vector<SpikeTrain> proc_trains;   // per processing neuron
    std::vector<SpikeTrain> dec_trains;    // per decision neuron
    int t_steps = 0;
    std::size_t n_dec = 0;

    float v_at(int t, std::size_t dec) const { return dec_v[t * n_dec + dec]; }
};

struct InferResult {
    WrapCountRaster k;
    DecisionTrace trace;
    SpikeRecord proc_record;
    SpikeRecord dec_record;
    std::uint64_t encoder_spikes = 0;        // incl. internal population
    std::uint64_t synapse_events = 0;        // counted spike-synapse propagations
    ForwardArtifacts artifacts;
};

namespace detail {

// winner under the documented tie-break: earliest time, then smallest |k|,
// then smaller signed k
inline int pick_first_spike_winner(const std::vector<int>& first_spike,
                                   const std::vector<std::int32_t>& k_values, int window) {
    int best = -1;
    for (int k = 0; k < static_cast<int>(k_values.size()); ++k) {
        int t = first_spike[k];
        if (t < 0 || t >= window) continue;
        if (best < 0) {
            best = k;
            continue;
        }
        int tb = first_spike[best];
        if (t < tb ||
            (t == tb && (std::abs(k_values[k]) < std::abs(k_values[best]) ||
                         (std::abs(k_values[k]) == std::abs(k_values[best]) &&
                          k_values[k] < k_values[best]))))
            best = k;
    }
    return best;
}

inline int pick_spike_count_winner(const std::vector<int>& counts,
                                   const std::vector<std::int32_t>& k_values) {
    int best = -1;
    for (int k = 0; k < static_cast<int>(k_values.size()); ++k) {
        if (counts[k] == 0) continue;
        if (best < 0 || counts[k] > counts[best] ||
            (counts[k] == counts[best] && (std::abs(k_values[k]) < std::abs(k_values[best]) ||
                                           (std::abs(k_values[k]) == std::abs(k_values[best]) &&
                                            k_values[k] < k_values[best]))))
            best = k;
    }
    return best;
}

}  // namespace detail

// Bias currents injected into one pixel's decision population by its
// already-decided neighbors: w_prop * V_th per consensus neighbor, saturated
// at w_prop_cap * V_th.
inline std::vector<double> consensus_bias(const DecisionParams& decision, const InitParams& init,
                                          double v_th,
                                          const std::vector<std::int32_t>& neighbor_ks) {
    std::vector<double> bias(decision.k_count(), 0.0);
    for (std::int32_t nk : neighbor_ks)
        for (int k = 0; k < decision.k_count(); ++k)
            if (decision.k_values[k] == nk) bias[k] += init.w_prop * v_th;
    for (double& b : bias) b = std::min(b, init.w_prop_cap * v_th);
    return bias;
}

// Local replay of one pixel's K-way decision race: constant bias currents
// plus feedforward drive from recorded processing spikes (1-step delay).
// fan_in[k] lists (source, weight) pairs; proc_steps[source] is sorted.
inline PixelDecision race_decision(const NetworkTopology& topo,
                                   const std::vector<std::vector<std::pair<std::uint32_t, double>>>& fan_in,
                                   const std::vector<std::vector<int>>& proc_steps,
                                   const std::vector<double>& bias, int window) {
    const int K = topo.decision.k_count();
    NeuronPopulation local(K);
    std::vector<int> first(K, -1), counts(K, 0);
    std::vector<double> syn(K, 0.0), syn_next(K, 0.0);
    std::vector<std::uint32_t> local_fired;
    for (int t = 0; t < window; ++t) {
        lif_step(local, topo.lif, bias, syn, local_fired);
        for (std::uint32_t n : local_fired) {
            if (first[n] < 0) first[n] = t;
            ++counts[n];
        }
        std::fill(syn_next.begin(), syn_next.end(), 0.0);
        for (int k = 0; k < K; ++k)
            for (auto& [pre, wgt] : fan_in[k])
                if (std::binary_search(proc_steps[pre].begin(), proc_steps[pre].end(), t))
                    syn_next[k] += wgt;
        std::swap(syn, syn_next);
    }
    PixelDecision d;
    int winner = topo.decision.rule == DecisionRule::first_spike
                     ? detail::pick_first_spike_winner(first, topo.decision.k_values, window)
                     : detail::pick_spike_count_winner(counts, topo.decision.k_values);
    if (winner >= 0) {
        d.k = topo.decision.k_values[winner];
        d.latency_steps = first[winner];
        d.decided = true;
    }
    return d;
}

inline InferResult infer(const PhaseRaster& wrapped, const CoherenceRaster& coherence,
                         const NetworkTopology& topo, const InferOptions& opt = {}) {
    require_same_shape(wrapped.width, wrapped.height, topo.width, topo.height);
    require_same_shape(coherence.width, coherence.height, topo.width, topo.height);

    const std::size_t mn = topo.pixels();
    const int K = topo.decision.k_count();
    const int T = topo.encode.rate.t_sim;
    const double v_th = topo.lif.v_threshold;

    EncodedScene scene = encode_scene(wrapped, coherence, topo.encode);
    // Eq. 7 gating uses the scene's own coherence; the stored table only
    // fixes the structure for the fully coherent case
    SynapseTable lateral = build_lateral_weights(coherence, topo.lateral_params);

    // per-step encoder spike lists
    std::vector<std::vector<std::uint32_t>> enc_at(T);
    for (std::size_t c = 0; c < scene.channel_count(); ++c)
        for (int t : scene.channel(c).times)
            if (t < T) enc_at[t].push_back(static_cast<std::uint32_t>(c));

    InferResult result;
    result.encoder_spikes = scene.total_spikes();
    result.trace.untrained = !topo.trained;
    result.k = WrapCountRaster::filled(topo.width, topo.height, 0);

    NeuronPopulation proc(mn), dec(mn * K);
    std::vector<double> i_proc(mn, 0.0), i_proc_next(mn, 0.0);
    std::vector<double> i_dec(mn * K, 0.0), i_dec_next(mn * K, 0.0);
    std::vector<double> no_ext;
    std::vector<std::uint32_t> fired;

    result.proc_record.n_neurons = static_cast<std::uint32_t>(mn);
    result.proc_record.t_steps = T;
    result.proc_record.dt = topo.lif.dt;
    result.proc_record.step_totals.assign(T, 0);
    result.dec_record.n_neurons = static_cast<std::uint32_t>(mn * K);
    result.dec_record.t_steps = T;
    result.dec_record.dt = topo.lif.dt;
    result.dec_record.step_totals.assign(T, 0);

    const bool keep = opt.keep_artifacts;
    if (keep) {
        result.artifacts.valid = true;
        result.artifacts.t_steps = T;
        result.artifacts.n_dec = mn * K;
        result.artifacts.dec_v.assign(static_cast<std::size_t>(T) * mn * K, 0.0f);
        result.artifacts.proc_trains.resize(mn);
        result.artifacts.dec_trains.resize(mn * K);
        for (std::size_t i = 0; i < mn; ++i)
            result.artifacts.proc_trains[i].neuron_id = static_cast<std::uint32_t>(i);
        for (std::size_t i = 0; i < mn * K; ++i)
            result.artifacts.dec_trains[i].neuron_id = static_cast<std::uint32_t>(i);
    }

    std::vector<int> dec_first(mn * K, -1);
    std::vector<int> dec_counts(mn * K, 0);

    for (int t = 0; t < T; ++t) {
        // processing layer
        try {
            lif_step(proc, topo.lif, no_ext, i_proc, fired);
        } catch (const NumericalError& e) {
            throw NumericalError(std::string(e.what()) + " at timestep " + std::to_string(t));
        }
        std::fill(i_proc_next.begin(), i_proc_next.end(), 0.0);
        std::fill(i_dec_next.begin(), i_dec_next.end(), 0.0);
        for (std::uint32_t n : fired) {
            result.proc_record.events.push_back({n, t});
            if (keep) result.artifacts.proc_trains[n].times.push_back(t);
            for (const Synapse& s : lateral.fan_out(n)) i_proc_next[s.post] += s.weight;
            for (const Synapse& s : topo.proc_to_dec.fan_out(n))
                i_dec_next[s.post] += topo.init.i_target_dec * s.weight;
            result.synapse_events += lateral.fan_out(n).size() + topo.proc_to_dec.fan_out(n).size();
        }
        result.proc_record.step_totals[t] = static_cast<std::uint32_t>(fired.size());

        // decision layer, one step behind the processing spikes by design
        lif_step(dec, topo.lif, no_ext, i_dec, fired);
        if (keep) {
            float* row = result.artifacts.dec_v.data() + static_cast<std::size_t>(t) * mn * K;
            for (std::size_t i = 0; i < mn * K; ++i) row[i] = static_cast<float>(dec.v[i]);
            // fired neurons were reset; restore the crossing value for the
            // surrogate factor (it peaks at V_th)
            for (std::uint32_t n : fired) row[n] = static_cast<float>(v_th);
        }
        for (std::uint32_t n : fired) {
            result.dec_record.events.push_back({n, t});
            if (keep) result.artifacts.dec_trains[n].times.push_back(t);
            if (dec_first[n] < 0) dec_first[n] = t;
            ++dec_counts[n];
        }
        result.dec_record.step_totals[t] = static_cast<std::uint32_t>(fired.size());

        // encoder spikes of step t arrive at the processing layer at t+1
        for (std::uint32_t c : enc_at[t]) {
            for (const Synapse& s : topo.enc_to_proc.fan_out(c))
                i_proc_next[s.post] += topo.init.i_target_enc * s.weight;
            result.synapse_events += topo.enc_to_proc.fan_out(c).size();
        }
        std::swap(i_proc, i_proc_next);
        std::swap(i_dec, i_dec_next);
    }

    // decisions
    result.trace.pixels.resize(mn);
    const int window = std::min(topo.decision.decision_window, T);

    auto decide_pixel = [&](std::size_t pix, const std::vector<int>& first,
                            const std::vector<int>& counts) {
        PixelDecision d;
        d.x = static_cast<int>(pix % topo.width);
        d.y = static_cast<int>(pix / topo.width);
        int winner = topo.decision.rule == DecisionRule::first_spike
                         ? detail::pick_first_spike_winner(first, topo.decision.k_values, window)
                         : detail::pick_spike_count_winner(counts, topo.decision.k_values);
        if (winner >= 0) {
            d.k = topo.decision.k_values[winner];
            d.latency_steps = first[winner];
            d.decided = true;
        }
        return d;
    };

    if (opt.mode == InferMode::one_shot) {
        for (std::size_t pix = 0; pix < mn; ++pix) {
            std::vector<int> first(K), counts(K);
            for (int k = 0; k < K; ++k) {
                first[k] = dec_first[pix * K + k];
                counts[k] = dec_counts[pix * K + k];
            }
            PixelDecision d = decide_pixel(pix, first, counts);
            result.trace.pixels[pix] = d;
            result.k.values[pix] = d.k;
        }
        return result;
    }

    // propagating mode: re-race each pixel's decision population in traversal
    // order, biasing candidates by the consensus of already-decided neighbors
    std::vector<std::size_t> order(mn);
    std::iota(order.begin(), order.end(), 0);
    if (opt.traversal == Traversal::coherence_descending)
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return coherence.values[a] > coherence.values[b];
        });

    // seed pixel: highest coherence, k forced to 0
    std::size_t seed_pix = static_cast<std::size_t>(
        std::max_element(coherence.values.begin(), coherence.values.end()) -
        coherence.values.begin());

    // fan-in view of proc -> dec, with the current gain applied
    std::vector<std::vector<std::pair<std::uint32_t, double>>> dec_fan_in(mn * K);
    for (const Synapse& s : topo.proc_to_dec.entries())
        dec_fan_in[s.post].emplace_back(s.pre, topo.init.i_target_dec * s.weight);

    // per-processing-neuron sorted spike steps, for the local replay
    std::vector<std::vector<int>> proc_steps(mn);
    for (const SpikeEvent& e : result.proc_record.events) proc_steps[e.neuron].push_back(e.t);

    std::vector<bool> decided(mn, false);
    std::vector<std::int32_t> decided_k(mn, 0);
    decided[seed_pix] = true;
    decided_k[seed_pix] = 0;
    {
        PixelDecision d;
        d.x = static_cast<int>(seed_pix % topo.width);
        d.y = static_cast<int>(seed_pix / topo.width);
        d.k = 0;
        d.latency_steps = 0;
        d.decided = true;
        result.trace.pixels[seed_pix] = d;
    }

    auto race_pixel = [&](std::size_t pix) {
        int x = static_cast<int>(pix % topo.width);
        int y = static_cast<int>(pix / topo.width);
        std::vector<std::int32_t> neighbor_ks;
        const int nbr[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
        for (auto& dxy : nbr) {
            int nx = x + dxy[0], ny = y + dxy[1];
            if (nx < 0 || nx >= topo.width || ny < 0 || ny >= topo.height) continue;
            std::size_t np = static_cast<std::size_t>(ny) * topo.width + nx;
            if (decided[np]) neighbor_ks.push_back(decided_k[np]);
        }
        std::vector<double> bias = consensus_bias(topo.decision, topo.init, v_th, neighbor_ks);
        std::vector<std::vector<std::pair<std::uint32_t, double>>> fan_in(K);
        for (int k = 0; k < K; ++k) fan_in[k] = dec_fan_in[pix * K + k];
        PixelDecision d = race_decision(topo, fan_in, proc_steps, bias, window);
        d.x = x;
        d.y = y;
        return d;
    };

    for (std::size_t pix : order) {
        if (pix == seed_pix) continue;
        PixelDecision d = race_pixel(pix);
        result.trace.pixels[pix] = d;
        result.k.values[pix] = d.k;
        decided[pix] = true;
        decided_k[pix] = d.k;
    }
    return result;
}

// ---- trace reporting -------------------------------------------------------

struct DecisionHistogram {
    std::map<std::int32_t, std::uint64_t> per_k;
    std::uint64_t no_decision = 0;
    double mean_latency_steps = 0.0;  // over decided pixels only
};

inline DecisionHistogram decision_histogram(const DecisionTrace& trace) {
    DecisionHistogram h;
    std::uint64_t decided = 0, latency_sum = 0;
    for (const PixelDecision& d : trace.pixels) {
        h.per_k[d.k]++;
        if (d.decided) {
            ++decided;
            latency_sum += static_cast<std::uint64_t>(d.latency_steps);
        } else {
            ++h.no_decision;
        }
    }
    if (decided > 0) h.mean_latency_steps = static_cast<double>(latency_sum) / decided;
    return h;
}

// JSON lines, one record per pixel.
inline void write_trace_jsonl(const DecisionTrace& trace, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    for (const PixelDecision& d : trace.pixels)
        f << "{\"x\":" << d.x << ",\"y\":" << d.y << ",\"k\":" << d.k
          << ",\"latency_steps\":" << d.latency_steps
          << ",\"decided\":" << (d.decided ? "true" : "false") << "}\n";
    if (!f) throw IoError("write failed: " + path.string());
}

// ---- "SNUT v1" topology snapshot -------------------------------------------

namespace detail {

inline void put_f64(std::string& b, double v) { b.append(reinterpret_cast<char*>(&v), 8); }
inline void put_i32(std::string& b, std::int32_t v) { b.append(reinterpret_cast<char*>(&v), 4); }

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;
    template <typename T>
    T take() {
        if (pos + sizeof(T) > buf.size())
            throw FormatError(FormatError::Kind::Truncated, "SNUT payload truncated");
        T v = get_le<T>(buf.data() + pos);
        pos += sizeof(T);
        return v;
    }
};

inline void put_table(std::string& b, const SynapseTable& t) {
    put_u32(b, t.pre_count());
    put_u32(b, t.post_count());
    put_u64(b, t.size());
    for (const Synapse& s : t.entries()) {
        put_u32(b, s.pre);
        put_u32(b, s.post);
        put_f64(b, s.weight);
    }
}

inline SynapseTable take_table(Reader& r) {
    std::uint32_t n_pre = r.take<std::uint32_t>();
    std::uint32_t n_post = r.take<std::uint32_t>();
    std::uint64_t count = r.take<std::uint64_t>();
    std::vector<Synapse> entries;
    entries.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        Synapse s;
        s.pre = r.take<std::uint32_t>();
        s.post = r.take<std::uint32_t>();
        s.weight = r.take<double>();
        entries.push_back(s);
    }
    return SynapseTable(std::move(entries), n_pre, n_post);
}

}  // namespace detail

inline std::string serialize_topology(const NetworkTopology& topo) {
    std::string b;
    b.append("SNUT", 4);
    detail::put_u16(b, 1);
    b.push_back(static_cast<char>(topo.trained ? 1 : 0));
    b.push_back(0);
    detail::put_u32(b, static_cast<std::uint32_t>(topo.width));
    detail::put_u32(b, static_cast<std::uint32_t>(topo.height));
    detail::put_u64(b, topo.rng_seed);

    detail::put_f64(b, topo.encode.rate.r_max);
    detail::put_f64(b, topo.encode.rate.dt);
    detail::put_u32(b, static_cast<std::uint32_t>(topo.encode.rate.t_sim));
    detail::put_u32(b, static_cast<std::uint32_t>(topo.encode.rate.mode));
    detail::put_u64(b, topo.encode.rate.rng_seed);
    detail::put_u32(b, static_cast<std::uint32_t>(topo.encode.temporal.t_ref));
    detail::put_u32(b, static_cast<std::uint32_t>(topo.encode.temporal.delta_t));
    detail::put_f64(b, topo.encode.temporal.grad_max);
    detail::put_u32(b, static_cast<std::uint32_t>(topo.encode.population.n_total));
    detail::put_f64(b, topo.encode.population.active_rate);
    b.push_back(static_cast<char>(topo.encode.include_y_gradient ? 1 : 0));

    detail::put_f64(b, topo.lif.tau_m);
    detail::put_f64(b, topo.lif.v_threshold);
    detail::put_f64(b, topo.lif.v_reset);
    detail::put_u32(b, static_cast<std::uint32_t>(topo.lif.refractory_steps));
    detail::put_f64(b, topo.lif.dt);

    detail::put_f64(b, topo.lateral_params.w0);
    detail::put_f64(b, topo.lateral_params.sigma);
    detail::put_f64(b, topo.lateral_params.cutoff_radius);
    detail::put_u32(b, static_cast<std::uint32_t>(topo.lateral_params.h_mode));

    detail::put_u32(b, static_cast<std::uint32_t>(topo.decision.k_count()));
    for (std::int32_t k : topo.decision.k_values) detail::put_i32(b, k);
    detail::put_u32(b, static_cast<std::uint32_t>(topo.decision.decision_window));
    detail::put_u32(b, static_cast<std::uint32_t>(topo.decision.rule));

    detail::put_f64(b, topo.init.w_init_max);
    detail::put_f64(b, topo.init.i_target_enc);
    detail::put_f64(b, topo.init.i_target_dec);
    detail::put_f64(b, topo.init.dec_bias_ratio);
    detail::put_f64(b, topo.init.w_prop);
    detail::put_f64(b, topo.init.w_prop_cap);

    detail::put_table(b, topo.enc_to_proc);
    detail::put_table(b, topo.lateral);
    detail::put_table(b, topo.proc_to_dec);
    return b;
}

inline NetworkTopology deserialize_topology(const std::string& buf) {
    if (buf.size() < 8) throw FormatError(FormatError::Kind::Truncated, "SNUT header truncated");
    if (buf.compare(0, 4, "SNUT") != 0)
        throw FormatError(FormatError::Kind::BadMagic, "bad magic, expected SNUT");
    detail::Reader r{buf, 4};
    std::uint16_t version = r.take<std::uint16_t>();
    if (version != 1)
        throw FormatError(FormatError::Kind::BadVersion,
                          "unsupported SNUT version " + std::to_string(version));
    NetworkTopology topo;
    topo.trained = r.take<std::uint8_t>() != 0;
    r.take<std::uint8_t>();  // pad
    topo.width = static_cast<int>(r.take<std::uint32_t>());
    topo.height = static_cast<int>(r.take<std::uint32_t>());
    topo.rng_seed = r.take<std::uint64_t>();

    topo.encode.rate.r_max = r.take<double>();
    topo.encode.rate.dt = r.take<double>();
    topo.encode.rate.t_sim = static_cast<int>(r.take<std::uint32_t>());
    topo.encode.rate.mode = static_cast<RateMode>(r.take<std::uint32_t>());
    topo.encode.rate.rng_seed = r.take<std::uint64_t>();
    topo.encode.temporal.t_ref = static_cast<int>(r.take<std::uint32_t>());
    topo.encode.temporal.delta_t = static_cast<int>(r.take<std::uint32_t>());
    topo.encode.temporal.grad_max = r.take<double>();
    topo.encode.population.n_total = static_cast<int>(r.take<std::uint32_t>());
    topo.encode.population.active_rate = r.take<double>();
    topo.encode.include_y_gradient = r.take<std::uint8_t>() != 0;

    topo.lif.tau_m = r.take<double>();
    topo.lif.v_threshold = r.take<double>();
    topo.lif.v_reset = r.take<double>();
    topo.lif.refractory_steps = static_cast<int>(r.take<std::uint32_t>());
    topo.lif.dt = r.take<double>();

    topo.lateral_params.w0 = r.take<double>();
    topo.lateral_params.sigma = r.take<double>();
    topo.lateral_params.cutoff_radius = r.take<double>();
    topo.lateral_params.h_mode = static_cast<CoherenceGate>(r.take<std::uint32_t>());

    std::uint32_t kc = r.take<std::uint32_t>();
    topo.decision.k_values.resize(kc);
    for (std::uint32_t i = 0; i < kc; ++i) topo.decision.k_values[i] = r.take<std::int32_t>();
    topo.decision.decision_window = static_cast<int>(r.take<std::uint32_t>());
    topo.decision.rule = static_cast<DecisionRule>(r.take<std::uint32_t>());

    topo.init.w_init_max = r.take<double>();
    topo.init.i_target_enc = r.take<double>();
    topo.init.i_target_dec = r.take<double>();
    topo.init.dec_bias_ratio = r.take<double>();
    topo.init.w_prop = r.take<double>();
    topo.init.w_prop_cap = r.take<double>();

    topo.enc_to_proc = detail::take_table(r);
    topo.lateral = detail::take_table(r);
    topo.proc_to_dec = detail::take_table(r);
    return topo;
}

inline void write_topology(const NetworkTopology& topo, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    std::string b = serialize_topology(topo);
    f.write(b.data(), static_cast<std::streamsize>(b.size()));
    if (!f) throw IoError("write failed: " + path.string());
}

inline NetworkTopology read_topology(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path.string());
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize_topology(buf);
}

// FNV-1a over the serialized snapshot.
inline std::uint64_t topology_hash(const NetworkTopology& topo) {
    std::string b = serialize_topology(topo);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : b) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace snur
