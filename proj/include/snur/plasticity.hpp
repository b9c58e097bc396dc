#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <vector>

#include "snur/common.hpp"
#include "snur/encoding.hpp"
#include "snur/lif.hpp"
#include "snur/network.hpp"
#include "snur/raster.hpp"

namespace snur {

struct StdpParams {
    double a_plus = 0.01;
    double a_minus = 0.012;
    double tau_plus = 20e-3;   // seconds
    double tau_minus = 20e-3;  // seconds
    int window = 60;           // timesteps

    void validate(double dt) const {
        if (a_plus <= 0 || a_minus <= 0 || tau_plus <= 0 || tau_minus <= 0 || window <= 0)
            throw InvalidSpec("STDP parameters must be positive");
        if (window * dt < 3.0 * std::max(tau_plus, tau_minus))
            throw InvalidSpec("STDP window must cover at least 3 time constants");
    }
};

struct LearnParams {
    double eta1 = 1e-3;    // STDP rate
    double eta2 = 1e-2;    // supervised rate
    double beta = 1.0;     // surrogate sharpness
    double lambda = 1e-4;  // regularization weight
    int epochs = 50;
    int batch = 4;         // scenes per weight update
    double w_min = -1.0;
    double w_max = 1.0;
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (eta1 < 0 || eta2 < 0) throw InvalidSpec("learning rates must be non-negative");
        if (beta <= 0) throw InvalidSpec("beta must be positive");
        if (lambda < 0) throw InvalidSpec("lambda must be non-negative");
        if (w_min >= w_max) throw InvalidSpec("w_min must be below w_max");
        if (batch < 1) throw InvalidSpec("batch must be >= 1");
    }
};

// ---- kernels ---------------------------------------------------------------

// Classical exponential STDP window. delta_t > 0 means pre before post
// (potentiation); delta_t = 0 contributes nothing by convention.
inline double stdp_kernel(int delta_t, const StdpParams& p, double dt) {
    if (delta_t == 0) return 0.0;
    if (delta_t > 0) return p.a_plus * std::exp(-delta_t * dt / p.tau_plus);
    return -p.a_minus * std::exp(delta_t * dt / p.tau_minus);
}

// Surrogate derivative of the spike threshold, peaked at v = V_th.
inline double surrogate_factor(double v, double beta, double v_threshold) {
    if (!std::isfinite(v)) throw NumericalError("non-finite membrane potential");
    return 1.0 / (1.0 + beta * std::abs(v - v_threshold));
}

// ---- STDP accumulation -----------------------------------------------------

// Nearest-neighbor pairing: each post spike pairs with the closest pre spike
// within the window. Deltas are accumulated per table entry.
inline void accumulate_stdp(const SynapseTable& table,
                            const std::vector<SpikeTrain>& pre_trains,
                            const std::vector<SpikeTrain>& post_trains, const StdpParams& p,
                            double dt, std::vector<double>& deltas) {
    deltas.assign(table.size(), 0.0);
    const auto& entries = table.entries();
    for (std::size_t e = 0; e < entries.size(); ++e) {
        const auto& pre = pre_trains[entries[e].pre].times;
        const auto& post = post_trains[entries[e].post].times;
        if (pre.empty() || post.empty()) continue;
        for (int tp : post) {
            auto it = std::lower_bound(pre.begin(), pre.end(), tp);
            int best = 0;
            bool have = false;
            if (it != pre.end() && (!have || std::abs(*it - tp) < std::abs(best - tp))) {
                best = *it;
                have = true;
            }
            if (it != pre.begin()) {
                int cand = *(it - 1);
                if (!have || std::abs(cand - tp) < std::abs(best - tp)) {
                    best = cand;
                    have = true;
                }
            }
            if (!have) continue;
            int delta_t = tp - best;
            if (std::abs(delta_t) > p.window) continue;
            deltas[e] += stdp_kernel(delta_t, p, dt);
        }
    }
}

// ---- supervised error ------------------------------------------------------

// e_ij for every processing -> decision synapse. For a mispredicted pixel the
// target-k neuron's synapses get +|dk| * g_hat and the wrongly winning
// neuron's get -|dk| * g_hat, where g_hat sums the surrogate factor over
// timesteps with a presynaptic spike one step earlier.
inline std::vector<double> supervised_error(const WrapCountRaster& k_target,
                                            const DecisionTrace& trace,
                                            const ForwardArtifacts& art,
                                            const NetworkTopology& topo, const LearnParams& p) {
    if (!art.valid) throw TraceIncomplete("forward pass was run without keep_artifacts");
    require_same_shape(k_target.width, k_target.height, topo.width, topo.height);
    const int K = topo.decision.k_count();
    const double v_th = topo.lif.v_threshold;
    std::vector<double> e(topo.proc_to_dec.size(), 0.0);

    // g_hat for every synapse into one decision neuron, on demand
    auto g_hat = [&](std::uint32_t pre, std::uint32_t dec) {
        double g = 0.0;
        for (int tp : art.proc_trains[pre].times) {
            int t = tp + 1;  // 1-step synaptic delay
            if (t >= art.t_steps) break;
            g += surrogate_factor(art.v_at(t, dec), p.beta, v_th);
        }
        return g;
    };

    const auto& entries = topo.proc_to_dec.entries();
    // entry indices grouped by decision neuron
    std::vector<std::vector<std::size_t>> by_dec(topo.decision_neurons());
    for (std::size_t i = 0; i < entries.size(); ++i) by_dec[entries[i].post].push_back(i);

    for (std::size_t pix = 0; pix < topo.pixels(); ++pix) {
        const PixelDecision& d = trace.pixels[pix];
        std::int32_t kt = k_target.values[pix];
        if (d.k == kt) continue;
        double dk = std::abs(kt - d.k);
        // clamp an out-of-range target onto the nearest representable choice
        std::int32_t kt_clamped = std::clamp(kt, topo.decision.k_values.front(),
                                             topo.decision.k_values.back());
        int target_idx = -1, winner_idx = -1;
        for (int k = 0; k < K; ++k) {
            if (topo.decision.k_values[k] == kt_clamped) target_idx = k;
            if (topo.decision.k_values[k] == d.k) winner_idx = k;
        }
        if (target_idx >= 0) {
            std::uint32_t dec = static_cast<std::uint32_t>(pix * K + target_idx);
            for (std::size_t i : by_dec[dec]) e[i] += dk * g_hat(entries[i].pre, dec);
        }
        if (winner_idx >= 0 && winner_idx != target_idx) {
            std::uint32_t dec = static_cast<std::uint32_t>(pix * K + winner_idx);
            for (std::size_t i : by_dec[dec]) e[i] -= dk * g_hat(entries[i].pre, dec);
        }
    }
    return e;
}

// ---- weight update ---------------------------------------------------------

// dw = eta1 * STDP + eta2 * e - eta2 * lambda * w, clipped. Only the
// feedforward tables learn; the lateral table keeps its closed-form weights.
inline void apply_update_table(SynapseTable& table, const std::vector<double>& stdp_deltas,
                               const std::vector<double>& error, const LearnParams& p) {
    for (std::size_t i = 0; i < table.size(); ++i) {
        double w = table.weight_at(i);
        double dw = 0.0;
        if (!stdp_deltas.empty()) dw += p.eta1 * stdp_deltas[i];
        if (!error.empty()) dw += p.eta2 * error[i];
        dw -= p.eta2 * p.lambda * w;
        table.set_weight(i, std::clamp(w + dw, p.w_min, p.w_max));
    }
}

inline void apply_update(NetworkTopology& topo, const std::vector<double>& stdp_enc_proc,
                         const std::vector<double>& stdp_proc_dec,
                         const std::vector<double>& error_proc_dec, const LearnParams& p) {
    p.validate();
    apply_update_table(topo.enc_to_proc, stdp_enc_proc, {}, p);
    apply_update_table(topo.proc_to_dec, stdp_proc_dec, error_proc_dec, p);
}

// ---- training loop ---------------------------------------------------------

struct TrainingScene {
    PhaseRaster wrapped;
    CoherenceRaster coherence;
    WrapCountRaster truth;
};

struct EpochRecord {
    int epoch = 0;
    double energy = 0.0;    // sum (k - k_true)^2 + lambda/2 * ||w||^2
    double accuracy = 0.0;  // pixelwise over the whole epoch
    std::uint64_t total_spikes = 0;
    double weight_norm = 0.0;
};

struct TrainingTrace {
    std::vector<EpochRecord> epochs;
};

struct TrainParams {
    StdpParams stdp;
    LearnParams learn;
};

// Heterosynaptic balance: subtract the per-post-neuron mean from accumulated
// STDP deltas so pairing statistics redistribute a neuron's input without
// changing its total drive. Raw nearest-neighbor pairing is net-potentiating
// (causal pre->post pairs dominate), which would slowly inflate input currents
// and unsettle decisions the supervised term has already fixed.
inline void balance_stdp_per_post(const SynapseTable& table, std::vector<double>& deltas) {
    std::vector<double> sum(table.post_count(), 0.0);
    std::vector<std::uint32_t> count(table.post_count(), 0);
    const auto& entries = table.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        sum[entries[i].post] += deltas[i];
        ++count[entries[i].post];
    }
    for (std::size_t i = 0; i < entries.size(); ++i)
        deltas[i] -= sum[entries[i].post] / count[entries[i].post];
}

inline double feedforward_weight_sq_norm(const NetworkTopology& topo) {
    KahanSum s;
    for (const Synapse& w : topo.enc_to_proc.entries()) s.add(w.weight * w.weight);
    for (const Synapse& w : topo.proc_to_dec.entries()) s.add(w.weight * w.weight);
    return s.value();
}

inline void write_training_trace_csv(const TrainingTrace& trace,
                                     const std::filesystem::path& path, bool append = false) {
    std::ofstream f(path, append ? std::ios::app : std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    if (!append) f << "epoch,energy,accuracy,total_spikes,weight_norm\n";
    for (const auto& r : trace.epochs)
        f << r.epoch << ',' << r.energy << ',' << r.accuracy << ',' << r.total_spikes << ','
          << r.weight_norm << '\n';
    if (!f) throw IoError("write failed: " + path.string());
}

// Batch boundary: balance the STDP terms, average everything over the scenes
// actually accumulated, and apply.
inline void flush_batch(NetworkTopology& topo, std::vector<double>& stdp_enc,
                        std::vector<double>& stdp_dec, std::vector<double>& err,
                        std::size_t n_scenes, const LearnParams& learn) {
    balance_stdp_per_post(topo.enc_to_proc, stdp_enc);
    balance_stdp_per_post(topo.proc_to_dec, stdp_dec);
    const double inv = 1.0 / static_cast<double>(n_scenes);
    for (double& d : stdp_enc) d *= inv;
    for (double& d : stdp_dec) d *= inv;
    for (double& d : err) d *= inv;
    apply_update(topo, stdp_enc, stdp_dec, err, learn);
}

// Hybrid STDP + supervised training. Deterministic under learn.rng_seed; each
// epoch draws its shuffle from (seed, epoch), so a run resumed from a
// checkpoint at start_epoch reproduces the uninterrupted run.
inline TrainingTrace train(const std::vector<TrainingScene>& dataset, NetworkTopology& topo,
                           const TrainParams& params, int start_epoch = 0,
                           int epoch_override = -1) {
    if (dataset.empty()) throw InvalidDataset("training dataset is empty");
    params.learn.validate();
    params.stdp.validate(topo.lif.dt);
    for (const auto& s : dataset) {
        if (s.wrapped.width != topo.width || s.wrapped.height != topo.height)
            throw InvalidDataset("scene dimensions do not match topology");
    }

    const int epochs = epoch_override >= 0 ? epoch_override : params.learn.epochs;
    TrainingTrace trace;
    InferOptions opt;
    opt.mode = InferMode::one_shot;
    opt.keep_artifacts = true;

    std::vector<double> acc_stdp_enc, acc_stdp_dec, acc_err;

    for (int epoch = start_epoch; epoch < start_epoch + epochs; ++epoch) {
        std::vector<std::size_t> order(dataset.size());
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(mix_seed(params.learn.rng_seed, 0x5000 + epoch));
        std::shuffle(order.begin(), order.end(), rng);

        EpochRecord rec;
        rec.epoch = epoch;
        KahanSum err_sq;
        std::uint64_t correct = 0, pixels = 0;

        std::size_t done_in_batch = 0;
        acc_stdp_enc.assign(topo.enc_to_proc.size(), 0.0);
        acc_stdp_dec.assign(topo.proc_to_dec.size(), 0.0);
        acc_err.assign(topo.proc_to_dec.size(), 0.0);

        for (std::size_t idx : order) {
            const TrainingScene& scene = dataset[idx];
            InferResult fwd = infer(scene.wrapped, scene.coherence, topo, opt);
            rec.total_spikes +=
                fwd.encoder_spikes + fwd.proc_record.total_spikes() + fwd.dec_record.total_spikes();

            for (std::size_t pix = 0; pix < topo.pixels(); ++pix) {
                double d = fwd.k.values[pix] - scene.truth.values[pix];
                err_sq.add(d * d);
                if (fwd.k.values[pix] == scene.truth.values[pix]) ++correct;
                ++pixels;
            }

            // STDP pairings on both learnable tables
            EncodedScene enc = encode_scene(scene.wrapped, scene.coherence, topo.encode);
            std::vector<SpikeTrain> enc_trains(enc.channel_count());
            for (std::size_t c = 0; c < enc.channel_count(); ++c) enc_trains[c] = enc.channel(c);
            std::vector<double> d_enc, d_dec;
            accumulate_stdp(topo.enc_to_proc, enc_trains, fwd.artifacts.proc_trains, params.stdp,
                            topo.lif.dt, d_enc);
            accumulate_stdp(topo.proc_to_dec, fwd.artifacts.proc_trains,
                            fwd.artifacts.dec_trains, params.stdp, topo.lif.dt, d_dec);
            std::vector<double> err =
                supervised_error(scene.truth, fwd.trace, fwd.artifacts, topo, params.learn);
            for (std::size_t i = 0; i < d_enc.size(); ++i) acc_stdp_enc[i] += d_enc[i];
            for (std::size_t i = 0; i < d_dec.size(); ++i) acc_stdp_dec[i] += d_dec[i];
            for (std::size_t i = 0; i < err.size(); ++i) acc_err[i] += err[i];

            if (++done_in_batch == static_cast<std::size_t>(params.learn.batch)) {
                flush_batch(topo, acc_stdp_enc, acc_stdp_dec, acc_err, done_in_batch,
                            params.learn);
                acc_stdp_enc.assign(topo.enc_to_proc.size(), 0.0);
                acc_stdp_dec.assign(topo.proc_to_dec.size(), 0.0);
                acc_err.assign(topo.proc_to_dec.size(), 0.0);
                done_in_batch = 0;
            }
        }
        if (done_in_batch > 0)
            flush_batch(topo, acc_stdp_enc, acc_stdp_dec, acc_err, done_in_batch, params.learn);

        double sq_norm = feedforward_weight_sq_norm(topo);
        rec.energy = err_sq.value() + params.learn.lambda * 0.5 * sq_norm;
        rec.accuracy = pixels > 0 ? static_cast<double>(correct) / pixels : 0.0;
        rec.weight_norm = std::sqrt(sq_norm);
        if (!std::isfinite(rec.energy)) throw NumericalError("training energy became non-finite");
        trace.epochs.push_back(rec);
    }
    topo.trained = topo.trained || epochs > 0;
    return trace;
}

}  // namespace snur
