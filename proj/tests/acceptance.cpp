// Acceptance suite: nine numbered end-to-end criteria, one PASS/FAIL line
// each, nonzero exit if anything fails. Tolerances are pinned in-line.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "snur/encoding.hpp"
#include "snur/energy.hpp"
#include "snur/lif.hpp"
#include "snur/network.hpp"
#include "snur/plasticity.hpp"
#include "snur/raster.hpp"
#include "snur/scene.hpp"

using namespace snur;

namespace {

int g_failures = 0;

void report(const char* id, bool pass, const std::string& detail) {
    std::printf("%s %s (%s)\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- AC-1: encoder arithmetic ----------------------------------------------

void ac1() {
    RateParams rate;         // r_max 100 Hz, dt 1 ms, T 100
    TemporalParams temporal; // t_ref 50, delta_t 40, grad_max pi
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(-kPi + 1e-12, kPi);

    int bad_rate = 0, bad_temporal = 0;
    double worst_rate = 0.0, worst_temporal = 0.0;
    for (int i = 0; i < 1000; ++i) {
        double phi = u(rng);
        auto train = encode_rate_value(phi, rate, 0);
        double expected = rate.r_max * std::abs(phi + kPi) / kTwoPi * rate.t_sim * rate.dt;
        double err = std::abs(static_cast<double>(train.count()) - expected);
        worst_rate = std::max(worst_rate, err);
        if (err > 1.0) ++bad_rate;  // pinned: within +-1 spike

        double g = u(rng);
        int t = encode_temporal_value(g, temporal);
        double g_back = (temporal.t_ref - t) * temporal.grad_max / temporal.delta_t;
        double quantum = temporal.grad_max / temporal.delta_t;
        double gerr = std::abs(g_back - g);
        worst_temporal = std::max(worst_temporal, gerr / quantum);
        if (gerr > quantum) ++bad_temporal;  // pinned: one timestep quantum
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "rate misses %d, worst |count-expected| %.3f; temporal misses %d, worst %.3f quanta",
                  bad_rate, worst_rate, bad_temporal, worst_temporal);
    report("AC-1", bad_rate == 0 && bad_temporal == 0, buf);
}

// ---- AC-2: LIF closed form --------------------------------------------------

double lif_max_error(double dt) {
    LifParams p;
    p.dt = dt;
    p.v_threshold = 10.0;  // keep subthreshold
    const double i_ext = 0.9, t_end = 0.1;
    NeuronPopulation pop(1);
    std::vector<double> ext(1, i_ext), syn(1, 0.0);
    std::vector<std::uint32_t> fired;
    double worst = 0.0;
    int steps = static_cast<int>(std::llround(t_end / dt));
    for (int n = 1; n <= steps; ++n) {
        lif_step(pop, p, ext, syn, fired);
        double exact = i_ext * (1.0 - std::exp(-n * dt / p.tau_m));
        worst = std::max(worst, std::abs(pop.v[0] - exact));
    }
    return worst;
}

void ac2() {
    double e1 = lif_max_error(1e-3);
    double e05 = lif_max_error(0.5e-3);
    double e01 = lif_max_error(0.1e-3);
    double ratio = e05 / e1;
    // pinned: 0.05 abs at dt = 1 ms, 0.005 abs at dt = 0.1 ms, halving dt
    // cuts the error by a factor in [0.4, 0.6] (first-order convergence)
    bool pass = e1 <= 0.05 && e01 <= 0.005 && ratio >= 0.4 && ratio <= 0.6;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "max err %.3g @1ms, %.3g @0.1ms, halving ratio %.3f", e1, e01,
                  ratio);
    report("AC-2", pass, buf);
}

// ---- AC-3: oracle equivalence ----------------------------------------------

void ac3() {
    std::mt19937_64 rng(303);
    std::uniform_int_distribution<int> dim(8, 64);
    std::uniform_real_distribution<double> amp(0.0, 8.0), slope(0.0, 0.6);
    std::uniform_int_distribution<int> shape_pick(0, 2);

    int bad = 0;
    for (int i = 0; i < 200; ++i) {
        SceneSpec spec;
        spec.width = dim(rng);
        spec.height = dim(rng);
        spec.shape = static_cast<SceneShape>(shape_pick(rng));
        spec.amplitude = amp(rng);
        spec.ramp_slope = slope(rng);
        spec.coherence_level = 1.0;  // noiseless -> smooth -> residue-free
        spec.rng_seed = 1000 + i;
        Scene s = synthesize_scene(spec);
        if (!detect_residues(s.wrapped).empty()) {
            ++bad;
            continue;
        }
        PhaseRaster phi = itoh_unwrap(s.wrapped, 0, 0);
        WrapCountRaster k = counts_with_offset_removed(wrap_counts(phi, s.wrapped), s.truth);
        auto m = evaluate(k, s.truth, s.coherence, 0.0);
        if (m.accuracy != 1.0) ++bad;  // pinned: exact recovery
    }

    int bad_vortex = 0;
    for (int v = 0; v < 5; ++v) {
        int n = 16 + 4 * v;
        double cx = n / 2.0 - 0.5, cy = n / 2.0 - 0.5;
        PhaseRaster abs = PhaseRaster::filled(n, n, PhaseKind::absolute);
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) abs.at(x, y) = std::atan2(y - cy, x - cx);
        auto res = detect_residues(wrap(abs));
        if (res.size() != 1) ++bad_vortex;  // pinned: exactly one residue
    }
    char buf[120];
    std::snprintf(buf, sizeof(buf), "%d/200 scene failures, %d/5 vortex failures", bad, bad_vortex);
    report("AC-3", bad == 0 && bad_vortex == 0, buf);
}

// ---- AC-4: lateral weight table vs brute force ------------------------------

void ac4() {
    SceneSpec spec;
    spec.width = 16;
    spec.height = 16;
    spec.coherence_profile = CoherenceProfile::patchy;
    spec.coherence_level = 0.9;
    spec.rng_seed = 404;
    Scene s = synthesize_scene(spec);
    LateralParams p;
    SynapseTable table = build_lateral_weights(s.coherence, p);

    // independent brute-force double loop over all pixel pairs
    double worst = 0.0;
    std::size_t pairs = 0, missing = 0, asym = 0;
    for (int ay = 0; ay < 16; ++ay)
        for (int ax = 0; ax < 16; ++ax)
            for (int by = 0; by < 16; ++by)
                for (int bx = 0; bx < 16; ++bx) {
                    if (ax == bx && ay == by) continue;
                    double d2 = static_cast<double>(ax - bx) * (ax - bx) +
                                static_cast<double>(ay - by) * (ay - by);
                    std::uint32_t i = static_cast<std::uint32_t>(ay * 16 + ax);
                    std::uint32_t j = static_cast<std::uint32_t>(by * 16 + bx);
                    auto idx = table.find(i, j);
                    if (d2 > p.cutoff_radius * p.cutoff_radius) {
                        if (idx != SynapseTable::npos) ++missing;  // extra entry
                        continue;
                    }
                    ++pairs;
                    if (idx == SynapseTable::npos) {
                        ++missing;
                        continue;
                    }
                    double expect = p.w0 * std::exp(-d2 / (2.0 * p.sigma * p.sigma)) *
                                    std::sqrt(s.coherence.at(ax, ay) * s.coherence.at(bx, by));
                    worst = std::max(worst, std::abs(table.weight_at(idx) - expect));
                    auto rev = table.find(j, i);
                    if (rev == SynapseTable::npos ||
                        table.weight_at(rev) != table.weight_at(idx))
                        ++asym;  // pinned: exact symmetry
                }
    bool pass = worst <= 1e-12 && missing == 0 && asym == 0 && pairs == table.size();
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%zu pairs, worst dev %.2e, %zu structure errors, %zu asym",
                  pairs, worst, missing, asym);
    report("AC-4", pass, buf);
}

// ---- AC-5 / AC-6: training convergence and learnability ---------------------

std::vector<TrainingScene> ramp_dataset(int count, std::uint64_t seed_base) {
    std::vector<TrainingScene> ds;
    for (int i = 0; i < count; ++i) {
        SceneSpec spec;
        spec.width = 64;
        spec.height = 64;
        spec.shape = SceneShape::linear_ramp;
        spec.ramp_slope = 0.14;  // single fringe across the scene
        spec.coherence_level = 0.9;
        spec.rng_seed = seed_base + static_cast<std::uint64_t>(i);
        Scene s = synthesize_scene(spec);
        ds.push_back({std::move(s.wrapped), std::move(s.coherence), std::move(s.truth)});
    }
    return ds;
}

double masked_accuracy_over(const std::vector<TrainingScene>& ds, const NetworkTopology& topo,
                            double mask_gamma) {
    std::uint64_t correct = 0, total = 0;
    for (const auto& scene : ds) {
        InferResult r = infer(scene.wrapped, scene.coherence, topo);
        for (std::size_t i = 0; i < r.k.values.size(); ++i) {
            if (scene.coherence.values[i] < mask_gamma) continue;
            ++total;
            if (r.k.values[i] == scene.truth.values[i]) ++correct;
        }
    }
    return total > 0 ? static_cast<double>(correct) / total : 0.0;
}

void ac5_ac6() {
    auto t0 = std::chrono::steady_clock::now();
    auto dataset = ramp_dataset(20, 5000);
    auto topo = build_network(64, 64, EncodeParams{}, LifParams{}, LateralParams{},
                              DecisionParams{}, InitParams{}, 42);
    NetworkTopology untrained = topo;
    TrainParams params;  // default LearnParams: 50 epochs, batch 4
    TrainingTrace trace = train(dataset, topo, params);

    double e_initial = trace.epochs.front().energy;
    double e_final = trace.epochs.back().energy;
    std::vector<double> ma;
    for (std::size_t i = 0; i + 5 <= trace.epochs.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = i; j < i + 5; ++j) s += trace.epochs[j].energy;
        ma.push_back(s / 5.0);
    }
    // pinned: non-increasing within a slack of 1e-3 * E_initial. Decisions are
    // discrete, so a handful of near-tie pixels (out of ~82k per epoch) can
    // flip for one epoch at the converged floor; genuine divergence moves the
    // average by far more than this.
    double slack = 1e-3 * e_initial;
    int ma_violations = 0;
    for (std::size_t i = 0; i + 1 < ma.size(); ++i)
        if (ma[i + 1] > ma[i] + slack) ++ma_violations;

    // determinism under the seed
    auto topo2 = build_network(64, 64, EncodeParams{}, LifParams{}, LateralParams{},
                               DecisionParams{}, InitParams{}, 42);
    TrainingTrace trace2 = train(dataset, topo2, params, 0, 3);
    bool deterministic = true;
    for (int i = 0; i < 3; ++i)
        deterministic = deterministic && trace2.epochs[i].energy == trace.epochs[i].energy;

    bool pass5 = e_final < e_initial && ma_violations == 0 && deterministic;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "E %.1f -> %.4f over 50 epochs, %d moving-avg violations, %s, %.0f s",
                  e_initial, e_final, ma_violations,
                  deterministic ? "deterministic" : "NON-DETERMINISTIC", seconds_since(t0));
    report("AC-5", pass5, buf);

    // AC-6: held-out scenes from the same distribution
    auto t1 = std::chrono::steady_clock::now();
    auto held_out = ramp_dataset(5, 6000);
    double trained_acc = masked_accuracy_over(held_out, topo, 0.3);
    double untrained_acc = masked_accuracy_over(held_out, untrained, 0.3);
    // pinned: >= 0.80 masked accuracy, >= 0.15 absolute over untrained
    bool pass6 = trained_acc >= 0.80 && trained_acc - untrained_acc >= 0.15;
    std::snprintf(buf, sizeof(buf),
                  "held-out masked accuracy %.3f trained vs %.3f untrained, %.0f s inference",
                  trained_acc, untrained_acc, seconds_since(t1));
    report("AC-6", pass6, buf);
}

// ---- AC-7: energy model arithmetic ------------------------------------------

void ac7() {
    HardwareProfile hw;
    // worked example: 1e6 spikes, 3*64*64 neurons, 200 steps
    // 1e6 * 23e-12 + 12288 * 200 * 1e-13 = 2.324576e-5 J
    double hand = 1e6 * 23e-12 + 12288.0 * 200.0 * 1e-13;
    double lib = snn_energy(1000000, 12288, 200, hw);
    bool example_ok = std::abs(lib - hand) <= 1e-9 * hand;  // pinned: 1e-9 relative

    // a real 64x64 run at 30% coherence, ledger vs hand recomputation
    SceneSpec spec;
    spec.width = 64;
    spec.height = 64;
    spec.coherence_level = 0.3;
    spec.rng_seed = 707;
    Scene s = synthesize_scene(spec);
    auto topo = build_network(64, 64, EncodeParams{}, LifParams{}, LateralParams{},
                              DecisionParams{}, InitParams{}, 7);
    InferResult r = infer(s.wrapped, s.coherence, topo);
    std::uint64_t spikes =
        r.encoder_spikes + r.proc_record.total_spikes() + r.dec_record.total_spikes();
    EnergyLedger ledger;
    ledger.add_run(spikes, topo.total_neurons(), 100);
    double hand_run = static_cast<double>(spikes) * 23e-12 +
                      static_cast<double>(topo.total_neurons()) * 100.0 * 1e-13;
    bool run_ok = std::abs(ledger.joules(hw) - hand_run) <= 1e-9 * hand_run;

    EfficiencyReport rep = efficiency_report(ledger.joules(hw), gpu_energy({300.0, 0.1}), {});
    bool caveat_ok = rep.caveat.find("not a measurement") != std::string::npos && rep.ratio > 0.0;

    // counted spike-synapse events vs MN * r * T * C on a uniform network:
    // every neuron fires s times into fan-in exactly c
    ComplexityReport cx;
    cx.m = 8;
    cx.n = 8;
    cx.t_steps = 100;
    cx.mean_fan_in = 4.0;
    const int s_per = 10;
    cx.mean_rate_hz = s_per / (cx.t_steps * 1e-3);
    cx.op_count_snn = 8ull * 8ull * s_per * 4ull;
    double formula = cx.formula_estimate(1e-3);
    bool events_ok = std::abs(static_cast<double>(cx.op_count_snn) - formula) <= 0.10 * formula;

    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "example %.6e J, run %.4e J (%llu spikes), ratio %.3g with caveat %s, events %s",
                  lib, ledger.joules(hw), static_cast<unsigned long long>(spikes), rep.ratio,
                  caveat_ok ? "yes" : "NO", events_ok ? "within 10%" : "OUTSIDE 10%");
    report("AC-7", example_ok && run_ok && caveat_ok && events_ok, buf);
}

// ---- AC-8: surrogate sign agreement -----------------------------------------

void ac8() {
    // two-neuron micro network: a regular presynaptic train drives one
    // decision neuron through a single weight; compare the surrogate estimate
    // g_hat with the finite-difference first-spike advancement under +-delta
    LifParams lif;
    auto first_spike = [&](const std::vector<int>& pre, double w) {
        NeuronPopulation dec(1);
        std::vector<double> ext(1, 0.0), syn(1, 0.0), syn_next(1, 0.0);
        std::vector<std::uint32_t> fired;
        for (int t = 0; t < 100; ++t) {
            lif_step(dec, lif, ext, syn, fired);
            if (!fired.empty()) return t;
            syn_next[0] = std::binary_search(pre.begin(), pre.end(), t) ? w : 0.0;
            std::swap(syn, syn_next);
        }
        return 1000;  // never fired inside the window
    };
    auto g_hat = [&](const std::vector<int>& pre, double w) {
        NeuronPopulation dec(1);
        std::vector<double> ext(1, 0.0), syn(1, 0.0), syn_next(1, 0.0);
        std::vector<std::uint32_t> fired;
        double g = 0.0;
        for (int t = 0; t < 100; ++t) {
            lif_step(dec, lif, ext, syn, fired);
            double v = fired.empty() ? dec.v[0] : lif.v_threshold;
            if (std::binary_search(pre.begin(), pre.end(), t - 1))
                g += surrogate_factor(v, 1.0, lif.v_threshold);
            syn_next[0] = std::binary_search(pre.begin(), pre.end(), t) ? w : 0.0;
            std::swap(syn, syn_next);
        }
        return g;
    };

    std::mt19937_64 rng(808);
    std::uniform_real_distribution<double> rate(30.0, 500.0), weight(0.5, 25.0);
    const double delta = 1e-3;
    int agree = 0;
    const int trials = 500;
    for (int i = 0; i < trials; ++i) {
        std::vector<int> pre = regular_train(rate(rng), lif.dt, 100);
        double w = weight(rng);
        // positive fd means a larger weight advances (or keeps) the first spike
        double fd = first_spike(pre, w - delta) - first_spike(pre, w + delta);
        double g = g_hat(pre, w);
        if (fd * g >= 0.0) ++agree;
    }
    char buf[120];
    std::snprintf(buf, sizeof(buf), "sign agreement %d/%d (pinned threshold 475)", agree, trials);
    report("AC-8", agree >= 475, buf);  // pinned: >= 95%
}

// ---- AC-9: sparsity monotonicity --------------------------------------------

void ac9() {
    auto t0 = std::chrono::steady_clock::now();
    auto topo = build_network(32, 32, EncodeParams{}, LifParams{}, LateralParams{},
                              DecisionParams{}, InitParams{}, 9);
    HardwareProfile hw;
    std::vector<double> levels = {0.1, 0.3, 0.6, 1.0};
    std::vector<std::uint64_t> spikes;
    std::vector<double> joules;
    for (double g : levels) {
        SceneSpec spec;
        spec.width = 32;
        spec.height = 32;
        spec.coherence_level = g;
        spec.rng_seed = 909;  // fixed scene/seed, only coherence varies
        Scene s = synthesize_scene(spec);
        InferResult r = infer(s.wrapped, s.coherence, topo);
        std::uint64_t n =
            r.encoder_spikes + r.proc_record.total_spikes() + r.dec_record.total_spikes();
        spikes.push_back(n);
        joules.push_back(snn_energy(n, topo.total_neurons(), 100, hw));
    }
    bool mono = true;
    for (std::size_t i = 0; i + 1 < levels.size(); ++i)
        mono = mono && spikes[i + 1] >= spikes[i] && joules[i + 1] >= joules[i];
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "spikes %llu/%llu/%llu/%llu across gamma 0.1/0.3/0.6/1.0, %.0f s",
                  static_cast<unsigned long long>(spikes[0]),
                  static_cast<unsigned long long>(spikes[1]),
                  static_cast<unsigned long long>(spikes[2]),
                  static_cast<unsigned long long>(spikes[3]), seconds_since(t0));
    report("AC-9", mono, buf);
}

}  // namespace

int main() {
    ac1();
    ac2();
    ac3();
    ac4();
    ac5_ac6();
    ac7();
    ac8();
    ac9();
    return g_failures == 0 ? 0 : 1;
}
