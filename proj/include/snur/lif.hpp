#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "snur/common.hpp"

namespace snur {

struct LifParams {
    double tau_m = 10e-3;     // membrane time constant, seconds
    double v_threshold = 1.0;
    double v_reset = 0.0;
    int refractory_steps = 2;
    double dt = 1e-3;         // seconds

    void validate() const {
        if (tau_m <= 0.0 || dt <= 0.0) throw InvalidSpec("tau_m and dt must be positive");
        if (dt > tau_m) throw InvalidSpec("dt must not exceed tau_m");
        if (v_threshold <= v_reset) throw InvalidSpec("v_threshold must exceed v_reset");
        if (refractory_steps < 0) throw InvalidSpec("refractory_steps must be >= 0");
    }
};

struct NeuronPopulation {
    std::vector<double> v;
    std::vector<int> refractory_remaining;
    std::vector<std::uint64_t> spike_count;

    explicit NeuronPopulation(std::size_t n = 0, double v0 = 0.0)
        : v(n, v0), refractory_remaining(n, 0), spike_count(n, 0) {}

    std::size_t size() const { return v.size(); }
};

// Explicit Euler step of tau dv/dt = -v + I_syn + I_ext. Incoming spikes are
// one-step current impulses, already summed per neuron by the caller.
// Refractory neurons hold v_reset and ignore input. Fired indices come back
// in ascending order.
inline void lif_step(NeuronPopulation& pop, const LifParams& p, std::span<const double> i_ext,
                     std::span<const double> i_syn, std::vector<std::uint32_t>& fired) {
    fired.clear();
    const double a = p.dt / p.tau_m;
    for (std::size_t i = 0; i < pop.size(); ++i) {
        if (pop.refractory_remaining[i] > 0) {
            --pop.refractory_remaining[i];
            pop.v[i] = p.v_reset;
            continue;
        }
        double input = (i < i_ext.size() ? i_ext[i] : 0.0) + (i < i_syn.size() ? i_syn[i] : 0.0);
        if (!std::isfinite(input)) throw NumericalError("non-finite input current");
        pop.v[i] += a * (-pop.v[i] + input);
        if (pop.v[i] >= p.v_threshold) {
            fired.push_back(static_cast<std::uint32_t>(i));
            pop.v[i] = p.v_reset;
            pop.refractory_remaining[i] = p.refractory_steps;
            ++pop.spike_count[i];
        }
    }
}

// ---- sparse connectivity ---------------------------------------------------

struct Synapse {
    std::uint32_t pre;
    std::uint32_t post;
    double weight;
};

// Compressed adjacency over (pre, post, weight) entries, sorted by pre then
// post; fan-out of a neuron is a contiguous slice. Delay is fixed at one
// timestep everywhere.
class SynapseTable {
public:
    SynapseTable() = default;

    SynapseTable(std::vector<Synapse> entries, std::uint32_t n_pre, std::uint32_t n_post)
        : entries_(std::move(entries)), n_pre_(n_pre), n_post_(n_post) {
        std::sort(entries_.begin(), entries_.end(), [](const Synapse& a, const Synapse& b) {
            return a.pre != b.pre ? a.pre < b.pre : a.post < b.post;
        });
        offsets_.assign(n_pre_ + 1, 0);
        std::uint32_t prev_pre = 0;
        bool first = true;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const Synapse& s = entries_[i];
            if (!std::isfinite(s.weight)) throw NumericalError("non-finite synaptic weight");
            if (s.pre >= n_pre_ || s.post >= n_post_)
                throw InvalidSpec("synapse endpoint out of range");
            if (!first && s.pre == prev_pre && entries_[i - 1].post == s.post)
                throw InvalidSpec("duplicate (pre, post) synapse");
            prev_pre = s.pre;
            first = false;
            ++offsets_[s.pre + 1];
        }
        for (std::size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];
    }

    std::span<const Synapse> fan_out(std::uint32_t pre) const {
        return {entries_.data() + offsets_[pre], entries_.data() + offsets_[pre + 1]};
    }

    const std::vector<Synapse>& entries() const { return entries_; }
    double weight_at(std::size_t entry_idx) const { return entries_[entry_idx].weight; }
    void set_weight(std::size_t entry_idx, double w) { entries_[entry_idx].weight = w; }
    std::size_t size() const { return entries_.size(); }
    std::uint32_t pre_count() const { return n_pre_; }
    std::uint32_t post_count() const { return n_post_; }

    // entry index of (pre, post), or npos
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t find(std::uint32_t pre, std::uint32_t post) const {
        auto slice = fan_out(pre);
        auto it = std::lower_bound(slice.begin(), slice.end(), post,
                                   [](const Synapse& s, std::uint32_t p) { return s.post < p; });
        if (it == slice.end() || it->post != post) return npos;
        return offsets_[pre] + static_cast<std::size_t>(it - slice.begin());
    }

private:
    std::vector<Synapse> entries_;
    std::vector<std::size_t> offsets_;
    std::uint32_t n_pre_ = 0;
    std::uint32_t n_post_ = 0;
};

// ---- recording -------------------------------------------------------------

struct SpikeEvent {
    std::uint32_t neuron;
    int t;
};

struct SpikeRecord {
    std::uint32_t n_neurons = 0;
    int t_steps = 0;
    double dt = 1e-3;
    std::vector<SpikeEvent> events;           // in simulation order
    std::vector<std::uint32_t> step_totals;   // population spikes per step

    std::uint64_t total_spikes() const { return events.size(); }
};

struct ActivityStats {
    double mean_rate_hz = 0.0;
    double spikes_per_neuron = 0.0;
    double active_fraction = 0.0;
};

inline ActivityStats activity_stats(const SpikeRecord& record) {
    ActivityStats s;
    if (record.n_neurons == 0 || record.t_steps == 0) return s;
    double n = record.n_neurons;
    s.spikes_per_neuron = static_cast<double>(record.total_spikes()) / n;
    s.mean_rate_hz = record.total_spikes() / (n * record.t_steps * record.dt);
    std::vector<bool> active(record.n_neurons, false);
    for (const auto& e : record.events) active[e.neuron] = true;
    s.active_fraction =
        static_cast<double>(std::count(active.begin(), active.end(), true)) / n;
    return s;
}

// ---- generic single-population run ----------------------------------------

// input_schedule fills I_ext for step t; pass nullptr for silent input.
using InputSchedule = std::function<void(int t, std::span<double> i_ext)>;

inline SpikeRecord lif_run(NeuronPopulation& pop, const LifParams& p, int t_sim,
                           const InputSchedule& input_schedule, const SynapseTable& synapses) {
    p.validate();
    SpikeRecord record;
    record.n_neurons = static_cast<std::uint32_t>(pop.size());
    record.t_steps = t_sim;
    record.dt = p.dt;
    record.step_totals.assign(static_cast<std::size_t>(std::max(t_sim, 0)), 0);

    std::vector<double> i_ext(pop.size(), 0.0), i_syn(pop.size(), 0.0), i_syn_next(pop.size(), 0.0);
    std::vector<std::uint32_t> fired;
    for (int t = 0; t < t_sim; ++t) {
        std::fill(i_ext.begin(), i_ext.end(), 0.0);
        if (input_schedule) input_schedule(t, i_ext);
        try {
            lif_step(pop, p, i_ext, i_syn, fired);
        } catch (const NumericalError& e) {
            throw NumericalError(std::string(e.what()) + " at timestep " + std::to_string(t));
        }
        std::fill(i_syn_next.begin(), i_syn_next.end(), 0.0);
        for (std::uint32_t n : fired) {
            record.events.push_back({n, t});
            for (const Synapse& s : synapses.fan_out(n)) i_syn_next[s.post] += s.weight;
        }
        record.step_totals[t] = static_cast<std::uint32_t>(fired.size());
        std::swap(i_syn, i_syn_next);
    }
    return record;
}

// ---- exports ---------------------------------------------------------------

inline void write_spike_record_csv(const SpikeRecord& record, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f << "neuron_id,timestep\n";
    for (const auto& e : record.events) f << e.neuron << ',' << e.t << '\n';
    if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace snur
