#pragma once

#include <cstdint>
#include <string>

#include "snur/common.hpp"
#include "snur/lif.hpp"

namespace snur {

struct HardwareProfile {
    double e_spike = 23e-12;  // joules per spike
    double e_leak = 1e-13;    // joules per neuron per timestep
    std::string label = "neuromorphic (Loihi 2 class)";

    void validate() const {
        if (e_spike <= 0 || e_leak <= 0) throw InvalidSpec("hardware energies must be positive");
    }
};

struct GpuBaseline {
    double p_gpu = 300.0;     // watts
    double t_process = 0.0;   // seconds; host-measured oracle wall time by default

    void validate() const {
        if (p_gpu <= 0) throw InvalidSpec("p_gpu must be positive");
        if (t_process < 0) throw InvalidSpec("t_process must be non-negative");
    }
};

// Cumulative spike/leak counters; additive across runs.
struct EnergyLedger {
    std::uint64_t spikes = 0;
    std::uint64_t neuron_steps = 0;  // neurons * timesteps

    void add_run(std::uint64_t run_spikes, std::uint64_t n_neurons, std::uint64_t t_steps) {
        spikes += run_spikes;
        neuron_steps += n_neurons * t_steps;
    }
    EnergyLedger& operator+=(const EnergyLedger& o) {
        spikes += o.spikes;
        neuron_steps += o.neuron_steps;
        return *this;
    }
    friend EnergyLedger operator+(EnergyLedger a, const EnergyLedger& b) { return a += b; }

    double joules(const HardwareProfile& hw) const {
        return spikes * hw.e_spike + neuron_steps * hw.e_leak;
    }
};

// E = N_spikes * e_spike + n_neurons * T * e_leak
inline double snn_energy(std::uint64_t n_spikes, std::uint64_t n_neurons, std::uint64_t t_steps,
                         const HardwareProfile& hw) {
    hw.validate();
    return n_spikes * hw.e_spike + static_cast<double>(n_neurons) * t_steps * hw.e_leak;
}

inline double snn_energy(const SpikeRecord& record, std::uint64_t n_neurons,
                         const HardwareProfile& hw) {
    return snn_energy(record.total_spikes(), n_neurons,
                      static_cast<std::uint64_t>(record.t_steps), hw);
}

inline double gpu_energy(const GpuBaseline& b) {
    b.validate();
    return b.p_gpu * b.t_process;
}

// ---- complexity counters ---------------------------------------------------

struct ComplexityReport {
    int m = 0;
    int n = 0;
    double mean_rate_hz = 0.0;        // r
    int t_steps = 0;                  // T
    double mean_fan_in = 0.0;         // C
    double spikes_per_neuron = 0.0;   // S
    std::uint64_t op_count_snn = 0;   // counted spike-synapse propagation events
    std::uint64_t op_count_classical = 0;  // MN log2(MN), network-flow class

    // MN * r * T * C in spike-synapse events (r*dt*T spikes per neuron)
    double formula_estimate(double dt) const {
        return static_cast<double>(m) * n * (mean_rate_hz * dt * t_steps) * mean_fan_in;
    }
};

inline std::uint64_t classical_op_estimate(int m, int n) {
    double mn = static_cast<double>(m) * n;
    return static_cast<std::uint64_t>(mn * std::log2(mn));
}

// ---- comparison report -----------------------------------------------------

inline constexpr const char* kGpuModelCaveat =
    "GPU figure is a power-envelope model (P_GPU * T_process), not a measurement";

struct EfficiencyReport {
    double snn_joules = 0.0;
    double gpu_joules = 0.0;
    double ratio = 0.0;        // gpu / snn
    bool ratio_unbounded = false;
    std::string caveat = kGpuModelCaveat;
    ComplexityReport complexity;
};

inline EfficiencyReport efficiency_report(double snn_joules, double gpu_joules,
                                          const ComplexityReport& complexity) {
    EfficiencyReport rep;
    rep.snn_joules = snn_joules;
    rep.gpu_joules = gpu_joules;
    rep.complexity = complexity;
    if (snn_joules == 0.0)
        rep.ratio_unbounded = true;
    else
        rep.ratio = gpu_joules / snn_joules;
    return rep;
}

}  // namespace snur
