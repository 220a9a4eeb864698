#pragma once

#include <algorithm>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "spikelatch/neuron.hpp"

namespace spikelatch {

// Rectangular current pulse on one neuron's external source.
struct CurrentPulse {
    double amplitude = 0.0;  // pA
    double t0 = 0.0;         // ms
    double duration = 0.0;   // ms
};

// Per-neuron external current: a sum of rectangular pulses plus an
// optional caller-provided function of time. Evaluated once per step
// (zero-order hold).
struct ExternalSource {
    std::vector<CurrentPulse> pulses;
    std::function<double(double)> custom;  // pA as a function of t (ms)

    double operator()(double t) const {
        double I = 0.0;
        for (const auto& p : pulses)
            if (t >= p.t0 && t < p.t0 + p.duration) I += p.amplitude;
        if (custom) I += custom(t);
        return I;
    }
    bool empty() const { return pulses.empty() && !custom; }
};

// N neurons coupled through conductance-based synapses. G is dense
// row-major, entry (post, pre) = peak conductance in nS; the sign of a
// synapse's influence comes from the presynaptic V_n, so all entries
// are >= 0.
struct Network {
    std::vector<NeuronParams> params;
    std::vector<NeuronState> states;
    std::vector<double> G;  // size N*N, G[post*N + pre] (nS)
    std::vector<ExternalSource> external;

    int size() const { return static_cast<int>(params.size()); }
    double conductance(int post, int pre) const { return G[static_cast<size_t>(post) * params.size() + pre]; }
    double& conductance(int post, int pre) { return G[static_cast<size_t>(post) * params.size() + pre]; }

    // Reset every neuron to its resting point (v = V_r, u = x = y = 0).
    void reset_to_rest() {
        for (int i = 0; i < size(); ++i) states[i] = {params[i].V_r, 0.0, 0.0, 0.0};
    }
};

struct Synapse {
    int pre = 0;
    int post = 0;
    double conductance = 0.0;  // nS
};

// Assemble a Network at rest. Duplicate (pre, post) entries sum their
// conductances. Throws std::invalid_argument on an out-of-range index
// or a negative conductance.
Network build_network(const std::vector<NeuronParams>& cells, const std::vector<Synapse>& synapses);

// Eq. 2 input to neuron i: sum_j g_i^j x_j (V_n,j - v_i), plus the
// external source evaluated at time t.
double synaptic_current(const Network& net, int i, double t = 0.0);

// Time-stamped firing events. Events are appended in simulation order,
// so times are nondecreasing overall and strictly increasing per neuron.
struct SpikeRecord {
    struct Event {
        double t = 0.0;  // ms
        int neuron = 0;
    };
    std::vector<Event> events;

    void add(double t, int neuron) { events.push_back({t, neuron}); }
    std::vector<double> times_for(int neuron) const {
        std::vector<double> out;
        for (const auto& e : events)
            if (e.neuron == neuron) out.push_back(e.t);
        return out;
    }
    int count_in_window(int neuron, double t_begin, double t_end) const {
        int n = 0;
        for (const auto& e : events)
            if (e.neuron == neuron && e.t > t_begin && e.t <= t_end) ++n;
        return n;
    }
};

// Non-spiking muscle cell: a leaky first-order filter of the presynaptic
// activations, producing an actuation effort in [0, 1]. Lives outside
// the neuron array and never feeds back into Eq. 2.
struct MuscleCell {
    double v_m = 0.0;     // depolarization relative to rest (mV)
    double tau_m = 50.0;  // membrane time constant (ms)
    double C_m = 100.0;   // membrane capacitance (pF)
    double gain = 0.02;   // effort per mV of depolarization
    double v_rest = -60.0;  // resting potential used as the drive reference (mV)
    std::vector<std::pair<int, double>> sources;  // (presynaptic neuron, conductance nS)

    double effort() const { return std::clamp(gain * v_m, 0.0, 1.0); }
};

// Advance one muscle cell by dt with presynaptic activations held
// constant over the step (exact update of the linear filter). Returns
// the effort after the step.
double muscle_step(MuscleCell& m, const Network& net, double dt);

}  // namespace spikelatch
