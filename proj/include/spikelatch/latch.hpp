#pragma once

#include "spikelatch/engine.hpp"
#include "spikelatch/network.hpp"
#include "spikelatch/neuron.hpp"

namespace spikelatch {

// Peak synaptic conductances of the bistable module and its inter-module
// pathways (nS). Defaults are the nominal operating point.
struct SynapticParams {
    double G_exc = 20.0; // E1 <-> E2 mutual excitation
    double G_inh = 10.0; // I -> {E1, E2} inhibition
    double G_rst = 5.0;  // {E1, E2} -> I priming
    double G_ffw = 10.0; // module output -> successor E1 (ring wiring)
    double G_fb = 10.0;  // successor output -> predecessor I (ring wiring)
};

// Index bookkeeping for one 3-cell module inside a Network.
struct LatchTopology {
    int e1 = 0;
    int e2 = 1;
    int i = 2;

    int set_target() const { return e1; }
    int reset_target() const { return i; }
    int output() const { return e2; }
};

// A standalone 3-neuron module plus the ingredients it was built from
// (kept so analysis code can rebuild modified copies).
struct Latch {
    Network net;
    LatchTopology topo;
    NeuronParams exc1, exc2, inh;
    SynapticParams syn;
};

// Measured limit-cycle period of the nominal module (ms); regression
// constant, re-derived by the analysis tests.
inline constexpr double kNominalPeriodMs = 42.5;

// Default trailing window for spike-based activity classification:
// three nominal cycles.
inline constexpr double kDefaultActivityWindowMs = 3.0 * kNominalPeriodMs;

// Wires E1 <-> E2 at G_exc, E1/E2 -> I at G_rst, and I -> E1/E2 at G_inh;
// all states at rest. The two-argument form uses `exc` for both E1 and E2.
Latch build_latch(const NeuronParams& exc1, const NeuronParams& exc2, const NeuronParams& inh,
                  const SynapticParams& syn);
Latch build_latch(const NeuronParams& exc, const NeuronParams& inh, const SynapticParams& syn);
Latch build_latch(); // nominal presets

// Adds a rectangular current pulse to the target's external source.
// Overlapping pulses on one target sum.
void stimulate(Network& net, int target, double amplitude, double t0, double duration);

enum class Activity { inactive, active };

// Spike-based classification: active iff both excitatory cells fired within
// the trailing window (t - window, t].
Activity classify_activity(const SpikeRecord& spikes, const LatchTopology& topo, double window,
                           double t);
Activity classify_activity(const SpikeRecord& spikes, const LatchTopology& topo, double t);

// Minimum rectangular-pulse amplitude (pA, fixed duration) that makes
// `target` fire, found by bisection to `resolution` pA. The probe pulse
// starts at `t0` on top of whatever stimulation `base` already carries.
double firing_threshold(const Latch& base, int target, double t0, double duration = 5.0,
                        double resolution = 1.0, double amplitude_cap = 64000.0);

// Default set-pulse amplitude: twice E1's firing threshold from rest.
double default_set_amplitude(const Latch& latch);

struct ResetThresholds {
    double while_active = 0.0;   // pA
    double while_inactive = 0.0; // pA
};

// Minimum reset-pulse amplitude that fires the interneuron, measured with
// identical pulse timing in the active and the resting condition. The
// priming pathway makes the active-condition threshold strictly lower.
ResetThresholds marginal_reset_property(const Latch& latch, double resolution = 1.0);

} // namespace spikelatch
