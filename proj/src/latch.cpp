#include "spikelatch/latch.hpp"

#include <cmath>
#include <stdexcept>

namespace spikelatch {

Latch build_latch(const NeuronParams& exc1, const NeuronParams& exc2, const NeuronParams& inh,
                  const SynapticParams& syn) {
    for (double g : {syn.G_exc, syn.G_inh, syn.G_rst, syn.G_ffw, syn.G_fb})
        if (g < 0.0) throw std::invalid_argument("build_latch: conductances must be >= 0");

    const LatchTopology topo; // e1=0, e2=1, i=2
    Network net = build_network({exc1, exc2, inh}, {
                                                       {topo.e1, topo.e2, syn.G_exc},
                                                       {topo.e2, topo.e1, syn.G_exc},
                                                       {topo.e1, topo.i, syn.G_rst},
                                                       {topo.e2, topo.i, syn.G_rst},
                                                       {topo.i, topo.e1, syn.G_inh},
                                                       {topo.i, topo.e2, syn.G_inh},
                                                   });
    return Latch{std::move(net), topo, exc1, exc2, inh, syn};
}

Latch build_latch(const NeuronParams& exc, const NeuronParams& inh, const SynapticParams& syn) {
    return build_latch(exc, exc, inh, syn);
}

Latch build_latch() {
    return build_latch(NeuronParams::regular_spiking(), NeuronParams::low_threshold_spiking(),
                       SynapticParams{});
}

void stimulate(Network& net, int target, double amplitude, double t0, double duration) {
    if (target < 0 || target >= net.size())
        throw std::invalid_argument("stimulate: target out of range");
    if (duration <= 0.0) throw std::invalid_argument("stimulate: duration must be positive");
    net.external[target].pulses.push_back({amplitude, t0, duration});
}

Activity classify_activity(const SpikeRecord& spikes, const LatchTopology& topo, double window,
                           double t) {
    if (window <= 0.0) throw std::invalid_argument("classify_activity: window must be positive");
    const bool e1 = spikes.count_in_window(topo.e1, t - window, t) > 0;
    const bool e2 = spikes.count_in_window(topo.e2, t - window, t) > 0;
    return (e1 && e2) ? Activity::active : Activity::inactive;
}

Activity classify_activity(const SpikeRecord& spikes, const LatchTopology& topo, double t) {
    return classify_activity(spikes, topo, kDefaultActivityWindowMs, t);
}

namespace {

// Does `target` fire when a pulse of the given amplitude is applied at t0?
// The run covers the pulse plus a settling margin for delayed upstrokes,
// and stops at the first target spike. Callers probe targets that are
// silent without the pulse, so the first spike is the pulse's doing.
bool pulse_fires(const Latch& base, int target, double amplitude, double t0, double duration) {
    Latch probe = base;
    stimulate(probe.net, target, amplitude, t0, duration);
    AdaptiveRun run;
    run.t_end = t0 + duration + 60.0;
    run.stop_neuron = target;
    return integrate_adaptive_run(probe.net, SimConfig{}, run).stopped_on_event;
}

} // namespace

double firing_threshold(const Latch& base, int target, double t0, double duration,
                        double resolution, double amplitude_cap) {
    if (resolution <= 0.0) throw std::invalid_argument("firing_threshold: resolution must be > 0");
    double lo = 0.0;  // never fires at zero extra input (resting attractor)
    double hi = 256.0;
    while (!pulse_fires(base, target, hi, t0, duration)) {
        hi *= 2.0;
        if (hi > amplitude_cap)
            throw std::runtime_error("firing_threshold: search bracket exhausted");
    }
    while (hi - lo > resolution) {
        const double mid = 0.5 * (lo + hi);
        (pulse_fires(base, target, mid, t0, duration) ? hi : lo) = mid;
    }
    return hi;
}

double default_set_amplitude(const Latch& latch) {
    return 2.0 * firing_threshold(latch, latch.topo.set_target(), 20.0);
}

ResetThresholds marginal_reset_property(const Latch& latch, double resolution) {
    // Identical probe timing in both conditions; in the active condition the
    // module is set well before the probe so the cycle is established.
    const double probe_t0 = 220.0;
    const double set_amp = default_set_amplitude(latch);

    Latch active = latch;
    active.net.reset_to_rest();
    stimulate(active.net, latch.topo.set_target(), set_amp, 20.0, 5.0);

    Latch inactive = latch;
    inactive.net.reset_to_rest();

    ResetThresholds out;
    out.while_active = firing_threshold(active, latch.topo.reset_target(), probe_t0, 5.0, resolution);
    out.while_inactive =
        firing_threshold(inactive, latch.topo.reset_target(), probe_t0, 5.0, resolution);
    return out;
}

} // namespace spikelatch
