#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spikelatch/network.hpp"

namespace spikelatch {

struct SimConfig {
    double dt = 0.5;         // fixed step (ms); embedded regime is 0.1..1.0
    double t_end = 1000.0;   // horizon (ms)
    double event_tol = 1e-4; // spike-time location tolerance (ms)
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double max_step = 1.0;     // adaptive step ceiling (ms)
    double sample_every = 0.1; // trajectory sample spacing (ms)
};

// Raised when a state goes non-finite or the adaptive step size
// underflows. Carries the neuron and time at which it happened.
class SimulationError : public std::runtime_error {
public:
    SimulationError(const std::string& what, int neuron, double t)
        : std::runtime_error(what), neuron_(neuron), time_(t) {}
    int neuron() const { return neuron_; }
    double time() const { return time_; }

private:
    int neuron_;
    double time_;
};

struct Trajectory {
    std::vector<double> times;                     // ms, strictly increasing
    std::vector<std::vector<NeuronState>> samples; // one state vector per time
    SpikeRecord spikes;
};

// Advance the whole network by one explicit RK4 step. Any neuron whose
// post-step v >= V_p is clamped to V_p, reported in the returned index
// set, and reset before the function returns, so the network is ready
// for the next step. `extra` is an optional per-neuron current added to
// the external sources, sampled once (zero-order hold).
std::vector<int> step_fixed(Network& net, double t, double dt, std::span<const double> extra = {});

// Fixed-step integration of [0, cfg.t_end] at cfg.dt, recording one
// sample per step. Samples at spike steps hold the clamped peak
// (v = V_p) before the reset is applied.
Trajectory simulate_fixed(Network& net, const SimConfig& cfg);

// Adaptive integration with precise spike-event location: each crossing
// of v_i = V_p is located to within cfg.event_tol by bisection, the
// reset map is applied exactly at the located event, and integration
// restarts from the post-reset state.
Trajectory integrate_adaptive(Network& net, const SimConfig& cfg);

// Reusable fixed-step driver bound to one Network. Caches the synapse
// list, so the network's topology must not change between steps.
class FixedStepper {
public:
    explicit FixedStepper(Network& net);
    ~FixedStepper();
    FixedStepper(const FixedStepper&) = delete;
    FixedStepper& operator=(const FixedStepper&) = delete;

    // Advance by dt from time t. Fired neurons are left clamped at V_p
    // and not yet reset, so the caller can sample the peak.
    const std::vector<int>& advance(double t, double dt, std::span<const double> extra = {});

    // Apply the spike reset for the fired set of the last advance().
    void finish();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Low-level adaptive driver shared by the analysis modules.
struct AdaptiveRun {
    double t_start = 0.0;
    double t_end = 0.0;
    int stop_neuron = -1;       // stop right after this neuron's reset (-1: run to t_end)
    SpikeRecord* spikes = nullptr;
    Trajectory* traj = nullptr; // when set, samples are recorded at <= sample_every spacing
};
struct AdaptiveResult {
    double t_final = 0.0;
    bool stopped_on_event = false;
};
AdaptiveResult integrate_adaptive_run(Network& net, const SimConfig& cfg, const AdaptiveRun& run);

}  // namespace spikelatch
