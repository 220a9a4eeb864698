#pragma once

#include <array>
#include <vector>

#include "spikelatch/engine.hpp"
#include "spikelatch/latch.hpp"
#include "spikelatch/network.hpp"

namespace spikelatch {

// Four bistable modules in a ring form a one-hot state machine: the
// active module recruits its successor through a feed-forward synapse,
// and a newly latched module shuts its predecessor down by firing the
// predecessor's interneuron. Each module drives one actuator's extensor
// muscle and the opposite actuator's flexor, producing a cyclic gait.

inline constexpr int kRingModules = 4;
inline constexpr int kMuscles = 2 * kRingModules; // extensors 0..3, flexors 4..7

// Muscle wiring constants: every module output feeds its muscles through
// one synapse of this conductance; gain is calibrated so one active
// module saturates its muscles' effort near 0.8.
struct MuscleConfig {
    double tau_m = 50.0;       // ms
    double gain = 0.0228;      // effort per mV
    double conductance = 10.0; // output -> muscle (nS)
};

// Ring successor: A -> B -> C -> D -> A.
constexpr int ring_successor(int m) { return (m + 1) % kRingModules; }
constexpr int ring_predecessor(int m) { return (m + 3) % kRingModules; }
// Actuator mirror pairs (0,2) and (1,3).
constexpr int opposite_actuator(int a) { return (a + 2) % kRingModules; }

struct RingCPG {
    Network net; // 12 neurons: module m occupies indices 3m..3m+2
    std::array<LatchTopology, kRingModules> modules;
    std::array<MuscleCell, kMuscles> muscles; // [0..3] extensors, [4..7] flexors
    NeuronParams exc, inh;
    SynapticParams syn;
    MuscleConfig muscle_cfg;

    static int extensor(int actuator) { return actuator; }
    static int flexor(int actuator) { return kRingModules + actuator; }
};

// 12-neuron ring at rest: per module m, output(m) -> E1(successor(m)) at
// G_ffw and output(successor(m)) -> I(m) at G_fb; module m's output also
// drives extensor(m) and flexor(opposite_actuator(m)).
RingCPG build_ring(const NeuronParams& exc, const NeuronParams& inh, const SynapticParams& syn,
                   const MuscleConfig& muscle_cfg = MuscleConfig{});
RingCPG build_ring(); // nominal presets

// Idealized actuator bank: each extension z_i in [0, 1] follows a linear
// damped mass, mass * z'' = drive - damping * z', with the net drive
// extensor effort minus flexor effort, velocity limited to slew_max and
// zeroed at the stroke stops.
struct PlantConfig {
    double mass = 400000.0;  // effort-ms^2 per unit stroke
    double damping = 800.0;  // effort-ms per unit stroke
    double slew_max = 2e-3;  // max |dz/dt| (1/ms)
};

struct PlantState {
    std::array<double, kRingModules> z{};    // extension, fraction of stroke
    std::array<double, kRingModules> zdot{}; // 1/ms
};

// One zero-order-hold plant step (efforts constant over dt). dt > 0.
PlantState plant_step(const PlantState& ps, const PlantConfig& cfg,
                      const std::array<double, kMuscles>& efforts, double dt);

// Proprioceptive gating current (pA): -k_p * (1 + z_opp - z_prev), always
// in [-2 k_p, 0]. The inhibition on a module's excitatory cells releases
// only when the previous phase's actuator has extended (z_prev -> 1) and
// its mirror actuator has retracted (z_opp -> 0).
double proprioceptive_current(double z_prev, double z_opp, double k_p = 25.0);

enum class GaitMode { open, closed };

struct GaitConfig {
    double dt = 0.5;            // outer fixed step, ms (neural/plant ZOH)
    double k_p = 25.0;          // feedback gain, pA (closed loop only)
    PlantConfig plant{};
    double set_amplitude = 870.0; // initial pulse into module A's E1 (pA)
    double set_t0 = 10.0;         // ms
    double set_duration = 5.0;    // ms
    int record_every = 1;         // sample the traces every this many steps
};

// Plant-side trace, row-aligned with the neural trajectory samples.
struct PlantTrace {
    std::vector<double> times;                                 // ms
    std::vector<std::array<double, kMuscles>> efforts;         // per muscle
    std::vector<std::array<double, kRingModules>> z;           // per actuator
    std::vector<std::array<double, kRingModules>> zdot;        // per actuator
    std::vector<std::array<double, kRingModules>> feedback;    // pA per module
};

struct GaitResult {
    Trajectory traj; // 12-neuron samples + spike record
    PlantTrace plant;
};

// Run the ring for `duration` ms from rest with a set pulse into module
// A. Closed mode injects the proprioceptive current into both excitatory
// cells of every module (z_prev: the actuator commanded by the previous
// module, z_opp: that actuator's mirror); open mode omits it. Neural and
// plant steps alternate synchronously at cfg.dt with zero-order hold in
// both directions.
GaitResult run_gait(const RingCPG& ring, GaitMode mode, double duration,
                    const GaitConfig& cfg = GaitConfig{});

// Dual-ring escape reflex: a forward ring, a reverse ring sharing the
// same actuators with the phase order reversed, and one trigger cell.
// When an external stimulus fires the trigger, it resets every forward
// module through its interneuron and sets the reverse ring's entry
// module, so locomotion restarts in the opposite direction and stays
// there (repeated stimuli re-enter the same reverse mode).
struct ReversalCPG {
    Network net; // 25 neurons: forward 0..11, reverse 12..23, trigger 24
    std::array<LatchTopology, kRingModules> forward;
    std::array<LatchTopology, kRingModules> reverse;
    int trigger = 24;
    std::array<MuscleCell, kMuscles> muscles;
    NeuronParams exc, inh;
    SynapticParams syn;
    MuscleConfig muscle_cfg;

    // Reverse module m walks the actuators in descending order.
    static int reverse_actuator(int m) { return (kRingModules - m) % kRingModules; }
};

ReversalCPG build_reversal(const NeuronParams& exc, const NeuronParams& inh,
                           const SynapticParams& syn,
                           const MuscleConfig& muscle_cfg = MuscleConfig{});
ReversalCPG build_reversal(); // nominal presets

struct ReversalConfig {
    double dt = 0.5;
    PlantConfig plant{};
    double set_amplitude = 870.0; // initial pulse into the forward ring
    double set_t0 = 10.0;
    double set_duration = 5.0;
    double stimulus_amplitude = 400.0; // aversive pulse into the trigger (pA)
    double stimulus_duration = 60.0;   // ms; long enough for a trigger burst
    int record_every = 1;
};

// Run the reversal network open loop for `duration` ms, applying the
// aversive stimulus to the trigger cell at each time in `stimulus_times`.
GaitResult run_reversal(const ReversalCPG& rev, double duration,
                        const std::vector<double>& stimulus_times,
                        const ReversalConfig& cfg = ReversalConfig{});

} // namespace spikelatch
