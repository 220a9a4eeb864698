#include "spikelatch/cpg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spikelatch {

namespace {

// Six intra-module synapses for a module whose cells sit at base..base+2.
void append_module_synapses(std::vector<Synapse>& out, int base, const SynapticParams& syn) {
    const int e1 = base, e2 = base + 1, i = base + 2;
    out.push_back({e1, e2, syn.G_exc});
    out.push_back({e2, e1, syn.G_exc});
    out.push_back({e1, i, syn.G_rst});
    out.push_back({e2, i, syn.G_rst});
    out.push_back({i, e1, syn.G_inh});
    out.push_back({i, e2, syn.G_inh});
}

// Ring wiring for four consecutive modules starting at `first`: module m's
// output recruits its successor's E1 and the successor's output silences
// module m through its interneuron.
void append_ring_synapses(std::vector<Synapse>& out, int first, const SynapticParams& syn) {
    for (int m = 0; m < kRingModules; ++m) {
        const int s = ring_successor(m);
        const int out_m = first + 3 * m + 1;
        const int out_s = first + 3 * s + 1;
        const int e1_s = first + 3 * s;
        const int i_m = first + 3 * m + 2;
        out.push_back({out_m, e1_s, syn.G_ffw});
        out.push_back({out_s, i_m, syn.G_fb});
    }
}

MuscleCell make_muscle(const MuscleConfig& cfg) {
    MuscleCell m;
    m.tau_m = cfg.tau_m;
    m.gain = cfg.gain;
    return m;
}

double actuator_drive(const std::array<double, kMuscles>& efforts, int actuator) {
    return efforts[(size_t)RingCPG::extensor(actuator)] -
           efforts[(size_t)RingCPG::flexor(actuator)];
}

// Shared fixed-step gait loop. `feedback` fills the per-neuron extra
// current for the step from the current plant state (no-op when null).
template <typename FeedbackFn>
GaitResult run_loop(Network net, std::array<MuscleCell, kMuscles> muscles, double duration,
                    double dt, const PlantConfig& plant, int record_every,
                    FeedbackFn&& feedback) {
    if (duration <= 0.0) throw std::invalid_argument("run_gait: duration must be positive");
    if (dt <= 0.0) throw std::invalid_argument("run_gait: dt must be positive");
    if (record_every < 1) throw std::invalid_argument("run_gait: record_every must be >= 1");

    GaitResult out;
    PlantState ps;
    std::array<double, kMuscles> efforts{};
    std::vector<double> extra((size_t)net.size(), 0.0);
    std::array<double, kRingModules> fb{};

    const auto record = [&](double t) {
        out.traj.times.push_back(t);
        out.traj.samples.push_back(net.states);
        out.plant.times.push_back(t);
        out.plant.efforts.push_back(efforts);
        out.plant.z.push_back(ps.z);
        out.plant.zdot.push_back(ps.zdot);
        out.plant.feedback.push_back(fb);
    };

    FixedStepper stepper(net);
    record(0.0);
    const long steps = std::lround(std::ceil(duration / dt));
    for (long s = 0; s < steps; ++s) {
        const double t = dt * static_cast<double>(s);
        feedback(ps, extra, fb);
        const std::vector<int>& fired = stepper.advance(t, dt, extra);
        const double t1 = dt * static_cast<double>(s + 1);
        for (int i : fired) out.traj.spikes.add(t1, i);
        if ((s + 1) % record_every == 0) record(t1);
        stepper.finish();
        for (size_t j = 0; j < muscles.size(); ++j)
            efforts[j] = muscle_step(muscles[j], net, dt);
        ps = plant_step(ps, plant, efforts, dt);
    }
    return out;
}

} // namespace

RingCPG build_ring(const NeuronParams& exc, const NeuronParams& inh, const SynapticParams& syn,
                   const MuscleConfig& muscle_cfg) {
    RingCPG ring;
    ring.exc = exc;
    ring.inh = inh;
    ring.syn = syn;
    ring.muscle_cfg = muscle_cfg;

    std::vector<NeuronParams> cells;
    std::vector<Synapse> synapses;
    for (int m = 0; m < kRingModules; ++m) {
        cells.push_back(exc);
        cells.push_back(exc);
        cells.push_back(inh);
        append_module_synapses(synapses, 3 * m, syn);
        ring.modules[(size_t)m] = LatchTopology{3 * m, 3 * m + 1, 3 * m + 2};
    }
    append_ring_synapses(synapses, 0, syn);
    ring.net = build_network(cells, synapses);

    for (int m = 0; m < kRingModules; ++m) {
        const int output = ring.modules[(size_t)m].output();
        ring.muscles[(size_t)RingCPG::extensor(m)] = make_muscle(muscle_cfg);
        ring.muscles[(size_t)RingCPG::extensor(m)].sources.push_back(
            {output, muscle_cfg.conductance});
        ring.muscles[(size_t)RingCPG::flexor(opposite_actuator(m))] = make_muscle(muscle_cfg);
        ring.muscles[(size_t)RingCPG::flexor(opposite_actuator(m))].sources.push_back(
            {output, muscle_cfg.conductance});
    }
    return ring;
}

RingCPG build_ring() {
    return build_ring(NeuronParams::regular_spiking(), NeuronParams::low_threshold_spiking(),
                      SynapticParams{});
}

PlantState plant_step(const PlantState& ps, const PlantConfig& cfg,
                      const std::array<double, kMuscles>& efforts, double dt) {
    if (dt <= 0.0) throw std::invalid_argument("plant_step: dt must be positive");
    PlantState next = ps;
    const double tau_v = cfg.mass / cfg.damping; // velocity relaxation time (ms)
    const double decay = std::exp(-dt / tau_v);
    for (int a = 0; a < kRingModules; ++a) {
        const double v_ss = actuator_drive(efforts, a) / cfg.damping;
        double v = ps.zdot[(size_t)a] * decay + v_ss * (1.0 - decay);
        v = std::clamp(v, -cfg.slew_max, cfg.slew_max);
        double z = ps.z[(size_t)a] + v * dt;
        if (z <= 0.0) {
            z = 0.0;
            v = 0.0;
        } else if (z >= 1.0) {
            z = 1.0;
            v = 0.0;
        }
        next.z[(size_t)a] = z;
        next.zdot[(size_t)a] = v;
    }
    return next;
}

double proprioceptive_current(double z_prev, double z_opp, double k_p) {
    return -k_p * (1.0 + z_opp - z_prev);
}

GaitResult run_gait(const RingCPG& ring, GaitMode mode, double duration, const GaitConfig& cfg) {
    Network net = ring.net;
    stimulate(net, ring.modules[0].set_target(), cfg.set_amplitude, cfg.set_t0,
              cfg.set_duration);

    const auto feedback = [&ring, mode, &cfg](const PlantState& ps, std::vector<double>& extra,
                                              std::array<double, kRingModules>& fb) {
        if (mode != GaitMode::closed) return;
        for (int m = 0; m < kRingModules; ++m) {
            const int prev_act = ring_predecessor(m); // actuator commanded by module m-1
            const double I = proprioceptive_current(
                ps.z[(size_t)prev_act], ps.z[(size_t)opposite_actuator(prev_act)], cfg.k_p);
            fb[(size_t)m] = I;
            extra[(size_t)ring.modules[(size_t)m].e1] = I;
            extra[(size_t)ring.modules[(size_t)m].e2] = I;
        }
    };
    return run_loop(std::move(net), ring.muscles, duration, cfg.dt, cfg.plant,
                    cfg.record_every, feedback);
}

ReversalCPG build_reversal(const NeuronParams& exc, const NeuronParams& inh,
                           const SynapticParams& syn, const MuscleConfig& muscle_cfg) {
    ReversalCPG rev;
    rev.exc = exc;
    rev.inh = inh;
    rev.syn = syn;
    rev.muscle_cfg = muscle_cfg;

    std::vector<NeuronParams> cells;
    std::vector<Synapse> synapses;
    for (int ringno = 0; ringno < 2; ++ringno) {
        const int first = 12 * ringno;
        for (int m = 0; m < kRingModules; ++m) {
            cells.push_back(exc);
            cells.push_back(exc);
            cells.push_back(inh);
            append_module_synapses(synapses, first + 3 * m, syn);
            const LatchTopology topo{first + 3 * m, first + 3 * m + 1, first + 3 * m + 2};
            (ringno == 0 ? rev.forward : rev.reverse)[(size_t)m] = topo;
        }
        append_ring_synapses(synapses, first, syn);
    }
    cells.push_back(exc); // trigger cell
    rev.trigger = 24;
    for (int m = 0; m < kRingModules; ++m) {
        synapses.push_back({rev.trigger, rev.forward[(size_t)m].reset_target(), syn.G_fb});
    }
    synapses.push_back({rev.trigger, rev.reverse[0].set_target(), syn.G_ffw});
    rev.net = build_network(cells, synapses);

    for (auto& muscle : rev.muscles) muscle = make_muscle(muscle_cfg);
    for (int m = 0; m < kRingModules; ++m) {
        const int fwd_out = rev.forward[(size_t)m].output();
        rev.muscles[(size_t)RingCPG::extensor(m)].sources.push_back(
            {fwd_out, muscle_cfg.conductance});
        rev.muscles[(size_t)RingCPG::flexor(opposite_actuator(m))].sources.push_back(
            {fwd_out, muscle_cfg.conductance});

        const int a = ReversalCPG::reverse_actuator(m);
        const int rev_out = rev.reverse[(size_t)m].output();
        rev.muscles[(size_t)RingCPG::extensor(a)].sources.push_back(
            {rev_out, muscle_cfg.conductance});
        rev.muscles[(size_t)RingCPG::flexor(opposite_actuator(a))].sources.push_back(
            {rev_out, muscle_cfg.conductance});
    }
    return rev;
}

ReversalCPG build_reversal() {
    return build_reversal(NeuronParams::regular_spiking(),
                          NeuronParams::low_threshold_spiking(), SynapticParams{});
}

GaitResult run_reversal(const ReversalCPG& rev, double duration,
                        const std::vector<double>& stimulus_times, const ReversalConfig& cfg) {
    Network net = rev.net;
    stimulate(net, rev.forward[0].set_target(), cfg.set_amplitude, cfg.set_t0,
              cfg.set_duration);
    for (double t : stimulus_times)
        stimulate(net, rev.trigger, cfg.stimulus_amplitude, t, cfg.stimulus_duration);

    return run_loop(std::move(net), rev.muscles, duration, cfg.dt, cfg.plant, cfg.record_every,
                    [](const PlantState&, std::vector<double>&, std::array<double, 4>&) {});
}

} // namespace spikelatch
