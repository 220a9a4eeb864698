#pragma once

#include <cmath>
#include <stdexcept>

namespace spikelatch {

// Izhikevich neuron constants. All dynamics are integrated directly in
// (mV, ms, pA, nS, pF); the system is closed under these units.
struct NeuronParams {
    double a;    // characteristic rate of u (1/ms)
    double b;    // leakage conductance (nS)
    double c;    // downstroke return voltage (mV)
    double d;    // downstroke inrush current (pA)
    double C;    // membrane capacitance (pF)
    double k;    // sodium channel gain (nS/mV)
    double V_r;  // resting potential (mV)
    double V_t;  // threshold voltage (mV)
    double V_n;  // synaptic reversal potential (mV)
    double V_p;  // action potential peak (mV)
    double tau;  // synaptic time constant (ms)

    // Regular-spiking pyramidal cell (excitatory).
    static constexpr NeuronParams regular_spiking() {
        return {0.03, -2.0, -50.0, 100.0, 100.0, 0.7, -60.0, -40.0, 0.0, 35.0, 5.0};
    }

    // Low-threshold-spiking interneuron (inhibitory).
    static constexpr NeuronParams low_threshold_spiking() {
        return {0.03, 8.0, -53.0, 20.0, 100.0, 1.0, -56.0, -42.0, -70.0, 20.0, 20.0};
    }
};

// Number of scalar constants in NeuronParams, in declaration order.
inline constexpr int kNeuronParamCount = 11;

// Canonical names for the NeuronParams fields, index-aligned with
// neuron_param_get/set below.
inline constexpr const char* kNeuronParamNames[kNeuronParamCount] = {
    "a", "b", "c", "d", "C", "k", "V_r", "V_t", "V_n", "V_p", "tau",
};

double neuron_param_get(const NeuronParams& p, int index);
void neuron_param_set(NeuronParams& p, int index, double value);

// Phase variables of one neuron. The same struct doubles as the
// derivative vector (dv, du, dx, dy).
struct NeuronState {
    double v = 0.0;  // membrane voltage (mV)
    double u = 0.0;  // recovery current (pA)
    double x = 0.0;  // synaptic activation (dimensionless)
    double y = 0.0;  // synaptic activation rate variable, y = tau*dx/dt
};

// Time derivative of the continuous dynamics for input current I (pA):
//   dv = (k(v - V_r)(v - V_t) - u + I)/C
//   du = a(b(v - V_r) - u)
//   dx = y/tau
//   dy = -(2y + x)/tau
NeuronState derivatives(const NeuronParams& p, const NeuronState& s, double I);

// Discrete map applied when v reaches V_p: v <- c, u <- u + d, y <- y + 1.
// x is not touched by the reset.
NeuronState spike_reset(const NeuronParams& p, const NeuronState& s);

// Closed-form synaptic activation (t/tau) e^(-t/tau) following a single
// firing event at t = 0. Reference value for checking the (x, y)
// subsystem; throws std::invalid_argument for t < 0.
double alpha_activation(double t, double tau);

}  // namespace spikelatch
