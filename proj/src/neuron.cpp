#include "spikelatch/neuron.hpp"

namespace spikelatch {

double neuron_param_get(const NeuronParams& p, int index) {
    switch (index) {
        case 0: return p.a;
        case 1: return p.b;
        case 2: return p.c;
        case 3: return p.d;
        case 4: return p.C;
        case 5: return p.k;
        case 6: return p.V_r;
        case 7: return p.V_t;
        case 8: return p.V_n;
        case 9: return p.V_p;
        case 10: return p.tau;
        default: throw std::out_of_range("neuron_param_get: index out of range");
    }
}

void neuron_param_set(NeuronParams& p, int index, double value) {
    switch (index) {
        case 0: p.a = value; break;
        case 1: p.b = value; break;
        case 2: p.c = value; break;
        case 3: p.d = value; break;
        case 4: p.C = value; break;
        case 5: p.k = value; break;
        case 6: p.V_r = value; break;
        case 7: p.V_t = value; break;
        case 8: p.V_n = value; break;
        case 9: p.V_p = value; break;
        case 10: p.tau = value; break;
        default: throw std::out_of_range("neuron_param_set: index out of range");
    }
}

NeuronState derivatives(const NeuronParams& p, const NeuronState& s, double I) {
    NeuronState ds;
    ds.v = (p.k * (s.v - p.V_r) * (s.v - p.V_t) - s.u + I) / p.C;
    ds.u = p.a * (p.b * (s.v - p.V_r) - s.u);
    ds.x = s.y / p.tau;
    ds.y = -(2.0 * s.y + s.x) / p.tau;
    return ds;
}

NeuronState spike_reset(const NeuronParams& p, const NeuronState& s) {
    NeuronState r = s;
    r.v = p.c;
    r.u = s.u + p.d;
    r.y = s.y + 1.0;
    return r;
}

double alpha_activation(double t, double tau) {
    if (t < 0.0) throw std::invalid_argument("alpha_activation: t must be >= 0");
    return (t / tau) * std::exp(-t / tau);
}

}  // namespace spikelatch
