#include "spikelatch/network.hpp"

#include <cmath>
#include <stdexcept>

namespace spikelatch {

Network build_network(const std::vector<NeuronParams>& cells, const std::vector<Synapse>& synapses) {
    Network net;
    const int n = static_cast<int>(cells.size());
    net.params = cells;
    net.states.resize(cells.size());
    net.G.assign(static_cast<size_t>(n) * n, 0.0);
    net.external.resize(cells.size());
    for (const auto& s : synapses) {
        if (s.pre < 0 || s.pre >= n || s.post < 0 || s.post >= n)
            throw std::invalid_argument("build_network: synapse index out of range");
        if (s.conductance < 0.0)
            throw std::invalid_argument("build_network: negative conductance");
        net.conductance(s.post, s.pre) += s.conductance;
    }
    net.reset_to_rest();
    return net;
}

double synaptic_current(const Network& net, int i, double t) {
    const int n = net.size();
    const double v_i = net.states[i].v;
    double I = 0.0;
    for (int j = 0; j < n; ++j) {
        const double g = net.G[static_cast<size_t>(i) * n + j];
        if (g != 0.0) I += g * net.states[j].x * (net.params[j].V_n - v_i);
    }
    if (!net.external[i].empty()) I += net.external[i](t);
    return I;
}

double muscle_step(MuscleCell& m, const Network& net, double dt) {
    double drive = 0.0;  // pA
    for (const auto& [pre, g] : m.sources)
        drive += g * net.states[pre].x * (net.params[pre].V_n - m.v_rest);
    // dv_m/dt = -v_m/tau_m + drive/C_m, drive held over the step.
    const double decay = std::exp(-dt / m.tau_m);
    m.v_m = m.v_m * decay + (drive * m.tau_m / m.C_m) * (1.0 - decay);
    return m.effort();
}

}  // namespace spikelatch
