#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "spikelatch/neuron.hpp"

using namespace spikelatch;

TEST_CASE("regular-spiking preset values") {
    const NeuronParams p = NeuronParams::regular_spiking();
    CHECK(p.a == 0.03);
    CHECK(p.b == -2.0);
    CHECK(p.c == -50.0);
    CHECK(p.d == 100.0);
    CHECK(p.C == 100.0);
    CHECK(p.k == 0.7);
    CHECK(p.V_r == -60.0);
    CHECK(p.V_t == -40.0);
    CHECK(p.V_n == 0.0);
    CHECK(p.V_p == 35.0);
    CHECK(p.tau == 5.0);
}

TEST_CASE("low-threshold-spiking preset values") {
    const NeuronParams p = NeuronParams::low_threshold_spiking();
    CHECK(p.a == 0.03);
    CHECK(p.b == 8.0);
    CHECK(p.c == -53.0);
    CHECK(p.d == 20.0);
    CHECK(p.C == 100.0);
    CHECK(p.k == 1.0);
    CHECK(p.V_r == -56.0);
    CHECK(p.V_t == -42.0);
    CHECK(p.V_n == -70.0);
    CHECK(p.V_p == 20.0);
    CHECK(p.tau == 20.0);
}

TEST_CASE("presets satisfy basic parameter constraints") {
    for (const NeuronParams& p :
         {NeuronParams::regular_spiking(), NeuronParams::low_threshold_spiking()}) {
        CHECK(p.C > 0.0);
        CHECK(p.tau > 0.0);
        CHECK(p.k >= 0.0);
        CHECK(p.V_r < p.V_t);
        CHECK(p.V_t < p.V_p);
    }
}

TEST_CASE("rest is a fixed point of the continuous dynamics") {
    const NeuronParams p = NeuronParams::regular_spiking();
    const NeuronState ds = derivatives(p, {-60.0, 0.0, 0.0, 0.0}, 0.0);
    CHECK(ds.v == 0.0);
    CHECK(ds.u == 0.0);
    CHECK(ds.x == 0.0);
    CHECK(ds.y == 0.0);
}

TEST_CASE("v = V_t is the second root of the membrane quadratic") {
    const NeuronParams p = NeuronParams::regular_spiking();
    const NeuronState ds = derivatives(p, {-40.0, 0.0, 0.0, 0.0}, 0.0);
    CHECK(ds.v == 0.0);
}

TEST_CASE("derivatives at a hand-evaluated interior point") {
    // RS cell at v=-50: k(v-V_r)(v-V_t) = 0.7*10*(-10) = -70, so with u=50
    // and I=100 the membrane derivative is (-70 - 50 + 100)/100 = -0.20.
    const NeuronParams p = NeuronParams::regular_spiking();
    const NeuronState ds = derivatives(p, {-50.0, 50.0, 0.2, 0.1}, 100.0);
    CHECK(ds.v == doctest::Approx(-0.20).epsilon(1e-12));
    CHECK(ds.u == doctest::Approx(0.03 * (-2.0 * 10.0 - 50.0)).epsilon(1e-12));
    CHECK(ds.x == doctest::Approx(0.1 / 5.0).epsilon(1e-12));
    CHECK(ds.y == doctest::Approx(-(2.0 * 0.1 + 0.2) / 5.0).epsilon(1e-12));
}

TEST_CASE("spike reset map") {
    const NeuronParams rs = NeuronParams::regular_spiking();
    NeuronState s = spike_reset(rs, {35.0, 120.0, 0.4, 0.2});
    CHECK(s.v == -50.0);
    CHECK(s.u == 220.0);
    CHECK(s.x == 0.4); // x is untouched by the reset
    CHECK(s.y == doctest::Approx(1.2).epsilon(1e-15));

    const NeuronParams lts = NeuronParams::low_threshold_spiking();
    s = spike_reset(lts, {20.0, 0.0, 0.0, 0.0});
    CHECK(s.v == -53.0);
    CHECK(s.u == 20.0);
    CHECK(s.x == 0.0);
    CHECK(s.y == 1.0);
}

TEST_CASE("double reset accumulates d and the y kick") {
    const NeuronParams rs = NeuronParams::regular_spiking();
    const NeuronState s = spike_reset(rs, spike_reset(rs, {35.0, 10.0, 0.3, 0.0}));
    CHECK(s.u == 10.0 + 2.0 * rs.d);
    CHECK(s.y == 2.0);
    CHECK(s.x == 0.3);
}

TEST_CASE("alpha function reference values") {
    CHECK(alpha_activation(0.0, 5.0) == 0.0);
    CHECK(alpha_activation(5.0, 5.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(alpha_activation(20.0, 20.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    // Peak sits at t = tau: neighbours on both sides are lower.
    CHECK(alpha_activation(4.9, 5.0) < alpha_activation(5.0, 5.0));
    CHECK(alpha_activation(5.1, 5.0) < alpha_activation(5.0, 5.0));
    CHECK_THROWS_AS(alpha_activation(-0.1, 5.0), std::invalid_argument);
}

TEST_CASE("indexed parameter access round-trips all eleven fields") {
    NeuronParams p = NeuronParams::regular_spiking();
    REQUIRE(kNeuronParamCount == 11);
    for (int i = 0; i < kNeuronParamCount; ++i) {
        const double before = neuron_param_get(p, i);
        neuron_param_set(p, i, before + 1.0);
        CHECK(neuron_param_get(p, i) == before + 1.0);
        neuron_param_set(p, i, before);
        CHECK(neuron_param_get(p, i) == before);
    }
    CHECK_THROWS_AS(neuron_param_get(p, 11), std::out_of_range);
    CHECK_THROWS_AS(neuron_param_set(p, -1, 0.0), std::out_of_range);
}

TEST_CASE("parameter names line up with indexed access") {
    NeuronParams p = NeuronParams::regular_spiking();
    CHECK(std::string(kNeuronParamNames[0]) == "a");
    CHECK(std::string(kNeuronParamNames[4]) == "C");
    CHECK(std::string(kNeuronParamNames[10]) == "tau");
    // Index 6 must be V_r for both naming and access.
    neuron_param_set(p, 6, -99.0);
    CHECK(p.V_r == -99.0);
    CHECK(std::string(kNeuronParamNames[6]) == "V_r");
}
