#include "spikelatch/poincare.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>

namespace spikelatch {

RestingAnalysis resting_fixed_point(const NeuronParams& p) {
    RestingAnalysis out;
    out.v_node = p.V_r;
    if (p.k == 0.0) {
        out.v_saddle = std::numeric_limits<double>::quiet_NaN();
        out.kind = RestingAnalysis::Kind::degenerate;
        return out;
    }
    out.v_saddle = p.V_t + p.b / p.k;
    const double scale = std::max({1.0, std::fabs(p.V_r), std::fabs(p.V_t)});
    out.kind = (std::fabs(out.v_saddle - out.v_node) < 1e-9 * scale)
                   ? RestingAnalysis::Kind::transcritical
                   : RestingAnalysis::Kind::hyperbolic;
    return out;
}

SectionState pack_section_state(const Network& net, const LatchTopology& topo) {
    SectionState s{};
    const int order[3] = {topo.e1, topo.e2, topo.i};
    for (int j = 0; j < 3; ++j) {
        const NeuronState& n = net.states[order[j]];
        s[4 * j + 0] = n.v;
        s[4 * j + 1] = n.u;
        s[4 * j + 2] = n.x;
        s[4 * j + 3] = n.y;
    }
    return s;
}

void unpack_section_state(Network& net, const LatchTopology& topo, const SectionState& s) {
    const int order[3] = {topo.e1, topo.e2, topo.i};
    for (int j = 0; j < 3; ++j)
        net.states[order[j]] = {s[4 * j + 0], s[4 * j + 1], s[4 * j + 2], s[4 * j + 3]};
}

SectionState section_entry(const Latch& latch) {
    Network net = latch.net;
    net.reset_to_rest();
    NeuronState& e1 = net.states[latch.topo.e1];
    e1.v = net.params[latch.topo.e1].V_p;
    e1 = spike_reset(net.params[latch.topo.e1], e1);
    return pack_section_state(net, latch.topo);
}

double section_distance(const SectionState& a, const SectionState& b) {
    // per-variable scales: v 1 mV, u 10 pA, x 0.01, y 0.01
    static constexpr double scales[4] = {1.0, 10.0, 0.01, 0.01};
    double acc = 0.0;
    for (int j = 0; j < 12; ++j) {
        const double q = (a[j] - b[j]) / scales[j % 4];
        acc += q * q;
    }
    return std::sqrt(acc / 12.0);
}

ReturnMapResult return_map(const Latch& latch, const SectionState& from, const SimConfig& cfg,
                           double horizon) {
    Network net = latch.net;
    // The map is a property of the autonomous flow: drop any stimulation.
    for (ExternalSource& src : net.external) {
        src.pulses.clear();
        src.custom = nullptr;
    }
    unpack_section_state(net, latch.topo, from);
    NeuronState& e1 = net.states[latch.topo.e1];
    if (e1.v >= net.params[latch.topo.e1].V_p - 1e-9)
        e1 = spike_reset(net.params[latch.topo.e1], e1);

    AdaptiveRun run;
    run.t_end = horizon;
    run.stop_neuron = latch.topo.e1;
    const AdaptiveResult res = integrate_adaptive_run(net, cfg, run);

    ReturnMapResult out;
    out.returned = res.stopped_on_event;
    out.elapsed = res.t_final;
    if (out.returned) out.state = pack_section_state(net, latch.topo);
    return out;
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::viable: return "viable";
        case Verdict::rests_globally: return "rests-globally";
        case Verdict::chaotic: return "chaotic";
        case Verdict::period_too_short: return "period-too-short";
        case Verdict::reset_fails: return "reset-fails";
    }
    return "unknown";
}

namespace {

Latch with_reset_conductance(const Latch& latch, double g_rst) {
    SynapticParams syn = latch.syn;
    syn.G_rst = g_rst;
    return build_latch(latch.exc1, latch.exc2, latch.inh, syn);
}

// Does the interneuron fire at all when the module starts up cold (set pulse
// on E1) with the reset conductance raised to g_rst?
bool reset_cell_engages(const Latch& latch, double g_rst, const SimConfig& cfg) {
    Latch probe = with_reset_conductance(latch, g_rst);
    unpack_section_state(probe.net, probe.topo, section_entry(probe));
    AdaptiveRun run;
    run.t_end = 500.0;
    run.stop_neuron = probe.topo.i;
    return integrate_adaptive_run(probe.net, cfg, run).stopped_on_event;
}

} // namespace

bool reset_viability(const Latch& latch, const SimConfig& cfg) {
    // A module with no priming pathway has no self-reset to escalate: the
    // check passes vacuously.
    if (latch.syn.G_rst <= 0.0) return true;
    // The excitatory cycle is blind to G_rst until the interneuron actually
    // fires, so "raised until it fires" is found by geometric escalation:
    // double the conductance until a cold start recruits the interneuron.
    constexpr double kCap = 1e4;
    double rung = latch.syn.G_rst;
    bool engaged = false;
    try {
        while (rung < kCap) {
            rung *= 2.0;
            if (reset_cell_engages(latch, rung, cfg)) {
                engaged = true;
                break;
            }
        }
        if (!engaged)
            throw std::runtime_error("reset_viability: G_rst search bracket exhausted");

        // At that level the self-triggered reset must break the certified
        // cycle: a cold start may no longer settle onto the simple orbit
        // (dying back to rest, degenerating into irregular spiking, or
        // surviving only in period-doubled form all destroy it).
        const Latch raised = with_reset_conductance(latch, rung);
        const ViabilityReport rep =
            find_limit_cycle(raised, section_entry(raised), 200, 1e-5, cfg, false);
        return !(rep.verdict == Verdict::viable && rep.cycle_length == 1);
    } catch (const SimulationError&) {
        return true; // numerical breakdown at the raised level: no surviving cycle
    }
}

ViabilityReport find_limit_cycle(const Latch& latch, const SectionState& start, int max_iter,
                                 double tol, const SimConfig& cfg, bool run_reset_check) {
    if (max_iter < 1) throw std::invalid_argument("find_limit_cycle: max_iter must be >= 1");
    // A stable orbit may cross the section several times per period (the
    // cycle period-doubles before dissolving into irregular spiking), so
    // convergence is tested against the state m iterates back for small m.
    constexpr int kMaxCycleLen = 4;
    ViabilityReport rep;
    SectionState cur = start;
    std::vector<SectionState> states;
    std::vector<double> times;
    states.reserve(max_iter);
    times.reserve(max_iter);
    for (int it = 1; it <= max_iter; ++it) {
        const ReturnMapResult r = return_map(latch, cur, cfg);
        rep.iterations = it;
        if (!r.returned) {
            rep.verdict = Verdict::rests_globally;
            return rep;
        }
        states.push_back(r.state);
        times.push_back(r.elapsed);
        cur = r.state;
        rep.fixed_point = cur;
        for (int m = 1; m <= kMaxCycleLen && m < it; ++m) {
            if (section_distance(states[it - 1 - m], cur) >= tol) continue;
            rep.cycle_length = m;
            rep.period = 0.0;
            for (int j = it - m; j < it; ++j) rep.period += times[j];
            if (rep.period <= 5.0) {
                rep.verdict = Verdict::period_too_short;
            } else if (run_reset_check && !reset_viability(latch, cfg)) {
                rep.verdict = Verdict::reset_fails;
            } else {
                rep.verdict = Verdict::viable;
            }
            return rep;
        }
        rep.period = r.elapsed;
    }
    rep.verdict = Verdict::chaotic;
    return rep;
}

ViabilityReport find_limit_cycle(const Latch& latch, int max_iter, double tol,
                                 const SimConfig& cfg) {
    return find_limit_cycle(latch, section_entry(latch), max_iter, tol, cfg, true);
}

// --------------------------------------------------------------------------
// Parameter-range scanning
// --------------------------------------------------------------------------

const char* const kScanParamNames[kScanParamCount] = {
    "a", "b", "c", "d", "C", "k", "V_r", "V_t", "V_n", "V_p", "tau", "G_exc", "G_inh", "G_rst",
};

namespace {

int scan_param_index(const std::string& param) {
    for (int i = 0; i < kScanParamCount; ++i)
        if (param == kScanParamNames[i]) return i;
    throw std::invalid_argument("unknown scan parameter: " + param);
}

bool is_voltage_param(int idx) {
    // c, V_r, V_t, V_n, V_p
    return idx == 2 || idx == 6 || idx == 7 || idx == 8 || idx == 9;
}

bool is_conductance_param(int idx) {
    // G_exc, G_inh, G_rst
    return idx >= kNeuronParamCount;
}

// Characteristic magnitude used for the search reach, the march step, and
// the bisection stopping width. Voltage-dimensioned parameters get a 10 mV
// floor (their nominal may be zero) and conductances a 1 nS floor.
double scan_scale(int idx, double nominal_value) {
    double floor = 1e-3;
    if (is_voltage_param(idx)) floor = 10.0;
    if (is_conductance_param(idx)) floor = 1.0;
    return std::max(std::fabs(nominal_value), floor);
}

struct ScanDomain {
    double lo = 0.0, hi = 0.0;
    bool lo_clamped = false, hi_clamped = false;
};

// Search bracket: three characteristic scales of additive headroom around
// the nominal value, clipped to the parameter's admissible domain. That
// reach leaves every empirically bounded range strictly interior while the
// edges stay inside physically meaningful territory; pushing much further
// (e.g. a synaptic reversal tens of millivolts above spike peak) probes
// integrator stiffness rather than module dynamics. A clamped edge is a
// genuine boundary of the model family (a negative conductance, an
// upright-parabola gain flipped negative, a recovery coupling changing
// sign, a reset target at or above the peak) rather than a dynamical
// failure, so the scan treats a viable clamped edge as the finite end of
// the range.
ScanDomain scan_domain(const Latch& nominal, int idx, double nominal_value) {
    const double delta = 3.0 * scan_scale(idx, nominal_value);
    ScanDomain d;
    d.lo = nominal_value - delta;
    d.hi = nominal_value + delta;

    auto clamp_lo = [&](double bound) {
        if (d.lo < bound) {
            d.lo = bound;
            d.lo_clamped = true;
        }
    };
    auto clamp_hi = [&](double bound) {
        if (d.hi > bound) {
            d.hi = bound;
            d.hi_clamped = true;
        }
    };
    const std::string name = kScanParamNames[idx];
    if (name == "G_exc" || name == "G_inh" || name == "G_rst" || name == "k") clamp_lo(0.0);
    if (name == "C" || name == "tau") clamp_lo(1e-3);
    if (name == "b") clamp_hi(0.0); // sign selects the recovery-coupling regime
    if (name == "V_p") clamp_lo(nominal.exc1.c + 0.5); // reset must land below the peak
    if (name == "c") clamp_hi(nominal.exc1.V_p - 0.5);
    return d;
}

} // namespace

Latch with_scan_param(const Latch& base, const std::string& param, double value) {
    const int idx = scan_param_index(param);
    NeuronParams exc1 = base.exc1;
    NeuronParams exc2 = base.exc2;
    SynapticParams syn = base.syn;
    if (idx < kNeuronParamCount) {
        // both excitatory cells modulated identically; interneuron untouched
        neuron_param_set(exc1, idx, value);
        neuron_param_set(exc2, idx, value);
    } else if (param == "G_exc") {
        syn.G_exc = value;
    } else if (param == "G_inh") {
        syn.G_inh = value;
    } else {
        syn.G_rst = value;
    }
    return build_latch(exc1, exc2, base.inh, syn);
}

double scan_param_nominal(const std::string& param) {
    const int idx = scan_param_index(param);
    if (idx < kNeuronParamCount) {
        const NeuronParams rs = NeuronParams::regular_spiking();
        return neuron_param_get(rs, idx);
    }
    const SynapticParams syn;
    if (param == "G_exc") return syn.G_exc;
    if (param == "G_inh") return syn.G_inh;
    return syn.G_rst;
}

namespace {

bool probe_viable(const Latch& nominal, const std::string& param, double value,
                  const ScanOptions& opt) {
    try {
        const Latch probe = with_scan_param(nominal, param, value);
        const ViabilityReport rep = find_limit_cycle(probe, section_entry(probe),
                                                     opt.picard_max_iter, opt.picard_tol,
                                                     opt.sim, true);
        return rep.verdict == Verdict::viable;
    } catch (const SimulationError&) {
        return false;
    } catch (const std::runtime_error&) {
        return false; // reset-probe bracket exhaustion: not certifiably viable
    }
}

} // namespace

double scan_param_range(const Latch& nominal, const std::string& param, ScanDirection dir,
                        const ScanOptions& opt) {
    const int idx = scan_param_index(param);
    const double nominal_value = (idx < kNeuronParamCount)
                                     ? neuron_param_get(nominal.exc1, idx)
                                     : scan_param_nominal(param);
    if (!probe_viable(nominal, param, nominal_value, opt))
        throw std::runtime_error("scan_param_range: nominal configuration is not viable");

    const ScanDomain dom = scan_domain(nominal, idx, nominal_value);
    const double edge = (dir == ScanDirection::up) ? dom.hi : dom.lo;
    const bool clamped = (dir == ScanDirection::up) ? dom.hi_clamped : dom.lo_clamped;

    if (probe_viable(nominal, param, edge, opt)) {
        if (clamped) return edge; // a genuine physical boundary of the domain
        return (dir == ScanDirection::up) ? std::numeric_limits<double>::infinity()
                                          : -std::numeric_limits<double>::infinity();
    }

    // Viability need not be monotone away from nominal (a parameter can pass
    // through a failing window and recover before failing for good), so the
    // reported boundary is the FIRST loss of viability: march outward in
    // fixed steps until a probe fails, then bisect that single step.
    const double scale = scan_scale(idx, nominal_value);
    const double step = opt.step_fraction * scale;
    const double sgn = (dir == ScanDirection::up) ? 1.0 : -1.0;
    double good = nominal_value;
    double bad = edge;
    for (double x = nominal_value + sgn * step;
         (dir == ScanDirection::up) ? (x < edge) : (x > edge); x += sgn * step) {
        if (!probe_viable(nominal, param, x, opt)) {
            bad = x;
            break;
        }
        good = x;
    }

    const double stop_width = opt.rel_tol * scale;
    while (std::fabs(bad - good) > stop_width) {
        const double mid = 0.5 * (good + bad);
        if (probe_viable(nominal, param, mid, opt))
            good = mid;
        else
            bad = mid;
    }
    return 0.5 * (good + bad);
}

std::vector<ParamRange> scan_all_param_ranges(const Latch& nominal, const ScanOptions& opt) {
    std::vector<ParamRange> rows(kScanParamCount);
    std::vector<std::future<void>> jobs;
    jobs.reserve(kScanParamCount);
    for (int i = 0; i < kScanParamCount; ++i) {
        jobs.push_back(std::async(std::launch::async, [&nominal, &opt, &rows, i] {
            ParamRange& row = rows[i];
            row.param = kScanParamNames[i];
            row.nominal = (i < kNeuronParamCount) ? neuron_param_get(nominal.exc1, i)
                                                  : scan_param_nominal(row.param);
            row.min = scan_param_range(nominal, row.param, ScanDirection::down, opt);
            row.max = scan_param_range(nominal, row.param, ScanDirection::up, opt);
        }));
    }
    for (std::future<void>& job : jobs) job.get();
    return rows;
}

} // namespace spikelatch
