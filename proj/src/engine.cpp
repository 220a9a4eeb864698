#include "spikelatch/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace spikelatch {

namespace {

// |v| beyond this (mV) is treated as a numerical blowup, not biology.
constexpr double kBlowupVoltage = 1e6;
// Adaptive step floor (ms); shrinking below it means the problem is stiff
// beyond what the integrator can handle.
constexpr double kMinStep = 1e-10;

// Network state flattened to a contiguous array for the integrator:
// neuron i occupies slots [4i, 4i+4) as (v, u, x, y).
struct FlatSystem {
    int n = 0;
    const NeuronParams* prm = nullptr;
    struct Syn {
        int post = 0;   // postsynaptic neuron index
        int post_v = 0; // flat index of the postsynaptic v
        int pre_x = 0;  // flat index of the presynaptic x
        double g = 0;   // conductance (nS)
        double vn = 0;  // presynaptic reversal potential (mV)
    };
    std::vector<Syn> syns;
    std::vector<double> iext; // held external current per neuron (pA)
    mutable std::vector<double> ibuf;

    explicit FlatSystem(const Network& net)
        : n(net.size()),
          prm(net.params.data()),
          iext(static_cast<size_t>(net.size()), 0.0),
          ibuf(static_cast<size_t>(net.size()), 0.0) {
        for (int post = 0; post < n; ++post) {
            for (int pre = 0; pre < n; ++pre) {
                const double g = net.G[static_cast<size_t>(post) * n + pre];
                if (g != 0.0) syns.push_back({post, 4 * post, 4 * pre + 2, g, net.params[pre].V_n});
            }
        }
    }

    void derivatives(const double* s, double* ds) const {
        double* I = ibuf.data();
        for (int i = 0; i < n; ++i) I[i] = iext[i];
        for (const auto& sy : syns) I[sy.post] += sy.g * s[sy.pre_x] * (sy.vn - s[sy.post_v]);
        for (int i = 0; i < n; ++i) {
            const NeuronParams& p = prm[i];
            const double* si = s + 4 * i;
            double* di = ds + 4 * i;
            di[0] = (p.k * (si[0] - p.V_r) * (si[0] - p.V_t) - si[1] + I[i]) / p.C;
            di[1] = p.a * (p.b * (si[0] - p.V_r) - si[1]);
            di[2] = si[3] / p.tau;
            di[3] = -(2.0 * si[3] + si[2]) / p.tau;
        }
    }
};

void load_state(const Network& net, std::vector<double>& y) {
    y.resize(static_cast<size_t>(net.size()) * 4);
    for (int i = 0; i < net.size(); ++i) {
        const NeuronState& s = net.states[i];
        y[4 * i + 0] = s.v;
        y[4 * i + 1] = s.u;
        y[4 * i + 2] = s.x;
        y[4 * i + 3] = s.y;
    }
}

void store_state(Network& net, const double* y) {
    for (int i = 0; i < net.size(); ++i) {
        NeuronState& s = net.states[i];
        s.v = y[4 * i + 0];
        s.u = y[4 * i + 1];
        s.x = y[4 * i + 2];
        s.y = y[4 * i + 3];
    }
}

[[noreturn]] void throw_blowup(double t, int neuron) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "integration blowup: non-finite or runaway state in neuron %d at t=%.6g ms",
                  neuron, t);
    throw SimulationError(buf, neuron, t);
}

void check_finite(const double* y, int n, double t) {
    for (int i = 0; i < n; ++i) {
        const double* s = y + 4 * i;
        if (!std::isfinite(s[0]) || !std::isfinite(s[1]) || !std::isfinite(s[2]) ||
            !std::isfinite(s[3]) || std::fabs(s[0]) > kBlowupVoltage) {
            throw_blowup(t, i);
        }
    }
}

// Dormand-Prince 5(4) pair with the FSAL stage evaluated eagerly so a
// single call both advances and yields the embedded error estimate.
struct Dopri5 {
    const FlatSystem& sys;
    int dim;
    double rel, abs;
    std::vector<double> k1, k2, k3, k4, k5, k6, k7, yt;

    Dopri5(const FlatSystem& s, double rel_tol, double abs_tol)
        : sys(s), dim(4 * s.n), rel(rel_tol), abs(abs_tol),
          k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim), yt(dim) {}

    // Advance y by h into ynew; returns the scaled RMS error norm
    // (accept when <= 1).
    double step(const double* y, double h, double* ynew) {
        static constexpr double a21 = 1.0 / 5.0;
        static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
        static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
        static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                                a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
        static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0,
                                a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                                a65 = -5103.0 / 18656.0;
        static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                                b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
        static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                                e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

        sys.derivatives(y, k1.data());
        for (int i = 0; i < dim; ++i) yt[i] = y[i] + h * (a21 * k1[i]);
        sys.derivatives(yt.data(), k2.data());
        for (int i = 0; i < dim; ++i) yt[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        sys.derivatives(yt.data(), k3.data());
        for (int i = 0; i < dim; ++i) yt[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        sys.derivatives(yt.data(), k4.data());
        for (int i = 0; i < dim; ++i)
            yt[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        sys.derivatives(yt.data(), k5.data());
        for (int i = 0; i < dim; ++i)
            yt[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        sys.derivatives(yt.data(), k6.data());
        for (int i = 0; i < dim; ++i)
            ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        sys.derivatives(ynew, k7.data());

        double err = 0.0;
        for (int i = 0; i < dim; ++i) {
            const double sc = abs + rel * std::max(std::fabs(y[i]), std::fabs(ynew[i]));
            const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                  e6 * k6[i] + e7 * k7[i]);
            const double q = e / sc;
            err += q * q;
        }
        return std::sqrt(err / dim);
    }
};

// Bisect the first threshold crossing of `neuron` inside a step of size h
// (v < vp at y0, v >= vp after the full step). Trial steps always start
// from y0 so the located state is a genuine integrator state, not an
// interpolant. Returns the step size theta at which v >= vp with the
// bracket narrowed below tol, and writes the state at theta into yout.
double locate_event(Dopri5& rk, const double* y0, double h, int neuron, double vp, double tol,
                    double* yout, std::vector<double>& scratch) {
    double lo = 0.0;
    double hi = h;
    rk.step(y0, hi, yout);
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        rk.step(y0, mid, scratch.data());
        if (scratch[4 * neuron] >= vp) {
            hi = mid;
            std::copy(scratch.begin(), scratch.end(), yout);
        } else {
            lo = mid;
        }
    }
    return hi;
}

void refresh_external(const Network& net, FlatSystem& sys, double t, std::span<const double> extra) {
    for (int i = 0; i < net.size(); ++i) {
        double v = net.external[i].empty() ? 0.0 : net.external[i](t);
        if (!extra.empty()) v += extra[static_cast<size_t>(i)];
        sys.iext[static_cast<size_t>(i)] = v;
    }
}

bool any_external(const Network& net) {
    for (const auto& src : net.external)
        if (!src.empty()) return true;
    return false;
}

// Classic fourth-order Runge-Kutta step on the flat state.
struct Rk4 {
    const FlatSystem& sys;
    int dim;
    std::vector<double> k1, k2, k3, k4, yt;

    explicit Rk4(const FlatSystem& s)
        : sys(s), dim(4 * s.n), k1(dim), k2(dim), k3(dim), k4(dim), yt(dim) {}

    void step(const double* y, double h, double* ynew) {
        sys.derivatives(y, k1.data());
        for (int i = 0; i < dim; ++i) yt[i] = y[i] + 0.5 * h * k1[i];
        sys.derivatives(yt.data(), k2.data());
        for (int i = 0; i < dim; ++i) yt[i] = y[i] + 0.5 * h * k2[i];
        sys.derivatives(yt.data(), k3.data());
        for (int i = 0; i < dim; ++i) yt[i] = y[i] + h * k3[i];
        sys.derivatives(yt.data(), k4.data());
        for (int i = 0; i < dim; ++i)
            ynew[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
};

} // namespace

// ---------------------------------------------------------------------------
// Fixed-step path
// ---------------------------------------------------------------------------

struct FixedStepper::Impl {
    Network& net;
    FlatSystem sys;
    Rk4 rk;
    bool has_ext;
    std::vector<double> y, ynew;
    std::vector<int> fired;

    explicit Impl(Network& n) : net(n), sys(n), rk(sys), has_ext(any_external(n)) {
        load_state(net, y);
        ynew.resize(y.size());
    }
};

FixedStepper::FixedStepper(Network& net) : impl_(std::make_unique<Impl>(net)) {}
FixedStepper::~FixedStepper() = default;

const std::vector<int>& FixedStepper::advance(double t, double dt, std::span<const double> extra) {
    Impl& im = *impl_;
    load_state(im.net, im.y);
    if (im.has_ext || !extra.empty())
        refresh_external(im.net, im.sys, t, extra);
    im.rk.step(im.y.data(), dt, im.ynew.data());
    check_finite(im.ynew.data(), im.sys.n, t + dt);
    im.fired.clear();
    for (int i = 0; i < im.sys.n; ++i) {
        if (im.ynew[4 * i] >= im.net.params[i].V_p) {
            im.ynew[4 * i] = im.net.params[i].V_p;
            im.fired.push_back(i);
        }
    }
    store_state(im.net, im.ynew.data());
    return im.fired;
}

void FixedStepper::finish() {
    Impl& im = *impl_;
    for (int i : im.fired) {
        im.net.states[i] = spike_reset(im.net.params[i], im.net.states[i]);
        if (im.net.states[i].v >= im.net.params[i].V_p) {
            // c >= V_p would re-trigger the event forever
            throw SimulationError("degenerate reset: post-reset voltage at or above peak", i, 0.0);
        }
    }
    im.fired.clear();
}

std::vector<int> step_fixed(Network& net, double t, double dt, std::span<const double> extra) {
    if (dt <= 0.0) throw std::invalid_argument("step_fixed: dt must be positive");
    FixedStepper stepper(net);
    std::vector<int> fired = stepper.advance(t, dt, extra);
    stepper.finish();
    return fired;
}

Trajectory simulate_fixed(Network& net, const SimConfig& cfg) {
    if (cfg.dt <= 0.0) throw std::invalid_argument("simulate_fixed: dt must be positive");
    if (cfg.t_end < 0.0) throw std::invalid_argument("simulate_fixed: t_end must be non-negative");

    Trajectory traj;
    auto record = [&](double t) {
        traj.times.push_back(t);
        traj.samples.push_back(net.states);
    };

    FixedStepper stepper(net);
    record(0.0);
    const long steps = std::lround(cfg.t_end / cfg.dt);
    double t = 0.0;
    for (long s = 0; s < steps; ++s) {
        const std::vector<int>& fired = stepper.advance(t, cfg.dt);
        t = cfg.dt * static_cast<double>(s + 1);
        record(t); // peak sample: fired neurons clamped at V_p, not yet reset
        for (int i : fired) traj.spikes.add(t, i);
        stepper.finish();
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Adaptive path
// ---------------------------------------------------------------------------

AdaptiveResult integrate_adaptive_run(Network& net, const SimConfig& cfg, const AdaptiveRun& run) {
    if (cfg.rel_tol <= 0.0 || cfg.abs_tol <= 0.0)
        throw std::invalid_argument("integrate_adaptive: tolerances must be positive");
    if (run.t_end < run.t_start)
        throw std::invalid_argument("integrate_adaptive: t_end must be >= t_start");

    const int n = net.size();
    FlatSystem sys(net);
    Dopri5 rk(sys, cfg.rel_tol, cfg.abs_tol);

    std::vector<double> y;
    load_state(net, y);
    std::vector<double> ynew(y.size()), yev(y.size()), ytry(y.size()), scratch(y.size());

    const bool has_ext = any_external(net);
    // Steps never straddle a pulse edge, so the held external current is
    // exact for piecewise-constant inputs.
    std::vector<double> breaks;
    if (has_ext) {
        for (const auto& src : net.external) {
            for (const auto& p : src.pulses) {
                if (p.amplitude == 0.0) continue; // exerts no current: no step edge
                for (double edge : {p.t0, p.t0 + p.duration}) {
                    if (edge > run.t_start && edge < run.t_end) breaks.push_back(edge);
                }
            }
        }
        std::sort(breaks.begin(), breaks.end());
        breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    }
    size_t next_break = 0;

    double t = run.t_start;
    const double sample_cap = run.traj ? std::min(cfg.max_step, cfg.sample_every) : cfg.max_step;
    double h = std::min(0.01, sample_cap);

    auto record_sample = [&](double tt, const double* s) {
        if (!run.traj) return;
        if (!run.traj->times.empty() && tt <= run.traj->times.back()) return;
        run.traj->times.push_back(tt);
        auto& row = run.traj->samples.emplace_back();
        row.reserve(n);
        for (int i = 0; i < n; ++i)
            row.push_back({s[4 * i], s[4 * i + 1], s[4 * i + 2], s[4 * i + 3]});
    };
    auto record_spike = [&](double tt, int i) {
        if (run.traj) run.traj->spikes.add(tt, i);
        if (run.spikes) run.spikes->add(tt, i);
    };

    record_sample(t, y.data());

    AdaptiveResult result;
    while (true) {
        // Process any neuron at or above threshold in the current state.
        // This covers both located crossings (the bracket end is placed just
        // past the threshold) and caller-supplied super-threshold states.
        bool fired_any = false;
        bool stop = false;
        for (int i = 0; i < n; ++i) {
            if (y[4 * i] >= net.params[i].V_p) {
                y[4 * i] = net.params[i].V_p;
                if (!fired_any) record_sample(t, y.data()); // peak sample, pre-reset
                fired_any = true;
                record_spike(t, i);
                NeuronState st{y[4 * i], y[4 * i + 1], y[4 * i + 2], y[4 * i + 3]};
                const NeuronState rs = spike_reset(net.params[i], st);
                if (rs.v >= net.params[i].V_p) {
                    // c >= V_p would re-trigger the event forever
                    throw SimulationError("degenerate reset: post-reset voltage at or above peak",
                                          i, t);
                }
                y[4 * i + 0] = rs.v;
                y[4 * i + 1] = rs.u;
                y[4 * i + 2] = rs.x;
                y[4 * i + 3] = rs.y;
                if (i == run.stop_neuron) stop = true;
            }
        }
        if (stop) {
            result.stopped_on_event = true;
            break;
        }
        if (t >= run.t_end - 1e-12) break;

        if (has_ext) refresh_external(net, sys, t, {});

        while (next_break < breaks.size() && breaks[next_break] <= t + 1e-12) ++next_break;
        double h_use = std::min({h, sample_cap, run.t_end - t});
        if (next_break < breaks.size()) h_use = std::min(h_use, breaks[next_break] - t);

        const double err = rk.step(y.data(), h_use, ynew.data());
        if (!std::isfinite(err)) {
            h = 0.2 * h_use;
            if (h < kMinStep) throw_blowup(t, -1);
            continue;
        }
        if (err > 1.0) {
            h = h_use * std::max(0.2, 0.9 * std::pow(err, -0.2));
            if (h < kMinStep) {
                char buf[128];
                std::snprintf(buf, sizeof buf,
                              "integration stalled: step size underflow at t=%.6g ms", t);
                throw SimulationError(buf, -1, t);
            }
            continue;
        }

        // Accepted. Any crossing inside the step is located by bisection and
        // the state is rewound to the crossing; the loop head applies the reset.
        int crossed = -1;
        double theta = h_use;
        for (int i = 0; i < n; ++i) {
            if (ynew[4 * i] >= net.params[i].V_p) {
                double* out = (crossed < 0) ? yev.data() : ytry.data();
                const double th = locate_event(rk, y.data(), h_use, i, net.params[i].V_p,
                                               cfg.event_tol, out, scratch);
                if (crossed < 0 || th < theta) {
                    if (crossed >= 0 && out == ytry.data()) std::swap(yev, ytry);
                    crossed = i;
                    theta = th;
                }
            }
        }
        if (crossed >= 0) {
            t += theta;
            std::copy(yev.begin(), yev.end(), y.begin());
            continue; // loop head records the spike and applies the reset
        }

        t += h_use;
        std::swap(y, ynew);
        check_finite(y.data(), n, t);
        record_sample(t, y.data());
        const double factor =
            (err < 1e-300) ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        h = h_use * factor;
    }

    store_state(net, y.data());
    result.t_final = t;
    return result;
}

Trajectory integrate_adaptive(Network& net, const SimConfig& cfg) {
    Trajectory traj;
    AdaptiveRun run;
    run.t_start = 0.0;
    run.t_end = cfg.t_end;
    run.traj = &traj;
    integrate_adaptive_run(net, cfg, run);
    return traj;
}

} // namespace spikelatch
