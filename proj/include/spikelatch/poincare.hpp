#pragma once

#include <array>
#include <string>
#include <vector>

#include "spikelatch/latch.hpp"

namespace spikelatch {

// Equilibria of the reduced membrane dynamics (u on its nullcline, synapses
// quiet): roots at v = V_r and v = V_t + b/k.
struct RestingAnalysis {
    enum class Kind {
        hyperbolic,    // two distinct equilibria
        transcritical, // coincident roots: b/k = -(V_t - V_r)
        degenerate,    // k = 0, the quadratic collapses
    };
    double v_node = 0.0;   // the root at V_r
    double v_saddle = 0.0; // the root at V_t + b/k (NaN when degenerate)
    Kind kind = Kind::hyperbolic;
};

RestingAnalysis resting_fixed_point(const NeuronParams& p);

// Full module state on the section (just after E1's reset), flattened as
// (v, u, x, y) per neuron in topology order e1, e2, i.
using SectionState = std::array<double, 12>;

SectionState pack_section_state(const Network& net, const LatchTopology& topo);
void unpack_section_state(Network& net, const LatchTopology& topo, const SectionState& s);

// Canonical section entry: all cells at rest except E1, which is taken to
// its peak and reset — the state the module passes through when a set
// stimulus first fires E1.
SectionState section_entry(const Latch& latch);

// Distance between section states in the scaled norm used for fixed-point
// convergence (scales: 1 mV, 10 pA, 0.01, 0.01).
double section_distance(const SectionState& a, const SectionState& b);

struct ReturnMapResult {
    bool returned = false;  // false: E1 never re-fired within the horizon
    SectionState state{};   // post-reset state at the next section crossing
    double elapsed = 0.0;   // return time (ms)
};

// First-return map of the flow to the section v_E1 = V_p. Accepts either a
// post-reset state or one with v_E1 at the peak (reset applied on entry).
ReturnMapResult return_map(const Latch& latch, const SectionState& from,
                           const SimConfig& cfg = SimConfig{}, double horizon = 500.0);

enum class Verdict {
    viable,         // limit cycle found, period > 5 ms, reset check passed
    rests_globally, // trajectory fell back to rest (no sustained cycle)
    chaotic,        // spiking continued but the return map never converged
    period_too_short,
    reset_fails, // cycle exists but cannot be terminated cleanly
};

std::string to_string(Verdict v);

struct ViabilityReport {
    Verdict verdict = Verdict::rests_globally;
    double period = 0.0; // ms, full orbit period for cyclic verdicts
    SectionState fixed_point{};
    int iterations = 0;   // return-map applications performed
    int cycle_length = 0; // section crossings per orbit period (0 until cyclic)
};

// Picard iteration of the return map from `start` (defaults to
// section_entry) until the section state recurs within tol (scaled norm)
// at a lag of at most four crossings — a stable orbit may period-double
// before it dissolves, crossing the section more than once per period. A
// cyclic orbit is then subjected to the period bound and the
// reset-viability probe to produce the final verdict.
ViabilityReport find_limit_cycle(const Latch& latch, int max_iter = 200, double tol = 1e-5,
                                 const SimConfig& cfg = SimConfig{});
ViabilityReport find_limit_cycle(const Latch& latch, const SectionState& start, int max_iter,
                                 double tol, const SimConfig& cfg, bool run_reset_check);

// Doubles G_rst until a cold start recruits the interneuron, then requires
// the self-triggered reset to break the cycle: the module must no longer
// settle onto it at that level. Pass iff so. A module with G_rst = 0 has no
// priming pathway to escalate, so the check passes vacuously.
// Precondition: the latch itself sustains a cycle (see find_limit_cycle).
bool reset_viability(const Latch& latch, const SimConfig& cfg = SimConfig{});

// Parameter-range scanning -------------------------------------------------

// Scannable parameters: the 11 per-cell constants (applied to both
// excitatory cells identically) plus G_exc, G_inh, G_rst.
inline constexpr int kScanParamCount = 14;
extern const char* const kScanParamNames[kScanParamCount];

double scan_param_nominal(const std::string& param);

enum class ScanDirection { down, up };

struct ScanOptions {
    // Both widths are fractions of the parameter's characteristic scale
    // (|nominal| with a 10 mV floor for voltages and 1 nS for conductances).
    double step_fraction = 0.02; // outward-march step
    double rel_tol = 0.005;      // bisection stopping width
    int picard_max_iter = 200;
    double picard_tol = 1e-5;
    SimConfig sim{};
};

// Viability boundary of one parameter in one direction: the first loss of
// viability marching outward from nominal (every probe is started cold, so
// the answer does not depend on hysteresis), refined by bisection. Returns
// +/-infinity when the search-bracket edge is still viable, and the domain
// edge itself when viability extends to the parameter's admissible limit
// (e.g. a conductance at 0).
double scan_param_range(const Latch& nominal, const std::string& param, ScanDirection dir,
                        const ScanOptions& opt = ScanOptions{});

struct ParamRange {
    std::string param;
    double min = 0.0;
    double nominal = 0.0;
    double max = 0.0;
};

// All 14 rows: min and max boundary for every scannable parameter.
std::vector<ParamRange> scan_all_param_ranges(const Latch& nominal,
                                              const ScanOptions& opt = ScanOptions{});

// Builds a copy of `base` with one scan parameter replaced (both excitatory
// cells for neuron constants). Exposed for tests and the scanner itself.
Latch with_scan_param(const Latch& base, const std::string& param, double value);

} // namespace spikelatch
