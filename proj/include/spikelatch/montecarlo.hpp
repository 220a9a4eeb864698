#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "spikelatch/engine.hpp"
#include "spikelatch/latch.hpp"

namespace spikelatch {

// Robustness analysis: random fractional perturbations of the excitatory
// cells' constants, drawn uniformly from the unit sphere so the total
// relative deviation is fixed while its distribution across parameters is
// random, labeled by the limit-cycle viability oracle.

// Perturbation variants: modulate one excitatory cell, both with the same
// deviation vector, or both with independent deviation vectors.
enum class Variant { one, both_identical, both_independent };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);

// One labeled sample of the deviation cloud. `xi` holds one relative
// deviation per cell constant (kNeuronParamCount entries; the
// both_independent variant concatenates the two cells' vectors). `ok` is
// exactly the viability oracle's verdict; an oracle that errors out
// instead of returning a verdict counts as a failure and is tagged.
struct TrialOutcome {
    std::vector<double> xi;
    bool ok = false;
    bool oracle_error = false;
    Variant variant = Variant::one;
};

// Failure tally with a 95% Wilson score interval on the rate.
struct RateReport {
    int n = 0;
    int failures = 0;      // includes oracle errors
    int oracle_errors = 0; // subset of failures where the oracle threw
    double rate = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

// Deterministic per-trial RNG stream: trials are independent, so any
// worker count reproduces the same outcomes for a given (seed, index).
std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t index);

// Standard-Gaussian sample normalized to unit Euclidean norm (uniform on
// the sphere). The Gaussian deviates are generated internally (polar
// method) so streams are reproducible across standard libraries. A zero
// vector (probability-zero) is resampled.
std::vector<double> sample_unit_deviation(std::mt19937_64& rng, int dim);

// p_i' = p_i + fraction * xi_i * p_i for each cell constant: the deviation
// is relative to the signed base value, so it scales each parameter's
// magnitude. Requires |fraction| < 1 and one xi entry per constant.
NeuronParams apply_deviation(const NeuronParams& p, const std::vector<double>& xi,
                             double fraction = 0.10);

struct TrialOptions {
    double fraction = 0.10;
    SimConfig sim{};
};

// Run n perturbation trials: build a latch with perturbed excitatory
// cell(s) (the interneuron is never touched), run the viability oracle,
// and record the labeled deviation. Deterministic given (variant, n,
// seed) at any worker count; the worker count is bounded by the
// SPIKELATCH_THREADS environment variable when set.
std::vector<TrialOutcome> run_trial_outcomes(Variant variant, int n, std::uint64_t seed,
                                             const TrialOptions& opt = TrialOptions{});

// Tally-only wrapper around run_trial_outcomes.
RateReport run_trials(Variant variant, int n, std::uint64_t seed,
                      const TrialOptions& opt = TrialOptions{});

RateReport tally(const std::vector<TrialOutcome>& outcomes);

// Fisher linear discriminant of the labeled cloud. The axis points from
// the mean of the surviving class toward the mean of the failing class:
//   w  propto  S_w^-1 (mu_fail - mu_ok),   normalized.
// Projections pair the discriminant coordinate with one fixed arbitrary
// orthogonal coordinate (all directions orthogonal to w are equally
// uninformative, so any fixed one serves for visualization).
struct FisherResult {
    std::vector<double> axis;       // unit discriminant axis, fail-ward
    std::vector<double> orthogonal; // the fixed second plot coordinate
    std::vector<std::array<double, 2>> projections; // one (w.xi, u.xi) per outcome
    bool regularized = false; // within-class scatter was singular; ridge applied
};

// Requires at least one outcome of each label and equal xi lengths.
FisherResult fisher_axis(const std::vector<TrialOutcome>& outcomes);

// Labeled point-cloud CSV: one xi column per deviation entry (xi_<name>
// for single-cell variants, xi1_/xi2_ prefixes for both_independent),
// then label (ok|fail|oracle_error), variant, and seed. All outcomes must
// share one variant and xi length. The reader accepts exactly this format
// and reports the seed recorded in the file.
void write_point_cloud(std::ostream& os, const std::vector<TrialOutcome>& outcomes,
                       std::uint64_t seed);
std::vector<TrialOutcome> read_point_cloud(std::istream& is, std::uint64_t* seed = nullptr);

}  // namespace spikelatch
