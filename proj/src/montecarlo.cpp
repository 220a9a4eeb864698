#include "spikelatch/montecarlo.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "spikelatch/neuron.hpp"
#include "spikelatch/poincare.hpp"

namespace spikelatch {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::one: return "one";
        case Variant::both_identical: return "both-identical";
        case Variant::both_independent: return "both-independent";
    }
    return "?";
}

Variant variant_from_string(const std::string& name) {
    if (name == "one") return Variant::one;
    if (name == "both-identical") return Variant::both_identical;
    if (name == "both-independent") return Variant::both_independent;
    throw std::invalid_argument("unknown variant: " + name);
}

std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 finalizer over the stream position: adjacent trial indices
    // land on decorrelated engine seeds.
    std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return std::mt19937_64(z);
}

namespace {

// 53-bit uniform in [0, 1), built directly from engine words so streams do
// not depend on the standard library's distribution implementations.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

std::vector<double> sample_unit_deviation(std::mt19937_64& rng, int dim) {
    if (dim < 1) throw std::invalid_argument("sample_unit_deviation: dim must be >= 1");
    std::vector<double> xi(static_cast<size_t>(dim));
    // Marsaglia's polar method, spare value carried across components.
    bool have_spare = false;
    double spare = 0.0;
    auto gaussian = [&]() {
        if (have_spare) {
            have_spare = false;
            return spare;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01(rng) - 1.0;
            v = 2.0 * uniform01(rng) - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare = v * f;
        have_spare = true;
        return u * f;
    };
    for (;;) {
        double norm2 = 0.0;
        for (double& c : xi) {
            c = gaussian();
            norm2 += c * c;
        }
        if (norm2 > 0.0) {
            const double inv = 1.0 / std::sqrt(norm2);
            for (double& c : xi) c *= inv;
            return xi;
        }
        // zero vector: resample (probability-zero guard)
    }
}

NeuronParams apply_deviation(const NeuronParams& p, const std::vector<double>& xi,
                             double fraction) {
    if (!(std::fabs(fraction) < 1.0))
        throw std::invalid_argument("apply_deviation: |fraction| must be < 1");
    if (xi.size() != static_cast<size_t>(kNeuronParamCount))
        throw std::invalid_argument("apply_deviation: one deviation entry per cell constant");
    NeuronParams out = p;
    for (int i = 0; i < kNeuronParamCount; ++i) {
        const double base = neuron_param_get(p, i);
        neuron_param_set(out, i, base + fraction * xi[static_cast<size_t>(i)] * base);
    }
    return out;
}

namespace {

TrialOutcome run_one_trial(Variant variant, std::uint64_t seed, std::uint64_t index,
                           const TrialOptions& opt) {
    std::mt19937_64 rng = trial_rng(seed, index);
    const NeuronParams rs = NeuronParams::regular_spiking();
    const NeuronParams lts = NeuronParams::low_threshold_spiking();

    TrialOutcome out;
    out.variant = variant;
    NeuronParams p1 = rs;
    NeuronParams p2 = rs;
    const std::vector<double> xi1 = sample_unit_deviation(rng, kNeuronParamCount);
    switch (variant) {
        case Variant::one:
            p1 = apply_deviation(rs, xi1, opt.fraction);
            out.xi = xi1;
            break;
        case Variant::both_identical:
            p1 = apply_deviation(rs, xi1, opt.fraction);
            p2 = p1;
            out.xi = xi1;
            break;
        case Variant::both_independent: {
            const std::vector<double> xi2 = sample_unit_deviation(rng, kNeuronParamCount);
            p1 = apply_deviation(rs, xi1, opt.fraction);
            p2 = apply_deviation(rs, xi2, opt.fraction);
            out.xi = xi1;
            out.xi.insert(out.xi.end(), xi2.begin(), xi2.end());
            break;
        }
    }

    try {
        const Latch latch = build_latch(p1, p2, lts, SynapticParams{});
        out.ok = find_limit_cycle(latch, 200, 1e-5, opt.sim).verdict == Verdict::viable;
    } catch (const std::exception&) {
        // integration breakdown or probe-bracket exhaustion: the module is
        // not certifiably functional — a failure, tagged as an oracle error
        out.ok = false;
        out.oracle_error = true;
    }
    return out;
}

int worker_count(int n) {
    unsigned w = std::thread::hardware_concurrency();
    if (w == 0) w = 1;
    if (const char* env = std::getenv("SPIKELATCH_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1) w = static_cast<unsigned>(v);
    }
    return static_cast<int>(std::min<unsigned>(w, static_cast<unsigned>(n)));
}

}  // namespace

std::vector<TrialOutcome> run_trial_outcomes(Variant variant, int n, std::uint64_t seed,
                                             const TrialOptions& opt) {
    if (n < 1) throw std::invalid_argument("run_trial_outcomes: n must be >= 1");
    if (!(std::fabs(opt.fraction) < 1.0))
        throw std::invalid_argument("run_trial_outcomes: |fraction| must be < 1");

    std::vector<TrialOutcome> out(static_cast<size_t>(n));
    const int workers = worker_count(n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i)
            out[static_cast<size_t>(i)] =
                run_one_trial(variant, seed, static_cast<std::uint64_t>(i), opt);
        return out;
    }
    // Outcome i depends only on (seed, i), so dynamic work distribution
    // cannot change the results.
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int wk = 0; wk < workers; ++wk) {
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1))
                out[static_cast<size_t>(i)] =
                    run_one_trial(variant, seed, static_cast<std::uint64_t>(i), opt);
        });
    }
    for (std::thread& t : pool) t.join();
    return out;
}

RateReport tally(const std::vector<TrialOutcome>& outcomes) {
    RateReport r;
    r.n = static_cast<int>(outcomes.size());
    for (const TrialOutcome& o : outcomes) {
        if (!o.ok) ++r.failures;
        if (o.oracle_error) ++r.oracle_errors;
    }
    if (r.n == 0) return r;
    const double n = r.n;
    const double p = r.failures / n;
    r.rate = p;
    // 95% Wilson score interval
    const double z = 1.959963984540054;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    r.ci_lo = std::max(0.0, center - half);
    r.ci_hi = std::min(1.0, center + half);
    return r;
}

RateReport run_trials(Variant variant, int n, std::uint64_t seed, const TrialOptions& opt) {
    return tally(run_trial_outcomes(variant, n, seed, opt));
}

namespace {

// Gaussian elimination with partial pivoting on [A | b]; returns false when
// a pivot collapses relative to the matrix scale.
bool solve_linear(std::vector<double> A, std::vector<double> b, size_t d,
                  std::vector<double>& x) {
    double scale = 0.0;
    for (double v : A) scale = std::max(scale, std::fabs(v));
    if (scale == 0.0) return false;
    for (size_t col = 0; col < d; ++col) {
        size_t piv = col;
        for (size_t r = col + 1; r < d; ++r)
            if (std::fabs(A[r * d + col]) > std::fabs(A[piv * d + col])) piv = r;
        if (std::fabs(A[piv * d + col]) < 1e-12 * scale) return false;
        if (piv != col) {
            for (size_t j = 0; j < d; ++j) std::swap(A[piv * d + j], A[col * d + j]);
            std::swap(b[piv], b[col]);
        }
        const double inv = 1.0 / A[col * d + col];
        for (size_t r = col + 1; r < d; ++r) {
            const double f = A[r * d + col] * inv;
            if (f == 0.0) continue;
            for (size_t j = col; j < d; ++j) A[r * d + j] -= f * A[col * d + j];
            b[r] -= f * b[col];
        }
    }
    x.assign(d, 0.0);
    for (size_t ri = d; ri-- > 0;) {
        double acc = b[ri];
        for (size_t j = ri + 1; j < d; ++j) acc -= A[ri * d + j] * x[j];
        x[ri] = acc / A[ri * d + ri];
    }
    return true;
}

}  // namespace

FisherResult fisher_axis(const std::vector<TrialOutcome>& outcomes) {
    if (outcomes.empty()) throw std::invalid_argument("fisher_axis: no outcomes");
    const size_t d = outcomes.front().xi.size();
    if (d < 2) throw std::invalid_argument("fisher_axis: need at least two dimensions");
    for (const TrialOutcome& o : outcomes)
        if (o.xi.size() != d)
            throw std::invalid_argument("fisher_axis: deviation lengths differ");

    std::vector<double> mu_ok(d, 0.0), mu_fail(d, 0.0);
    size_t n_ok = 0, n_fail = 0;
    for (const TrialOutcome& o : outcomes) {
        std::vector<double>& mu = o.ok ? mu_ok : mu_fail;
        for (size_t j = 0; j < d; ++j) mu[j] += o.xi[j];
        (o.ok ? n_ok : n_fail) += 1;
    }
    if (n_ok == 0 || n_fail == 0)
        throw std::invalid_argument("fisher_axis: both labels must be present");
    for (size_t j = 0; j < d; ++j) {
        mu_ok[j] /= static_cast<double>(n_ok);
        mu_fail[j] /= static_cast<double>(n_fail);
    }

    // Within-class scatter S_w = sum over points of (x - mu_class) outer self.
    std::vector<double> S(d * d, 0.0);
    std::vector<double> r(d);
    for (const TrialOutcome& o : outcomes) {
        const std::vector<double>& mu = o.ok ? mu_ok : mu_fail;
        for (size_t j = 0; j < d; ++j) r[j] = o.xi[j] - mu[j];
        for (size_t i = 0; i < d; ++i)
            for (size_t j = 0; j < d; ++j) S[i * d + j] += r[i] * r[j];
    }

    std::vector<double> rhs(d);
    for (size_t j = 0; j < d; ++j) rhs[j] = mu_fail[j] - mu_ok[j];

    FisherResult res;
    if (!solve_linear(S, rhs, d, res.axis)) {
        // singular scatter: ridge-regularize and report
        double trace = 0.0;
        for (size_t j = 0; j < d; ++j) trace += S[j * d + j];
        const double ridge = 1e-6 * std::max(1.0, trace / static_cast<double>(d));
        for (size_t j = 0; j < d; ++j) S[j * d + j] += ridge;
        res.regularized = true;
        if (!solve_linear(S, rhs, d, res.axis))
            throw std::runtime_error("fisher_axis: scatter matrix unusable even with ridge");
    }
    double norm2 = 0.0;
    for (double v : res.axis) norm2 += v * v;
    if (norm2 == 0.0) throw std::runtime_error("fisher_axis: degenerate class means");
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : res.axis) v *= inv;

    // Fixed arbitrary orthogonal coordinate: take the basis vector least
    // aligned with the axis and strip off its axis component.
    size_t least = 0;
    for (size_t j = 1; j < d; ++j)
        if (std::fabs(res.axis[j]) < std::fabs(res.axis[least])) least = j;
    res.orthogonal.assign(d, 0.0);
    res.orthogonal[least] = 1.0;
    for (size_t j = 0; j < d; ++j) res.orthogonal[j] -= res.axis[least] * res.axis[j];
    double onorm2 = 0.0;
    for (double v : res.orthogonal) onorm2 += v * v;
    const double oinv = 1.0 / std::sqrt(onorm2);
    for (double& v : res.orthogonal) v *= oinv;

    res.projections.reserve(outcomes.size());
    for (const TrialOutcome& o : outcomes) {
        double pw = 0.0, pu = 0.0;
        for (size_t j = 0; j < d; ++j) {
            pw += o.xi[j] * res.axis[j];
            pu += o.xi[j] * res.orthogonal[j];
        }
        res.projections.push_back({pw, pu});
    }
    return res;
}

void write_point_cloud(std::ostream& os, const std::vector<TrialOutcome>& outcomes,
                       std::uint64_t seed) {
    if (outcomes.empty()) throw std::invalid_argument("write_point_cloud: no outcomes");
    const Variant variant = outcomes.front().variant;
    const size_t d = outcomes.front().xi.size();
    for (const TrialOutcome& o : outcomes)
        if (o.variant != variant || o.xi.size() != d)
            throw std::invalid_argument("write_point_cloud: mixed variants or xi lengths");

    const bool split = variant == Variant::both_independent;
    const size_t per_cell = split ? d / 2 : d;
    if (split && per_cell * 2 != d)
        throw std::invalid_argument("write_point_cloud: odd xi length for two-cell variant");
    for (size_t j = 0; j < d; ++j) {
        const size_t name = j % per_cell;
        if (split)
            os << "xi" << (j / per_cell + 1) << '_' << kNeuronParamNames[name] << ',';
        else
            os << "xi_" << kNeuronParamNames[name] << ',';
    }
    os << "label,variant,seed\n";

    char buf[40];
    for (const TrialOutcome& o : outcomes) {
        for (double v : o.xi) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            os << buf << ',';
        }
        os << (o.oracle_error ? "oracle_error" : o.ok ? "ok" : "fail") << ','
           << to_string(variant) << ',' << seed << '\n';
    }
}

std::vector<TrialOutcome> read_point_cloud(std::istream& is, std::uint64_t* seed) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("point cloud: empty input");
    size_t xi_cols = 0;
    {
        std::stringstream header(line);
        std::string col;
        while (std::getline(header, col, ','))
            if (col.rfind("xi", 0) == 0) ++xi_cols;
    }
    if (xi_cols == 0) throw std::runtime_error("point cloud: no xi columns in header");

    std::vector<TrialOutcome> outcomes;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        TrialOutcome o;
        for (size_t j = 0; j < xi_cols; ++j) {
            if (!std::getline(row, cell, ','))
                throw std::runtime_error("point cloud: truncated row");
            o.xi.push_back(std::stod(cell));
        }
        if (!std::getline(row, cell, ',')) throw std::runtime_error("point cloud: missing label");
        if (cell == "ok") {
            o.ok = true;
        } else if (cell == "fail") {
            o.ok = false;
        } else if (cell == "oracle_error") {
            o.ok = false;
            o.oracle_error = true;
        } else {
            throw std::runtime_error("point cloud: unknown label '" + cell + "'");
        }
        if (!std::getline(row, cell, ','))
            throw std::runtime_error("point cloud: missing variant");
        o.variant = variant_from_string(cell);
        if (std::getline(row, cell, ',') && seed) *seed = std::stoull(cell);
        outcomes.push_back(std::move(o));
    }
    return outcomes;
}

}  // namespace spikelatch
