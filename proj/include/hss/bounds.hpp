#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "hss/core.hpp"
#include "hss/errors.hpp"
#include "hss/hypothesis_set.hpp"
#include "hss/oracle.hpp"
#include "hss/parallel.hpp"
#include "hss/rng.hpp"

namespace hss {

constexpr double kUnsetCoefficient = std::numeric_limits<double>::infinity();

// Inputs for the generalization-bound calculators. Coefficients left at the
// infinity sentinel are treated as unavailable where a min allows it.
struct BoundInputs {
    std::int64_t m = 0;
    std::int64_t n = 0;  // ghost-sample size, transductive bound only
    double delta = 0.05;
    double beta = 0.0;
    double chi = 0.0;
    double chi_bar = kUnsetCoefficient;
    double delta_max = 0.0;
    double rad = kUnsetCoefficient;  // R^/\_m(G) estimate or certified upper bound
    double trans_rad = 0.0;          // transductive complexity (sampled-U evaluation)
    double gamma_fv = 0.0;           // uniform-stability coefficient for the log-factor bound
};

inline void validate_delta(double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw validation_error("bound: delta outside (0,1)");
}

// Gap bound of the transductive theorem:
// 2*trans_rad + 3 sqrt((1/m + 1/n) log(2/delta)) + 2 sqrt((1/m + 1/n)^3 m n).
// The max over all super-samples U is replaced upstream by sampled-U
// evaluation, so the reported value is labelled accordingly by callers.
inline double theorem1_bound(const BoundInputs& in) {
    validate_delta(in.delta);
    if (in.m < 1 || in.n < 1) throw validation_error("theorem1_bound: m, n must be >= 1");
    const double m = static_cast<double>(in.m), n = static_cast<double>(in.n);
    const double inv = 1.0 / m + 1.0 / n;
    return 2.0 * in.trans_rad + 3.0 * std::sqrt(inv * std::log(2.0 / in.delta)) +
           2.0 * std::sqrt(inv * inv * inv * m * n);
}

struct BoundReport {
    std::map<std::string, double> branch_values;
    std::map<std::string, bool> vacuous;  // value > 1 for losses in [0,1]
    double min_value = 0.0;
    BoundInputs inputs;
};

// Per-branch calculators. Each validates the formula's own domain (every log
// argument nonnegative), which is wider than (0,1); the combined report below
// gates delta as a genuine confidence level.

// min{2 rad, chi_bar} + (1 + 2 beta m) sqrt(log(1/delta) / (2m))
inline double theorem2_rad_branch(const BoundInputs& in) {
    if (!(in.delta > 0.0 && in.delta <= 1.0))
        throw validation_error("theorem2 rad branch: delta outside (0,1]");
    if (in.m < 1) throw validation_error("theorem2 rad branch: m must be >= 1");
    if (std::isinf(in.rad) && std::isinf(in.chi_bar))
        throw validation_error("theorem2 rad branch: need rad or chi_bar");
    const double m = static_cast<double>(in.m);
    const double first = std::min(std::isinf(in.rad) ? kUnsetCoefficient : 2.0 * in.rad, in.chi_bar);
    return first + (1.0 + 2.0 * in.beta * m) * std::sqrt(std::log(1.0 / in.delta) / (2.0 * m));
}

// sqrt(e) chi + 4 sqrt((1/m + 2 beta) log(6/delta))
inline double theorem2_cv_branch(const BoundInputs& in) {
    if (!(in.delta > 0.0 && in.delta <= 6.0))
        throw validation_error("theorem2 cv branch: delta outside (0,6]");
    if (in.m < 1) throw validation_error("theorem2 cv branch: m must be >= 1");
    const double m = static_cast<double>(in.m);
    return std::sqrt(std::exp(1.0)) * in.chi +
           4.0 * std::sqrt((1.0 / m + 2.0 * in.beta) * std::log(6.0 / in.delta));
}

// 48 (3 beta + delta_max) log(m) log(5 m^3/delta) + sqrt((4/m) log(4/delta)).
// Keeps the constant 48 from the combined statement; the standalone
// uniform-stability restatement uses 47 (see fv_bound). Both verbatim.
inline double theorem2_diam_branch(const BoundInputs& in) {
    if (!(in.delta > 0.0 && in.delta <= 4.0))
        throw validation_error("theorem2 diam branch: delta outside (0,4]");
    if (in.m < 2) throw validation_error("theorem2 diam branch: m must be >= 2");
    const double m = static_cast<double>(in.m);
    return 48.0 * (3.0 * in.beta + in.delta_max) * std::log(m) * std::log(5.0 * m * m * m / in.delta) +
           std::sqrt(4.0 / m * std::log(4.0 / in.delta));
}

// The three-branch stability bound at confidence 1 - delta.
inline BoundReport theorem2_bound(const BoundInputs& in) {
    validate_delta(in.delta);
    if (in.m < 2) throw validation_error("theorem2_bound: m must be >= 2");
    BoundReport rep;
    rep.inputs = in;
    rep.branch_values = {{"rad", theorem2_rad_branch(in)},
                         {"cv", theorem2_cv_branch(in)},
                         {"diam", theorem2_diam_branch(in)}};
    rep.min_value = std::min({rep.branch_values.at("rad"), rep.branch_values.at("cv"),
                              rep.branch_values.at("diam")});
    for (const auto& [name, v] : rep.branch_values) rep.vacuous[name] = v > 1.0;
    return rep;
}

// Uniform-stability bound with log factors:
// 47 gamma log(m) log(5 m^3/delta) + sqrt((4/m) log(4/delta)).
// Accepts the formula's domain delta in (0,4]; the confidence reading needs
// delta < 1.
inline double fv_bound(double gamma, std::int64_t m, double delta) {
    if (!(delta > 0.0 && delta <= 4.0)) throw validation_error("fv_bound: delta outside (0,4]");
    if (m < 2) throw validation_error("fv_bound: m must be >= 2");
    if (gamma < 0) throw validation_error("fv_bound: gamma must be >= 0");
    const double md = static_cast<double>(m);
    return 47.0 * gamma * std::log(md) * std::log(5.0 * md * md * md / delta) +
           std::sqrt(4.0 / md * std::log(4.0 / delta));
}

// PAC-Bayes bound for finite hypothesis spaces:
// gibbs + (4 + 1/sqrt(e)) sqrt(max{KL(Q||P), 1} / m) + sqrt(log(1/delta) / (2m)).
// delta = 1 is allowed (the confidence term vanishes).
inline double pac_bayes_bound(const Vec& q, const Vec& p, double empirical_gibbs_risk, std::int64_t m,
                              double delta) {
    if (q.size() != p.size() || q.empty()) throw validation_error("pac_bayes_bound: Q/P size mismatch");
    if (!(delta > 0.0 && delta <= 1.0)) throw validation_error("pac_bayes_bound: delta outside (0,1]");
    if (m < 1) throw validation_error("pac_bayes_bound: m must be >= 1");
    double kl = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] < 0 || p[i] < 0) throw validation_error("pac_bayes_bound: negative probability");
        if (q[i] > 0.0) {
            if (p[i] <= 0.0)
                throw validation_error("pac_bayes_bound: KL undefined, Q not absolutely continuous in P");
            kl += q[i] * std::log(q[i] / p[i]);
        }
    }
    kl = std::max(kl, 0.0);
    const double md = static_cast<double>(m);
    return empirical_gibbs_risk +
           (4.0 + std::exp(-0.5)) * std::sqrt(std::max(kl, 1.0) / md) +
           std::sqrt(std::log(1.0 / delta) / (2.0 * md));
}

enum class BoundKind { theorem1, theorem2_min, theorem2_rad, theorem2_cv, theorem2_diam, fv };

inline double bound_value(BoundKind kind, const BoundInputs& in) {
    switch (kind) {
        case BoundKind::theorem1:
            return theorem1_bound(in);
        case BoundKind::theorem2_min:
            return theorem2_bound(in).min_value;
        case BoundKind::theorem2_rad:
            return theorem2_bound(in).branch_values.at("rad");
        case BoundKind::theorem2_cv:
            return theorem2_bound(in).branch_values.at("cv");
        case BoundKind::theorem2_diam:
            return theorem2_bound(in).branch_values.at("diam");
        case BoundKind::fv:
            return fv_bound(in.gamma_fv, in.m, in.delta);
    }
    throw validation_error("bound_value: unknown kind");
}

struct CoverageResult {
    double violation_rate = 0.0;
    double mean_slack = 0.0;
    double bound = 0.0;
    std::int64_t n_trials = 0;
};

// Empirical content of "with probability at least 1 - delta": the fraction of
// sample draws whose exact sup-gap exceeds the bound computed from certified
// coefficients must stay near delta. Requires descriptors whose sup is
// exhaustively enumerable.
inline CoverageResult validate_bound_coverage(const HypothesisFamily& family,
                                              const DiscreteDistribution& d, const LossFunction& loss,
                                              BoundKind kind, const BoundInputs& inputs, std::int64_t m,
                                              std::int64_t n_trials, SeededRng rng,
                                              unsigned threads = 1) {
    if (n_trials < 1) throw validation_error("validate_bound_coverage: n_trials must be >= 1");
    const double bound = bound_value(kind, inputs);
    std::vector<double> gaps(static_cast<std::size_t>(n_trials));
    parallel_for(gaps.size(), threads, [&](std::size_t i) {
        SeededRng r = rng.stream(i);
        const LabeledSample s = draw_sample(d, static_cast<std::size_t>(m), r);
        const HypothesisSet set = family(s);
        if (!set.exhaustive())
            throw validation_error("validate_bound_coverage: descriptor sup is not certifiable");
        gaps[i] = exact_sup_gap(set, d, s, loss);
    });
    CoverageResult out;
    out.bound = bound;
    out.n_trials = n_trials;
    double slack = 0.0;
    std::int64_t violations = 0;
    for (double g : gaps) {
        if (g > bound) ++violations;
        slack += bound - g;
    }
    out.violation_rate = static_cast<double>(violations) / static_cast<double>(n_trials);
    out.mean_slack = slack / static_cast<double>(n_trials);
    return out;
}

}  // namespace hss
