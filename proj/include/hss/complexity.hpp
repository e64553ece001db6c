#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hss/core.hpp"
#include "hss/enumerate.hpp"
#include "hss/errors.hpp"
#include "hss/hypothesis_set.hpp"
#include "hss/parallel.hpp"
#include "hss/rng.hpp"

namespace hss {

// Realization of the sign vector sigma.
struct SignVector {
    enum class Scheme { rademacher, transductive };
    Scheme scheme = Scheme::rademacher;
    std::size_t m = 0, n = 0;
    Vec values;
};

inline SignVector draw_rademacher_signs(std::size_t m, SeededRng& rng) {
    SignVector s;
    s.scheme = SignVector::Scheme::rademacher;
    s.m = m;
    s.values.resize(m);
    for (auto& v : s.values) v = rng.rademacher();
    return s;
}

// Entries take (m+n)/n with probability n/(m+n) and -(m+n)/m otherwise, so
// each has mean zero.
inline SignVector draw_transductive_signs(std::size_t m, std::size_t n, SeededRng& rng) {
    if (m == 0 || n == 0) throw validation_error("transductive signs need m, n >= 1");
    SignVector s;
    s.scheme = SignVector::Scheme::transductive;
    s.m = m;
    s.n = n;
    const double total = static_cast<double>(m + n);
    const double plus = total / static_cast<double>(n);
    const double minus = -total / static_cast<double>(m);
    const double p_plus = static_cast<double>(n) / total;
    s.values.resize(m + n);
    for (auto& v : s.values) v = rng.bernoulli(p_plus) ? plus : minus;
    return s;
}

// Value + uncertainty for any estimated complexity or stability coefficient.
struct EstimateReport {
    double value = 0.0;
    double std_error = 0.0;
    std::int64_t n_draws = 0;
    bool exact = false;
    bool lower_bound_of_sup = false;
    std::string scheme = "rademacher";
};

struct ComplexityOptions {
    SupMode mode = SupMode::loss_class;
    unsigned threads = 1;
    std::int64_t exact_cap_m = 20;  // enumerating 2^m sign vectors beyond this is refused
};

namespace detail {

// One evaluation of (1/m) sup over H_{S_{T,sigma}} of sum_i sigma_i g(z^T_i).
inline SupResult dd_rad_term(const HypothesisFamily& family, const LabeledSample& s,
                             const LabeledSample& t, const LossFunction& loss, const Vec& sigma,
                             SupMode mode) {
    const LabeledSample swapped = swap_sample(s, t, sigma);
    const HypothesisSet set = family(swapped);
    SupResult r = set.sup_weighted(sigma, t.points, loss, mode);
    r.value /= static_cast<double>(s.size());
    return r;
}

}  // namespace detail

// Monte Carlo estimate of the data-dependent Rademacher complexity
// R_hat^/\_{S,T}: the hypothesis set itself varies with sigma through the
// swapped sample.
inline EstimateReport dd_rademacher_mc(const HypothesisFamily& family, const LabeledSample& s,
                                       const LabeledSample& t, const LossFunction& loss,
                                       std::int64_t n_draws, SeededRng rng,
                                       const ComplexityOptions& opt = {}) {
    if (s.size() != t.size()) throw validation_error("dd_rademacher_mc: |S| != |T|");
    if (n_draws < 1) throw validation_error("dd_rademacher_mc: n_draws must be >= 1");
    std::vector<double> values(static_cast<std::size_t>(n_draws));
    std::vector<unsigned char> inexact(static_cast<std::size_t>(n_draws), 0);
    parallel_for(values.size(), opt.threads, [&](std::size_t i) {
        SeededRng r = rng.stream(i);
        const SignVector sigma = draw_rademacher_signs(s.size(), r);
        const SupResult term = detail::dd_rad_term(family, s, t, loss, sigma.values, opt.mode);
        values[i] = term.value;
        inexact[i] = term.exact ? 0 : 1;
    });
    const MeanStdErr ms = mean_stderr(values);
    EstimateReport rep;
    rep.value = ms.mean;
    rep.std_error = ms.std_error;
    rep.n_draws = n_draws;
    rep.exact = false;
    rep.lower_bound_of_sup = std::any_of(inexact.begin(), inexact.end(), [](unsigned char b) { return b; });
    return rep;
}

// Exact variant: enumerates all 2^m sign vectors. The result is the exact
// expectation of the per-sigma sup (which may itself be a candidate-search
// lower bound for continuous descriptors).
inline EstimateReport dd_rademacher_exact(const HypothesisFamily& family, const LabeledSample& s,
                                          const LabeledSample& t, const LossFunction& loss,
                                          const ComplexityOptions& opt = {}) {
    if (s.size() != t.size()) throw validation_error("dd_rademacher_exact: |S| != |T|");
    const int m = static_cast<int>(s.size());
    if (m > opt.exact_cap_m) throw budget_error("dd_rademacher_exact: m exceeds enumeration cap");
    double acc = 0.0;
    std::int64_t count = 0;
    bool all_exact = true;
    for_each_sign_vector(m, std::int64_t{1} << opt.exact_cap_m, [&](const Vec& sigma) {
        const SupResult term = detail::dd_rad_term(family, s, t, loss, sigma, opt.mode);
        acc += term.value;
        all_exact = all_exact && term.exact;
        ++count;
    });
    EstimateReport rep;
    rep.value = acc / static_cast<double>(count);
    rep.std_error = 0.0;
    rep.n_draws = count;
    rep.exact = all_exact;
    rep.lower_bound_of_sup = !all_exact;
    return rep;
}

// Simpler upper bound from Section 2: the standard empirical Rademacher
// complexity of the pooled set H_{S,T} on T, with the pool built from size-m
// subsamples of S u T (all of them when feasible, else `subsample_count`).
inline EstimateReport union_rademacher(const HypothesisFamily& family, const LabeledSample& s,
                                       const LabeledSample& t, const LossFunction& loss,
                                       std::int64_t subsample_count, std::int64_t n_draws, SeededRng rng,
                                       const ComplexityOptions& opt = {}) {
    if (s.size() != t.size()) throw validation_error("union_rademacher: |S| != |T|");
    if (subsample_count < 1 || n_draws < 1)
        throw validation_error("union_rademacher: counts must be >= 1");
    std::vector<LabeledPoint> pooled = s.points;
    pooled.insert(pooled.end(), t.points.begin(), t.points.end());
    const LabeledSample su(std::move(pooled));
    const HypothesisSetUnion pool =
        pool_over_subsamples(family, su, s.size(), subsample_count, rng.stream(0x706f6f6c));

    std::vector<double> values(static_cast<std::size_t>(n_draws));
    std::vector<unsigned char> inexact(values.size(), 0);
    parallel_for(values.size(), opt.threads, [&](std::size_t i) {
        SeededRng r = rng.stream(i);
        const SignVector sigma = draw_rademacher_signs(s.size(), r);
        const SupResult term = pool.sup_weighted(sigma.values, t.points, loss, opt.mode);
        values[i] = term.value / static_cast<double>(s.size());
        inexact[i] = term.exact ? 0 : 1;
    });
    const MeanStdErr ms = mean_stderr(values);
    EstimateReport rep;
    rep.value = ms.mean;
    rep.std_error = ms.std_error;
    rep.n_draws = n_draws;
    rep.exact = false;
    rep.lower_bound_of_sup =
        !pool.complete || std::any_of(inexact.begin(), inexact.end(), [](unsigned char b) { return b; });
    return rep;
}

// Transductive Rademacher complexity over a super-sample U of size m+n, for a
// pooled hypothesis set (typically pool_over_subsamples of U).
inline EstimateReport transductive_rademacher_mc(const HypothesisSetUnion& family_union,
                                                 const LabeledSample& u, std::size_t m, std::size_t n,
                                                 const LossFunction& loss, std::int64_t n_draws,
                                                 SeededRng rng, const ComplexityOptions& opt = {}) {
    if (u.size() != m + n) throw validation_error("transductive_rademacher_mc: |U| != m + n");
    if (n_draws < 1) throw validation_error("transductive_rademacher_mc: n_draws must be >= 1");
    std::vector<double> values(static_cast<std::size_t>(n_draws));
    std::vector<unsigned char> inexact(values.size(), 0);
    parallel_for(values.size(), opt.threads, [&](std::size_t i) {
        SeededRng r = rng.stream(i);
        const SignVector sigma = draw_transductive_signs(m, n, r);
        const SupResult term = family_union.sup_weighted(sigma.values, u.points, loss, opt.mode);
        values[i] = term.value / static_cast<double>(m + n);
        inexact[i] = term.exact ? 0 : 1;
    });
    const MeanStdErr ms = mean_stderr(values);
    EstimateReport rep;
    rep.value = ms.mean;
    rep.std_error = ms.std_error;
    rep.n_draws = n_draws;
    rep.exact = false;
    rep.scheme = "transductive";
    rep.lower_bound_of_sup =
        !family_union.complete ||
        std::any_of(inexact.begin(), inexact.end(), [](unsigned char b) { return b; });
    return rep;
}

// Closed-form bound for L1-constrained data-dependent linear classes:
// r_T * r_{SuT} * Lambda1 * sqrt(2 log(4m) / m).
inline double massart_l1_bound(double lambda1, const LabeledSample& s, const LabeledSample& t) {
    if (lambda1 < 0) throw validation_error("massart_l1_bound: Lambda1 must be >= 0");
    const double m = static_cast<double>(t.size());
    double sum_sq = 0.0, r_max = 0.0;
    for (const auto& z : t.points) {
        const double nn = norm2(z.x);
        sum_sq += nn * nn;
        r_max = std::max(r_max, nn);
    }
    for (const auto& z : s.points) r_max = std::max(r_max, norm2(z.x));
    const double r_t = std::sqrt(sum_sq / m);
    return r_t * r_max * lambda1 * std::sqrt(2.0 * std::log(4.0 * m) / m);
}

struct LinearNormBound {
    double tight = 0.0;  // Lambda * sqrt(sum ||x_i||^2) / m
    double loose = 0.0;  // Lambda * r / sqrt(m)
};

inline LinearNormBound linear_norm_bound(double lambda, const LabeledSample& t) {
    if (lambda < 0) throw validation_error("linear_norm_bound: Lambda must be >= 0");
    const double m = static_cast<double>(t.size());
    double sum_sq = 0.0, r_max = 0.0;
    for (const auto& z : t.points) {
        const double nn = norm2(z.x);
        sum_sq += nn * nn;
        r_max = std::max(r_max, nn);
    }
    return {lambda * std::sqrt(sum_sq) / m, lambda * r_max / std::sqrt(m)};
}

// Concentration radius for the empirical complexity of a beta-stable family:
// sqrt([(m beta + 1)^2 + m^2 beta^2] log(2/delta) / (2m)).
inline double concentration_bound(double beta, std::int64_t m, double delta) {
    if (beta < 0 || m < 1) throw validation_error("concentration_bound: bad beta or m");
    if (delta <= 0.0 || delta >= 1.0) throw validation_error("concentration_bound: delta outside (0,1)");
    const double md = static_cast<double>(m);
    const double a = (md * beta + 1.0) * (md * beta + 1.0) + md * md * beta * beta;
    return std::sqrt(a * std::log(2.0 / delta) / (2.0 * md));
}

}  // namespace hss
