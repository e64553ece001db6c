#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "hss/core.hpp"
#include "hss/enumerate.hpp"
#include "hss/errors.hpp"
#include "hss/hypothesis_set.hpp"
#include "hss/mechanisms.hpp"

namespace hss {

// Enumeration limits for the brute-force oracles. Exceeding a budget is an
// error; the oracle never degrades to sampling.
struct OracleBudget {
    std::int64_t max_sign_vectors = std::int64_t{1} << 20;
    std::int64_t max_partitions = 12870;  // C(16, 8)
    std::int64_t max_hypotheses = 10000;
};

// Exact sup over an exhaustively enumerable set of R(h) - R_hat_S(h), with the
// true risk exact under the finite-support distribution.
inline double exact_sup_gap(const HypothesisSet& set, const DiscreteDistribution& d,
                            const LabeledSample& s, const LossFunction& loss,
                            const OracleBudget& budget = {}) {
    if (!set.exhaustive()) throw validation_error("exact_sup_gap: descriptor is not exhaustive");
    if (static_cast<std::int64_t>(set.candidate_count()) > budget.max_hypotheses)
        throw budget_error("exact_sup_gap: hypothesis budget exceeded");
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& h : set.candidates())
        best = std::max(best, true_risk(h, d, loss) - empirical_risk(h, s, loss));
    return best;
}

// Exact expectation over uniform (S, T) partitions of U of
// sup_h [R_hat_T(h) - R_hat_S(h)], enumerating all C(m+n, m) partitions in
// lexicographic order.
inline double exact_transductive_expectation(const HypothesisSetUnion& family_union,
                                             const LabeledSample& u, std::size_t m, std::size_t n,
                                             const LossFunction& loss, const OracleBudget& budget = {}) {
    if (u.size() != m + n) throw validation_error("exact_transductive_expectation: |U| != m + n");
    // Per-candidate loss table over U; the per-partition sup is then a table scan.
    std::vector<Vec> table;
    bool all_exact = true;
    for (const auto& part : family_union.parts) {
        all_exact = all_exact && part.exhaustive();
        for (const auto& h : part.candidates()) {
            Vec row(u.size());
            for (std::size_t i = 0; i < u.size(); ++i) row[i] = loss_at(loss, h, u[i]);
            table.push_back(std::move(row));
        }
    }
    if (!all_exact)
        throw validation_error("exact_transductive_expectation: union is not exhaustively enumerable");
    if (static_cast<std::int64_t>(table.size()) > budget.max_hypotheses)
        throw budget_error("exact_transductive_expectation: hypothesis budget exceeded");

    Vec row_totals(table.size(), 0.0);
    for (std::size_t k = 0; k < table.size(); ++k)
        for (double v : table[k]) row_totals[k] += v;

    const double inv_m = 1.0 / static_cast<double>(m);
    const double inv_n = 1.0 / static_cast<double>(n);
    double acc = 0.0;
    std::int64_t count = 0;
    for_each_combination(static_cast<int>(m + n), static_cast<int>(m), budget.max_partitions,
                         [&](const std::vector<int>& s_idx) {
                             double best = -std::numeric_limits<double>::infinity();
                             for (std::size_t k = 0; k < table.size(); ++k) {
                                 double sum_s = 0.0;
                                 for (int i : s_idx) sum_s += table[k][static_cast<std::size_t>(i)];
                                 const double r_s = sum_s * inv_m;
                                 const double r_t = (row_totals[k] - sum_s) * inv_n;
                                 best = std::max(best, r_t - r_s);
                             }
                             acc += best;
                             ++count;
                         });
    return acc / static_cast<double>(count);
}

// Exact transductive Rademacher complexity by weighted enumeration of all
// 2^(m+n) sign assignments (each entry independently (m+n)/n w.p. n/(m+n),
// else -(m+n)/m).
inline double exact_transductive_rademacher(const HypothesisSetUnion& family_union,
                                            const LabeledSample& u, std::size_t m, std::size_t n,
                                            const LossFunction& loss,
                                            const OracleBudget& budget = {}) {
    if (u.size() != m + n) throw validation_error("exact_transductive_rademacher: |U| != m + n");
    const int total = static_cast<int>(m + n);
    if (total >= 63 || (std::int64_t{1} << total) > budget.max_sign_vectors)
        throw budget_error("exact_transductive_rademacher: sign-vector budget exceeded");
    const double plus = static_cast<double>(m + n) / static_cast<double>(n);
    const double minus = -static_cast<double>(m + n) / static_cast<double>(m);
    const double p_plus = static_cast<double>(n) / static_cast<double>(m + n);
    const double p_minus = 1.0 - p_plus;

    std::vector<Vec> table;
    for (const auto& part : family_union.parts)
        for (const auto& h : part.candidates()) {
            Vec row(u.size());
            for (std::size_t i = 0; i < u.size(); ++i) row[i] = loss_at(loss, h, u[i]);
            table.push_back(std::move(row));
        }
    if (static_cast<std::int64_t>(table.size()) > budget.max_hypotheses)
        throw budget_error("exact_transductive_rademacher: hypothesis budget exceeded");

    const std::int64_t combos = std::int64_t{1} << total;
    double acc = 0.0;
    for (std::int64_t mask = 0; mask < combos; ++mask) {
        double weight = 1.0;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < table.size(); ++k) {
            double sum = 0.0;
            for (int i = 0; i < total; ++i) {
                const bool is_plus = (mask >> i) & 1;
                sum += (is_plus ? plus : minus) * table[k][static_cast<std::size_t>(i)];
            }
            best = std::max(best, sum);
        }
        for (int i = 0; i < total; ++i) weight *= ((mask >> i) & 1) ? p_plus : p_minus;
        acc += weight * best;
    }
    return acc / static_cast<double>(m + n);
}

// Score family f_k(SS) = sup_{h in H_{S_k}} R(h) - R_hat_{S_k}(h) over a tuple
// of p samples, the score function driving the CV-stability branch. Its
// sensitivity under one-point replacement is 1/m + 2 beta.
inline ScoreFamily make_psi_score_family(const HypothesisFamily& family, const DiscreteDistribution& d,
                                         const LossFunction& loss, std::size_t p, std::size_t m,
                                         double beta) {
    ScoreFamily fam;
    fam.p = p;
    fam.sensitivity = 1.0 / static_cast<double>(m) + 2.0 * beta;
    fam.scorer = [family, d, loss](std::size_t k, const std::vector<LabeledSample>& super_sample) {
        const LabeledSample& sk = super_sample.at(k);
        return exact_sup_gap(family(sk), d, sk, loss);
    };
    return fam;
}

// Closed-form expectation of the exponential mechanism's selected score.
inline double exact_expmech_expectation(const Vec& scores, double epsilon, double delta_sens,
                                        bool include_zero_arm) {
    if (scores.empty()) throw validation_error("exact_expmech_expectation: no scores");
    if (epsilon <= 0.0 || delta_sens <= 0.0)
        throw validation_error("exact_expmech_expectation: epsilon and Delta must be > 0");
    Vec arms = scores;
    if (include_zero_arm) arms.push_back(0.0);
    const Vec probs = softmax_probs(arms, epsilon / (2.0 * delta_sens));
    double acc = 0.0;
    for (std::size_t i = 0; i < arms.size(); ++i) acc += probs[i] * arms[i];
    return acc;
}

}  // namespace hss
