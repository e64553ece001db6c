#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "hss/core.hpp"
#include "hss/errors.hpp"
#include "hss/parallel.hpp"
#include "hss/rng.hpp"

namespace hss {

// Softmax of scores/temperature with max-subtraction; renormalized so the
// probabilities sum to 1 at machine precision.
inline Vec softmax_probs(const Vec& scores, double inv_temperature) {
    double top = -std::numeric_limits<double>::infinity();
    for (double s : scores) top = std::max(top, s);
    Vec probs(scores.size());
    double z = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        probs[i] = std::exp(inv_temperature * (scores[i] - top));
        z += probs[i];
    }
    for (auto& p : probs) p /= z;
    return probs;
}

struct MechanismOutput {
    std::size_t chosen_index = 0;  // in [0, p) or [0, p] with the zero arm
    Vec probs;
    double epsilon = 0.0;
};

// Exponential mechanism: index k with probability proportional to
// exp(eps * f_k / (2 Delta)). With include_zero_arm, a score-0 arm is
// appended (index p), matching the max{0, .} reduction.
inline MechanismOutput exponential_mechanism(const Vec& scores, double epsilon, double delta_sens,
                                             bool include_zero_arm, SeededRng& rng) {
    if (scores.empty()) throw validation_error("exponential_mechanism: no scores");
    if (epsilon <= 0.0) throw validation_error("exponential_mechanism: epsilon must be > 0");
    for (double s : scores)
        if (!std::isfinite(s)) throw validation_error("exponential_mechanism: non-finite score");
    Vec arms = scores;
    if (include_zero_arm) arms.push_back(0.0);
    MechanismOutput out;
    out.epsilon = epsilon;
    if (delta_sens <= 0.0) {
        const double lo = *std::min_element(arms.begin(), arms.end());
        const double hi = *std::max_element(arms.begin(), arms.end());
        if (hi - lo > 0.0)
            throw validation_error("exponential_mechanism: Delta = 0 with unequal scores");
        out.probs.assign(arms.size(), 1.0 / static_cast<double>(arms.size()));
    } else {
        out.probs = softmax_probs(arms, epsilon / (2.0 * delta_sens));
    }
    const double u = rng.uniform();
    double acc = 0.0;
    out.chosen_index = out.probs.size() - 1;
    for (std::size_t i = 0; i < out.probs.size(); ++i) {
        acc += out.probs[i];
        if (u < acc) {
            out.chosen_index = i;
            break;
        }
    }
    return out;
}

// p scoring functions over a super-sample (a tuple of p samples), with a
// declared sensitivity under one-point replacement.
struct ScoreFamily {
    std::size_t p = 0;
    std::function<double(std::size_t k, const std::vector<LabeledSample>&)> scorer;
    double sensitivity = 0.0;
};

inline Vec evaluate_scores(const ScoreFamily& fam, const std::vector<LabeledSample>& super_sample) {
    Vec scores(fam.p);
    for (std::size_t k = 0; k < fam.p; ++k) scores[k] = fam.scorer(k, super_sample);
    return scores;
}

struct DpRatioResult {
    bool ok = true;
    double max_ratio = 1.0;
};

// Checks the epsilon-DP guarantee numerically: for every supplied neighboring
// super-sample pair and every output index, the probability ratio stays
// within e^eps (both directions).
inline DpRatioResult check_dp_ratio(
    const ScoreFamily& fam, double epsilon,
    const std::vector<std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>>>& neighbor_pairs,
    double tol, bool include_zero_arm = false) {
    DpRatioResult out;
    const double cap = std::exp(epsilon) * (1.0 + tol);
    for (const auto& [lhs, rhs] : neighbor_pairs) {
        Vec a = evaluate_scores(fam, lhs);
        Vec b = evaluate_scores(fam, rhs);
        if (include_zero_arm) {
            a.push_back(0.0);
            b.push_back(0.0);
        }
        const Vec pa = softmax_probs(a, epsilon / (2.0 * fam.sensitivity));
        const Vec pb = softmax_probs(b, epsilon / (2.0 * fam.sensitivity));
        for (std::size_t i = 0; i < pa.size(); ++i) {
            const double ratio = std::max(pa[i] / pb[i], pb[i] / pa[i]);
            out.max_ratio = std::max(out.max_ratio, ratio);
            if (ratio > cap) out.ok = false;
        }
    }
    return out;
}

struct MaxVsExpectation {
    double lhs = 0.0;  // max_k f_k
    double rhs = 0.0;  // E_{k = A(S)}[f_k] + (2 Delta / eps) log p
    bool holds = false;
};

// max_k f_k <= E_{k=A(S)}[f_k] + (2 Delta / eps) log p, both sides in closed
// form. Failure indicates an implementation bug, not a statistical event.
inline MaxVsExpectation check_max_vs_expectation(const Vec& scores, double epsilon, double delta_sens) {
    if (scores.empty()) throw validation_error("check_max_vs_expectation: no scores");
    if (epsilon <= 0.0 || delta_sens <= 0.0)
        throw validation_error("check_max_vs_expectation: epsilon and Delta must be > 0");
    const Vec probs = softmax_probs(scores, epsilon / (2.0 * delta_sens));
    MaxVsExpectation out;
    out.lhs = *std::max_element(scores.begin(), scores.end());
    double expectation = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) expectation += probs[i] * scores[i];
    out.rhs = expectation + (2.0 * delta_sens / epsilon) * std::log(static_cast<double>(scores.size()));
    out.holds = out.lhs <= out.rhs + 1e-12;
    return out;
}

struct SuTailResult {
    double empirical_prob = 0.0;
    double budget = 0.0;  // log(2) / p
    bool degenerate = false;
};

// Nested Monte Carlo check of the tail reduction
// P[X >= 2 E[max{0, X_1..X_p}]] <= log(2)/p. Degenerate (near-constant)
// samplers are flagged and skipped, since the statement concerns the
// nondegenerate regime.
inline SuTailResult lemma_su_tail_check(const std::function<double(SeededRng&)>& sampler, std::size_t p,
                                        std::int64_t n_outer, SeededRng rng, unsigned threads = 1) {
    if (p < 1 || n_outer < 1) throw validation_error("lemma_su_tail_check: p, n_outer must be >= 1");
    std::vector<double> maxima(static_cast<std::size_t>(n_outer));
    parallel_for(maxima.size(), threads, [&](std::size_t i) {
        SeededRng r = rng.stream(2 * i);
        double mx = 0.0;
        for (std::size_t k = 0; k < p; ++k) mx = std::max(mx, sampler(r));
        maxima[i] = mx;
    });
    double mean_max = 0.0, lo = maxima[0], hi = maxima[0];
    for (double v : maxima) {
        mean_max += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    mean_max /= static_cast<double>(n_outer);

    SuTailResult out;
    out.budget = std::log(2.0) / static_cast<double>(p);
    if (hi - lo < 1e-12) {
        out.degenerate = true;
        out.empirical_prob = 1.0;
        return out;
    }
    const double threshold = 2.0 * mean_max;
    std::vector<unsigned char> exceed(static_cast<std::size_t>(n_outer), 0);
    parallel_for(exceed.size(), threads, [&](std::size_t i) {
        SeededRng r = rng.stream(2 * i + 1);
        exceed[i] = sampler(r) >= threshold ? 1 : 0;
    });
    std::int64_t count = 0;
    for (unsigned char b : exceed) count += b;
    out.empirical_prob = static_cast<double>(count) / static_cast<double>(n_outer);
    return out;
}

}  // namespace hss
