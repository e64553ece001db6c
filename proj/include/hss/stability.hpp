#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hss/core.hpp"
#include "hss/errors.hpp"
#include "hss/hypothesis_set.hpp"
#include "hss/parallel.hpp"
#include "hss/rng.hpp"

namespace hss {

// Empirical stability/diameter coefficients. All sup-based estimates are
// lower bounds unless every inner search ran over an exhaustive finite set
// with full-support probes.
struct StabilityReport {
    double beta_hat = 0.0;
    double chi_hat = 0.0;
    double chi_bar_hat = 0.0;
    double delta_bar_hat = 0.0;
    double delta_hat = 0.0;
    double delta_max_hat = 0.0;
    std::int64_t n_perturbations = 0;
    std::int64_t n_probe_points = 0;
    enum class Directionality { lower_bound, exact } directionality = Directionality::lower_bound;

    // MC uncertainty of the averaged quantities (zero in exact mode).
    double chi_std_error = 0.0;
    double delta_std_error = 0.0;
};

struct StabilityOptions {
    std::int64_t n_perturbations = 64;  // (z index, z') pairs per sample in MC mode
    std::int64_t n_outer_samples = 8;   // extra S draws for the averaged coefficients
    bool exact = false;                 // enumerate all (index, atom) pairs; requires exhaustive sets
    unsigned threads = 1;
    std::vector<LabeledPoint> probe_points;  // empty: S points + distribution support
};

namespace detail {

inline std::vector<LabeledPoint> default_probes(const LabeledSample& s, const DiscreteDistribution& d) {
    std::vector<LabeledPoint> probes = s.points;
    probes.insert(probes.end(), d.support().begin(), d.support().end());
    return probes;
}

// Matching radius from A into B: max over members of A of the distance to
// their best counterpart in B, where distance is the worst loss gap over the
// probe points. For exhaustive sets the min runs over the actual set; only
// candidate searches are enriched with the parameter-matched counterpart.
inline double matching_radius(const HypothesisSet& a, const HypothesisSet& b,
                              const std::vector<LabeledPoint>& probes, const LossFunction& loss) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.candidates().size(); ++i) {
        const Hypothesis& h = a.candidates()[i];
        double best = std::numeric_limits<double>::infinity();
        auto consider = [&](const Hypothesis& cand) {
            double gap = 0.0;
            for (const auto& z : probes) {
                gap = std::max(gap, std::fabs(loss_at(loss, h, z) - loss_at(loss, cand, z)));
                if (gap >= best) break;
            }
            best = std::min(best, gap);
        };
        for (const auto& cand : b.candidates()) consider(cand);
        if (!b.exhaustive()) {
            if (const auto matched = a.counterpart_in(b, i)) consider(*matched);
        }
        worst = std::max(worst, best);
    }
    return worst;
}

}  // namespace detail

// Lower-bound estimate of the uniform hypothesis-set stability beta: worst
// matching radius over sampled one-point replacements, in both directions.
inline double estimate_beta(const HypothesisFamily& family, const LabeledSample& s,
                            const DiscreteDistribution& d,
                            const std::vector<LabeledPoint>& probe_points,
                            std::int64_t n_perturbations, SeededRng rng, const LossFunction& loss,
                            bool exact = false) {
    if (probe_points.empty()) throw validation_error("estimate_beta: probe points must be nonempty");
    if (!exact && n_perturbations < 1) throw validation_error("estimate_beta: n_perturbations >= 1");
    const HypothesisSet h_s = family(s);
    double beta = 0.0;
    auto consider = [&](std::size_t index, const LabeledPoint& zp) {
        const LabeledSample s2 = replace_point(s, index, zp);
        const HypothesisSet h_s2 = family(s2);
        beta = std::max(beta, detail::matching_radius(h_s, h_s2, probe_points, loss));
        beta = std::max(beta, detail::matching_radius(h_s2, h_s, probe_points, loss));
    };
    if (exact) {
        for (std::size_t i = 0; i < s.size(); ++i)
            for (const auto& atom : d.support()) consider(i, atom);
    } else {
        for (std::int64_t t = 0; t < n_perturbations; ++t) {
            SeededRng r = rng.stream(static_cast<std::uint64_t>(t));
            const std::size_t index = static_cast<std::size_t>(t) % s.size();
            consider(index, d.sample(r));
        }
    }
    return beta;
}

// Per-sample CV-stability contribution: the average over (z from S, z' from D)
// of sup_{h in H_S, h' in H_{S^{z<->z'}}} L(h', z) - L(h, z), clamped at 0.
// Exact mode enumerates all (index, atom) pairs with atom probabilities.
struct CvStabilityResult {
    double value = 0.0;
    double std_error = 0.0;
    std::int64_t n_pairs = 0;
    bool exact = false;
};

inline CvStabilityResult estimate_cv_stability(const HypothesisFamily& family, const LabeledSample& s,
                                               const DiscreteDistribution& d, const LossFunction& loss,
                                               std::int64_t n_perturbations, SeededRng rng,
                                               bool exact = false) {
    const HypothesisSet h_s = family(s);
    const double m = static_cast<double>(s.size());
    auto pair_term = [&](std::size_t index, const LabeledPoint& zp) {
        const LabeledSample s2 = replace_point(s, index, zp);
        const HypothesisSet h_s2 = family(s2);
        const LabeledPoint& z = s[index];
        double lo_s = 0.0, hi_s = 0.0, lo_p = 0.0, hi_p = 0.0;
        h_s.loss_range(z, loss, lo_s, hi_s);
        h_s2.loss_range(z, loss, lo_p, hi_p);
        return hi_p - lo_s;  // sup over h' minus inf over h
    };
    CvStabilityResult out;
    if (exact) {
        double acc = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i)
            for (std::size_t a = 0; a < d.support().size(); ++a)
                acc += d.probs()[a] * pair_term(i, d.support()[a]) / m;
        out.value = acc;
        out.n_pairs = static_cast<std::int64_t>(s.size() * d.support().size());
        out.exact = true;
        return out;
    }
    if (n_perturbations < 1) throw validation_error("estimate_cv_stability: n_perturbations >= 1");
    std::vector<double> vals(static_cast<std::size_t>(n_perturbations));
    for (std::int64_t t = 0; t < n_perturbations; ++t) {
        SeededRng r = rng.stream(static_cast<std::uint64_t>(t));
        const std::size_t index = static_cast<std::size_t>(t) % s.size();
        vals[static_cast<std::size_t>(t)] = pair_term(index, d.sample(r));
    }
    const MeanStdErr ms = mean_stderr(vals);
    out.value = ms.mean;
    out.std_error = ms.std_error;
    out.n_pairs = n_perturbations;
    return out;
}

// Per-sample diameters: inner sup of L(h',z) - L(h,z) over the set, averaged
// over z in S (feeds the average diameter and diameter) and maximized over
// z in S (feeds the max-diameter).
struct DiameterResult {
    double mean_over_z = 0.0;
    double max_over_z = 0.0;
    bool exact = false;
};

inline DiameterResult estimate_diameters(const HypothesisFamily& family, const LabeledSample& s,
                                         const LossFunction& loss) {
    const HypothesisSet h_s = family(s);
    DiameterResult out;
    out.exact = h_s.exhaustive();
    double acc = 0.0;
    for (const auto& z : s.points) {
        double lo = 0.0, hi = 0.0;
        h_s.loss_range(z, loss, lo, hi);
        const double diam = std::max(0.0, hi - lo);
        acc += diam;
        out.max_over_z = std::max(out.max_over_z, diam);
    }
    out.mean_over_z = acc / static_cast<double>(s.size());
    return out;
}

// Full stability report: folds per-sample estimates over the supplied sample
// plus `n_outer_samples` fresh draws from D (max-fold for sup-style
// coefficients, mean-fold for the averaged ones).
inline StabilityReport estimate_stability(const HypothesisFamily& family, const LabeledSample& s,
                                          const DiscreteDistribution& d, const LossFunction& loss,
                                          const StabilityOptions& opt, SeededRng rng) {
    std::vector<LabeledSample> samples{s};
    for (std::int64_t t = 0; t < opt.n_outer_samples; ++t) {
        SeededRng r = rng.stream(0x5000 + static_cast<std::uint64_t>(t));
        samples.push_back(draw_sample(d, s.size(), r));
    }

    // Per-sample estimates are independent tasks; the report is a
    // deterministic max/mean fold over the frozen per-sample results.
    struct PerSample {
        double beta = 0.0, chi = 0.0, chi_se = 0.0;
        DiameterResult diam;
        std::int64_t n_pairs = 0, n_probes = 0;
        bool exact = false;
    };
    std::vector<PerSample> results(samples.size());
    parallel_for(samples.size(), opt.threads, [&](std::size_t k) {
        const LabeledSample& sk = samples[k];
        const std::vector<LabeledPoint> probes =
            opt.probe_points.empty() ? detail::default_probes(sk, d) : opt.probe_points;
        PerSample out;
        out.beta = estimate_beta(family, sk, d, probes, opt.n_perturbations,
                                 rng.stream(0x6000 + k), loss, opt.exact);
        const CvStabilityResult cv = estimate_cv_stability(family, sk, d, loss, opt.n_perturbations,
                                                           rng.stream(0x7000 + k), opt.exact);
        out.chi = cv.value;
        out.chi_se = cv.std_error;
        out.n_pairs = cv.n_pairs;
        out.diam = estimate_diameters(family, sk, loss);
        out.exact = cv.exact && out.diam.exact && family(sk).exhaustive();
        out.n_probes = static_cast<std::int64_t>(probes.size());
        results[k] = out;
    });

    StabilityReport rep;
    rep.directionality = StabilityReport::Directionality::exact;
    std::vector<double> chi_vals, delta_vals;
    bool all_exact = true;
    double chi_se = 0.0;
    for (const PerSample& r : results) {
        rep.beta_hat = std::max(rep.beta_hat, r.beta);
        rep.chi_hat = std::max(rep.chi_hat, std::max(0.0, r.chi));
        rep.delta_hat = std::max(rep.delta_hat, r.diam.mean_over_z);
        rep.delta_max_hat = std::max(rep.delta_max_hat, r.diam.max_over_z);
        chi_vals.push_back(std::max(0.0, r.chi));
        delta_vals.push_back(r.diam.mean_over_z);
        chi_se = std::max(chi_se, r.chi_se);
        all_exact = all_exact && r.exact;
        rep.n_perturbations += r.n_pairs;
        rep.n_probe_points = r.n_probes;
    }
    double chi_acc = 0.0, delta_acc = 0.0;
    for (double v : chi_vals) chi_acc += v;
    for (double v : delta_vals) delta_acc += v;
    rep.chi_bar_hat = chi_acc / static_cast<double>(chi_vals.size());
    rep.delta_bar_hat = delta_acc / static_cast<double>(delta_vals.size());
    rep.chi_std_error = chi_se;
    rep.delta_std_error = mean_stderr(delta_vals).std_error;
    if (!opt.exact || !all_exact) rep.directionality = StabilityReport::Directionality::lower_bound;
    return rep;
}

// Consistency check: CV-stability is bounded by diameter plus
// stability, in both the sup and the averaged flavors.
inline bool check_lemma1(const StabilityReport& rep, double tol) {
    return rep.chi_hat <= rep.delta_hat + rep.beta_hat + tol &&
           rep.chi_bar_hat <= rep.delta_bar_hat + rep.beta_hat + tol;
}

}  // namespace hss
