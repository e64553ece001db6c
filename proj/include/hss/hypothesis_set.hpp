#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hss/core.hpp"
#include "hss/enumerate.hpp"
#include "hss/errors.hpp"

namespace hss {

// Whether a supremum runs over the loss class G_S = {z -> L(h,z)} or over raw
// predictions h(x). Main results use the loss class; the raw variant matches
// the definition-level statement and the closed-form linear bounds.
enum class SupMode { loss_class, raw };

struct SupResult {
    double value = 0.0;
    bool exact = true;  // false when the sup was searched over a finite candidate set only
};

// Constraint polytope for mixture weights alpha over K anchors.
struct MixConstraint {
    enum class Kind {
        l1_ball_at_zero,  // ||alpha||_1 <= lambda1, signed
        capped_simplex,   // alpha in simplex, alpha_i <= cap
        simplex_l1_ball,  // alpha in simplex intersect B_1(center, radius)
    };

    Kind kind = Kind::l1_ball_at_zero;
    double lambda1 = 0.0;
    double cap = 1.0;
    Vec center;
    double radius = 0.0;

    static MixConstraint l1_ball(double lambda1) {
        if (lambda1 < 0) throw validation_error("MixConstraint: lambda1 must be >= 0");
        MixConstraint c;
        c.kind = Kind::l1_ball_at_zero;
        c.lambda1 = lambda1;
        return c;
    }
    static MixConstraint capped(std::size_t k, double cap) {
        if (cap * static_cast<double>(k) < 1.0 - 1e-12)
            throw validation_error("MixConstraint: cap too small, simplex empty");
        MixConstraint c;
        c.kind = Kind::capped_simplex;
        c.cap = cap;
        c.center.assign(k, 1.0 / static_cast<double>(k));
        return c;
    }
    static MixConstraint simplex_ball(Vec center, double radius) {
        double s = 0.0;
        for (double v : center) {
            if (v < -1e-12) throw validation_error("MixConstraint: center must lie in the simplex");
            s += v;
        }
        if (std::fabs(s - 1.0) > 1e-9) throw validation_error("MixConstraint: center must sum to 1");
        if (radius < 0) throw validation_error("MixConstraint: radius must be >= 0");
        MixConstraint c;
        c.kind = Kind::simplex_l1_ball;
        c.center = std::move(center);
        c.radius = radius;
        return c;
    }

    // Exact maximum of sum_j alpha_j * coeffs_j over the polytope.
    double sup_linear(const Vec& coeffs) const {
        const std::size_t k = coeffs.size();
        switch (kind) {
            case Kind::l1_ball_at_zero: {
                double best = 0.0;
                for (double c : coeffs) best = std::max(best, std::fabs(c));
                return lambda1 * best;
            }
            case Kind::capped_simplex: {
                // Greedy water-filling: pour mass into the largest coefficients first.
                std::vector<std::size_t> order(k);
                std::iota(order.begin(), order.end(), std::size_t{0});
                std::sort(order.begin(), order.end(),
                          [&](std::size_t a, std::size_t b) { return coeffs[a] > coeffs[b]; });
                double mass = 1.0, acc = 0.0;
                for (std::size_t j : order) {
                    const double take = std::min(cap, mass);
                    acc += take * coeffs[j];
                    mass -= take;
                    if (mass <= 0.0) break;
                }
                return acc;
            }
            case Kind::simplex_l1_ball: {
                // Move up to radius/2 of mass from the smallest coefficients of the
                // center onto the single largest coefficient.
                std::size_t best = 0;
                for (std::size_t j = 1; j < k; ++j)
                    if (coeffs[j] > coeffs[best]) best = j;
                std::vector<std::size_t> order(k);
                std::iota(order.begin(), order.end(), std::size_t{0});
                std::sort(order.begin(), order.end(),
                          [&](std::size_t a, std::size_t b) { return coeffs[a] < coeffs[b]; });
                double budget = radius / 2.0;
                double acc = 0.0;
                for (std::size_t j = 0; j < k; ++j) acc += center[j] * coeffs[j];
                for (std::size_t j : order) {
                    if (j == best || budget <= 0.0) continue;
                    const double gain = coeffs[best] - coeffs[j];
                    if (gain <= 0.0) break;
                    const double moved = std::min(center[j], budget);
                    acc += moved * gain;
                    budget -= moved;
                }
                return acc;
            }
        }
        return 0.0;
    }

    // Deterministic candidate vertices (plus the center) used for
    // loss-composed searches and counterpart matching.
    std::vector<Vec> candidate_alphas(std::size_t k) const {
        std::vector<Vec> out;
        switch (kind) {
            case Kind::l1_ball_at_zero:
                out.emplace_back(k, 0.0);
                for (std::size_t j = 0; j < k; ++j) {
                    Vec plus(k, 0.0), minus(k, 0.0);
                    plus[j] = lambda1;
                    minus[j] = -lambda1;
                    out.push_back(std::move(plus));
                    out.push_back(std::move(minus));
                }
                break;
            case Kind::capped_simplex: {
                out.push_back(center);  // uniform mixture
                for (std::size_t start = 0; start < k; ++start) {
                    Vec a(k, 0.0);
                    double mass = 1.0;
                    for (std::size_t step = 0; step < k && mass > 0.0; ++step) {
                        const std::size_t j = (start + step) % k;
                        const double take = std::min(cap, mass);
                        a[j] = take;
                        mass -= take;
                    }
                    out.push_back(std::move(a));
                }
                break;
            }
            case Kind::simplex_l1_ball: {
                out.push_back(center);
                for (std::size_t tgt = 0; tgt < k; ++tgt) {
                    Vec a = center;
                    double budget = radius / 2.0;
                    for (std::size_t j = 0; j < k && budget > 0.0; ++j) {
                        if (j == tgt) continue;
                        const double moved = std::min(a[j], budget);
                        a[j] -= moved;
                        a[tgt] += moved;
                        budget -= moved;
                    }
                    out.push_back(std::move(a));
                }
                break;
            }
        }
        return out;
    }
};

// Sample-learned feature map x -> R^N.
struct FeatureMap {
    std::function<Vec(const Vec&)> map;
    std::size_t out_dim = 0;
};

// Second-stage head family on top of a feature map: either a finite list of
// gamma-Lipschitz functions or the L2 ball of linear heads ||w|| <= radius.
struct HeadFamily {
    enum class Kind { finite, l2_ball };
    Kind kind = Kind::finite;
    std::vector<std::function<double(const Vec&)>> heads;  // finite case
    double l2_radius = 0.0;                                // l2_ball case
    std::vector<Vec> directions;                           // candidate unit directions for l2_ball

    static HeadFamily finite_set(std::vector<std::function<double(const Vec&)>> hs) {
        HeadFamily f;
        f.kind = Kind::finite;
        f.heads = std::move(hs);
        return f;
    }
    static HeadFamily l2_ball(double radius, std::size_t dim, std::size_t extra_directions = 8,
                              std::uint64_t direction_seed = 17) {
        HeadFamily f;
        f.kind = Kind::l2_ball;
        f.l2_radius = radius;
        for (std::size_t j = 0; j < dim; ++j) {
            Vec e(dim, 0.0);
            e[j] = 1.0;
            f.directions.push_back(e);
            Vec me(dim, 0.0);
            me[j] = -1.0;
            f.directions.push_back(std::move(me));
        }
        SeededRng rng(direction_seed, 0);
        for (std::size_t t = 0; t < extra_directions; ++t) {
            Vec d(dim);
            double n2 = 0.0;
            for (auto& v : d) {
                v = rng.gaussian();
                n2 += v * v;
            }
            if (n2 <= 0) continue;
            for (auto& v : d) v /= std::sqrt(n2);
            f.directions.push_back(std::move(d));
        }
        return f;
    }
};

// A hypothesis set H_S. Construction is expected to be permutation-invariant
// in the sample that produced it; the set itself only knows how to evaluate
// members, take suprema, and expose counterparts in a sibling set.
class HypothesisSet {
  public:
    enum class Variant { finite_set, l1_mix, ball_around_center, feature_map };

    static HypothesisSet finite(std::vector<Hypothesis> members) {
        if (members.empty()) throw validation_error("HypothesisSet: finite set must be nonempty");
        HypothesisSet h;
        h.variant_ = Variant::finite_set;
        h.candidates_ = std::move(members);
        h.exhaustive_ = true;
        return h;
    }

    static HypothesisSet l1_mix(std::vector<Hypothesis> anchors, MixConstraint constraint) {
        if (anchors.empty()) throw validation_error("HypothesisSet: mixture needs anchors");
        HypothesisSet h;
        h.variant_ = Variant::l1_mix;
        h.anchors_ = std::make_shared<std::vector<Hypothesis>>(std::move(anchors));
        h.constraint_ = std::move(constraint);
        h.exhaustive_ = false;
        h.alphas_ = h.constraint_.candidate_alphas(h.anchors_->size());
        for (const auto& a : h.alphas_) h.candidates_.push_back(h.mixture(a));
        return h;
    }

    // `members` is the grid filtered by the sup-norm constraint. When the grid
    // is the family's whole second-stage class, the set is exhaustive.
    static HypothesisSet ball(Hypothesis center, double gamma, std::vector<Hypothesis> members,
                              bool exhaustive) {
        if (members.empty()) throw validation_error("HypothesisSet: ball has no members after filtering");
        HypothesisSet h;
        h.variant_ = Variant::ball_around_center;
        h.center_ = std::make_shared<Hypothesis>(std::move(center));
        h.gamma_ = gamma;
        h.candidates_ = std::move(members);
        h.exhaustive_ = exhaustive;
        return h;
    }

    static HypothesisSet feature_mapped(FeatureMap map, HeadFamily heads, bool heads_exhaustive = true) {
        HypothesisSet h;
        h.variant_ = Variant::feature_map;
        h.map_ = std::make_shared<FeatureMap>(std::move(map));
        h.heads_ = std::make_shared<HeadFamily>(std::move(heads));
        if (h.heads_->kind == HeadFamily::Kind::finite) {
            if (h.heads_->heads.empty()) throw validation_error("HypothesisSet: empty head family");
            h.exhaustive_ = heads_exhaustive;
            for (std::size_t j = 0; j < h.heads_->heads.size(); ++j) h.candidates_.push_back(h.composed(j));
        } else {
            h.exhaustive_ = false;
            const auto m = h.map_;
            for (const auto& dir : h.heads_->directions) {
                Vec w = dir;
                for (auto& v : w) v *= h.heads_->l2_radius;
                h.candidates_.push_back(Hypothesis{
                    [m, w](const Vec& x) { return dot(w, m->map(x)); }, w});
            }
        }
        return h;
    }

    Variant variant() const { return variant_; }
    bool exhaustive() const { return exhaustive_; }
    const std::vector<Hypothesis>& candidates() const { return candidates_; }
    std::size_t candidate_count() const { return candidates_.size(); }
    const Hypothesis& center() const { return *center_; }
    double ball_radius() const { return gamma_; }
    const std::vector<Hypothesis>& anchors() const { return *anchors_; }
    const MixConstraint& constraint() const { return constraint_; }

    // sup over the set of sum_j w_j * value(h, pts_j), where value is the
    // clipped loss (loss_class) or the raw prediction (raw).
    SupResult sup_weighted(const Vec& w, const std::vector<LabeledPoint>& pts, const LossFunction& loss,
                           SupMode mode) const {
        switch (variant_) {
            case Variant::l1_mix:
                if (mode == SupMode::raw) {
                    // Linear in alpha: exact at a polytope optimum.
                    Vec coeffs(anchors_->size(), 0.0);
                    for (std::size_t k = 0; k < anchors_->size(); ++k) {
                        const Hypothesis& f = (*anchors_)[k];
                        double c = 0.0;
                        for (std::size_t j = 0; j < pts.size(); ++j) c += w[j] * f(pts[j].x);
                        coeffs[k] = c;
                    }
                    return {constraint_.sup_linear(coeffs), true};
                }
                return candidate_sup(w, pts, loss, mode, /*exact=*/false);
            case Variant::feature_map:
                if (mode == SupMode::raw && heads_ && heads_->kind == HeadFamily::Kind::l2_ball) {
                    Vec agg(map_->out_dim, 0.0);
                    for (std::size_t j = 0; j < pts.size(); ++j) axpy(w[j], map_->map(pts[j].x), agg);
                    return {heads_->l2_radius * norm2(agg), true};
                }
                return candidate_sup(w, pts, loss, mode, exhaustive_);
            case Variant::finite_set:
            case Variant::ball_around_center:
                return candidate_sup(w, pts, loss, mode, exhaustive_);
        }
        return {0.0, false};
    }

    // min/max of the member loss at a single point; used by diameters and
    // CV-stability, where the two-sided sup separates.
    SupResult loss_range(const LabeledPoint& z, const LossFunction& loss, double& lo, double& hi) const {
        lo = 2.0;
        hi = -1.0;
        for (const auto& h : candidates_) {
            const double v = loss_at(loss, h, z);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const bool exact = exhaustive_;
        return {hi - lo, exact};
    }

    // Parameter-matched counterpart of candidate i inside a sibling set built
    // from a perturbed sample. Mirrors the correspondence each application's
    // analysis uses (same mixture weights, same head, recentered ball member).
    std::optional<Hypothesis> counterpart_in(const HypothesisSet& other, std::size_t index) const {
        if (variant_ != other.variant_) return std::nullopt;
        switch (variant_) {
            case Variant::finite_set:
                if (index < other.candidates_.size()) return other.candidates_[index];
                return std::nullopt;
            case Variant::l1_mix:
                if (index < alphas_.size() && other.anchors_->size() == anchors_->size())
                    return other.mixture(alphas_[index]);
                return std::nullopt;
            case Variant::ball_around_center: {
                if (index >= candidates_.size()) return std::nullopt;
                const Hypothesis h = candidates_[index];
                const auto c0 = center_;
                const auto c1 = other.center_;
                return Hypothesis{[h, c0, c1](const Vec& x) { return h(x) + (*c1)(x) - (*c0)(x); },
                                  h.params};
            }
            case Variant::feature_map:
                if (heads_->kind == HeadFamily::Kind::finite && index < heads_->heads.size())
                    return other.composed(index);
                if (heads_->kind == HeadFamily::Kind::l2_ball && index < candidates_.size()) {
                    const Vec w = candidates_[index].params;
                    const auto m = other.map_;
                    return Hypothesis{[m, w](const Vec& x) { return dot(w, m->map(x)); }, w};
                }
                return std::nullopt;
        }
        return std::nullopt;
    }

  private:
    Hypothesis mixture(const Vec& alpha) const {
        const auto anchors = anchors_;
        return Hypothesis{[anchors, alpha](const Vec& x) {
                              double s = 0.0;
                              for (std::size_t k = 0; k < anchors->size(); ++k)
                                  if (alpha[k] != 0.0) s += alpha[k] * (*anchors)[k](x);
                              return s;
                          },
                          alpha};
    }

    Hypothesis composed(std::size_t head_index) const {
        const auto m = map_;
        const auto hs = heads_;
        return Hypothesis{[m, hs, head_index](const Vec& x) { return hs->heads[head_index](m->map(x)); },
                          {static_cast<double>(head_index)}};
    }

    SupResult candidate_sup(const Vec& w, const std::vector<LabeledPoint>& pts, const LossFunction& loss,
                            SupMode mode, bool exact) const {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& h : candidates_) {
            double acc = 0.0;
            for (std::size_t j = 0; j < pts.size(); ++j) {
                const double v =
                    mode == SupMode::loss_class ? loss(h(pts[j].x), pts[j].y) : h(pts[j].x);
                acc += w[j] * v;
            }
            best = std::max(best, acc);
        }
        return {best, exact};
    }

    Variant variant_ = Variant::finite_set;
    bool exhaustive_ = false;
    std::vector<Hypothesis> candidates_;

    // l1_mix
    std::shared_ptr<std::vector<Hypothesis>> anchors_;
    MixConstraint constraint_;
    std::vector<Vec> alphas_;

    // ball_around_center
    std::shared_ptr<Hypothesis> center_;
    double gamma_ = 0.0;

    // feature_map
    std::shared_ptr<FeatureMap> map_;
    std::shared_ptr<HeadFamily> heads_;
};

// Union of hypothesis sets (e.g. pooled over subsamples of a super-sample).
// `complete` is false when the pool was sampled rather than enumerated.
struct HypothesisSetUnion {
    std::vector<HypothesisSet> parts;
    bool complete = true;

    SupResult sup_weighted(const Vec& w, const std::vector<LabeledPoint>& pts, const LossFunction& loss,
                           SupMode mode) const {
        if (parts.empty()) throw validation_error("HypothesisSetUnion: empty union");
        SupResult out{-std::numeric_limits<double>::infinity(), true};
        for (const auto& p : parts) {
            const SupResult r = p.sup_weighted(w, pts, loss, mode);
            out.value = std::max(out.value, r.value);
            out.exact = out.exact && r.exact;
        }
        return out;
    }

    std::size_t candidate_count() const {
        std::size_t n = 0;
        for (const auto& p : parts) n += p.candidate_count();
        return n;
    }
};

// A family of data-dependent hypothesis sets S -> H_S. Must be deterministic
// and invariant to the ordering of S.
using HypothesisFamily = std::function<HypothesisSet(const LabeledSample&)>;

inline HypothesisSetUnion single_set_union(HypothesisSet set) {
    HypothesisSetUnion u;
    u.parts.push_back(std::move(set));
    return u;
}

// Pools H_S over size-m subsamples of U: every subsample when C(|U|, m) fits
// the budget, otherwise `max_subsets` sampled ones (flagged incomplete).
inline HypothesisSetUnion pool_over_subsamples(const HypothesisFamily& family, const LabeledSample& u,
                                               std::size_t m, std::int64_t max_subsets, SeededRng rng) {
    const int total = static_cast<int>(u.size());
    if (m == 0 || m > u.size()) throw validation_error("pool_over_subsamples: bad subsample size");
    HypothesisSetUnion pool;
    if (binomial(total, static_cast<int>(m)) <= max_subsets) {
        for_each_combination(total, static_cast<int>(m), max_subsets, [&](const std::vector<int>& idx) {
            std::vector<LabeledPoint> pts;
            pts.reserve(m);
            for (int i : idx) pts.push_back(u[static_cast<std::size_t>(i)]);
            pool.parts.push_back(family(LabeledSample(std::move(pts))));
        });
        pool.complete = true;
        return pool;
    }
    pool.complete = false;
    std::vector<int> perm(u.size());
    for (std::int64_t t = 0; t < max_subsets; ++t) {
        SeededRng r = rng.stream(static_cast<std::uint64_t>(t));
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(r.uniform_int(perm.size() - i));
            std::swap(perm[i], perm[j]);
        }
        std::vector<LabeledPoint> pts;
        pts.reserve(m);
        for (std::size_t i = 0; i < m; ++i) pts.push_back(u[static_cast<std::size_t>(perm[i])]);
        pool.parts.push_back(family(LabeledSample(std::move(pts))));
    }
    return pool;
}

}  // namespace hss
