#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "hss/errors.hpp"
#include "hss/linalg.hpp"
#include "hss/rng.hpp"

namespace hss {

// One labeled example z = (x, y).
struct LabeledPoint {
    Vec x;
    double y = 0.0;
};

inline bool finite(const LabeledPoint& z) {
    if (!std::isfinite(z.y)) return false;
    for (double v : z.x) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

// Ordered multiset of labeled points. Ordering exists only so index-wise
// constructions (swap, replace) are well defined; consumers must be
// permutation-invariant.
struct LabeledSample {
    std::vector<LabeledPoint> points;

    LabeledSample() = default;
    explicit LabeledSample(std::vector<LabeledPoint> pts) : points(std::move(pts)) { validate(); }

    std::size_t size() const { return points.size(); }
    const LabeledPoint& operator[](std::size_t i) const { return points[i]; }

    std::size_t dim() const { return points.empty() ? 0 : points.front().x.size(); }

    void validate() const {
        if (points.empty()) throw validation_error("LabeledSample: needs at least one point");
        const std::size_t d = points.front().x.size();
        for (const auto& z : points) {
            if (z.x.size() != d) throw validation_error("LabeledSample: inconsistent feature dimension");
            if (!finite(z)) throw validation_error("LabeledSample: non-finite coordinate");
        }
    }
};

// Bounded loss on Y' x Y. Any base loss is clipped into [0,1] so the
// boundedness assumption holds by construction; the Lipschitz constant is
// carried as metadata and spot-checked on probe grids.
class LossFunction {
  public:
    enum class Kind { absolute_clipped, squared_clipped, hinge_clipped, custom };

    static LossFunction absolute() {
        return LossFunction(Kind::absolute_clipped, 1.0, [](double a, double y) { return std::fabs(a - y); });
    }
    static LossFunction squared(double mu = 2.0) {
        return LossFunction(Kind::squared_clipped, mu, [](double a, double y) { return (a - y) * (a - y); });
    }
    static LossFunction hinge() {
        return LossFunction(Kind::hinge_clipped, 1.0,
                            [](double a, double y) { return std::max(0.0, 1.0 - a * y); });
    }
    static LossFunction custom(std::function<double(double, double)> fn, double mu) {
        return LossFunction(Kind::custom, mu, std::move(fn));
    }

    double operator()(double pred, double label) const {
        return std::clamp(base_(pred, label), 0.0, 1.0);
    }

    double lipschitz() const { return mu_; }
    Kind kind() const { return kind_; }

    // Largest observed ratio |l(a,y)-l(a',y)| / |a-a'| over a probe grid.
    double probe_lipschitz(const Vec& preds, const Vec& labels) const {
        double worst = 0.0;
        for (double y : labels) {
            for (std::size_t i = 0; i < preds.size(); ++i) {
                for (std::size_t j = i + 1; j < preds.size(); ++j) {
                    const double da = std::fabs(preds[i] - preds[j]);
                    if (da < 1e-12) continue;
                    worst = std::max(worst, std::fabs((*this)(preds[i], y) - (*this)(preds[j], y)) / da);
                }
            }
        }
        return worst;
    }

  private:
    LossFunction(Kind kind, double mu, std::function<double(double, double)> fn)
        : kind_(kind), mu_(mu), base_(std::move(fn)) {
        if (mu < 0.0) throw validation_error("LossFunction: lipschitz constant must be >= 0");
    }

    Kind kind_;
    double mu_;
    std::function<double(double, double)> base_;
};

// Deterministic predictor. `params` is descriptor-specific and may be empty;
// it exists so perturbed hypothesis sets can expose parameter-matched
// counterparts.
struct Hypothesis {
    std::function<double(const Vec&)> eval;
    Vec params;

    double operator()(const Vec& x) const { return eval(x); }
};

inline Hypothesis constant_hypothesis(double c) {
    return Hypothesis{[c](const Vec&) { return c; }, {c}};
}

inline double loss_at(const LossFunction& loss, const Hypothesis& h, const LabeledPoint& z) {
    return loss(h(z.x), z.y);
}

// Finite-support distribution, so true risks are exactly computable.
class DiscreteDistribution {
  public:
    DiscreteDistribution(std::vector<LabeledPoint> support, Vec probs)
        : support_(std::move(support)), probs_(std::move(probs)) {
        if (support_.empty() || support_.size() != probs_.size())
            throw validation_error("DiscreteDistribution: support/probs size mismatch");
        const std::size_t d = support_.front().x.size();
        for (const auto& z : support_) {
            if (z.x.size() != d) throw validation_error("DiscreteDistribution: inconsistent atom dimension");
            if (!finite(z)) throw validation_error("DiscreteDistribution: non-finite atom");
        }
        double total = 0.0;
        for (double p : probs_) {
            if (p < 0.0) throw validation_error("DiscreteDistribution: negative probability");
            total += p;
        }
        if (std::fabs(total - 1.0) > 1e-12)
            throw validation_error("DiscreteDistribution: probabilities must sum to 1");
        cdf_.resize(probs_.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < probs_.size(); ++i) {
            acc += probs_[i];
            cdf_[i] = acc;
        }
        cdf_.back() = 1.0;
    }

    static DiscreteDistribution uniform(std::vector<LabeledPoint> support) {
        const std::size_t n = support.size();
        return DiscreteDistribution(std::move(support), Vec(n, 1.0 / static_cast<double>(n)));
    }

    const std::vector<LabeledPoint>& support() const { return support_; }
    const Vec& probs() const { return probs_; }

    const LabeledPoint& sample(SeededRng& rng) const {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()),
                                                    support_.size() - 1);
        return support_[i];
    }

  private:
    std::vector<LabeledPoint> support_;
    Vec probs_;
    Vec cdf_;
};

// S_{T,sigma}: position i holds T_i where sigma_i = -1, else S_i.
inline LabeledSample swap_sample(const LabeledSample& s, const LabeledSample& t, const Vec& sigma) {
    if (s.size() != t.size() || s.size() != sigma.size())
        throw validation_error("swap_sample: S, T and sigma must have equal length");
    std::vector<LabeledPoint> out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (sigma[i] != 1.0 && sigma[i] != -1.0)
            throw validation_error("swap_sample: sigma entries must be +1 or -1");
        out.push_back(sigma[i] < 0 ? t[i] : s[i]);
    }
    return LabeledSample(std::move(out));
}

// S^{z<->z'}: copy of S with position `index` replaced by z'.
inline LabeledSample replace_point(const LabeledSample& s, std::size_t index, const LabeledPoint& z) {
    if (index >= s.size()) throw validation_error("replace_point: index out of range");
    std::vector<LabeledPoint> out = s.points;
    out[index] = z;
    return LabeledSample(std::move(out));
}

inline double empirical_risk(const Hypothesis& h, const LabeledSample& s, const LossFunction& loss) {
    double acc = 0.0;
    for (const auto& z : s.points) acc += loss_at(loss, h, z);
    return acc / static_cast<double>(s.size());
}

inline double true_risk(const Hypothesis& h, const DiscreteDistribution& d, const LossFunction& loss) {
    double acc = 0.0;
    for (std::size_t i = 0; i < d.support().size(); ++i)
        acc += d.probs()[i] * loss_at(loss, h, d.support()[i]);
    return acc;
}

inline LabeledSample draw_sample(const DiscreteDistribution& d, std::size_t m, SeededRng& rng) {
    if (m == 0) throw validation_error("draw_sample: m must be >= 1");
    std::vector<LabeledPoint> pts;
    pts.reserve(m);
    for (std::size_t i = 0; i < m; ++i) pts.push_back(d.sample(rng));
    return LabeledSample(std::move(pts));
}

}  // namespace hss
