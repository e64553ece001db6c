#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "hss/core.hpp"
#include "hss/errors.hpp"
#include "hss/hypothesis_set.hpp"
#include "hss/linalg.hpp"
#include "hss/rng.hpp"

namespace hss {

// ---------------------------------------------------------------------------
// Base learners shared by the application families. Closed-form or
// deterministic, so stability certificates have analytic anchors.
// ---------------------------------------------------------------------------

inline Hypothesis label_mean_learner(const LabeledSample& s) {
    double acc = 0.0;
    for (const auto& z : s.points) acc += z.y;
    return constant_hypothesis(acc / static_cast<double>(s.size()));
}

inline Hypothesis ridge_learner(const LabeledSample& s, double lambda_reg) {
    const std::size_t d = s.dim();
    Matrix gram(d, d);
    Vec rhs(d, 0.0);
    for (const auto& z : s.points) {
        for (std::size_t i = 0; i < d; ++i) {
            rhs[i] += z.x[i] * z.y;
            for (std::size_t j = 0; j < d; ++j) gram(i, j) += z.x[i] * z.x[j];
        }
    }
    const Vec w = cholesky_solve(gram, rhs, lambda_reg * static_cast<double>(s.size()));
    return Hypothesis{[w](const Vec& x) { return dot(w, x); }, w};
}

inline Hypothesis kernel_ridge_learner(const LabeledSample& s, double lambda_reg, double bandwidth) {
    const std::size_t m = s.size();
    Matrix k(m, m);
    auto kernel = [bandwidth](const Vec& a, const Vec& b) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
        return std::exp(-d2 / (2.0 * bandwidth * bandwidth));
    };
    Vec y(m);
    for (std::size_t i = 0; i < m; ++i) {
        y[i] = s[i].y;
        for (std::size_t j = 0; j < m; ++j) k(i, j) = kernel(s[i].x, s[j].x);
    }
    const Vec alpha = cholesky_solve(k, y, lambda_reg * static_cast<double>(m));
    auto points = std::make_shared<std::vector<LabeledPoint>>(s.points);
    return Hypothesis{[alpha, points, kernel](const Vec& x) {
                          double acc = 0.0;
                          for (std::size_t i = 0; i < alpha.size(); ++i)
                              acc += alpha[i] * kernel(x, (*points)[i].x);
                          return acc;
                      },
                      alpha};
}

// Top-k projector of sum_i x_i x_i^T. Throws when the eigengap at the cut is
// below `gap_tol` (an ill-defined principal subspace must not pass silently).
inline Matrix pca_projector(const LabeledSample& s, std::size_t k, double gap_tol = 1e-9) {
    const std::size_t d = s.dim();
    if (k > d) throw validation_error("pca_projector: k exceeds feature dimension");
    Matrix cov(d, d);
    for (const auto& z : s.points)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) cov(i, j) += z.x[i] * z.x[j];
    const SymEigen eig = jacobi_eigen(cov);
    if (k < d) {
        const double gap = eig.values[k - 1] - eig.values[k];
        const double scale = std::max(std::fabs(eig.values[0]), 1.0);
        if (gap < gap_tol * scale)
            throw validation_error("pca_projector: eigengap below tolerance, principal subspace ill-defined");
    }
    Matrix proj(d, d);
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) proj(i, j) += eig.vectors(i, c) * eig.vectors(j, c);
    return proj;
}

// ---------------------------------------------------------------------------
// Bagging with data-dependent mixing weights (capped simplex).
// ---------------------------------------------------------------------------

struct BaggingConfig {
    std::size_t k = 100;  // number of subsamples
    std::size_t p = 10;   // subsample size
    double cap_c = 1.0;   // weights bounded by C/k
    enum class Base { label_mean, ridge } base = Base::label_mean;
    double ridge_lambda = 1.0;
    double beta_a = 0.0;   // declared uniform stability of the base learner
    double delta = 0.01;   // confidence for the multiplicity bound
    double mu = 1.0;       // loss Lipschitz constant
    bool finite_weights = false;  // finite variant: vertex mixtures only
};

struct BaggingFamily {
    HypothesisFamily family;
    std::vector<std::vector<std::size_t>> index_sets;  // the conditioned subsample indices
    double multiplicity_bound = 0.0;                   // t = kp/m + sqrt(2kp log(m/delta)/m)
    double stability_certificate = 0.0;  // (p/m + sqrt(2p log(1/delta)/(km))) * C mu beta_A
    double rademacher_envelope = 0.0;    // mu sqrt(2p log(4m)/m)
};

inline double bagging_multiplicity_bound(std::size_t k, std::size_t p, std::size_t m, double delta) {
    const double kd = static_cast<double>(k), pd = static_cast<double>(p), md = static_cast<double>(m);
    return kd * pd / md + std::sqrt(2.0 * kd * pd * std::log(md / delta) / md);
}

inline std::size_t max_index_multiplicity(const std::vector<std::vector<std::size_t>>& index_sets,
                                          std::size_t m) {
    std::vector<std::size_t> counts(m, 0);
    for (const auto& set : index_sets)
        for (std::size_t i : set) ++counts[i];
    return *std::max_element(counts.begin(), counts.end());
}

// Draws k index sets of size p without replacement from [m], conditioned on
// the supplied seed stream, and wires the descriptor constructor around them.
inline BaggingFamily bagging_family(const BaggingConfig& cfg, std::size_t m, SeededRng rng) {
    if (cfg.p > m) throw validation_error("bagging_family: subsample size exceeds m");
    if (cfg.cap_c < 1.0) throw validation_error("bagging_family: C must be >= 1");
    BaggingFamily out;
    out.index_sets.reserve(cfg.k);
    std::vector<std::size_t> perm(m);
    for (std::size_t b = 0; b < cfg.k; ++b) {
        SeededRng r = rng.stream(b);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::vector<std::size_t> set(cfg.p);
        for (std::size_t i = 0; i < cfg.p; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(r.uniform_int(m - i));
            std::swap(perm[i], perm[j]);
            set[i] = perm[i];
        }
        std::sort(set.begin(), set.end());
        out.index_sets.push_back(std::move(set));
    }
    const double md = static_cast<double>(m);
    out.multiplicity_bound = bagging_multiplicity_bound(cfg.k, cfg.p, m, cfg.delta);
    out.stability_certificate =
        (static_cast<double>(cfg.p) / md +
         std::sqrt(2.0 * static_cast<double>(cfg.p) * std::log(1.0 / cfg.delta) /
                   (static_cast<double>(cfg.k) * md))) *
        cfg.cap_c * cfg.mu * cfg.beta_a;
    out.rademacher_envelope =
        cfg.mu * std::sqrt(2.0 * static_cast<double>(cfg.p) * std::log(4.0 * md) / md);

    const auto index_sets = out.index_sets;
    out.family = [cfg, index_sets, m](const LabeledSample& s) {
        if (s.size() != m) throw validation_error("bagging family: sample size mismatch");
        std::vector<Hypothesis> anchors;
        anchors.reserve(index_sets.size());
        for (const auto& set : index_sets) {
            std::vector<LabeledPoint> pts;
            pts.reserve(set.size());
            for (std::size_t i : set) pts.push_back(s[i]);
            const LabeledSample sub{std::move(pts)};
            anchors.push_back(cfg.base == BaggingConfig::Base::label_mean
                                  ? label_mean_learner(sub)
                                  : ridge_learner(sub, cfg.ridge_lambda));
        }
        const MixConstraint constraint =
            MixConstraint::capped(index_sets.size(), cfg.cap_c / static_cast<double>(index_sets.size()));
        if (cfg.finite_weights) {
            // Finite variant: the vertex mixtures plus the uniform center.
            std::vector<Hypothesis> members;
            for (const auto& alpha : constraint.candidate_alphas(anchors.size())) {
                auto anchors_ptr = std::make_shared<std::vector<Hypothesis>>(anchors);
                members.push_back(Hypothesis{[anchors_ptr, alpha](const Vec& x) {
                                                 double acc = 0.0;
                                                 for (std::size_t j = 0; j < alpha.size(); ++j)
                                                     if (alpha[j] != 0.0)
                                                         acc += alpha[j] * (*anchors_ptr)[j](x);
                                                 return acc;
                                             },
                                             alpha});
            }
            return HypothesisSet::finite(std::move(members));
        }
        return HypothesisSet::l1_mix(std::move(anchors), constraint);
    };
    return out;
}

// ---------------------------------------------------------------------------
// Mixtures of stochastic strongly-convex optimizers.
// ---------------------------------------------------------------------------

struct SCOMixConfig {
    std::size_t k_algorithms = 4;
    Vec alpha0;            // empty: uniform mixture
    double radius = 0.0;   // 0: auto r = 1/(2 mu D sqrt(m))
    double norm_cap_d = 1.0;
    std::size_t sgd_epochs = 5;
    double strong_convexity = 1.0;
    double mu = 1.0;
};

struct SCOFamily {
    HypothesisFamily family;
    double radius_used = 0.0;
    double diameter_certificate = 0.0;  // 2 mu r D
};

namespace detail {

// Projected SGD on (1/m) sum (w.x - y)^2 + (lambda/2)||w||^2, step 1/(lambda t),
// iterates kept inside ||w|| <= D. Deterministic given the stream.
inline Vec sgd_regularized_ls(const LabeledSample& s, double lambda, double norm_cap,
                              std::size_t epochs, SeededRng rng) {
    const std::size_t d = s.dim();
    Vec w(d, 0.0);
    const std::size_t steps = epochs * s.size();
    for (std::size_t t = 0; t < steps; ++t) {
        const std::size_t i = static_cast<std::size_t>(rng.uniform_int(s.size()));
        const double step = 1.0 / (lambda * static_cast<double>(t + 1));
        const double resid = dot(w, s[i].x) - s[i].y;
        for (std::size_t j = 0; j < d; ++j) w[j] -= step * (2.0 * resid * s[i].x[j] + lambda * w[j]);
        const double nn = norm2(w);
        if (!std::isfinite(nn)) throw validation_error("sco_mixture_family: SGD diverged");
        if (nn > norm_cap)
            for (auto& v : w) v *= norm_cap / nn;
    }
    return w;
}

}  // namespace detail

inline SCOFamily make_sco_family(const SCOMixConfig& cfg, std::size_t m, SeededRng rng) {
    if (cfg.k_algorithms < 1) throw validation_error("make_sco_family: need at least one algorithm");
    Vec alpha0 = cfg.alpha0;
    if (alpha0.empty()) alpha0.assign(cfg.k_algorithms, 1.0 / static_cast<double>(cfg.k_algorithms));
    if (alpha0.size() != cfg.k_algorithms) throw validation_error("make_sco_family: alpha0 size mismatch");
    SCOFamily out;
    out.radius_used = cfg.radius > 0.0
                          ? cfg.radius
                          : 1.0 / (2.0 * cfg.mu * cfg.norm_cap_d * std::sqrt(static_cast<double>(m)));
    out.diameter_certificate = 2.0 * cfg.mu * out.radius_used * cfg.norm_cap_d;
    const double r = out.radius_used;
    out.family = [cfg, alpha0, r, rng](const LabeledSample& s) {
        std::vector<Hypothesis> anchors;
        anchors.reserve(cfg.k_algorithms);
        for (std::size_t j = 0; j < cfg.k_algorithms; ++j) {
            const Vec w = detail::sgd_regularized_ls(s, cfg.strong_convexity, cfg.norm_cap_d,
                                                     cfg.sgd_epochs, rng.stream(j));
            anchors.push_back(Hypothesis{[w](const Vec& x) { return dot(w, x); }, w});
        }
        return HypothesisSet::l1_mix(std::move(anchors), MixConstraint::simplex_ball(alpha0, r));
    };
    return out;
}

inline SCOFamily sco_mixture_family(const SCOMixConfig& cfg, const LabeledSample& s, SeededRng rng) {
    return make_sco_family(cfg, s.size(), rng);
}

// ---------------------------------------------------------------------------
// Delta-sensitive feature maps with a finite Lipschitz head family.
// ---------------------------------------------------------------------------

struct FeatureMapConfig {
    enum class MapKind { pca_topk, fixed_random } kind = MapKind::pca_topk;
    std::size_t k_components = 2;
    double sensitivity_delta = 0.0;  // declared map sensitivity (0 for fixed maps)
    std::size_t head_count = 8;
    double gamma = 1.0;  // head Lipschitz constant
    double mu = 1.0;
    std::uint64_t head_seed = 17;
    double eigengap_tol = 1e-9;
};

struct FeatureMapFamily {
    HypothesisFamily family;
    std::function<Matrix(const LabeledSample&)> map_matrix;  // the learned linear map
    double beta_certificate = 0.0;                           // mu * gamma * Delta
};

inline FeatureMapFamily feature_map_family(const FeatureMapConfig& cfg, std::size_t feature_dim) {
    FeatureMapFamily out;
    out.beta_certificate = cfg.mu * cfg.gamma * cfg.sensitivity_delta;

    // gamma-Lipschitz linear heads along fixed directions.
    auto heads = std::make_shared<std::vector<std::function<double(const Vec&)>>>();
    SeededRng head_rng(cfg.head_seed, 0);
    const std::size_t n = cfg.kind == FeatureMapConfig::MapKind::pca_topk ? feature_dim : cfg.k_components;
    for (std::size_t t = 0; t < cfg.head_count; ++t) {
        Vec dir(n);
        double nn = 0.0;
        for (auto& v : dir) {
            v = head_rng.gaussian();
            nn += v * v;
        }
        nn = std::sqrt(nn);
        if (nn <= 0.0) nn = 1.0;
        for (auto& v : dir) v *= cfg.gamma / nn;
        heads->push_back([dir](const Vec& feat) { return dot(dir, feat); });
    }

    if (cfg.kind == FeatureMapConfig::MapKind::fixed_random) {
        SeededRng map_rng(cfg.head_seed, 1);
        auto a = std::make_shared<Matrix>(cfg.k_components, feature_dim);
        for (auto& v : a->data) v = map_rng.gaussian() / std::sqrt(static_cast<double>(feature_dim));
        out.map_matrix = [a](const LabeledSample&) { return *a; };
        out.family = [a, heads](const LabeledSample&) {
            FeatureMap map{[a](const Vec& x) { return a->apply(x); }, a->rows};
            return HypothesisSet::feature_mapped(std::move(map),
                                                 HeadFamily::finite_set(*heads));
        };
        return out;
    }

    const std::size_t k = cfg.k_components;
    const double gap_tol = cfg.eigengap_tol;
    out.map_matrix = [k, gap_tol](const LabeledSample& s) { return pca_projector(s, k, gap_tol); };
    out.family = [k, gap_tol, heads](const LabeledSample& s) {
        auto proj = std::make_shared<Matrix>(pca_projector(s, k, gap_tol));
        FeatureMap map{[proj](const Vec& x) { return proj->apply(x); }, proj->rows};
        return HypothesisSet::feature_mapped(std::move(map), HeadFamily::finite_set(*heads));
    };
    return out;
}

// Largest observed feature drift max_x ||Phi_S(x) - Phi_S'(x)|| over probe
// points under a one-point replacement; spot check against the declared Delta.
inline double measure_map_sensitivity(const FeatureMapFamily& fam, const LabeledSample& s,
                                      const DiscreteDistribution& d,
                                      const std::vector<LabeledPoint>& probes,
                                      std::size_t n_perturbations, SeededRng rng);

// Enforced spot check: the declared sensitivity must dominate the measured
// drift, otherwise the beta certificate would be unsound.
inline void verify_map_sensitivity(const FeatureMapFamily& fam, double declared_delta,
                                   const LabeledSample& s, const DiscreteDistribution& d,
                                   const std::vector<LabeledPoint>& probes,
                                   std::size_t n_perturbations, SeededRng rng) {
    const double measured = measure_map_sensitivity(fam, s, d, probes, n_perturbations, rng);
    if (measured > declared_delta + 1e-12)
        throw validation_error("feature map sensitivity spot check failed: measured " +
                               std::to_string(measured) + " exceeds declared " +
                               std::to_string(declared_delta));
}

inline double measure_map_sensitivity(const FeatureMapFamily& fam, const LabeledSample& s,
                                      const DiscreteDistribution& d,
                                      const std::vector<LabeledPoint>& probes,
                                      std::size_t n_perturbations, SeededRng rng) {
    const Matrix base = fam.map_matrix(s);
    double worst = 0.0;
    for (std::size_t t = 0; t < n_perturbations; ++t) {
        SeededRng r = rng.stream(t);
        const std::size_t index = t % s.size();
        const LabeledSample s2 = replace_point(s, index, d.sample(r));
        const Matrix other = fam.map_matrix(s2);
        const Matrix diff = base - other;
        for (const auto& z : probes) worst = std::max(worst, norm2(diff.apply(z.x)));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Distillation and anti-distillation.
// ---------------------------------------------------------------------------

struct DistillConfig {
    enum class Teacher { label_mean, kernel_ridge } teacher = Teacher::label_mean;
    double gamma = 0.1;                     // sup-norm radius around the teacher
    std::vector<Hypothesis> student_grid;   // the second-stage class H (or offsets, see below)
    std::vector<LabeledPoint> probe_points; // where the sup-norm filter is checked
    bool anti = false;
    double delta_anti = 0.0;  // on-sample radius for the anti variant
    double mu = 1.0;
    double kernel_lambda = 1.0, kernel_bandwidth = 1.0;
    double teacher_beta = 0.0;  // declared teacher sensitivity; 0 = auto for label_mean
    // When set, grid entries are offsets o and the members are f*_S + o. This
    // realizes the h' = h + f*_{S'} - f*_S correspondence exactly, so the
    // mu * teacher-beta stability certificate is tight for the finite family.
    bool relative_grid = false;
};

struct DistillFamily {
    HypothesisFamily family;
    double beta_certificate = 0.0;       // mu * teacher sensitivity
    double anti_leading_term = 0.0;      // sqrt(e) mu (delta_anti + teacher beta)
};

inline DistillFamily distillation_family(const DistillConfig& cfg, std::size_t m) {
    if (cfg.student_grid.empty()) throw validation_error("distillation_family: empty student grid");
    if (cfg.probe_points.empty()) throw validation_error("distillation_family: need probe points");
    DistillFamily out;
    const double teacher_beta = cfg.teacher_beta > 0.0
                                    ? cfg.teacher_beta
                                    : (cfg.teacher == DistillConfig::Teacher::label_mean
                                           ? 1.0 / static_cast<double>(m)
                                           : 0.0);
    if (teacher_beta <= 0.0)
        throw validation_error("distillation_family: teacher sensitivity must be declared");
    out.beta_certificate = cfg.mu * teacher_beta;
    out.anti_leading_term =
        cfg.anti ? std::sqrt(std::exp(1.0)) * cfg.mu * (cfg.delta_anti + teacher_beta) : 0.0;

    out.family = [cfg](const LabeledSample& s) {
        const Hypothesis teacher = cfg.teacher == DistillConfig::Teacher::label_mean
                                       ? label_mean_learner(s)
                                       : kernel_ridge_learner(s, cfg.kernel_lambda, cfg.kernel_bandwidth);
        std::vector<Hypothesis> members;
        for (const auto& g : cfg.student_grid) {
            Hypothesis h = g;
            if (cfg.relative_grid) {
                const Hypothesis offset = g;
                h = Hypothesis{[teacher, offset](const Vec& x) { return teacher(x) + offset(x); },
                               offset.params};
            }
            double worst = 0.0;
            for (const auto& z : cfg.probe_points)
                worst = std::max(worst, std::fabs(h(z.x) - teacher(z.x)));
            if (worst > cfg.gamma + 1e-12) continue;
            if (cfg.anti) {
                double on_sample = 0.0;
                for (const auto& z : s.points)
                    on_sample = std::max(on_sample, std::fabs(h(z.x) - teacher(z.x)));
                if (on_sample > cfg.delta_anti + 1e-12) continue;
            }
            members.push_back(std::move(h));
        }
        return HypothesisSet::ball(teacher, cfg.gamma, std::move(members), /*exhaustive=*/true);
    };
    return out;
}

// ---------------------------------------------------------------------------
// Principal components regression.
// ---------------------------------------------------------------------------

struct PCRConfig {
    std::size_t k_components = 2;
    double norm_cap_gamma = 1.0;
    double feature_radius_r = 1.0;
    double eigengap_tol = 1e-9;
};

struct PCRFamily {
    HypothesisFamily family;
    std::function<Matrix(const LabeledSample&)> projector;
    std::function<double(std::size_t)> rademacher_certificate;  // gamma * r / sqrt(m)
};

inline PCRFamily pcr_family(const PCRConfig& cfg) {
    PCRFamily out;
    const std::size_t k = cfg.k_components;
    const double gap_tol = cfg.eigengap_tol;
    out.projector = [k, gap_tol](const LabeledSample& s) {
        if (s.size() < k) throw validation_error("pcr_family: m must be at least k");
        return pca_projector(s, k, gap_tol);
    };
    const double gamma = cfg.norm_cap_gamma;
    const double r = cfg.feature_radius_r;
    out.rademacher_certificate = [gamma, r](std::size_t m) {
        return gamma * r / std::sqrt(static_cast<double>(m));
    };
    const auto projector = out.projector;
    out.family = [projector, gamma](const LabeledSample& s) {
        auto proj = std::make_shared<Matrix>(projector(s));
        FeatureMap map{[proj](const Vec& x) { return proj->apply(x); }, proj->rows};
        return HypothesisSet::feature_mapped(std::move(map),
                                             HeadFamily::l2_ball(gamma, proj->rows));
    };
    return out;
}

inline bool is_projector(const Matrix& p, std::size_t rank, double tol = 1e-9) {
    const std::size_t d = p.rows;
    double trace = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        trace += p(i, i);
        for (std::size_t j = 0; j < d; ++j) {
            double pij2 = 0.0;
            for (std::size_t l = 0; l < d; ++l) pij2 += p(i, l) * p(l, j);
            if (std::fabs(pij2 - p(i, j)) > tol) return false;       // idempotent
            if (std::fabs(p(i, j) - p(j, i)) > tol) return false;    // symmetric
        }
    }
    return std::fabs(trace - static_cast<double>(rank)) <= tol * static_cast<double>(d);
}

// Mean operator-norm drift of the PCA projector under one-point replacement,
// per sample size; returns the fitted log-log slope across sizes.
struct StabilityScaling {
    std::vector<std::size_t> sizes;
    Vec mean_drift;
    double fitted_exponent = 0.0;
};

inline StabilityScaling pca_stability_scaling(const DiscreteDistribution& d, std::size_t k_components,
                                              const std::vector<std::size_t>& sizes,
                                              std::size_t trials, SeededRng rng,
                                              double gap_tol = 1e-9) {
    StabilityScaling out;
    out.sizes = sizes;
    for (std::size_t si = 0; si < sizes.size(); ++si) {
        const std::size_t m = sizes[si];
        double acc = 0.0;
        for (std::size_t t = 0; t < trials; ++t) {
            SeededRng r = rng.stream(si * 10007 + t);
            const LabeledSample s = draw_sample(d, m, r);
            const Matrix p1 = pca_projector(s, k_components, gap_tol);
            const std::size_t index = t % m;
            const LabeledSample s2 = replace_point(s, index, d.sample(r));
            const Matrix p2 = pca_projector(s2, k_components, gap_tol);
            acc += sym_spectral_norm(p1 - p2);
        }
        out.mean_drift.push_back(acc / static_cast<double>(trials));
    }
    // Least-squares slope of log(drift) against log(m).
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const double x = std::log(static_cast<double>(sizes[i]));
        const double y = std::log(std::max(out.mean_drift[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    out.fitted_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return out;
}

}  // namespace hss
