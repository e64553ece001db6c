#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hss/applications.hpp"
#include "hss/bounds.hpp"
#include "hss/complexity.hpp"
#include "hss/core.hpp"
#include "hss/errors.hpp"
#include "hss/oracle.hpp"
#include "hss/report_io.hpp"
#include "hss/stability.hpp"

namespace hss {

namespace detail {

inline void require_keys(const json& j, const std::string& where,
                         std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw validation_error(where + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw validation_error(where + ": unknown key '" + key + "'");
    }
}

template <class T>
T get_required(const json& j, const std::string& where, const char* key) {
    if (!j.contains(key)) throw validation_error(where + ": missing key '" + std::string(key) + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw validation_error(where + ": bad value for '" + std::string(key) + "'");
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw validation_error(std::string("bad value for '") + key + "'");
    }
}

}  // namespace detail

inline DiscreteDistribution parse_distribution(const json& j) {
    detail::require_keys(j, "distribution", {"atoms", "probs"});
    if (!j.contains("atoms")) throw validation_error("distribution: missing atoms");
    std::vector<LabeledPoint> atoms;
    for (const auto& a : j.at("atoms")) {
        detail::require_keys(a, "distribution.atom", {"x", "y"});
        LabeledPoint z;
        z.x = detail::get_required<Vec>(a, "distribution.atom", "x");
        z.y = detail::get_required<double>(a, "distribution.atom", "y");
        atoms.push_back(std::move(z));
    }
    if (j.contains("probs")) return DiscreteDistribution(std::move(atoms), j.at("probs").get<Vec>());
    return DiscreteDistribution::uniform(std::move(atoms));
}

inline LossFunction parse_loss(const json& j) {
    detail::require_keys(j, "loss", {"kind", "mu"});
    const std::string kind = detail::get_or<std::string>(j, "kind", "absolute-clipped");
    if (kind == "absolute-clipped") return LossFunction::absolute();
    if (kind == "squared-clipped") return LossFunction::squared(detail::get_or<double>(j, "mu", 2.0));
    if (kind == "hinge-clipped") return LossFunction::hinge();
    throw validation_error("loss: unknown kind '" + kind + "'");
}

// A parsed family plus whatever closed-form certificates it carries; the
// certificates flow into reports and bound inputs.
struct FamilyBundle {
    HypothesisFamily family;
    json certificates = json::object();
    double beta_certificate = -1.0;  // < 0: unavailable
};

inline std::vector<Hypothesis> parse_student_grid(const json& j) {
    detail::require_keys(j, "family.grid", {"kind", "values", "count", "lo", "hi"});
    const std::string kind = detail::get_required<std::string>(j, "family.grid", "kind");
    std::vector<Hypothesis> grid;
    if (kind == "constants") {
        for (double v : detail::get_required<Vec>(j, "family.grid", "values"))
            grid.push_back(constant_hypothesis(v));
        return grid;
    }
    if (kind == "linspace") {
        const int count = detail::get_required<int>(j, "family.grid", "count");
        const double lo = detail::get_required<double>(j, "family.grid", "lo");
        const double hi = detail::get_required<double>(j, "family.grid", "hi");
        if (count < 1) throw validation_error("family.grid: count must be >= 1");
        for (int i = 0; i < count; ++i) {
            const double t = count == 1 ? 0.5 : static_cast<double>(i) / (count - 1);
            grid.push_back(constant_hypothesis(lo + t * (hi - lo)));
        }
        return grid;
    }
    throw validation_error("family.grid: unknown kind '" + kind + "'");
}

inline FamilyBundle parse_family(const json& j, const DiscreteDistribution& d, std::size_t m,
                                 double mu, SeededRng rng) {
    if (!j.is_object() || !j.contains("name")) throw validation_error("family: missing name");
    const std::string name = j.at("name").get<std::string>();
    FamilyBundle out;

    if (name == "finite") {
        detail::require_keys(j, "family", {"name", "predictions"});
        std::vector<Hypothesis> members;
        for (double v : detail::get_required<Vec>(j, "family", "predictions"))
            members.push_back(constant_hypothesis(v));
        HypothesisSet set = HypothesisSet::finite(std::move(members));
        out.family = [set](const LabeledSample&) { return set; };
        out.beta_certificate = 0.0;  // data-independent
        out.certificates["beta"] = 0.0;
        return out;
    }
    if (name == "bagging") {
        detail::require_keys(j, "family",
                             {"name", "k", "p", "C", "base", "ridge_lambda", "beta_A", "delta",
                              "finite_weights"});
        BaggingConfig cfg;
        cfg.k = detail::get_or<std::size_t>(j, "k", cfg.k);
        cfg.p = detail::get_or<std::size_t>(j, "p", cfg.p);
        cfg.cap_c = detail::get_or<double>(j, "C", cfg.cap_c);
        cfg.ridge_lambda = detail::get_or<double>(j, "ridge_lambda", cfg.ridge_lambda);
        cfg.beta_a = detail::get_or<double>(j, "beta_A", cfg.beta_a);
        cfg.delta = detail::get_or<double>(j, "delta", cfg.delta);
        cfg.finite_weights = detail::get_or<bool>(j, "finite_weights", false);
        cfg.mu = mu;
        const std::string base = detail::get_or<std::string>(j, "base", "label-mean");
        if (base == "label-mean")
            cfg.base = BaggingConfig::Base::label_mean;
        else if (base == "ridge")
            cfg.base = BaggingConfig::Base::ridge;
        else
            throw validation_error("family: unknown bagging base '" + base + "'");
        BaggingFamily fam = bagging_family(cfg, m, rng.stream(0xba99));
        out.family = fam.family;
        out.certificates["multiplicity_bound"] = fam.multiplicity_bound;
        out.certificates["stability_certificate"] = fam.stability_certificate;
        out.certificates["rademacher_envelope"] = fam.rademacher_envelope;
        out.beta_certificate = fam.stability_certificate;
        return out;
    }
    if (name == "sco_mixture") {
        detail::require_keys(j, "family",
                             {"name", "K", "D", "r", "epochs", "strong_convexity", "alpha0"});
        SCOMixConfig cfg;
        cfg.k_algorithms = detail::get_or<std::size_t>(j, "K", cfg.k_algorithms);
        cfg.norm_cap_d = detail::get_or<double>(j, "D", cfg.norm_cap_d);
        cfg.radius = detail::get_or<double>(j, "r", 0.0);
        cfg.sgd_epochs = detail::get_or<std::size_t>(j, "epochs", cfg.sgd_epochs);
        cfg.strong_convexity = detail::get_or<double>(j, "strong_convexity", cfg.strong_convexity);
        cfg.alpha0 = detail::get_or<Vec>(j, "alpha0", Vec{});
        cfg.mu = mu;
        SCOFamily fam = make_sco_family(cfg, m, rng.stream(0x5c0));
        out.family = fam.family;
        out.certificates["diameter_certificate"] = fam.diameter_certificate;
        out.certificates["radius"] = fam.radius_used;
        return out;
    }
    if (name == "feature_map") {
        detail::require_keys(j, "family",
                             {"name", "kind", "k", "Delta", "heads", "gamma", "dim", "head_seed"});
        FeatureMapConfig cfg;
        const std::string kind = detail::get_or<std::string>(j, "kind", "pca");
        if (kind == "pca")
            cfg.kind = FeatureMapConfig::MapKind::pca_topk;
        else if (kind == "fixed-random")
            cfg.kind = FeatureMapConfig::MapKind::fixed_random;
        else
            throw validation_error("family: unknown feature map kind '" + kind + "'");
        cfg.k_components = detail::get_or<std::size_t>(j, "k", cfg.k_components);
        cfg.sensitivity_delta = detail::get_or<double>(j, "Delta", 0.0);
        cfg.head_count = detail::get_or<std::size_t>(j, "heads", cfg.head_count);
        cfg.gamma = detail::get_or<double>(j, "gamma", cfg.gamma);
        cfg.head_seed = detail::get_or<std::uint64_t>(j, "head_seed", cfg.head_seed);
        cfg.mu = mu;
        const std::size_t dim = detail::get_or<std::size_t>(j, "dim", d.support().front().x.size());
        FeatureMapFamily fam = feature_map_family(cfg, dim);
        out.family = fam.family;
        out.certificates["beta"] = fam.beta_certificate;
        out.beta_certificate = fam.beta_certificate;
        return out;
    }
    if (name == "distillation") {
        detail::require_keys(j, "family",
                             {"name", "gamma", "teacher", "grid", "anti", "delta_anti",
                              "kernel_lambda", "kernel_bandwidth", "teacher_beta"});
        DistillConfig cfg;
        cfg.gamma = detail::get_required<double>(j, "family", "gamma");
        cfg.anti = detail::get_or<bool>(j, "anti", false);
        cfg.delta_anti = detail::get_or<double>(j, "delta_anti", 0.0);
        cfg.kernel_lambda = detail::get_or<double>(j, "kernel_lambda", 1.0);
        cfg.kernel_bandwidth = detail::get_or<double>(j, "kernel_bandwidth", 1.0);
        cfg.teacher_beta = detail::get_or<double>(j, "teacher_beta", 0.0);
        cfg.mu = mu;
        const std::string teacher = detail::get_or<std::string>(j, "teacher", "label-mean");
        if (teacher == "label-mean")
            cfg.teacher = DistillConfig::Teacher::label_mean;
        else if (teacher == "kernel-ridge")
            cfg.teacher = DistillConfig::Teacher::kernel_ridge;
        else
            throw validation_error("family: unknown teacher '" + teacher + "'");
        if (!j.contains("grid")) throw validation_error("family: distillation needs a grid");
        cfg.student_grid = parse_student_grid(j.at("grid"));
        cfg.probe_points = d.support();
        DistillFamily fam = distillation_family(cfg, m);
        out.family = fam.family;
        out.certificates["beta"] = fam.beta_certificate;
        if (cfg.anti) out.certificates["anti_leading_term"] = fam.anti_leading_term;
        out.beta_certificate = fam.beta_certificate;
        return out;
    }
    if (name == "pcr") {
        detail::require_keys(j, "family", {"name", "k", "gamma", "r", "eigengap_tol"});
        PCRConfig cfg;
        cfg.k_components = detail::get_or<std::size_t>(j, "k", cfg.k_components);
        cfg.norm_cap_gamma = detail::get_or<double>(j, "gamma", cfg.norm_cap_gamma);
        cfg.feature_radius_r = detail::get_or<double>(j, "r", cfg.feature_radius_r);
        cfg.eigengap_tol = detail::get_or<double>(j, "eigengap_tol", cfg.eigengap_tol);
        PCRFamily fam = pcr_family(cfg);
        out.family = fam.family;
        out.certificates["rademacher_certificate"] = fam.rademacher_certificate(m);
        return out;
    }
    throw validation_error("family: unknown name '" + name + "'");
}

struct ExperimentConfig {
    std::uint64_t seed = 0;
    unsigned threads = 1;
    json distribution;
    json loss = json{{"kind", "absolute-clipped"}};
    json family;
    std::size_t m = 10;
    std::int64_t n_trials = 16;
    double delta = 0.1;
    json estimators = json::array();
    std::optional<json> bound;  // validate-mode block
    std::string out_dir = "out";
};

inline ExperimentConfig parse_experiment_config(const json& j) {
    detail::require_keys(j, "config",
                         {"seed", "threads", "distribution", "loss", "family", "m", "n_trials",
                          "delta", "estimators", "bound", "outputs"});
    ExperimentConfig cfg;
    cfg.seed = detail::get_or<std::uint64_t>(j, "seed", 0);
    cfg.threads = detail::get_or<unsigned>(j, "threads", 1);
    if (!j.contains("distribution")) throw validation_error("config: missing distribution");
    cfg.distribution = j.at("distribution");
    if (j.contains("loss")) cfg.loss = j.at("loss");
    if (!j.contains("family")) throw validation_error("config: missing family");
    cfg.family = j.at("family");
    cfg.m = detail::get_required<std::size_t>(j, "config", "m");
    if (cfg.m < 1) throw validation_error("config: m must be >= 1");
    cfg.n_trials = detail::get_or<std::int64_t>(j, "n_trials", 16);
    cfg.delta = detail::get_or<double>(j, "delta", 0.1);
    if (j.contains("estimators")) {
        if (!j.at("estimators").is_array()) throw validation_error("config: estimators must be a list");
        cfg.estimators = j.at("estimators");
    }
    if (j.contains("bound")) cfg.bound = j.at("bound");
    if (j.contains("outputs")) {
        detail::require_keys(j.at("outputs"), "outputs", {"dir"});
        cfg.out_dir = detail::get_or<std::string>(j.at("outputs"), "dir", "out");
    }
    // Validate nested blocks eagerly so bad configs fail before any compute.
    parse_distribution(cfg.distribution);
    parse_loss(cfg.loss);
    return cfg;
}

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::string> out_dir;
    std::string format = "json";
};

// Files written by a run, in emission order.
struct RunResult {
    std::vector<std::string> files;
    json summary;
};

namespace detail {

class OutputGuard {
  public:
    explicit OutputGuard(std::vector<std::string>& files) : files_(files) {}
    ~OutputGuard() {
        if (!armed_) return;
        for (const auto& f : files_) {
            std::error_code ec;
            std::filesystem::remove(f, ec);
        }
    }
    void disarm() { armed_ = false; }

  private:
    std::vector<std::string>& files_;
    bool armed_ = true;
};

inline void write_text(const std::string& path, const std::string& text,
                       std::vector<std::string>& files) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw validation_error("cannot write output file " + path);
    os << text;
    files.push_back(path);
}

}  // namespace detail

inline RunResult run_experiment(const json& config_json, const RunOverrides& overrides,
                                bool estimators_only = false, bool stability_only = false) {
    ExperimentConfig cfg = parse_experiment_config(config_json);
    if (overrides.seed) cfg.seed = *overrides.seed;
    if (overrides.threads) cfg.threads = *overrides.threads;
    if (overrides.out_dir) cfg.out_dir = *overrides.out_dir;

    const DiscreteDistribution dist = parse_distribution(cfg.distribution);
    const LossFunction loss = parse_loss(cfg.loss);
    SeededRng rng(cfg.seed, 0);
    const FamilyBundle bundle = parse_family(cfg.family, dist, cfg.m, loss.lipschitz(), rng.stream(1));

    std::filesystem::create_directories(cfg.out_dir);
    RunResult result;
    detail::OutputGuard guard(result.files);
    const bool csv = overrides.format == "csv";
    if (!csv && overrides.format != "json") throw validation_error("format must be 'json' or 'csv'");

    auto emit = [&](const std::string& stem, const json& body, const std::vector<CsvRow>& rows) {
        const std::string path = cfg.out_dir + "/" + stem + (csv ? ".csv" : ".json");
        detail::write_text(path, csv ? to_csv(rows) : body.dump(2) + "\n", result.files);
    };

    // Family certificates are always emitted.
    {
        std::vector<CsvRow> rows;
        for (const auto& [k, v] : bundle.certificates.items())
            if (v.is_number()) rows.push_back({k, v.get<double>(), 0.0, true});
        emit("family", bundle.certificates, rows);
    }

    SeededRng data_rng = rng.stream(2);
    const LabeledSample s = draw_sample(dist, cfg.m, data_rng);
    SeededRng ghost_rng = rng.stream(3);
    const LabeledSample t = draw_sample(dist, cfg.m, ghost_rng);

    json estimates = json::object();
    std::vector<CsvRow> estimate_rows;
    EstimateReport rad_report;
    bool have_rad = false;
    EstimateReport trans_report;
    bool have_trans = false;
    std::int64_t trans_n = 0;

    if (!stability_only) {
        ComplexityOptions copt;
        copt.threads = cfg.threads;
        std::size_t est_index = 0;
        for (const auto& e : cfg.estimators) {
            detail::require_keys(e, "estimator", {"name", "n_draws", "subsamples", "n"});
            const std::string name = detail::get_required<std::string>(e, "estimator", "name");
            const std::int64_t n_draws = detail::get_or<std::int64_t>(e, "n_draws", 1000);
            SeededRng est_rng = rng.stream(0xe57 + est_index++);
            if (name == "dd_rademacher") {
                rad_report = dd_rademacher_mc(bundle.family, s, t, loss, n_draws, est_rng, copt);
                have_rad = true;
                estimates["dd_rademacher"] = to_json(rad_report);
                estimate_rows.push_back({"dd_rademacher", rad_report.value, rad_report.std_error,
                                         rad_report.exact});
            } else if (name == "dd_rademacher_exact") {
                rad_report = dd_rademacher_exact(bundle.family, s, t, loss, copt);
                have_rad = true;
                estimates["dd_rademacher_exact"] = to_json(rad_report);
                estimate_rows.push_back({"dd_rademacher_exact", rad_report.value, 0.0,
                                         rad_report.exact});
            } else if (name == "union_rademacher") {
                const std::int64_t subs = detail::get_or<std::int64_t>(e, "subsamples", 64);
                const EstimateReport rep =
                    union_rademacher(bundle.family, s, t, loss, subs, n_draws, est_rng, copt);
                estimates["union_rademacher"] = to_json(rep);
                estimate_rows.push_back({"union_rademacher", rep.value, rep.std_error, rep.exact});
            } else if (name == "transductive") {
                const std::int64_t subs = detail::get_or<std::int64_t>(e, "subsamples", 64);
                trans_n = detail::get_or<std::int64_t>(e, "n", static_cast<std::int64_t>(cfg.m));
                SeededRng u_rng = est_rng.stream(1);
                const LabeledSample u =
                    draw_sample(dist, cfg.m + static_cast<std::size_t>(trans_n), u_rng);
                const HypothesisSetUnion pool =
                    pool_over_subsamples(bundle.family, u, cfg.m, subs, est_rng.stream(2));
                trans_report = transductive_rademacher_mc(pool, u, cfg.m,
                                                          static_cast<std::size_t>(trans_n), loss,
                                                          n_draws, est_rng.stream(3), copt);
                have_trans = true;
                estimates["transductive"] = to_json(trans_report);
                estimate_rows.push_back({"transductive", trans_report.value, trans_report.std_error,
                                         trans_report.exact});
            } else {
                throw validation_error("estimator: unknown name '" + name + "'");
            }
        }
        if (!cfg.estimators.empty()) emit("estimates", estimates, estimate_rows);
    }

    StabilityReport stab;
    const bool skip_stability = cfg.n_trials == 0;  // certificate-only runs
    if (!estimators_only && !skip_stability) {
        StabilityOptions sopt;
        sopt.n_perturbations = cfg.n_trials;
        sopt.n_outer_samples = std::min<std::int64_t>(cfg.n_trials, 8);
        sopt.threads = cfg.threads;
        stab = estimate_stability(bundle.family, s, dist, loss, sopt, rng.stream(4));
        emit("stability", to_json(stab), csv_rows(stab));
    }

    if (!estimators_only && !stability_only && !skip_stability) {
        BoundInputs in;
        in.m = static_cast<std::int64_t>(cfg.m);
        in.delta = cfg.delta;
        in.beta = bundle.beta_certificate >= 0.0 ? bundle.beta_certificate : stab.beta_hat;
        in.chi = stab.chi_hat;
        in.chi_bar = stab.chi_bar_hat;
        in.delta_max = stab.delta_max_hat;
        if (have_rad) in.rad = rad_report.value;
        in.gamma_fv = 3.0 * in.beta + in.delta_max;
        json bounds_out = json::object();
        std::vector<CsvRow> bound_rows;
        const BoundReport t2 = theorem2_bound(in);
        bounds_out["theorem2"] = to_json(t2);
        for (const auto& r : csv_rows(t2)) bound_rows.push_back(r);
        bounds_out["fv"] = fv_bound(in.gamma_fv, in.m, in.delta);
        bound_rows.push_back({"fv", bounds_out["fv"].get<double>(), 0.0, true});
        if (have_trans) {
            in.n = trans_n;
            in.trans_rad = trans_report.value;
            const double t1 = theorem1_bound(in);
            bounds_out["theorem1"] = json{{"value", t1}, {"vacuous", t1 > 1.0}, {"scheme", "sampled-U"}};
            bound_rows.push_back({"theorem1", t1, 0.0, true});
        }
        emit("bounds", bounds_out, bound_rows);

        if (cfg.bound) {
            detail::require_keys(*cfg.bound, "bound", {"kind", "n_trials", "inputs"});
            const std::string kind_name = detail::get_required<std::string>(*cfg.bound, "bound", "kind");
            BoundKind kind;
            if (kind_name == "theorem1")
                kind = BoundKind::theorem1;
            else if (kind_name == "theorem2-min")
                kind = BoundKind::theorem2_min;
            else if (kind_name == "theorem2-rad")
                kind = BoundKind::theorem2_rad;
            else if (kind_name == "theorem2-cv")
                kind = BoundKind::theorem2_cv;
            else if (kind_name == "theorem2-diam")
                kind = BoundKind::theorem2_diam;
            else if (kind_name == "fv")
                kind = BoundKind::fv;
            else
                throw validation_error("bound: unknown kind '" + kind_name + "'");
            BoundInputs vin = in;
            if (cfg.bound->contains("inputs")) {
                const json& ji = cfg.bound->at("inputs");
                detail::require_keys(ji, "bound.inputs",
                                     {"m", "n", "delta", "beta", "chi", "chi_bar", "delta_max", "rad",
                                      "trans_rad", "gamma_fv"});
                vin.m = detail::get_or<std::int64_t>(ji, "m", vin.m);
                vin.n = detail::get_or<std::int64_t>(ji, "n", vin.n);
                vin.delta = detail::get_or<double>(ji, "delta", vin.delta);
                vin.beta = detail::get_or<double>(ji, "beta", vin.beta);
                vin.chi = detail::get_or<double>(ji, "chi", vin.chi);
                vin.chi_bar = detail::get_or<double>(ji, "chi_bar", vin.chi_bar);
                vin.delta_max = detail::get_or<double>(ji, "delta_max", vin.delta_max);
                vin.rad = detail::get_or<double>(ji, "rad", vin.rad);
                vin.trans_rad = detail::get_or<double>(ji, "trans_rad", vin.trans_rad);
                vin.gamma_fv = detail::get_or<double>(ji, "gamma_fv", vin.gamma_fv);
            }
            const std::int64_t trials = detail::get_or<std::int64_t>(*cfg.bound, "n_trials", 500);
            const CoverageResult cov = validate_bound_coverage(
                bundle.family, dist, loss, kind, vin, static_cast<std::int64_t>(cfg.m), trials,
                rng.stream(5), cfg.threads);
            std::vector<CsvRow> cov_rows{{"violation_rate", cov.violation_rate, 0.0, false},
                                         {"mean_slack", cov.mean_slack, 0.0, false},
                                         {"bound", cov.bound, 0.0, true}};
            emit("coverage", to_json(cov), cov_rows);
        }
    }

    result.summary = json{{"out_dir", cfg.out_dir}, {"files", result.files}};
    guard.disarm();
    return result;
}

inline json load_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw validation_error("cannot open file " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw validation_error(std::string("invalid JSON in ") + path + ": " + e.what());
    }
    return j;
}

}  // namespace hss
