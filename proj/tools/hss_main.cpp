// Command-line front end: estimation runs, bound calculators, the exponential
// mechanism, bound-validity harness, and full experiment configs.
//
// Exit codes: 0 ok, 2 validation error, 3 enumeration budget error.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hss/hss.hpp"

namespace {

constexpr const char* kVersion = "hss 0.1.0";

struct GlobalFlags {
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::string> out;
    std::string format = "json";
    bool verbose = false;
};

void log_line(const GlobalFlags& g, const std::string& msg) {
    if (g.verbose) std::fprintf(stderr, "[hss] %s\n", msg.c_str());
}

// Thread-count precedence: --threads flag, then HSS_BENCH_THREADS, then the
// config's own value.
std::optional<unsigned> env_threads() {
    if (const char* env = std::getenv("HSS_BENCH_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    return std::nullopt;
}

hss::RunOverrides overrides_from(const GlobalFlags& g) {
    hss::RunOverrides o;
    o.seed = g.seed;
    o.threads = g.threads ? g.threads : env_threads();
    o.out_dir = g.out;
    o.format = g.format;
    return o;
}

hss::BoundInputs parse_inputs_file(const std::string& path) {
    const nlohmann::json j = hss::load_json_file(path);
    hss::detail::require_keys(j, "inputs",
                              {"m", "n", "delta", "beta", "chi", "chi_bar", "delta_max", "rad",
                               "trans_rad", "gamma_fv", "Q", "P", "gibbs"});
    hss::BoundInputs in;
    in.m = hss::detail::get_or<std::int64_t>(j, "m", 0);
    in.n = hss::detail::get_or<std::int64_t>(j, "n", 0);
    in.delta = hss::detail::get_or<double>(j, "delta", 0.05);
    in.beta = hss::detail::get_or<double>(j, "beta", 0.0);
    in.chi = hss::detail::get_or<double>(j, "chi", 0.0);
    in.chi_bar = hss::detail::get_or<double>(j, "chi_bar", hss::kUnsetCoefficient);
    in.delta_max = hss::detail::get_or<double>(j, "delta_max", 0.0);
    in.rad = hss::detail::get_or<double>(j, "rad", hss::kUnsetCoefficient);
    in.trans_rad = hss::detail::get_or<double>(j, "trans_rad", 0.0);
    in.gamma_fv = hss::detail::get_or<double>(j, "gamma_fv", 0.0);
    return in;
}

void print_or_write(const GlobalFlags& g, const nlohmann::json& body,
                    const std::vector<hss::CsvRow>& rows = {}) {
    const std::string text =
        g.format == "csv" && !rows.empty() ? hss::to_csv(rows) : body.dump(2) + "\n";
    if (g.out) {
        std::ofstream os(*g.out, std::ios::binary);
        if (!os) throw hss::validation_error("cannot write output file " + *g.out);
        os << text;
    } else {
        std::fputs(text.c_str(), stdout);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hypothesis-set stability toolkit"};
    app.set_version_flag("--version", kVersion);
    GlobalFlags g;
    app.add_option("--seed", g.seed, "override the config seed");
    app.add_option("--threads", g.threads, "worker threads (default: HSS_BENCH_THREADS or 1)");
    app.add_option("--out", g.out, "output file or directory");
    app.add_option("--format", g.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    app.add_flag("--verbose", g.verbose, "log progress to stderr");
    app.require_subcommand(1);

    std::string config_path, inputs_path, scores_path, bound_kind;
    double eps = 1.0, delta_sens = 1.0;
    bool zero_arm = false;

    CLI::App* run = app.add_subcommand("run", "full experiment from a JSON config");
    run->add_option("--config", config_path, "experiment config")->required();

    CLI::App* estimate = app.add_subcommand("estimate", "complexity estimators only");
    estimate->add_option("--config", config_path, "experiment config")->required();

    CLI::App* stability = app.add_subcommand("stability", "stability report only");
    stability->add_option("--config", config_path, "experiment config")->required();

    CLI::App* validate = app.add_subcommand("validate", "bound-validity harness");
    validate->add_option("--config", config_path, "experiment config with a bound block")->required();

    CLI::App* bound = app.add_subcommand("bound", "closed-form bound calculators");
    bound->add_option("kind", bound_kind, "theorem1|theorem2|fv|pacbayes")->required();
    bound->add_option("--inputs", inputs_path, "inputs JSON")->required();

    CLI::App* mech = app.add_subcommand("mech", "differential-privacy mechanism");
    CLI::App* expmech = mech->add_subcommand("expmech", "exponential mechanism");
    expmech->add_option("--scores", scores_path, "scores JSON file")->required();
    expmech->add_option("--eps", eps, "privacy parameter")->required();
    expmech->add_option("--delta", delta_sens, "score sensitivity")->required();
    expmech->add_flag("--zero-arm", zero_arm, "append the score-0 arm");
    mech->require_subcommand(1);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run || *estimate || *stability || *validate) {
            const nlohmann::json cfg = hss::load_json_file(config_path);
            log_line(g, "loaded config " + config_path);
            if (*validate && !cfg.contains("bound"))
                throw hss::validation_error("validate: config must declare a 'bound' block");
            hss::RunResult res = hss::run_experiment(cfg, overrides_from(g), /*estimators_only=*/
                                                     static_cast<bool>(*estimate),
                                                     /*stability_only=*/static_cast<bool>(*stability));
            for (const auto& f : res.files) log_line(g, "wrote " + f);
        } else if (*bound) {
            const hss::BoundInputs in = parse_inputs_file(inputs_path);
            nlohmann::json out;
            std::vector<hss::CsvRow> rows;
            if (bound_kind == "theorem1") {
                const double v = hss::theorem1_bound(in);
                out = {{"value", v}, {"vacuous", v > 1.0}, {"scheme", "sampled-U"}};
                rows = {{"theorem1", v, 0.0, true}};
            } else if (bound_kind == "theorem2") {
                const hss::BoundReport rep = hss::theorem2_bound(in);
                out = hss::to_json(rep);
                rows = hss::csv_rows(rep);
            } else if (bound_kind == "fv") {
                const double v = hss::fv_bound(in.gamma_fv, in.m, in.delta);
                out = {{"value", v}, {"vacuous", v > 1.0}};
                rows = {{"fv", v, 0.0, true}};
            } else if (bound_kind == "pacbayes") {
                const nlohmann::json j = hss::load_json_file(inputs_path);
                const hss::Vec q = hss::detail::get_required<hss::Vec>(j, "inputs", "Q");
                const hss::Vec p = hss::detail::get_required<hss::Vec>(j, "inputs", "P");
                const double gibbs = hss::detail::get_or<double>(j, "gibbs", 0.0);
                const double v = hss::pac_bayes_bound(q, p, gibbs, in.m, in.delta);
                out = {{"value", v}, {"vacuous", v > 1.0}};
                rows = {{"pacbayes", v, 0.0, true}};
            } else {
                throw hss::validation_error("bound: unknown kind '" + bound_kind + "'");
            }
            print_or_write(g, out, rows);
        } else if (*mech) {
            const nlohmann::json j = hss::load_json_file(scores_path);
            hss::detail::require_keys(j, "scores", {"scores"});
            const hss::Vec scores = hss::detail::get_required<hss::Vec>(j, "scores", "scores");
            hss::SeededRng rng(g.seed.value_or(0), 0);
            const hss::MechanismOutput out =
                hss::exponential_mechanism(scores, eps, delta_sens, zero_arm, rng);
            print_or_write(g, hss::to_json(out));
        }
    } catch (const hss::validation_error& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 2;
    } catch (const hss::budget_error& e) {
        std::fprintf(stderr, "budget error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
