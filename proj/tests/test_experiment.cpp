#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hss/experiment.hpp"
#include "hss/report_io.hpp"

using namespace hss;
namespace fs = std::filesystem;

namespace {

json minimal_config(const std::string& out_dir) {
    return json{{"seed", 3},
                {"distribution",
                 {{"atoms", json::array({{{"x", {0.0}}, {"y", 0.0}}, {{"x", {1.0}}, {"y", 1.0}}})}}},
                {"family", {{"name", "finite"}, {"predictions", {0.5}}}},
                {"m", 4},
                {"n_trials", 4},
                {"delta", 0.1},
                {"estimators", json::array({{{"name", "dd_rademacher_exact"}}})},
                {"outputs", {{"dir", out_dir}}}};
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("hss_test_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

}  // namespace

TEST_CASE("config validation rejects unknown keys everywhere") {
    TempDir dir("cfg");
    json cfg = minimal_config(dir.path.string());
    CHECK_NOTHROW(parse_experiment_config(cfg));

    json bad_top = cfg;
    bad_top["surprise"] = 1;
    CHECK_THROWS_AS(parse_experiment_config(bad_top), validation_error);

    json bad_dist = cfg;
    bad_dist["distribution"]["mystery"] = 2;
    CHECK_THROWS_AS(parse_experiment_config(bad_dist), validation_error);

    json bad_outputs = cfg;
    bad_outputs["outputs"]["extra"] = "x";
    CHECK_THROWS_AS(parse_experiment_config(bad_outputs), validation_error);

    json bad_family = cfg;
    bad_family["family"]["name"] = "no_such_family";
    CHECK_THROWS_AS(
        run_experiment(bad_family, RunOverrides{}), validation_error);

    json bad_estimator = cfg;
    bad_estimator["estimators"][0]["name"] = "no_such_estimator";
    CHECK_THROWS_AS(run_experiment(bad_estimator, RunOverrides{}), validation_error);

    json missing_m = cfg;
    missing_m.erase("m");
    CHECK_THROWS_AS(parse_experiment_config(missing_m), validation_error);
}

TEST_CASE("singleton family run produces all-zero stability") {
    TempDir dir("solo");
    const json cfg = minimal_config(dir.path.string());
    const RunResult res = run_experiment(cfg, RunOverrides{});
    CHECK(res.files.size() >= 3);  // family, estimates, stability, bounds

    const json stab = load_json_file(dir.path.string() + "/stability.json");
    CHECK(stab.at("beta_hat").get<double>() == 0.0);
    CHECK(stab.at("chi_hat").get<double>() == 0.0);
    CHECK(stab.at("delta_max_hat").get<double>() == 0.0);

    const json est = load_json_file(dir.path.string() + "/estimates.json");
    CHECK(std::fabs(est.at("dd_rademacher_exact").at("value").get<double>()) < 1e-9);
}

TEST_CASE("fixed seed gives byte-identical outputs across runs and thread counts") {
    TempDir a("det_a"), b("det_b"), c("det_c");
    json cfg = minimal_config(a.path.string());
    cfg["family"] = {{"name", "distillation"},
                     {"gamma", 0.25},
                     {"grid", {{"kind", "linspace"}, {"count", 9}, {"lo", 0.0}, {"hi", 1.0}}}};
    cfg["estimators"] = json::array(
        {{{"name", "dd_rademacher"}, {"n_draws", 400}},
         {{"name", "union_rademacher"}, {"n_draws", 200}, {"subsamples", 30}},
         {{"name", "transductive"}, {"n_draws", 200}, {"n", 4}, {"subsamples", 30}}});
    cfg["m"] = 6;

    RunOverrides o1;
    o1.threads = 1;
    run_experiment(cfg, o1);

    cfg["outputs"]["dir"] = b.path.string();
    RunOverrides o2;
    o2.threads = 4;
    run_experiment(cfg, o2);

    cfg["outputs"]["dir"] = c.path.string();
    run_experiment(cfg, o1);

    for (const char* stem : {"family.json", "estimates.json", "stability.json", "bounds.json"}) {
        const std::string fa = slurp(a.path.string() + "/" + stem);
        CHECK(!fa.empty());
        CHECK(fa == slurp(b.path.string() + "/" + stem));
        CHECK(fa == slurp(c.path.string() + "/" + stem));
    }
}

TEST_CASE("csv emission is stable and header-only when empty") {
    CHECK(to_csv({}) == "quantity,value,std_error,exact\n");
    const std::vector<CsvRow> rows{{"alpha", 0.125, 0.0, true}, {"beta", -3.5, 0.25, false}};
    const std::string once = to_csv(rows);
    CHECK(once == to_csv(rows));
    CHECK(once.find("alpha,0.125,0,true\n") != std::string::npos);

    TempDir dir("csv");
    json cfg = minimal_config(dir.path.string());
    RunOverrides o;
    o.format = "csv";
    run_experiment(cfg, o);
    const std::string stab = slurp(dir.path.string() + "/stability.csv");
    CHECK(stab.rfind("quantity,value,std_error,exact\n", 0) == 0);
}

TEST_CASE("config JSON round-trips through the validator") {
    TempDir dir("rt");
    const json cfg = minimal_config(dir.path.string());
    const std::string path = dir.path.string() + "/config.json";
    {
        std::ofstream os(path);
        os << cfg.dump(2);
    }
    const json loaded = load_json_file(path);
    CHECK_NOTHROW(parse_experiment_config(loaded));
    CHECK(loaded == cfg);
}

TEST_CASE("coverage block drives the validity harness") {
    TempDir dir("cov");
    json cfg = minimal_config(dir.path.string());
    cfg["bound"] = {{"kind", "theorem2-min"},
                    {"n_trials", 50},
                    {"inputs", {{"beta", 0.0}, {"chi", 0.0}, {"chi_bar", 0.0}, {"rad", 0.0}}}};
    run_experiment(cfg, RunOverrides{});
    const json cov = load_json_file(dir.path.string() + "/coverage.json");
    CHECK(cov.at("n_trials").get<int>() == 50);
    CHECK(cov.at("violation_rate").get<double>() >= 0.0);
}

TEST_CASE("failed runs leave no partial outputs") {
    TempDir dir("fail");
    json cfg = minimal_config(dir.path.string());
    // Estimator list starts fine, then an invalid estimator aborts the run
    // after estimates would have been written.
    cfg["estimators"] = json::array({{{"name", "dd_rademacher_exact"}},
                                     {{"name", "broken"}}});
    CHECK_THROWS_AS(run_experiment(cfg, RunOverrides{}), validation_error);
    CHECK_FALSE(fs::exists(dir.path / "estimates.json"));
    CHECK_FALSE(fs::exists(dir.path / "stability.json"));
}
