#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hss/bounds.hpp"
#include "hss/core.hpp"

using namespace hss;

namespace {

LabeledPoint pt(double x, double y) { return LabeledPoint{{x}, y}; }

BoundInputs base_inputs() {
    BoundInputs in;
    in.m = 100;
    in.delta = 0.05;
    return in;
}

}  // namespace

TEST_CASE("theorem1_bound spot values") {
    BoundInputs in = base_inputs();
    in.n = 100;
    in.trans_rad = 0.0;

    // Third term at m = n is 2 sqrt(8/m).
    in.delta = 0.5;  // isolate: second term shrinks but stays positive
    const double third = 2.0 * std::sqrt(8.0 / 100.0);
    CHECK(third == doctest::Approx(0.5656854249492381).epsilon(1e-12));

    in.delta = 0.05;
    const double total = theorem1_bound(in);
    // Independent reconstruction: 3 sqrt(0.02 ln 40) + 2 sqrt(0.08).
    CHECK(total ==
          doctest::Approx(3.0 * std::sqrt(0.02 * std::log(40.0)) + 2.0 * std::sqrt(0.08))
              .epsilon(1e-12));
    CHECK(total == doctest::Approx(1.3805463343936097).epsilon(1e-10));
    CHECK(total > 1.0);  // vacuous at this scale, reported as such upstream

    // Linear in the transductive complexity: +t moves the bound by exactly 2t.
    in.trans_rad = 0.17;
    CHECK(theorem1_bound(in) == doctest::Approx(total + 0.34).epsilon(1e-12));

    in.delta = 1.5;
    CHECK_THROWS_AS(theorem1_bound(in), validation_error);
}

TEST_CASE("theorem2 branch spot values (exact to 1e-9)") {
    // rad branch: beta=0, rad=0.1, chi_bar unavailable, m=100, delta=e^-2.
    {
        BoundInputs in = base_inputs();
        in.beta = 0.0;
        in.rad = 0.1;
        in.delta = std::exp(-2.0);
        CHECK(theorem2_rad_branch(in) == doctest::Approx(0.3).epsilon(1e-9));
    }
    // cv branch: chi=0, beta=0, m=100, delta=6/e (formula domain, not a
    // confidence level; ln(6/delta) = 1).
    {
        BoundInputs in = base_inputs();
        in.chi = 0.0;
        in.delta = 6.0 / std::exp(1.0);
        in.rad = 0.0;
        CHECK(theorem2_cv_branch(in) == doctest::Approx(0.4).epsilon(1e-9));
    }
    // diam branch: beta = delta_max = 0, m=100, delta=4/e.
    {
        BoundInputs in = base_inputs();
        in.delta = 4.0 / std::exp(1.0);
        in.rad = 0.0;
        CHECK(theorem2_diam_branch(in) == doctest::Approx(0.2).epsilon(1e-9));
    }
    // The combined report insists on a genuine confidence level.
    BoundInputs in = base_inputs();
    in.rad = 0.1;
    in.delta = 1.5;
    CHECK_THROWS_AS(theorem2_bound(in), validation_error);
}

TEST_CASE("theorem2_bound bookkeeping") {
    BoundInputs in = base_inputs();
    in.rad = 0.3;
    in.chi = 0.2;
    in.delta_max = 0.1;
    const BoundReport rep = theorem2_bound(in);
    for (const auto& [name, v] : rep.branch_values) {
        CHECK(rep.min_value <= v + 1e-15);
        CHECK(rep.vacuous.at(name) == (v > 1.0));
    }

    // chi_bar can stand in when the Rademacher estimate is unavailable.
    BoundInputs only_chibar = base_inputs();
    only_chibar.chi_bar = 0.05;
    const BoundReport rep2 = theorem2_bound(only_chibar);
    CHECK(rep2.branch_values.at("rad") ==
          doctest::Approx(0.05 + std::sqrt(std::log(1.0 / 0.05) / 200.0)));

    BoundInputs neither = base_inputs();
    CHECK_THROWS_AS(theorem2_bound(neither), validation_error);
}

TEST_CASE("theorem2 rad branch at beta=0 has the standard Rademacher shape") {
    BoundInputs in = base_inputs();
    in.beta = 0.0;
    in.rad = 0.23;
    const BoundReport rep = theorem2_bound(in);
    const double expected = 2.0 * 0.23 + std::sqrt(std::log(1.0 / in.delta) / (2.0 * 100.0));
    CHECK(rep.branch_values.at("rad") == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("theorem2 cv branch at chi = beta matches the uniform-stability specialization") {
    BoundInputs in = base_inputs();
    in.beta = 0.01;
    in.chi = in.beta;  // singleton sets: Delta = 0, so chi <= beta
    in.rad = 0.0;
    const BoundReport rep = theorem2_bound(in);
    const double expected = std::sqrt(std::exp(1.0)) * 0.01 +
                            4.0 * std::sqrt((0.01 + 0.02) * std::log(6.0 / in.delta));
    CHECK(rep.branch_values.at("cv") == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("fv_bound and the 47-vs-48 constant") {
    CHECK(fv_bound(0.0, 100, 4.0 / std::exp(1.0)) == doctest::Approx(0.2).epsilon(1e-9));

    double prev = 0.0;
    for (double g : {0.0, 0.001, 0.01, 0.1}) {
        const double v = fv_bound(g, 100, 0.1);
        CHECK(v >= prev);
        prev = v;
    }

    // diam branch uses 48 where the standalone restatement uses 47; at
    // gamma = 3 beta + delta_max the log terms agree exactly.
    BoundInputs in = base_inputs();
    in.beta = 0.002;
    in.delta_max = 0.03;
    in.rad = 0.0;
    const double gamma = 3.0 * in.beta + in.delta_max;
    const double tail = std::sqrt(4.0 / 100.0 * std::log(4.0 / in.delta));
    const double diam = theorem2_bound(in).branch_values.at("diam");
    const double fv = fv_bound(gamma, in.m, in.delta);
    CHECK((diam - tail) / (fv - tail) == doctest::Approx(48.0 / 47.0).epsilon(1e-12));
}

TEST_CASE("pac_bayes_bound") {
    const Vec uniform{0.25, 0.25, 0.25, 0.25};
    // Q = P: KL = 0, the complexity term floors at KL = 1.
    const double v = pac_bayes_bound(uniform, uniform, 0.0, 100, 1.0);
    CHECK(v == doctest::Approx(0.46065306597126335).epsilon(1e-9));

    // Point mass on an atom of prior probability 1/e: KL = 1, same value.
    const Vec q{1.0, 0.0, 0.0};
    const Vec p{1.0 / std::exp(1.0), 0.5, 0.5 - 1.0 / std::exp(1.0)};
    CHECK(pac_bayes_bound(q, p, 0.0, 100, 1.0) == doctest::Approx(v).epsilon(1e-12));

    // delta = 1 kills the confidence term; smaller delta adds it back.
    CHECK(pac_bayes_bound(uniform, uniform, 0.0, 100, 0.5) ==
          doctest::Approx(v + std::sqrt(std::log(2.0) / 200.0)).epsilon(1e-12));

    // Gibbs risk enters additively.
    CHECK(pac_bayes_bound(uniform, uniform, 0.25, 100, 1.0) == doctest::Approx(v + 0.25));

    // Absolute-continuity violation.
    const Vec q_bad{0.5, 0.5, 0.0};
    const Vec p_bad{1.0, 0.0, 0.0};
    CHECK_THROWS_AS(pac_bayes_bound(q_bad, p_bad, 0.0, 100, 0.5), validation_error);
}

TEST_CASE("bounds are nonincreasing in delta and nondecreasing in coefficients") {
    BoundInputs in = base_inputs();
    in.n = 50;
    in.beta = 0.01;
    in.chi = 0.05;
    in.chi_bar = 0.04;
    in.delta_max = 0.06;
    in.rad = 0.08;
    in.trans_rad = 0.02;
    in.gamma_fv = 0.01;

    double prev1 = 1e9, prev2 = 1e9, prevf = 1e9;
    for (double delta : {0.01, 0.05, 0.1, 0.3, 0.9}) {
        BoundInputs j = in;
        j.delta = delta;
        const double t1 = theorem1_bound(j);
        const double t2 = theorem2_bound(j).min_value;
        const double fv = fv_bound(j.gamma_fv, j.m, j.delta);
        CHECK(t1 <= prev1 + 1e-12);
        CHECK(t2 <= prev2 + 1e-12);
        CHECK(fv <= prevf + 1e-12);
        prev1 = t1;
        prev2 = t2;
        prevf = fv;
    }

    auto bump = [&](auto mutate) {
        BoundInputs j = in;
        const double before = theorem2_bound(j).min_value;
        mutate(j);
        CHECK(theorem2_bound(j).min_value >= before - 1e-12);
    };
    bump([](BoundInputs& j) { j.beta += 0.01; });
    bump([](BoundInputs& j) { j.chi += 0.05; });
    bump([](BoundInputs& j) { j.chi_bar += 0.05; });
    bump([](BoundInputs& j) { j.delta_max += 0.05; });
    bump([](BoundInputs& j) { j.rad += 0.05; });

    BoundInputs j = in;
    const double before = theorem1_bound(j);
    j.trans_rad += 0.05;
    CHECK(theorem1_bound(j) >= before - 1e-12);
}

TEST_CASE("validate_bound_coverage on a trivial family") {
    // Interpolating singleton: the gap is always 0, the bound is positive.
    const HypothesisFamily family = [](const LabeledSample&) {
        return HypothesisSet::finite({constant_hypothesis(0.5)});
    };
    const DiscreteDistribution d = DiscreteDistribution::uniform({pt(0, 0.5), pt(1, 0.5)});
    const LossFunction abs = LossFunction::absolute();
    BoundInputs in;
    in.m = 10;
    in.delta = 0.1;
    in.beta = 0.0;
    in.chi = 0.0;
    in.chi_bar = 0.0;
    in.rad = 0.0;
    const CoverageResult cov = validate_bound_coverage(family, d, abs, BoundKind::theorem2_min, in,
                                                       10, 200, SeededRng(12, 0));
    CHECK(cov.violation_rate == 0.0);
    CHECK(cov.mean_slack > 0.0);

    // The min bound is tighter, so its violation count dominates any branch's.
    const CoverageResult cov_rad = validate_bound_coverage(family, d, abs, BoundKind::theorem2_rad,
                                                           in, 10, 200, SeededRng(12, 0));
    CHECK(cov.violation_rate >= cov_rad.violation_rate);
}
