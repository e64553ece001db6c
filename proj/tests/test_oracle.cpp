#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hss/core.hpp"
#include "hss/mechanisms.hpp"
#include "hss/oracle.hpp"

using namespace hss;

namespace {

LabeledPoint pt(double x, double y) { return LabeledPoint{{x}, y}; }

const LossFunction kIdentityLoss = LossFunction::custom([](double a, double) { return a; }, 1.0);

// Hypotheses indexed by constant prediction p, loss given by a lookup table
// M[p][y]; lets tests pin arbitrary per-point loss patterns.
LossFunction table_loss(std::vector<Vec> table) {
    return LossFunction::custom(
        [table = std::move(table)](double a, double y) {
            return table[static_cast<std::size_t>(a + 0.5)][static_cast<std::size_t>(y + 0.5)];
        },
        1.0);
}

// U whose points carry their own index in x, so table-backed hypotheses can
// address them.
LabeledSample indexed_sample(std::size_t n) {
    std::vector<LabeledPoint> pts;
    for (std::size_t i = 0; i < n; ++i) pts.push_back(pt(static_cast<double>(i), 0.0));
    return LabeledSample(std::move(pts));
}

HypothesisSetUnion loss_table_union(const std::vector<Vec>& rows) {
    std::vector<Hypothesis> members;
    for (const auto& row : rows) {
        members.push_back(Hypothesis{
            [row](const Vec& x) { return row[static_cast<std::size_t>(x[0] + 0.5)]; }, {}});
    }
    return single_set_union(HypothesisSet::finite(std::move(members)));
}

}  // namespace

TEST_CASE("exact_sup_gap") {
    // Two atoms with equal mass; S is the single y=1 point. Loss table rows
    // give (R, Rhat) = (0.5, 0.2) and (0.4, 0.4): the sup gap is 0.3.
    const DiscreteDistribution d = DiscreteDistribution::uniform({pt(0, 0), pt(1, 1)});
    const LabeledSample s{{pt(1, 1)}};
    const LossFunction loss = table_loss({{0.8, 0.2}, {0.4, 0.4}});
    const HypothesisSet set =
        HypothesisSet::finite({constant_hypothesis(0.0), constant_hypothesis(1.0)});
    const double gap = exact_sup_gap(set, d, s, loss);
    CHECK(gap == doctest::Approx(0.3).epsilon(1e-12));

    // Sup dominance: each member's own gap never exceeds the sup.
    for (const auto& h : set.candidates())
        CHECK(true_risk(h, d, loss) - empirical_risk(h, s, loss) <= gap + 1e-12);

    // Constant-everywhere loss: gap 0.
    const HypothesisSet solo = HypothesisSet::finite({constant_hypothesis(0.4)});
    CHECK(exact_sup_gap(solo, d, s, kIdentityLoss) == doctest::Approx(0.0));

    // Budget and exhaustiveness guards.
    OracleBudget tiny;
    tiny.max_hypotheses = 1;
    CHECK_THROWS_AS(exact_sup_gap(set, d, s, loss, tiny), budget_error);
    const HypothesisSet cont = HypothesisSet::l1_mix(
        {constant_hypothesis(0.0), constant_hypothesis(1.0)}, MixConstraint::l1_ball(1.0));
    CHECK_THROWS_AS(exact_sup_gap(cont, d, s, loss), validation_error);
}

TEST_CASE("exact_transductive_expectation on hand-enumerated partitions") {
    const LabeledSample u = indexed_sample(4);

    // Singleton with losses (0,1,0,1): complementary partitions cancel.
    CHECK(exact_transductive_expectation(loss_table_union({{0, 1, 0, 1}}), u, 2, 2, kIdentityLoss) ==
          doctest::Approx(0.0).epsilon(1e-12));

    // Two rows, hand-enumerated over the six partitions: mean 2.5/6.
    const double v = exact_transductive_expectation(loss_table_union({{0, 1, 0, 1}, {1, 0, 0, 0}}),
                                                    u, 2, 2, kIdentityLoss);
    CHECK(v == doctest::Approx(2.5 / 6.0).epsilon(1e-12));

    OracleBudget small;
    small.max_partitions = 3;
    CHECK_THROWS_AS(
        exact_transductive_expectation(loss_table_union({{0, 1, 0, 1}}), u, 2, 2, kIdentityLoss, small),
        budget_error);
}

TEST_CASE("oracle values are bit-stable across runs") {
    const LabeledSample u = indexed_sample(6);
    const HypothesisSetUnion tables =
        loss_table_union({{0.1, 0.9, 0.3, 0.7, 0.5, 0.2}, {0.6, 0.1, 0.8, 0.2, 0.4, 0.9}});
    const double a = exact_transductive_expectation(tables, u, 3, 3, kIdentityLoss);
    const double b = exact_transductive_expectation(tables, u, 3, 3, kIdentityLoss);
    CHECK(a == b);
    const double c = exact_transductive_rademacher(tables, u, 3, 3, kIdentityLoss);
    const double e = exact_transductive_rademacher(tables, u, 3, 3, kIdentityLoss);
    CHECK(c == e);
}

TEST_CASE("partition expectation is bounded by the transductive complexity plus slack") {
    // E[Phi] <= exact transductive Rademacher + 2 sqrt(ln(2e)/m) at m = n.
    SeededRng rng(41, 0);
    for (std::size_t m : {2, 3}) {
        for (int table_id = 0; table_id < 20; ++table_id) {
            SeededRng r = rng.stream(m * 1000 + static_cast<std::uint64_t>(table_id));
            const std::size_t rows = 1 + static_cast<std::size_t>(r.uniform_int(4));
            std::vector<Vec> tables(rows, Vec(2 * m));
            for (auto& row : tables)
                for (auto& vv : row) vv = r.uniform();
            const LabeledSample u = indexed_sample(2 * m);
            const HypothesisSetUnion fam = loss_table_union(tables);
            const double lhs = exact_transductive_expectation(fam, u, m, m, kIdentityLoss);
            const double rad = exact_transductive_rademacher(fam, u, m, m, kIdentityLoss);
            const double slack = 2.0 * std::sqrt(std::log(2.0 * std::exp(1.0)) / static_cast<double>(m));
            CHECK(lhs <= rad + slack + 1e-12);
        }
    }
}

TEST_CASE("symmetrization sanity: ghost-sample tail dominates the true tail") {
    // P[sup R - Rhat_S > eps] <= 2 P[sup Rhat_T - Rhat_S > eps/2] for
    // n eps^2 >= 2, checked empirically with binomial slack.
    const DiscreteDistribution d = DiscreteDistribution::uniform({pt(0, 0), pt(1, 1)});
    const LossFunction abs = LossFunction::absolute();
    const HypothesisSet set =
        HypothesisSet::finite({constant_hypothesis(0.0), constant_hypothesis(1.0)});
    const std::size_t m = 5, n = 50;
    const double eps = 0.3;
    REQUIRE(static_cast<double>(n) * eps * eps >= 2.0);

    const int trials = 4000;
    int lhs_count = 0, rhs_count = 0;
    SeededRng rng(42, 0);
    for (int i = 0; i < trials; ++i) {
        SeededRng r = rng.stream(static_cast<std::uint64_t>(i));
        const LabeledSample s = draw_sample(d, m, r);
        double sup_gap = -2.0, sup_ghost = -2.0;
        const LabeledSample t = draw_sample(d, n, r);
        for (const auto& h : set.candidates()) {
            sup_gap = std::max(sup_gap, true_risk(h, d, abs) - empirical_risk(h, s, abs));
            sup_ghost = std::max(sup_ghost, empirical_risk(h, t, abs) - empirical_risk(h, s, abs));
        }
        lhs_count += sup_gap > eps ? 1 : 0;
        rhs_count += sup_ghost > eps / 2.0 ? 1 : 0;
    }
    const double lhs = static_cast<double>(lhs_count) / trials;
    const double rhs = static_cast<double>(rhs_count) / trials;
    CHECK(lhs > 0.0);  // the check is non-vacuous at this scale
    const double se = std::sqrt(lhs * (1 - lhs) / trials) + 2.0 * std::sqrt(rhs * (1 - rhs) / trials);
    CHECK(lhs <= 2.0 * rhs + 5.0 * se);
}

TEST_CASE("exact_expmech_expectation") {
    // Equal scores: the expectation is the common score.
    CHECK(exact_expmech_expectation({0.4, 0.4, 0.4}, 1.0, 0.5, false) == doctest::Approx(0.4));

    // With the zero arm at s = 0 every arm is equally likely: s p/(p+1) = 0.
    CHECK(exact_expmech_expectation({0.0, 0.0}, 1.0, 0.5, true) == doctest::Approx(0.0));

    // With the zero arm and s != 0 the arm weights are e^{eps s/(2 Delta)}:
    // E = s p w / (p w + 1).
    const double s = 0.3, eps = 1.0, delta = 0.5, w = std::exp(eps * s / (2.0 * delta));
    CHECK(exact_expmech_expectation({s, s}, eps, delta, true) ==
          doctest::Approx(s * 2.0 * w / (2.0 * w + 1.0)).epsilon(1e-12));

    // (1, 0) at eps/(2 Delta) = 1.
    CHECK(exact_expmech_expectation({1.0, 0.0}, 1.0, 0.5, false) ==
          doctest::Approx(0.7310585786300049).epsilon(1e-12));

    // Convex combination never exceeds the max score.
    SeededRng rng(43, 0);
    for (int trial = 0; trial < 100; ++trial) {
        SeededRng r = rng.stream(static_cast<std::uint64_t>(trial));
        Vec scores(1 + r.uniform_int(6));
        double mx = -1e9;
        for (auto& v : scores) {
            v = r.uniform(-1, 1);
            mx = std::max(mx, v);
        }
        CHECK(exact_expmech_expectation(scores, 0.5, 0.25, false) <= mx + 1e-12);
    }
}

TEST_CASE("psi score family: sensitivity declaration passes the DP check") {
    const DiscreteDistribution d = DiscreteDistribution::uniform({pt(0, 0), pt(1, 1), pt(2, 0.5)});
    const LossFunction abs = LossFunction::absolute();
    const HypothesisFamily family = [](const LabeledSample& sample) {
        double mean = 0.0;
        for (const auto& z : sample.points) mean += z.y;
        mean /= static_cast<double>(sample.size());
        return HypothesisSet::finite({constant_hypothesis(mean),
                                      constant_hypothesis(std::min(1.0, mean + 0.2))});
    };
    const std::size_t p = 3, m = 6;
    const ScoreFamily psi = make_psi_score_family(family, d, abs, p, m, 1.0 / m);
    CHECK(psi.sensitivity == doctest::Approx(3.0 / m).epsilon(1e-12));

    // Neighbor super-samples differing by one point in one constituent.
    SeededRng rng(44, 0);
    std::vector<std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>>> pairs;
    for (int t = 0; t < 6; ++t) {
        SeededRng r = rng.stream(static_cast<std::uint64_t>(t));
        std::vector<LabeledSample> a;
        for (std::size_t k = 0; k < p; ++k) a.push_back(draw_sample(d, m, r));
        std::vector<LabeledSample> b = a;
        const std::size_t which = static_cast<std::size_t>(r.uniform_int(p));
        const std::size_t index = static_cast<std::size_t>(r.uniform_int(m));
        b[which] = replace_point(b[which], index, d.sample(r));
        pairs.emplace_back(std::move(a), std::move(b));
    }
    for (double eps : {0.1, 0.5, 1.0}) {
        CHECK(check_dp_ratio(psi, eps, pairs, 1e-9).ok);
        CHECK(check_dp_ratio(psi, eps, pairs, 1e-9, /*include_zero_arm=*/true).ok);
    }
}
