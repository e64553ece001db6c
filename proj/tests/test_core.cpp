#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hss/core.hpp"
#include "hss/report_io.hpp"
#include "hss/rng.hpp"

using namespace hss;

namespace {

LabeledPoint pt(double x, double y) { return LabeledPoint{{x}, y}; }

LabeledSample sample_of(std::initializer_list<LabeledPoint> pts) {
    return LabeledSample(std::vector<LabeledPoint>(pts));
}

}  // namespace

TEST_CASE("swap_sample follows the sign vector") {
    const LabeledSample s = sample_of({pt(1, 0), pt(2, 0), pt(3, 0)});
    const LabeledSample t = sample_of({pt(4, 0), pt(5, 0), pt(6, 0)});

    const LabeledSample mixed = swap_sample(s, t, {1, -1, 1});
    CHECK(mixed[0].x[0] == 1);
    CHECK(mixed[1].x[0] == 5);
    CHECK(mixed[2].x[0] == 3);

    const LabeledSample all_plus = swap_sample(s, t, {1, 1, 1});
    for (std::size_t i = 0; i < 3; ++i) CHECK(all_plus[i].x[0] == s[i].x[0]);

    const LabeledSample all_minus = swap_sample(s, t, {-1, -1, -1});
    for (std::size_t i = 0; i < 3; ++i) CHECK(all_minus[i].x[0] == t[i].x[0]);

    CHECK_THROWS_AS(swap_sample(s, t, {1, -1}), validation_error);
    CHECK_THROWS_AS(swap_sample(s, t, {1, 0.5, 1}), validation_error);
}

TEST_CASE("swap_sample mirror identity: S_{T,sigma} = T_{S,-sigma}") {
    SeededRng rng(7, 0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<LabeledPoint> sp, tp;
        Vec sigma, neg;
        for (int i = 0; i < 6; ++i) {
            sp.push_back(pt(rng.uniform(), rng.uniform()));
            tp.push_back(pt(rng.uniform(), rng.uniform()));
            const double v = rng.rademacher();
            sigma.push_back(v);
            neg.push_back(-v);
        }
        const LabeledSample s{sp}, t{tp};
        const LabeledSample a = swap_sample(s, t, sigma);
        const LabeledSample b = swap_sample(t, s, neg);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].x[0] == b[i].x[0]);
            CHECK(a[i].y == b[i].y);
        }
    }
}

TEST_CASE("replace_point") {
    const LabeledSample s = sample_of({pt(1, 1), pt(2, 2)});
    const LabeledSample r = replace_point(s, 1, pt(9, 9));
    CHECK(r[0].x[0] == 1);
    CHECK(r[1].x[0] == 9);

    const LabeledSample same = replace_point(s, 0, s[0]);
    CHECK(same[0].x[0] == s[0].x[0]);
    CHECK_THROWS_AS(replace_point(s, 2, pt(0, 0)), validation_error);
}

TEST_CASE("empirical and true risk") {
    const LossFunction abs = LossFunction::absolute();

    // Interpolating hypothesis has zero empirical risk.
    const LabeledSample s = sample_of({pt(0, 0.3), pt(1, 0.3)});
    const Hypothesis interp = constant_hypothesis(0.3);
    CHECK(empirical_risk(interp, s, abs) == doctest::Approx(0.0));

    // Constant 1 against all-zero labels saturates the clipped loss.
    const LabeledSample zeros = sample_of({pt(0, 0), pt(1, 0), pt(2, 0)});
    CHECK(empirical_risk(constant_hypothesis(1.0), zeros, abs) == doctest::Approx(1.0));

    // Hand mean of {0.5, 0.5}.
    const LabeledSample half = sample_of({pt(0, 0), pt(1, 1)});
    CHECK(empirical_risk(constant_hypothesis(0.5), half, abs) == doctest::Approx(0.5));

    // Exact probability-weighted mean: losses (0, 1) at probs (0.25, 0.75).
    const DiscreteDistribution d({pt(0, 0.2), pt(1, 1.2)}, {0.25, 0.75});
    CHECK(true_risk(constant_hypothesis(0.2), d, abs) == doctest::Approx(0.75));

    // Uniform D on the sample points reproduces the empirical risk.
    const DiscreteDistribution du = DiscreteDistribution::uniform({pt(0, 0), pt(1, 1)});
    const Hypothesis h = constant_hypothesis(0.4);
    CHECK(true_risk(h, du, abs) == doctest::Approx(empirical_risk(h, half, abs)));

    // Single atom.
    const DiscreteDistribution single({pt(0, 0.9)}, {1.0});
    CHECK(true_risk(constant_hypothesis(0.4), single, abs) == doctest::Approx(0.5));
}

TEST_CASE("empirical_risk is permutation invariant") {
    const LossFunction abs = LossFunction::absolute();
    const LabeledSample s = sample_of({pt(0, 0.1), pt(1, 0.7), pt(2, 0.4)});
    const LabeledSample shuffled = sample_of({pt(2, 0.4), pt(0, 0.1), pt(1, 0.7)});
    const Hypothesis h = constant_hypothesis(0.33);
    CHECK(empirical_risk(h, s, abs) == doctest::Approx(empirical_risk(h, shuffled, abs)).epsilon(1e-12));
}

TEST_CASE("draw_sample determinism and frequencies") {
    const DiscreteDistribution single({pt(3, 0.5)}, {1.0});
    SeededRng rng(11, 0);
    const LabeledSample copies = draw_sample(single, 5, rng);
    for (const auto& z : copies.points) CHECK(z.x[0] == 3);

    SeededRng a(42, 1), b(42, 1);
    const DiscreteDistribution two = DiscreteDistribution::uniform({pt(0, 0), pt(1, 1)});
    const LabeledSample s1 = draw_sample(two, 100, a);
    const LabeledSample s2 = draw_sample(two, 100, b);
    for (std::size_t i = 0; i < s1.size(); ++i) CHECK(s1[i].x[0] == s2[i].x[0]);

    SeededRng c(7, 2);
    const std::size_t n = 10000;
    const LabeledSample big = draw_sample(two, n, c);
    double freq = 0;
    for (const auto& z : big.points) freq += z.x[0];
    freq /= static_cast<double>(n);
    CHECK(std::fabs(freq - 0.5) <= 4.0 * std::sqrt(0.25 / static_cast<double>(n)));

    SeededRng z(1, 0);
    CHECK_THROWS_AS(draw_sample(two, 0, z), validation_error);
}

TEST_CASE("losses stay in [0,1] and respect declared Lipschitz constants") {
    const Vec preds{-2.0, -0.5, 0.0, 0.25, 0.5, 0.9, 1.0, 1.5, 3.0};
    const Vec labels{-1.0, 0.0, 0.5, 1.0};
    for (const LossFunction& loss :
         {LossFunction::absolute(), LossFunction::squared(), LossFunction::hinge()}) {
        for (double a : preds)
            for (double y : labels) {
                const double v = loss(a, y);
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
    }
    // Probe-grid Lipschitz verification on the clipped region.
    CHECK(LossFunction::absolute().probe_lipschitz(preds, labels) <=
          LossFunction::absolute().lipschitz() + 1e-9);
    CHECK(LossFunction::hinge().probe_lipschitz(preds, labels) <=
          LossFunction::hinge().lipschitz() + 1e-9);
    CHECK(LossFunction::squared().probe_lipschitz({0.0, 0.25, 0.5, 0.75, 1.0}, {0.0, 1.0}) <=
          LossFunction::squared().lipschitz() + 1e-9);
}

TEST_CASE("SeededRng is counter-indexed and stream-splittable") {
    SeededRng a(123, 5);
    SeededRng b(123, 5);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    // Disjoint streams differ.
    SeededRng s0 = SeededRng(9, 0).stream(0);
    SeededRng s1 = SeededRng(9, 0).stream(1);
    int same = 0;
    for (int i = 0; i < 64; ++i) same += s0.next_u64() == s1.next_u64() ? 1 : 0;
    CHECK(same == 0);

    // Uniforms land in [0, 1).
    SeededRng u(77, 3);
    for (int i = 0; i < 1000; ++i) {
        const double v = u.uniform();
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("sample CSV round trip") {
    const LabeledSample s = sample_of({pt(0.125, 1.5), pt(-3.25, 0.0)});
    std::stringstream ss;
    write_sample_csv(s, ss);
    CHECK(ss.str().substr(0, 5) == "x0,y\n");
    std::stringstream in(ss.str());
    const LabeledSample back = read_sample_csv(in);
    REQUIRE(back.size() == 2);
    CHECK(back[0].x[0] == s[0].x[0]);
    CHECK(back[1].y == s[1].y);

    std::stringstream bad("x0,y\n1,notanumber\n");
    CHECK_THROWS_AS(read_sample_csv(bad), validation_error);
}
