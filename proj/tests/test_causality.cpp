#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "causalot/causality.hpp"
#include "causalot/plans.hpp"
#include "oracles.hpp"

using namespace causalot;

namespace {

const double kThird = 1.0 / 3.0;
const DiscreteMeasure kUniform3({0, 1, 2}, {kThird, kThird, kThird});

// Brute-force reference: enumerate every pair of source atoms x_k >= x_l > y_j
// and compare conditional CDFs at y_j directly from the mass matrix.
double brute_force_deviation(const TransportPlan& p) {
    double worst = 0.0;
    for (std::size_t j = 0; j < p.m(); ++j)
        for (std::size_t k = 0; k < p.n(); ++k)
            for (std::size_t l = 0; l < p.n(); ++l) {
                if (!(p.source().point(k) > p.target().point(j) && p.source().point(l) > p.target().point(j))) continue;
                double fk = 0.0;
                double fl = 0.0;
                for (std::size_t r = 0; r <= j; ++r) {
                    fk += p.mass()(k, r);
                    fl += p.mass()(l, r);
                }
                worst = std::max(worst, std::abs(fk / p.source().weight(k) - fl / p.source().weight(l)));
            }
    return worst;
}

}  // namespace

TEST_CASE("constraint enumeration") {
    CHECK(causality_constraints({0, 1, 2}, {5, 6}).empty());

    const auto one = causality_constraints({0, 1, 2}, {0.5});
    REQUIRE(one.size() == 1);
    CHECK(one[0].threshold == 0);
    CHECK(one[0].anchor == 1);
    CHECK(one[0].member_count == 2);

    const auto two = causality_constraints({0, 1, 2}, {0.5, 1.5});
    REQUIRE(two.size() == 1);  // y = 1.5 has a single atom above it
    CHECK(two[0].threshold == 0);

    // strict inequality: a source atom equal to y_j is not a member
    const auto tie = causality_constraints({0, 1, 2, 3}, {1});
    REQUIRE(tie.size() == 1);
    CHECK(tie[0].anchor == 2);

    CHECK_THROWS(causality_constraints({1, 0}, {0}));
}

TEST_CASE("plan causality examples") {
    const auto prod = product_plan(kUniform3, DiscreteMeasure({-1, 0.5, 4}, {0.2, 0.3, 0.5}));
    const auto r = check_plan_causal(prod);
    CHECK(r.causal);
    CHECK(r.max_deviation == 0.0);

    const auto perm = deterministic_plan(kUniform3, {2, 0, 1});
    const auto bad = check_plan_causal(perm);
    CHECK_FALSE(bad.causal);
    CHECK(bad.max_deviation == doctest::Approx(1.0));
    REQUIRE_FALSE(bad.violations.empty());
    // y_0 = 0 separates rows x=1 (sent to 0) and x=2 (sent to 1)
    CHECK(bad.violations.front().threshold == 0);
    CHECK(bad.violations.front().row == 2);
}

TEST_CASE("violations are reproducible from raw entries") {
    std::mt19937_64 rng(21);
    int seen = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto src = oracle::random_measure(rng, 6, 0, 8);
        std::uniform_int_distribution<int> v(-2, 10);
        std::vector<double> vals;
        for (std::size_t i = 0; i < src.size(); ++i) vals.push_back(v(rng));
        const auto plan = mix_plans({{0.5, deterministic_plan(src, vals)},
                                     {0.5, product_plan(src, oracle::random_measure(rng, 4, 0, 8))}});
        const auto report = check_plan_causal(plan, 1e-9);
        CHECK(report.max_deviation == doctest::Approx(brute_force_deviation(plan)).epsilon(1e-9));
        const auto groups = causality_constraints(plan.source().support(), plan.target().support());
        for (const auto& viol : report.violations) {
            ++seen;
            std::size_t anchor = 0;
            for (const auto& g : groups)
                if (g.threshold == viol.threshold) anchor = g.anchor;
            double fk = 0.0;
            double fa = 0.0;
            for (std::size_t r = 0; r <= viol.threshold; ++r) {
                fk += plan.mass()(viol.row, r);
                fa += plan.mass()(anchor, r);
            }
            const double dev = std::abs(fk / plan.source().weight(viol.row) - fa / plan.source().weight(anchor));
            CHECK(std::abs(dev - viol.deviation) <= 1e-12);
        }
    }
    CHECK(seen > 0);
}

TEST_CASE("product plans are exactly causal") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 150; ++trial) {
        const auto plan = product_plan(oracle::random_measure(rng, 12, -5, 20), oracle::random_measure(rng, 12, -5, 20));
        CHECK(check_plan_causal(plan, 0.0).max_deviation == 0.0);
    }
}

TEST_CASE("convex combinations of causal plans stay causal") {
    std::mt19937_64 rng(2);
    int pairs = 0;
    for (int trial = 0; trial < 300 && pairs < 100; ++trial) {
        const auto src = oracle::random_measure(rng, 6, 0, 10);
        std::uniform_int_distribution<int> up(0, 5);
        std::vector<double> above;
        for (double x : src.support()) above.push_back(x + up(rng));
        const auto g1 = deterministic_plan(src, above);
        const auto g2 = product_plan(src, oracle::random_measure(rng, 5, -3, 15));
        if (check_plan_causal(g1, 0.0).causal && check_plan_causal(g2, 0.0).causal) {
            ++pairs;
            CHECK(check_plan_causal(mix_plans({{0.5, g1}, {0.5, g2}}), 1e-12).causal);
        }
    }
    CHECK(pairs == 100);
}

TEST_CASE("map classifier examples") {
    const auto gauss = discretize(Gaussian{0, 1}, 200);
    const auto expo = discretize(Exponential{1}, 200);
    auto affine = [](const DiscreteMeasure& m, double a, double b) {
        std::vector<double> v;
        for (double x : m.support()) v.push_back(a * x + b);
        return v;
    };

    auto r = check_map_causal(gauss, affine(gauss, 1, 1));
    CHECK(r.causal);
    CHECK(r.branch == MapBranch::above_diagonal);
    CHECK(r.offending_mass == 0.0);

    r = check_map_causal(gauss, affine(gauss, 2, 0));
    CHECK_FALSE(r.causal);
    CHECK(r.offending_mass == doctest::Approx(0.5).epsilon(0.02));

    r = check_map_causal(expo, affine(expo, 2, 0));
    CHECK(r.causal);
    CHECK(r.branch == MapBranch::above_diagonal);

    r = check_map_causal(gauss, affine(gauss, 0, 700));
    CHECK(r.causal);
    CHECK(r.branch == MapBranch::truncated);
    CHECK(r.t0 == 700.0);

    r = check_map_causal(kUniform3, {2, 0, 1});
    CHECK_FALSE(r.causal);
    CHECK_FALSE(r.branch.has_value());

    // truncation at an interior time: identity up to 1, then stop at 1
    const DiscreteMeasure five({0, 1, 2, 3, 4}, {0.2, 0.2, 0.2, 0.2, 0.2});
    r = check_map_causal(five, {0.5, 1, 1, 1, 1});
    CHECK(r.causal);
    CHECK(r.branch == MapBranch::truncated);
    CHECK(r.t0 == 1.0);

    // late values must all equal t0
    r = check_map_causal(five, {0.5, 1, 1, 1, 1.5});
    CHECK_FALSE(r.causal);
    CHECK(r.offending_mass == doctest::Approx(0.2));
    CHECK(check_map_causal(five, {0.5, 1, 1, 1, 1.5}, 0.2).causal);
}

TEST_CASE("affine truth table on small grids") {
    const auto gauss = discretize(Gaussian{0, 1}, 100);
    const auto expo = discretize(Exponential{1}, 100);
    for (double a : {-1.0, 0.0, 0.5, 1.0, 2.0})
        for (double b : {-1.0, 0.0, 1.0}) {
            std::vector<double> gv;
            std::vector<double> ev;
            for (double x : gauss.support()) gv.push_back(a * x + b);
            for (double x : expo.support()) ev.push_back(a * x + b);
            CHECK(check_map_causal(gauss, gv).causal == (a == 0.0 || (a == 1.0 && b >= 0.0)));
            CHECK(check_map_causal(expo, ev).causal == (a == 0.0 || (a >= 1.0 && b >= 0.0)));
        }
}

TEST_CASE("map classifier agrees with the plan check on deterministic plans") {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> val(-2, 8);
    int causal_count = 0;
    for (int trial = 0; trial < 3000; ++trial) {
        const auto src = oracle::random_measure(rng, 6, 0, 6);
        std::vector<double> vals;
        for (std::size_t i = 0; i < src.size(); ++i) vals.push_back(val(rng));
        // bias half of the draws towards the two causal shapes
        if (trial % 4 == 1)
            for (std::size_t i = 0; i < src.size(); ++i) vals[i] = std::max(vals[i], src.point(i));
        if (trial % 4 == 2) {
            const double t0 = val(rng);
            for (std::size_t i = 0; i < src.size(); ++i)
                vals[i] = src.point(i) > t0 ? t0 : std::max(vals[i], src.point(i));
        }
        const bool by_map = check_map_causal(src, vals).causal;
        const bool by_plan = check_plan_causal(deterministic_plan(src, vals), 0.0).causal;
        CHECK(by_map == by_plan);
        causal_count += by_map;
    }
    CHECK(causal_count > 500);
}

TEST_CASE("maps above the diagonal pass the first branch") {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> up(0, 4);
    for (int trial = 0; trial < 200; ++trial) {
        const auto src = oracle::random_measure(rng, 8, -5, 10);
        if (src.size() < 2) continue;
        std::vector<double> vals;
        for (double x : src.support()) vals.push_back(x + up(rng));
        vals.back() = src.support().back() + 5;  // keep the map non-constant
        const auto r = check_map_causal(src, vals);
        CHECK(r.causal);
        CHECK(r.branch == MapBranch::above_diagonal);
        CHECK(r.offending_mass == 0.0);
    }
}

TEST_CASE("cyclical monotonicity") {
    // only one pair: the identity permutation is the only one
    const auto single = deterministic_plan(DiscreteMeasure::dirac(0), {10});
    CHECK(cyclical_monotonicity_check(single, square_cost).ok);

    const DiscreteMeasure src({0, 1}, {0.5, 0.5});
    const auto crossed = deterministic_plan(src, {11, 10});
    const auto r = cyclical_monotonicity_check(crossed, square_cost, 2);
    CHECK_FALSE(r.ok);
    CHECK(r.worst_violation == doctest::Approx(2.0 * 1.0));  // (121 + 81) - (100 + 100)
    CHECK(r.witness.size() == 2);

    const auto straight = deterministic_plan(src, {10, 11});
    CHECK(cyclical_monotonicity_check(straight, square_cost, 3).ok);

    // pairs whose source is not before every target are outside the family
    const auto overlapping = deterministic_plan(src, {11, 0.5});
    CHECK(cyclical_monotonicity_check(overlapping, square_cost, 2).ok);

    CHECK_THROWS(cyclical_monotonicity_check(straight, square_cost, 1));
    CHECK_THROWS(cyclical_monotonicity_check(straight, square_cost, 6));
}

TEST_CASE("cyclical check with three-cycles") {
    // for c = (y - x)^2 the monotone rearrangement is the only optimal one
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> off(1, 9);
    for (int trial = 0; trial < 100; ++trial) {
        const DiscreteMeasure src({0, 1, 2}, {kThird, kThird, kThird});
        std::vector<double> vals{10.0 + off(rng), 10.0 + off(rng), 10.0 + off(rng)};
        const auto plan = deterministic_plan(src, vals);
        const auto r = cyclical_monotonicity_check(plan, square_cost, 3);
        bool sorted = vals[0] <= vals[1] && vals[1] <= vals[2];
        CHECK(r.ok == sorted);
    }
}
