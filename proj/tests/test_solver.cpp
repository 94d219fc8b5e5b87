#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "causalot/causality.hpp"
#include "causalot/solver.hpp"
#include "oracles.hpp"

using namespace causalot;

namespace {

const double kThird = 1.0 / 3.0;
const DiscreteMeasure kUniform3({0, 1, 2}, {kThird, kThird, kThird});

double zero_cost(double, double) { return 0.0; }

void check_certificate(const SolveResult& r) {
    CHECK(r.status == SolveStatus::optimal);
    CHECK(r.primal_residual <= 1e-9);
    CHECK(r.min_reduced_cost >= -1e-8);
    CHECK(r.dual_gap <= 1e-8 * std::max(1.0, std::abs(r.value)));
}

/// Law of X + D for D >= 0 drawn per atom: dominates the input measure.
DiscreteMeasure dominating(const DiscreteMeasure& eta, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> shift(0, 4);
    std::uniform_int_distribution<int> parts(1, 3);
    std::vector<double> pts;
    std::vector<double> ws;
    for (std::size_t i = 0; i < eta.size(); ++i) {
        const int k = parts(rng);
        for (int p = 0; p < k; ++p) {
            pts.push_back(eta.point(i) + shift(rng));
            ws.push_back(eta.weight(i) / k);
        }
    }
    return DiscreteMeasure::from_atoms(pts, ws);
}

}  // namespace

TEST_CASE("LP construction") {
    const auto one = build_causal_lp(DiscreteMeasure::dirac(0), DiscreteMeasure::dirac(1), abs_cost);
    CHECK(one.num_vars() == 1);
    CHECK(one.rows.size() == 1);  // the only target row is the dropped one
    const auto r = solve(one);
    CHECK(r.status == SolveStatus::optimal);
    CHECK(r.x[0] == 1.0);

    const DiscreteMeasure a({0, 1}, {0.5, 0.5});
    const DiscreteMeasure b({2, 3}, {0.5, 0.5});
    const auto plain = build_causal_lp(a, b, abs_cost);
    CHECK(plain.count(RowKind::causality) == 0);
    CHECK(plain.count(RowKind::source_marginal) == 2);
    CHECK(plain.count(RowKind::target_marginal) == 1);

    const DiscreteMeasure nu({0.5, 10}, {kThird, 2 * kThird});
    const auto three = build_causal_lp(kUniform3, nu, abs_cost);
    REQUIRE(three.count(RowKind::causality) == 1);
    const auto& row = three.rows.back();
    CHECK(row.rhs == 0.0);
    // eta_1 * gamma_{2,0} - eta_2 * gamma_{1,0}
    REQUIRE(row.entries.size() == 2);
    CHECK(row.entries[0].first == 4);
    CHECK(row.entries[1].first == 2);
    for (const auto& [var, coef] : row.entries) CHECK(std::abs(coef) == kThird);

    CHECK_THROWS(build_causal_lp(a, b, [](double x, double y) { return x - y; }));
}

TEST_CASE("solver examples") {
    const DiscreteMeasure a({0, 1}, {0.5, 0.5});
    const DiscreteMeasure b({2, 3}, {0.5, 0.5});

    auto r = solve_causal_mk(a, b, zero_cost);
    check_certificate(r);
    CHECK(r.value == 0.0);

    r = solve_causal_mk(kUniform3, kUniform3, abs_cost);
    check_certificate(r);
    CHECK(r.value == doctest::Approx(0.0));

    r = solve_causal_mk(a, b, abs_cost);
    check_certificate(r);
    CHECK(r.value == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(*r.cyclically_monotone);
}

TEST_CASE("permutation pushforward: causal value meets the classical one") {
    // the pushforward of uniform{0,1,2} by [2,0,1] is the measure itself, so
    // the identity plan is feasible and causal at zero cost
    const auto target = deterministic_plan(kUniform3, {2, 0, 1}).target();
    CHECK(target == kUniform3);
    const auto r = solve_causal_mk(kUniform3, target, abs_cost);
    check_certificate(r);
    CHECK(r.value == doctest::Approx(0.0));
    CHECK(classic_ot_1d(kUniform3, target).value == 0.0);
    CHECK_FALSE(check_plan_causal(deterministic_plan(kUniform3, {2, 0, 1})).causal);
}

TEST_CASE("causality binds when mass must move backwards") {
    // every source atom lies above y = -1, so all rows send the same share
    // there and the product plan is the only causal plan
    const DiscreteMeasure nu({-1, 3}, {kThird, 2 * kThird});
    const auto classic = classic_ot_1d(kUniform3, nu);
    CHECK(classic.value == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
    const auto r = solve_causal_mk(kUniform3, nu, abs_cost);
    check_certificate(r);
    CHECK(r.value == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r.value > classic.value + 1e-6);
    CHECK(check_plan_causal(*r.plan, 1e-8).causal);
    CHECK(*r.cyclically_monotone);
}

TEST_CASE("verify_optimality detects broken results") {
    const DiscreteMeasure nu({0.5, 10}, {kThird, 2 * kThird});
    const auto problem = build_causal_lp(kUniform3, nu, abs_cost);
    const auto r = solve(problem);
    REQUIRE(r.status == SolveStatus::optimal);
    CHECK(verify_optimality(problem, r).ok);
    CHECK(r.value == doctest::Approx(17.5 / 3.0).epsilon(1e-12));

    auto perturbed = r;
    perturbed.x[0] += 1e-3;
    const auto bad = verify_optimality(problem, perturbed);
    CHECK_FALSE(bad.ok);
    CHECK(bad.primal_residual == doctest::Approx(1e-3));

    // the other vertex: x=0 goes to 10, x=1 and x=2 split evenly
    SolveResult vertex;
    vertex.x = {0.0, kThird, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6};
    vertex.basis = {1, 2, 3, 4, 5};
    vertex.dual = duals_for_basis(problem, vertex.basis);
    const auto cert = verify_optimality(problem, vertex);
    CHECK(cert.primal_residual <= 1e-15);
    CHECK_FALSE(cert.ok);
    CHECK(cert.min_reduced_cost < -1e-8);
}

TEST_CASE("status reporting") {
    LpProblem bad = build_transport_lp(DiscreteMeasure({0, 1}, {0.5, 0.5}), DiscreteMeasure({0, 1}, {0.5, 0.5}), abs_cost);
    bad.rows.push_back({RowKind::causality, {{0, 1.0}}, 0.9});  // gamma_00 = 0.9 > eta_0
    CHECK(solve(bad).status == SolveStatus::infeasible);

    const auto eta = discretize(Gamma{2, 0.01}, 10);
    const auto nu = discretize(Exponential{0.01}, 10);
    SolverSettings tight;
    tight.max_iterations = 2;
    CHECK(solve(build_causal_lp(eta, nu, abs_cost), tight).status == SolveStatus::iteration_limit);
    CHECK(to_string(SolveStatus::iteration_limit) == "iteration_limit");
}

TEST_CASE("classic transport on the line") {
    CHECK(classic_ot_1d(kUniform3, kUniform3).value == 0.0);
    CHECK(classic_ot_1d(DiscreteMeasure::dirac(0), DiscreteMeasure::dirac(5)).value == 5.0);
    CHECK(classic_ot_1d(DiscreteMeasure({0, 1}, {0.5, 0.5}), DiscreteMeasure({1, 2}, {0.5, 0.5})).value == 1.0);

    // quantile-function oracle on random instances
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = oracle::random_measure(rng, 8, 0, 10);
        const auto b = oracle::random_measure(rng, 8, -3, 10);
        const int steps = 20000;
        double integral = 0.0;
        for (int k = 0; k < steps; ++k) {
            const double u = (k + 0.5) / steps;
            integral += std::abs(a.quantile(u) - b.quantile(u)) / steps;
        }
        const auto c = classic_ot_1d(a, b);
        CHECK(c.value == doctest::Approx(integral).epsilon(1e-3));
        CHECK(c.value == doctest::Approx(oracle::plan_cost(c.plan, abs_cost)).epsilon(1e-12));
        // and the transport LP agrees
        const auto lp = solve(build_transport_lp(a, b, abs_cost));
        CHECK(lp.value == doctest::Approx(c.value).epsilon(1e-9));
    }
}

TEST_CASE("random instances: bounds, certificate, causality") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 120; ++trial) {
        const auto eta = oracle::random_measure(rng, 12, 0, 15);
        const auto nu = oracle::random_measure(rng, 12, -4, 20);
        const auto r = solve_causal_mk(eta, nu, abs_cost);
        check_certificate(r);
        REQUIRE(r.plan);
        CHECK(r.value >= classic_ot_1d(eta, nu).value - 1e-9);
        CHECK(r.value <= cost(product_plan(eta, nu), abs_cost) + 1e-9);
        CHECK(check_plan_causal(*r.plan, 1e-8).causal);
        CHECK(*r.cyclically_monotone);
        CHECK(r.value == doctest::Approx(oracle::plan_cost(*r.plan, abs_cost)).epsilon(1e-9));
    }
}

TEST_CASE("dominated targets: causal value equals the classical one") {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 100; ++trial) {
        const auto eta = oracle::random_measure(rng, 5, 0, 10);
        const auto nu = dominating(eta, rng);
        for (double y : nu.support()) CHECK(nu.cdf_at(y) <= eta.cdf_at(y) + 1e-12);
        const auto c = classic_ot_1d(eta, nu);
        CHECK(check_plan_causal(c.plan, 1e-9).causal);
        const auto r = solve_causal_mk(eta, nu, abs_cost);
        check_certificate(r);
        CHECK(std::abs(r.value - c.value) <= 1e-6);
    }
}

TEST_CASE("determinism and cost scaling") {
    std::mt19937_64 rng(44);
    int unique = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const auto eta = oracle::random_measure(rng, 8, 0, 10);
        const auto nu = oracle::random_measure(rng, 8, -2, 14);
        const auto p = build_causal_lp(eta, nu, square_cost);
        const auto r1 = solve(p);
        const auto r2 = solve(p);
        CHECK(r1.iterations == r2.iterations);
        CHECK(r1.value == r2.value);
        CHECK(r1.x == r2.x);

        for (double alpha : {2.0, 3.5}) {
            const auto scaled = build_causal_lp(eta, nu, [alpha](double x, double y) { return alpha * square_cost(x, y); });
            const auto rs = solve(scaled);
            REQUIRE(rs.status == SolveStatus::optimal);
            CHECK(std::abs(rs.value - alpha * r1.value) <= 1e-12 * std::max(1.0, alpha * r1.value));
            if (has_unique_optimum(p, r1)) {
                ++unique;
                for (std::size_t v = 0; v < r1.x.size(); ++v) CHECK(std::abs(rs.x[v] - r1.x[v]) <= 1e-12);
            }
        }
    }
    CHECK(unique > 0);
}
