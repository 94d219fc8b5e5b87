#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "causalot/causality.hpp"
#include "causalot/plans.hpp"

namespace causalot {

enum class RowKind { source_marginal, target_marginal, causality };

/// Sparse equality row: sum of coef * x[var] == rhs.
struct LpRow {
    RowKind kind;
    std::vector<std::pair<std::size_t, double>> entries;
    double rhs = 0.0;
};

/// Causal transport LP over the flattened plan gamma_ij (row-major, i over
/// source atoms, j over target atoms), with gamma >= 0.
///
/// Rows: one per source atom, one per target atom except the last (it is
/// implied by the others), and for every constraint group (j, anchor k0)
/// and member k > k0
///     eta_k0 * sum_{l<=j} gamma_kl - eta_k * sum_{l<=j} gamma_k0l = 0.
struct LpProblem {
    DiscreteMeasure source;
    DiscreteMeasure target;
    std::vector<double> cost;
    std::vector<LpRow> rows;

    std::size_t n() const { return source.size(); }
    std::size_t m() const { return target.size(); }
    std::size_t num_vars() const { return cost.size(); }
    std::size_t count(RowKind kind) const;
};

LpProblem build_causal_lp(const DiscreteMeasure& source, const DiscreteMeasure& target,
                          const CostFunction& c);

/// Same marginal rows without causality rows (the classical problem).
LpProblem build_transport_lp(const DiscreteMeasure& source, const DiscreteMeasure& target,
                             const CostFunction& c);

struct SolverSettings {
    int max_iterations = 500000;
    /// Pricing / pivot tolerance.
    double tol = 1e-9;
};

enum class SolveStatus { optimal, infeasible, iteration_limit, certificate_failed };

std::string to_string(SolveStatus s);

struct SolveResult {
    SolveStatus status = SolveStatus::infeasible;
    std::vector<double> x;
    std::optional<TransportPlan> plan;
    double value = 0.0;
    /// One multiplier per row of the problem.
    std::vector<double> dual;
    /// Basic structural variables at termination.
    std::vector<std::size_t> basis;
    int iterations = 0;
    int bland_iterations = 0;
    double primal_residual = 0.0;
    double dual_gap = 0.0;
    double min_reduced_cost = 0.0;
    std::string diagnostic;

    /// Filled by solve_causal_mk.
    std::optional<double> causality_deviation;
    std::optional<bool> cyclically_monotone;
};

/// Two-phase primal simplex on a dense tableau. Dantzig pricing; Bland's
/// rule after 5 * rows consecutive degenerate pivots, until the objective
/// moves again. The final basis is refactorized to polish the primal and
/// dual values. Deterministic for identical inputs.
SolveResult solve(const LpProblem& problem, const SolverSettings& settings = {});

struct OptimalityCertificate {
    bool ok = false;
    double primal_residual = 0.0;
    double min_primal = 0.0;
    double min_reduced_cost = 0.0;
    double dual_gap = 0.0;
    double complementary_slackness = 0.0;
    std::string diagnostic;
};

inline constexpr double kPrimalResidualTolerance = 1e-9;
inline constexpr double kReducedCostTolerance = 1e-8;
inline constexpr double kDualGapTolerance = 1e-8;

/// Checks result.x and result.dual against the problem data: equality
/// residuals, nonnegativity, reduced-cost signs, duality gap and
/// complementary slackness.
OptimalityCertificate verify_optimality(const LpProblem& problem, const SolveResult& result);

/// Duals complementary to a basis: solves B^T y = c_B, with zero multipliers
/// for rows the basis does not cover.
std::vector<double> duals_for_basis(const LpProblem& problem, const std::vector<std::size_t>& basis);

/// True when every nonbasic reduced cost is strictly positive, which makes
/// the optimal plan unique.
bool has_unique_optimum(const LpProblem& problem, const SolveResult& result, double margin = 1e-7);

struct ClassicTransport {
    double value;
    TransportPlan plan;
};

/// Comonotone (quantile) coupling and its |x - y| cost.
ClassicTransport classic_ot_1d(const DiscreteMeasure& source, const DiscreteMeasure& target);

/// Builds and solves the causal LP, then re-checks causality of the returned
/// plan at 1e-8 and cyclical monotonicity over subsets of size <= 3. The
/// status is downgraded to certificate_failed if either check fails.
SolveResult solve_causal_mk(const DiscreteMeasure& source, const DiscreteMeasure& target,
                            const CostFunction& c, const SolverSettings& settings = {});

}  // namespace causalot
