#include "causalot/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

namespace causalot {

namespace {

constexpr std::size_t kArtificial = std::numeric_limits<std::size_t>::max();

std::vector<double> cost_vector(const DiscreteMeasure& source, const DiscreteMeasure& target,
                                const CostFunction& c) {
    std::vector<double> out;
    out.reserve(source.size() * target.size());
    for (double x : source.support())
        for (double y : target.support()) {
            const double v = c(x, y);
            if (!(v >= 0.0) || !std::isfinite(v))
                throw std::invalid_argument("build_causal_lp: cost must be finite and nonnegative on the grid");
            out.push_back(v);
        }
    return out;
}

void add_marginal_rows(LpProblem& p) {
    const std::size_t n = p.n();
    const std::size_t m = p.m();
    for (std::size_t i = 0; i < n; ++i) {
        LpRow row{RowKind::source_marginal, {}, p.source.weight(i)};
        for (std::size_t j = 0; j < m; ++j) row.entries.emplace_back(i * m + j, 1.0);
        p.rows.push_back(std::move(row));
    }
    for (std::size_t j = 0; j + 1 < m; ++j) {
        LpRow row{RowKind::target_marginal, {}, p.target.weight(j)};
        for (std::size_t i = 0; i < n; ++i) row.entries.emplace_back(i * m + j, 1.0);
        p.rows.push_back(std::move(row));
    }
}

// Dense simplex tableau over the structural columns only. Artificial
// variables are implicit: a row whose basic variable is artificial has its
// unit column nowhere in the table, and an artificial never re-enters.
class Tableau {
public:
    Tableau(const LpProblem& p, const SolverSettings& s)
        : rows_(p.rows.size()), vars_(p.num_vars()), width_(vars_ + 1), settings_(s),
          t_(rows_ * width_, 0.0), phase1_(width_, 0.0), phase2_(width_, 0.0),
          basis_(rows_, kArtificial), redundant_(rows_, false) {
        for (std::size_t r = 0; r < rows_; ++r) {
            const double sign = p.rows[r].rhs < 0.0 ? -1.0 : 1.0;
            double* row = &t_[r * width_];
            for (const auto& [col, coef] : p.rows[r].entries) row[col] += sign * coef;
            row[vars_] = sign * p.rows[r].rhs;
            for (std::size_t j = 0; j < width_; ++j) phase1_[j] -= row[j];
        }
        std::copy(p.cost.begin(), p.cost.end(), phase2_.begin());
    }

    // Returns false when the iteration budget ran out.
    bool run(std::vector<double>& objective) {
        std::size_t stall = 0;
        bool bland = false;
        while (true) {
            const std::size_t q = bland ? enter_bland(objective) : enter_dantzig(objective);
            if (q == kNone) return true;
            const std::size_t p = leave(q, bland);
            if (p == kNone) throw std::logic_error("simplex: unbounded direction on a bounded problem");
            if (iterations_ >= settings_.max_iterations) return false;
            const bool degenerate = t_[p * width_ + vars_] <= settings_.tol * std::abs(t_[p * width_ + q]);
            pivot(p, q);
            ++iterations_;
            if (bland) ++bland_iterations_;
            if (degenerate) {
                if (++stall > 5 * rows_) bland = true;
            } else {
                stall = 0;
                bland = false;
            }
        }
    }

    bool phase1() { return run(phase1_); }
    bool phase2() { return run(phase2_); }

    double infeasibility() const { return -phase1_[vars_]; }

    // Pivot remaining zero-level artificials out of the basis; rows where no
    // structural entry is usable are linearly dependent and get flagged.
    void expel_artificials() {
        for (std::size_t r = 0; r < rows_; ++r) {
            if (basis_[r] != kArtificial) continue;
            const double* row = &t_[r * width_];
            std::size_t best = kNone;
            double best_abs = 1e-9;
            for (std::size_t j = 0; j < vars_; ++j)
                if (std::abs(row[j]) > best_abs && !is_basic(j)) {
                    best_abs = std::abs(row[j]);
                    best = j;
                }
            if (best == kNone) {
                redundant_[r] = true;
            } else {
                pivot(r, best);
                ++iterations_;
            }
        }
    }

    const std::vector<std::size_t>& basis() const { return basis_; }
    const std::vector<bool>& redundant() const { return redundant_; }
    int iterations() const { return iterations_; }
    int bland_iterations() const { return bland_iterations_; }

private:
    static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

    bool is_basic(std::size_t j) const { return in_basis_.size() > j && in_basis_[j]; }

    std::size_t enter_dantzig(const std::vector<double>& d) const {
        std::size_t best = kNone;
        double best_value = -settings_.tol;
        for (std::size_t j = 0; j < vars_; ++j)
            if (d[j] < best_value) {
                best_value = d[j];
                best = j;
            }
        return best;
    }

    std::size_t enter_bland(const std::vector<double>& d) const {
        for (std::size_t j = 0; j < vars_; ++j)
            if (d[j] < -settings_.tol) return j;
        return kNone;
    }

    std::size_t leave(std::size_t q, bool bland) const {
        std::size_t best = kNone;
        double best_ratio = std::numeric_limits<double>::infinity();
        double best_pivot = 0.0;
        for (std::size_t r = 0; r < rows_; ++r) {
            if (redundant_[r]) continue;
            const double a = t_[r * width_ + q];
            if (a <= settings_.tol) continue;
            const double ratio = std::max(0.0, t_[r * width_ + vars_]) / a;
            const double slack = 1e-12 * std::max(1.0, best_ratio);
            if (best == kNone || ratio < best_ratio - slack) {
                best = r;
                best_ratio = ratio;
                best_pivot = a;
            } else if (ratio <= best_ratio + slack) {
                // ties: Bland needs the smallest basic index (artificials first);
                // otherwise prefer the larger pivot element
                const bool take = bland ? basis_order(r) < basis_order(best) : a > best_pivot;
                if (take) {
                    best = r;
                    best_ratio = std::min(best_ratio, ratio);
                    best_pivot = a;
                }
            }
        }
        return best;
    }

    // Artificials rank below every structural column in Bland's ordering.
    std::size_t basis_order(std::size_t r) const {
        return basis_[r] == kArtificial ? r : rows_ + basis_[r];
    }

    void pivot(std::size_t p, std::size_t q) {
        double* prow = &t_[p * width_];
        const double inv = 1.0 / prow[q];
        nz_.clear();
        for (std::size_t j = 0; j < width_; ++j) {
            if (prow[j] != 0.0) {
                prow[j] *= inv;
                nz_.push_back(j);
            }
        }
        prow[q] = 1.0;

        auto eliminate = [&](double* row) {
            const double f = row[q];
            if (f == 0.0) return;
            for (std::size_t j : nz_) row[j] -= f * prow[j];
            row[q] = 0.0;
        };
        for (std::size_t r = 0; r < rows_; ++r)
            if (r != p) eliminate(&t_[r * width_]);
        eliminate(phase1_.data());
        eliminate(phase2_.data());

        if (in_basis_.empty()) in_basis_.assign(vars_, false);
        if (basis_[p] != kArtificial) in_basis_[basis_[p]] = false;
        basis_[p] = q;
        in_basis_[q] = true;
    }

    std::size_t rows_;
    std::size_t vars_;
    std::size_t width_;
    SolverSettings settings_;
    std::vector<double> t_;
    std::vector<double> phase1_;
    std::vector<double> phase2_;
    std::vector<std::size_t> basis_;
    std::vector<bool> redundant_;
    std::vector<bool> in_basis_;
    std::vector<std::size_t> nz_;
    int iterations_ = 0;
    int bland_iterations_ = 0;
};

// Columns of the listed basic variables restricted to the listed rows.
Eigen::MatrixXd basis_matrix(const LpProblem& p, const std::vector<std::size_t>& rows,
                             const std::vector<std::size_t>& basis) {
    std::vector<std::size_t> position(p.num_vars(), std::numeric_limits<std::size_t>::max());
    for (std::size_t k = 0; k < basis.size(); ++k) position[basis[k]] = k;
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()),
                                              static_cast<Eigen::Index>(basis.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (const auto& [col, coef] : p.rows[rows[r]].entries)
            if (position[col] != std::numeric_limits<std::size_t>::max())
                b(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(position[col])) += coef;
    return b;
}

std::vector<double> reduced_costs(const LpProblem& p, const std::vector<double>& dual) {
    std::vector<double> d = p.cost;
    for (std::size_t r = 0; r < p.rows.size(); ++r)
        for (const auto& [col, coef] : p.rows[r].entries) d[col] -= coef * dual[r];
    return d;
}

}  // namespace

std::size_t LpProblem::count(RowKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [kind](const LpRow& r) { return r.kind == kind; }));
}

LpProblem build_transport_lp(const DiscreteMeasure& source, const DiscreteMeasure& target,
                             const CostFunction& c) {
    LpProblem p{source, target, cost_vector(source, target, c), {}};
    add_marginal_rows(p);
    return p;
}

LpProblem build_causal_lp(const DiscreteMeasure& source, const DiscreteMeasure& target,
                          const CostFunction& c) {
    LpProblem p = build_transport_lp(source, target, c);
    const std::size_t m = p.m();
    for (const auto& g : causality_constraints(source.support(), target.support())) {
        const double anchor_weight = source.weight(g.anchor);
        for (std::size_t k = g.anchor + 1; k < source.size(); ++k) {
            LpRow row{RowKind::causality, {}, 0.0};
            for (std::size_t l = 0; l <= g.threshold; ++l) {
                row.entries.emplace_back(k * m + l, anchor_weight);
                row.entries.emplace_back(g.anchor * m + l, -source.weight(k));
            }
            p.rows.push_back(std::move(row));
        }
    }
    return p;
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::iteration_limit: return "iteration_limit";
        case SolveStatus::certificate_failed: return "certificate_failed";
    }
    return "unknown";
}

std::vector<double> duals_for_basis(const LpProblem& problem, const std::vector<std::size_t>& basis) {
    // The basis covers the leading rows when given in row order; dependent
    // rows are detected as those the basis cannot span.
    std::vector<std::size_t> rows(problem.rows.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const Eigen::MatrixXd full = basis_matrix(problem, rows, basis);
    // pick an independent subset of rows of size |basis| by QR on B^T
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(full.transpose());
    std::vector<std::size_t> kept;
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(basis.size()); ++k)
        kept.push_back(static_cast<std::size_t>(qr.colsPermutation().indices()(k)));
    std::sort(kept.begin(), kept.end());

    const Eigen::MatrixXd b = basis_matrix(problem, kept, basis);
    Eigen::VectorXd cb(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t k = 0; k < basis.size(); ++k) cb(static_cast<Eigen::Index>(k)) = problem.cost[basis[k]];
    const Eigen::VectorXd y = b.transpose().partialPivLu().solve(cb);
    std::vector<double> dual(problem.rows.size(), 0.0);
    for (std::size_t k = 0; k < kept.size(); ++k) dual[kept[k]] = y(static_cast<Eigen::Index>(k));
    return dual;
}

SolveResult solve(const LpProblem& problem, const SolverSettings& settings) {
    SolveResult result;
    Tableau tab(problem, settings);

    auto finish_counts = [&] {
        result.iterations = tab.iterations();
        result.bland_iterations = tab.bland_iterations();
    };

    if (!tab.phase1()) {
        result.status = SolveStatus::iteration_limit;
        finish_counts();
        return result;
    }
    double scale = 1.0;
    for (const auto& r : problem.rows) scale = std::max(scale, std::abs(r.rhs));
    if (tab.infeasibility() > 1e-9 * scale) {
        result.status = SolveStatus::infeasible;
        std::ostringstream os;
        os << "phase 1 ended with infeasibility " << tab.infeasibility();
        result.diagnostic = os.str();
        finish_counts();
        return result;
    }
    tab.expel_artificials();
    if (!tab.phase2()) {
        result.status = SolveStatus::iteration_limit;
        finish_counts();
        return result;
    }
    finish_counts();

    // Refactorize the final basis on the independent rows.
    std::vector<std::size_t> rows;
    std::vector<std::size_t> basis;
    for (std::size_t r = 0; r < problem.rows.size(); ++r) {
        if (tab.redundant()[r]) continue;
        rows.push_back(r);
        basis.push_back(tab.basis()[r]);
    }
    const Eigen::MatrixXd b = basis_matrix(problem, rows, basis);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(b);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(rows.size()));
    Eigen::VectorXd cb(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        rhs(static_cast<Eigen::Index>(k)) = problem.rows[rows[k]].rhs;
        cb(static_cast<Eigen::Index>(k)) = problem.cost[basis[k]];
    }
    const Eigen::VectorXd xb = lu.solve(rhs);
    const Eigen::VectorXd y = lu.transpose().solve(cb);

    result.x.assign(problem.num_vars(), 0.0);
    for (std::size_t k = 0; k < basis.size(); ++k) {
        const double v = xb(static_cast<Eigen::Index>(k));
        // roundoff on degenerate basics
        result.x[basis[k]] = (v < 0.0 && v > -1e-12) ? 0.0 : v;
    }
    result.dual.assign(problem.rows.size(), 0.0);
    for (std::size_t k = 0; k < rows.size(); ++k) result.dual[rows[k]] = y(static_cast<Eigen::Index>(k));
    result.basis = basis;
    std::sort(result.basis.begin(), result.basis.end());

    result.value = 0.0;
    for (std::size_t v = 0; v < problem.num_vars(); ++v) result.value += problem.cost[v] * result.x[v];

    const auto cert = verify_optimality(problem, result);
    result.primal_residual = cert.primal_residual;
    result.dual_gap = cert.dual_gap;
    result.min_reduced_cost = cert.min_reduced_cost;
    result.status = cert.ok ? SolveStatus::optimal : SolveStatus::certificate_failed;
    result.diagnostic = cert.diagnostic;

    const std::size_t n = problem.n();
    const std::size_t m = problem.m();
    Matrix mass(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) mass(i, j) = std::max(0.0, result.x[i * m + j]);
    try {
        result.plan.emplace(problem.source, problem.target, std::move(mass));
    } catch (const std::invalid_argument& e) {
        result.status = SolveStatus::certificate_failed;
        result.diagnostic += std::string(result.diagnostic.empty() ? "" : "; ") + e.what();
    }
    return result;
}

OptimalityCertificate verify_optimality(const LpProblem& problem, const SolveResult& result) {
    OptimalityCertificate cert;
    if (result.x.size() != problem.num_vars() || result.dual.size() != problem.rows.size()) {
        cert.diagnostic = "solution vectors do not match the problem dimensions";
        return cert;
    }
    for (const auto& row : problem.rows) {
        double lhs = 0.0;
        for (const auto& [col, coef] : row.entries) lhs += coef * result.x[col];
        cert.primal_residual = std::max(cert.primal_residual, std::abs(lhs - row.rhs));
    }
    // the dropped target row is implied; check it explicitly anyway
    const std::size_t n = problem.n();
    const std::size_t m = problem.m();
    if (m > 0) {
        double last = 0.0;
        for (std::size_t i = 0; i < n; ++i) last += result.x[i * m + (m - 1)];
        cert.primal_residual = std::max(cert.primal_residual, std::abs(last - problem.target.weight(m - 1)));
    }
    cert.min_primal = *std::min_element(result.x.begin(), result.x.end());

    const auto d = reduced_costs(problem, result.dual);
    cert.min_reduced_cost = *std::min_element(d.begin(), d.end());

    double primal = 0.0;
    double dual = 0.0;
    for (std::size_t v = 0; v < problem.num_vars(); ++v) {
        primal += problem.cost[v] * result.x[v];
        cert.complementary_slackness += std::abs(result.x[v] * d[v]);
    }
    for (std::size_t r = 0; r < problem.rows.size(); ++r) dual += problem.rows[r].rhs * result.dual[r];
    cert.dual_gap = std::abs(primal - dual);

    const double gap_bound = kDualGapTolerance * std::max(1.0, std::abs(primal));
    std::ostringstream os;
    if (cert.primal_residual > kPrimalResidualTolerance) os << "primal residual " << cert.primal_residual << "; ";
    if (cert.min_primal < -kPrimalResidualTolerance) os << "negative entry " << cert.min_primal << "; ";
    if (cert.min_reduced_cost < -kReducedCostTolerance) os << "negative reduced cost " << cert.min_reduced_cost << "; ";
    if (cert.dual_gap > gap_bound) os << "duality gap " << cert.dual_gap << "; ";
    if (cert.complementary_slackness > gap_bound)
        os << "complementary slackness " << cert.complementary_slackness << "; ";
    cert.diagnostic = os.str();
    if (!cert.diagnostic.empty()) cert.diagnostic.resize(cert.diagnostic.size() - 2);
    cert.ok = cert.diagnostic.empty();
    return cert;
}

bool has_unique_optimum(const LpProblem& problem, const SolveResult& result, double margin) {
    if (result.dual.size() != problem.rows.size()) return false;
    const auto d = reduced_costs(problem, result.dual);
    std::vector<bool> basic(problem.num_vars(), false);
    for (std::size_t b : result.basis) basic[b] = true;
    for (std::size_t v = 0; v < problem.num_vars(); ++v)
        if (!basic[v] && d[v] <= margin) return false;
    return true;
}

ClassicTransport classic_ot_1d(const DiscreteMeasure& source, const DiscreteMeasure& target) {
    const std::size_t n = source.size();
    const std::size_t m = target.size();
    Matrix mass(n, m);
    double value = 0.0;
    std::size_t i = 0;
    std::size_t j = 0;
    double left_i = source.weight(0);
    double left_j = target.weight(0);
    while (i < n && j < m) {
        const double moved = std::min(left_i, left_j);
        mass(i, j) += moved;
        value += moved * std::abs(source.point(i) - target.point(j));
        left_i -= moved;
        left_j -= moved;
        // one side is exactly exhausted
        if (left_i <= 0.0 && ++i < n) left_i = source.weight(i);
        if (left_j <= 0.0 && ++j < m) left_j = target.weight(j);
    }
    return {value, TransportPlan(source, target, std::move(mass))};
}

SolveResult solve_causal_mk(const DiscreteMeasure& source, const DiscreteMeasure& target,
                            const CostFunction& c, const SolverSettings& settings) {
    const LpProblem problem = build_causal_lp(source, target, c);
    SolveResult result = solve(problem, settings);
    if (!result.plan) return result;

    const auto causal = check_plan_causal(*result.plan, 1e-8);
    result.causality_deviation = causal.max_deviation;
    const auto monotone = cyclical_monotonicity_check(*result.plan, c, 3, 1e-12, 1e-9);
    result.cyclically_monotone = monotone.ok;
    if (result.status == SolveStatus::optimal && (!causal.causal || !monotone.ok)) {
        result.status = SolveStatus::certificate_failed;
        std::ostringstream os;
        if (!causal.causal) os << "causality deviation " << causal.max_deviation << " ";
        if (!monotone.ok) os << "cyclical monotonicity violated by " << monotone.worst_violation;
        result.diagnostic = os.str();
    }
    return result;
}

}  // namespace causalot
