#include "causalot/causality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace causalot {

std::vector<ConstraintGroup> causality_constraints(const std::vector<double>& source_support,
                                                   const std::vector<double>& target_support) {
    for (std::size_t i = 1; i < source_support.size(); ++i)
        if (!(source_support[i] > source_support[i - 1]))
            throw std::invalid_argument("causality_constraints: source support not strictly increasing");
    for (std::size_t j = 1; j < target_support.size(); ++j)
        if (!(target_support[j] > target_support[j - 1]))
            throw std::invalid_argument("causality_constraints: target support not strictly increasing");

    std::vector<ConstraintGroup> groups;
    const std::size_t n = source_support.size();
    for (std::size_t j = 0; j < target_support.size(); ++j) {
        // strict: the anchor is the first source atom with x > y_j
        const auto anchor = static_cast<std::size_t>(
            std::upper_bound(source_support.begin(), source_support.end(), target_support[j]) -
            source_support.begin());
        if (n - anchor >= 2) groups.push_back({j, anchor, n - anchor});
    }
    return groups;
}

CausalityReport check_plan_causal(const TransportPlan& plan, double tol) {
    if (!(tol >= 0.0)) throw std::invalid_argument("check_plan_causal: tolerance must be >= 0");
    CausalityReport report;
    report.tolerance = tol;
    const auto groups = causality_constraints(plan.source().support(), plan.target().support());
    if (groups.empty()) return report;

    // anchors grow with the threshold, so rows before the first anchor are never read
    std::vector<std::vector<double>> cumulative(plan.n());
    for (std::size_t i = groups.front().anchor; i < plan.n(); ++i)
        cumulative[i] = plan.cumulative_row(i);

    for (const auto& g : groups) {
        const double anchor_value = cumulative[g.anchor][g.threshold];
        for (std::size_t k = g.anchor + 1; k < plan.n(); ++k) {
            const double dev = std::abs(cumulative[k][g.threshold] - anchor_value);
            report.max_deviation = std::max(report.max_deviation, dev);
            if (dev > tol) report.violations.push_back({g.threshold, k, dev});
        }
    }
    report.causal = report.max_deviation <= tol;
    return report;
}

std::string to_string(MapBranch b) {
    return b == MapBranch::above_diagonal ? "above_diagonal" : "truncated";
}

MapCausalityReport check_map_causal(const DiscreteMeasure& source, const std::vector<double>& values,
                                    double tol) {
    if (values.size() != source.size())
        throw std::invalid_argument("check_map_causal: one value per source atom required");
    if (!(tol >= 0.0)) throw std::invalid_argument("check_map_causal: tolerance must be >= 0");
    const std::size_t n = source.size();
    MapCausalityReport report;

    // A constant map satisfies the truncated form with t0 equal to its value,
    // whatever the position of the atoms; report it that way.
    if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); })) {
        report.causal = true;
        report.branch = MapBranch::truncated;
        report.t0 = values.front();
        return report;
    }

    double below_diagonal = 0.0;
    std::vector<double> candidates;
    for (std::size_t i = 0; i < n; ++i)
        if (values[i] < source.point(i)) {
            below_diagonal += source.weight(i);
            candidates.push_back(values[i]);
        }
    if (below_diagonal <= tol) {
        report.causal = true;
        report.branch = MapBranch::above_diagonal;
        report.offending_mass = below_diagonal;
        return report;
    }

    // Every atom with T(x) < x must lie after t0 and be sent to t0, so t0 is
    // one of the values taken below the diagonal.
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    double best = below_diagonal;
    std::optional<double> best_t0;
    for (double t0 : candidates) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = source.point(i);
            const bool bad = (x <= t0) ? values[i] < x : values[i] != t0;
            if (bad) off += source.weight(i);
        }
        if (off < best) {
            best = off;
            best_t0 = t0;
        }
    }
    report.offending_mass = best;
    if (best_t0 && best <= tol) {
        report.causal = true;
        report.branch = MapBranch::truncated;
        report.t0 = best_t0;
    }
    return report;
}

CyclicalMonotonicityReport cyclical_monotonicity_check(const TransportPlan& plan, const CostFunction& c,
                                                       int nmax, double mass_tol, double cost_tol) {
    if (nmax < 2 || nmax > 5) throw std::invalid_argument("cyclical_monotonicity_check: nmax must be in [2, 5]");
    const auto& xs = plan.source().support();
    const auto& ys = plan.target().support();

    struct Pair {
        std::size_t i;
        std::size_t j;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < plan.n(); ++i)
        for (std::size_t j = 0; j < plan.m(); ++j)
            if (plan.mass()(i, j) > mass_tol && xs[i] < ys[j]) pairs.push_back({i, j});

    std::vector<std::size_t> involved_rows;
    std::vector<std::size_t> involved_cols;
    for (const auto& p : pairs) {
        involved_rows.push_back(p.i);
        involved_cols.push_back(p.j);
    }
    std::sort(involved_rows.begin(), involved_rows.end());
    involved_rows.erase(std::unique(involved_rows.begin(), involved_rows.end()), involved_rows.end());
    std::sort(involved_cols.begin(), involved_cols.end());
    involved_cols.erase(std::unique(involved_cols.begin(), involved_cols.end()), involved_cols.end());

    // costs restricted to the rows and columns that carry candidate pairs
    std::vector<std::size_t> col_pos(plan.m(), 0);
    for (std::size_t k = 0; k < involved_cols.size(); ++k) col_pos[involved_cols[k]] = k;
    std::vector<std::size_t> row_pos(plan.n(), 0);
    for (std::size_t k = 0; k < involved_rows.size(); ++k) row_pos[involved_rows[k]] = k;
    Matrix costs(involved_rows.size(), involved_cols.size());
    for (std::size_t r = 0; r < involved_rows.size(); ++r)
        for (std::size_t k = 0; k < involved_cols.size(); ++k)
            costs(r, k) = c(xs[involved_rows[r]], ys[involved_cols[k]]);
    auto cost_of = [&](const Pair& src, const Pair& dst) { return costs(row_pos[src.i], col_pos[dst.j]); };

    CyclicalMonotonicityReport report;
    std::vector<std::size_t> chosen;
    std::vector<std::size_t> perm;

    auto test_subset = [&]() {
        ++report.subsets_checked;
        const std::size_t k = chosen.size();
        double identity = 0.0;
        for (std::size_t a = 0; a < k; ++a) identity += cost_of(pairs[chosen[a]], pairs[chosen[a]]);
        perm.resize(k);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        while (std::next_permutation(perm.begin(), perm.end())) {
            double permuted = 0.0;
            for (std::size_t a = 0; a < k; ++a) permuted += cost_of(pairs[chosen[a]], pairs[chosen[perm[a]]]);
            const double gain = identity - permuted;
            if (gain > cost_tol && gain > report.worst_violation) {
                report.ok = false;
                report.worst_violation = gain;
                report.witness.clear();
                for (std::size_t a : chosen) report.witness.emplace_back(pairs[a].i, pairs[a].j);
            }
        }
    };

    // Pairs are ordered by source; once a source reaches the smallest chosen
    // target no later pair can join the subset.
    auto extend = [&](auto&& self, std::size_t start, double min_y) -> void {
        for (std::size_t p = start; p < pairs.size(); ++p) {
            const double x = xs[pairs[p].i];
            if (!(x < min_y)) break;
            const double y = ys[pairs[p].j];
            chosen.push_back(p);
            if (chosen.size() >= 2) test_subset();
            if (chosen.size() < static_cast<std::size_t>(nmax)) self(self, p + 1, std::min(min_y, y));
            chosen.pop_back();
        }
    };
    extend(extend, 0, std::numeric_limits<double>::infinity());
    return report;
}

}  // namespace causalot
