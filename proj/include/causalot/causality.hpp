#pragma once

#include <optional>
#include <string>
#include <vector>

#include "causalot/plans.hpp"

namespace causalot {

/// Source atoms strictly above target atom `threshold`. For a causal plan
/// every member must put the same conditional mass on ]-inf, y_threshold].
/// `anchor` is the least member; members run from anchor to the last
/// source atom.
struct ConstraintGroup {
    std::size_t threshold;
    std::size_t anchor;
    std::size_t member_count;
};

/// One group per target atom with at least two source atoms strictly above
/// it. Both supports must be strictly increasing.
std::vector<ConstraintGroup> causality_constraints(const std::vector<double>& source_support,
                                                   const std::vector<double>& target_support);

struct CausalityViolation {
    std::size_t threshold;  ///< target index j
    std::size_t row;        ///< source index k
    double deviation;       ///< |F_k(y_j) - F_anchor(y_j)|
};

struct CausalityReport {
    bool causal = true;
    double tolerance = 0.0;
    double max_deviation = 0.0;
    std::vector<CausalityViolation> violations;
};

inline constexpr double kDefaultPlanTolerance = 1e-9;

/// Violations list the (threshold, row) pairs whose deviation exceeds tol.
CausalityReport check_plan_causal(const TransportPlan& plan, double tol = kDefaultPlanTolerance);

enum class MapBranch { above_diagonal, truncated };

struct MapCausalityReport {
    bool causal = false;
    std::optional<MapBranch> branch;
    std::optional<double> t0;
    /// Source mass contradicting the best classification found.
    double offending_mass = 0.0;
};

/// Classifies a map given by its values on the source atoms: causal iff
/// either T(x) >= x up to `tol` mass, or there is t0 with T(x) >= x for
/// x <= t0 and T(x) = t0 for x > t0, again up to `tol` mass.
MapCausalityReport check_map_causal(const DiscreteMeasure& source, const std::vector<double>& values,
                                    double tol = 0.0);

std::string to_string(MapBranch b);

struct CyclicalMonotonicityReport {
    bool ok = true;
    /// Largest cost decrease achieved by a permutation (0 if none).
    double worst_violation = 0.0;
    /// Offending support pairs as (source index, target index), empty if ok.
    std::vector<std::pair<std::size_t, std::size_t>> witness;
    std::size_t subsets_checked = 0;
};

/// Enumerates subsets of at most nmax support pairs (mass > mass_tol) whose
/// sources all lie strictly before their targets, and tests every
/// rearrangement of their targets against the identity pairing.
CyclicalMonotonicityReport cyclical_monotonicity_check(const TransportPlan& plan, const CostFunction& c,
                                                       int nmax = 3, double mass_tol = 0.0,
                                                       double cost_tol = 1e-9);

}  // namespace causalot
