#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "causalot/matrix.hpp"
#include "causalot/measures.hpp"

namespace causalot {

using CostFunction = std::function<double(double, double)>;

inline double abs_cost(double x, double y) { return x > y ? x - y : y - x; }
inline double square_cost(double x, double y) { return (x - y) * (x - y); }

/// Disintegration kernel of a plan: row i is the conditional law of the
/// target given the source atom i.
struct Kernel {
    Matrix rows;
};

/// Joint law on source x target supports with prescribed marginals.
///
/// The plan keeps both the mass matrix and its kernel. Whichever one a
/// constructor receives is authoritative; the other is derived from it, so
/// plans built from identical kernel rows have bitwise identical rows.
class TransportPlan {
public:
    static constexpr double kMarginalTolerance = 1e-9;

    /// Mass matrix entries must be nonnegative with row sums equal to the
    /// source weights and column sums equal to the target weights.
    TransportPlan(DiscreteMeasure source, DiscreteMeasure target, Matrix mass);

    static TransportPlan from_kernel(DiscreteMeasure source, DiscreteMeasure target, Kernel kernel);

    /// Builds the plan whose rows are the given conditional laws over a
    /// strictly increasing candidate support; the target marginal is
    /// induced, and support points receiving no mass are dropped.
    static TransportPlan from_kernel_rows(DiscreteMeasure source, const std::vector<double>& support,
                                          const Matrix& rows);

    const DiscreteMeasure& source() const { return source_; }
    const DiscreteMeasure& target() const { return target_; }
    const Matrix& mass() const { return mass_; }
    const Kernel& kernel() const { return kernel_; }
    std::size_t n() const { return source_.size(); }
    std::size_t m() const { return target_.size(); }

    /// Cumulative kernel row: entry j is F_i(y_j).
    std::vector<double> cumulative_row(std::size_t i) const;

private:
    TransportPlan(DiscreteMeasure source, DiscreteMeasure target, Matrix mass, Kernel kernel);

    DiscreteMeasure source_;
    DiscreteMeasure target_;
    Matrix mass_;
    Kernel kernel_;
};

TransportPlan product_plan(const DiscreteMeasure& source, const DiscreteMeasure& target);

/// Plan concentrated on the graph of a map given by its values on the
/// source atoms. The target is the pushforward measure.
TransportPlan deterministic_plan(const DiscreteMeasure& source, const std::vector<double>& values);

Kernel kernel(const TransportPlan& plan);

/// F_i(a): conditional mass of ]-inf, a] given source atom i.
double conditional_cdf(const TransportPlan& plan, std::size_t i, double a);

struct WeightedPlan {
    double weight;
    TransportPlan plan;
};

/// Convex combination of plans sharing a source measure. Target atoms are
/// matched after rounding to 12 significant digits.
TransportPlan mix_plans(const std::vector<WeightedPlan>& components);

/// Law of (X, X + W) with W >= 0 independent of X, both discretized on
/// quantile grids (n source atoms, m increment atoms).
TransportPlan independent_sum_plan(const DistributionSpec& source_spec,
                                   const DistributionSpec& increment_spec, int n, int m);

/// Sum of c(x_i, y_j) gamma_ij. Throws if c is negative somewhere on the grid.
double cost(const TransportPlan& plan, const CostFunction& c);

/// Map each sample to the closest atom of the given grids. Without a grid,
/// the distinct sample values are used.
struct NearestAtomBinning {
    std::optional<std::vector<double>> source_grid;
    std::optional<std::vector<double>> target_grid;
};
/// Equal-width cells over the sample range, atoms at cell midpoints.
struct CellBinning {
    int nx;
    int ny;
};
using Binning = std::variant<NearestAtomBinning, CellBinning>;

/// Empirical joint law of sample pairs. Empty bins are dropped.
TransportPlan plan_from_samples(const std::vector<std::pair<double, double>>& pairs,
                                const Binning& binning = NearestAtomBinning{});

/// Conditional CDF of T_b given T_a = x for first passage times of standard
/// Brownian motion, 0 < a < b: 1 - erf((b - a) / sqrt(2 (y - x))) for y > x.
double brownian_passage_ccdf(double a, double b, double x, double y);

struct CcdfPoint {
    double x;
    double y;
    double value;
};

/// Conditional CDF on a grid; x is resolved to the nearest source atom.
/// Rows are ordered x-major.
std::vector<CcdfPoint> emit_ccdf_grid(const TransportPlan& plan, const std::vector<double>& xs,
                                      const std::vector<double>& ys);

/// n equally spaced points from lo to hi inclusive.
std::vector<double> linspace(double lo, double hi, int n);

/// Mixture plan 1/2 law(X, X + Z) + 1/4 law(X) x delta_t0 + 1/4 law(X) x law(X)
/// with exponential X and Z.
struct MixtureExampleParams {
    double source_beta = 1.0 / 100.0;
    double delay_beta = 1.0 / 200.0;
    double t0 = 700.0;
    int source_atoms = 200;
    int delay_atoms = 50;
};

TransportPlan mixture_example_plan(const MixtureExampleParams& params);

}  // namespace causalot
