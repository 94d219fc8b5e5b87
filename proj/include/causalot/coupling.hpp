#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "causalot/measures.hpp"
#include "causalot/plans.hpp"

namespace causalot {

struct TauIndependent {
    DistributionSpec spec;
};
struct TauEqualToX {};
/// The waiting time never expires: X <= tau holds for every draw.
struct TauPlusInfinity {};
using TauMode = std::variant<TauIndependent, TauEqualToX, TauPlusInfinity>;

struct CouplingSpec {
    DistributionSpec x;
    TauMode tau;
    /// Delay law; must be supported on [0, inf).
    DistributionSpec z;
    int samples = 1;
    std::uint64_t seed = 0;
};

/// Draws of (X, tau, Z, Y) with Y = X + Z when X <= tau and Y = tau otherwise.
///
/// In the never-expiring mode tau holds +inf; it is only ever compared,
/// never used in arithmetic.
struct CouplingSample {
    std::vector<double> x;
    std::vector<double> tau;
    std::vector<double> z;
    std::vector<double> y;

    std::size_t size() const { return x.size(); }
};

inline constexpr double kTauNever = std::numeric_limits<double>::infinity();

/// X, tau and Z are drawn in that order from one seeded generator.
CouplingSample simulate(const CouplingSpec& spec);

/// Canonical coupling of a causal plan: (X, Y) drawn from the mass matrix,
/// tau = min(X, Y), Z = (Y - X) 1[X <= tau]. Y is then rebuilt from the
/// coupling equation so that it holds bit for bit. Throws
/// std::invalid_argument if the plan fails check_plan_causal at 1e-9.
CouplingSample canonical_from_plan(const TransportPlan& plan, int samples, std::uint64_t seed);

/// Pairs (X_k, Y_k).
std::vector<std::pair<double, double>> sample_pairs(const CouplingSample& sample);

/// True when Z >= 0 and the coupling equation holds exactly on every draw.
bool satisfies_coupling_equation(const CouplingSample& sample);

struct IndependenceCell {
    double t;
    /// A cell: tau in [a_lo, a_hi[, restricted to ]-inf, t[.
    double a_lo;
    double a_hi;
    /// B cell: X in [b_lo, b_hi[, restricted to [t, inf[.
    double b_lo;
    double b_hi;
    double deviation;
    double epsilon;
};

struct AxiomReport {
    bool pass = false;
    bool delay_ok = false;
    std::vector<IndependenceCell> tests;
    /// Thresholds with fewer than kMinConditionalSamples draws in {X >= t}.
    std::vector<double> skipped;
    double max_deviation = 0.0;
    /// Largest deviation / epsilon over all cells.
    double max_ratio = 0.0;
    double confidence = 0.0;
};

inline constexpr std::size_t kMinConditionalSamples = 50;

/// Empirical check of Z >= 0 and of the conditional independence of
/// {tau in A} and {X in B} given X >= t. For each t, ]-inf, t[ is cut into
/// `cells` intervals at empirical quantiles of the tau values below t, and
/// [t, inf[ likewise at quantiles of X. Each cell deviation
/// |P(A, B) - P(A) P(B)| is compared with z * sqrt(1 / (4 N_t)), where z is
/// the two-sided normal quantile Bonferroni-corrected over all cells.
/// An empty tgrid means the empirical deciles of X.
AxiomReport verify_axioms(const CouplingSample& sample, const std::vector<double>& tgrid = {},
                          int cells = 4, double confidence = 0.999);

/// Mean of c(X_k, Y_k).
double empirical_cost(const CouplingSample& sample, const CostFunction& c);

}  // namespace causalot
