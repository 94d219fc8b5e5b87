#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace causalot {

/// Finitely supported probability measure on the real line.
///
/// The support is strictly increasing and every weight is positive. Weight
/// sums within 1e-12 of one are kept as given; sums within 1e-9 are
/// renormalized; anything further off is rejected.
class DiscreteMeasure {
public:
    static constexpr double kSumTolerance = 1e-12;
    static constexpr double kRenormalizeTolerance = 1e-9;

    DiscreteMeasure(std::vector<double> support, std::vector<double> weights);

    /// Builds a measure from unsorted atoms that may repeat; duplicates are
    /// merged by adding their weights. Zero weights are dropped.
    static DiscreteMeasure from_atoms(std::span<const double> points,
                                      std::span<const double> weights);

    /// Like from_atoms, but the weights only need to be nonnegative with a
    /// positive total; they are rescaled to sum to one.
    static DiscreteMeasure normalized(std::span<const double> points,
                                      std::span<const double> weights);

    static DiscreteMeasure dirac(double point);

    std::size_t size() const { return support_.size(); }
    const std::vector<double>& support() const { return support_; }
    const std::vector<double>& weights() const { return weights_; }
    double point(std::size_t i) const { return support_[i]; }
    double weight(std::size_t i) const { return weights_[i]; }

    /// Mass of ]-inf, a].
    double cdf_at(double a) const;
    /// Leftmost support point x with cdf_at(x) >= p, for p in (0, 1].
    double quantile(double p) const;
    double mean() const;

    /// Index of the support point closest to x (ties go to the lower index).
    std::size_t nearest_index(double x) const;

    bool operator==(const DiscreteMeasure&) const = default;

private:
    std::vector<double> support_;
    std::vector<double> weights_;
    std::vector<double> cumulative_;
};

struct Exponential { double beta; };
/// Erlang law: integer shape, rate parametrization.
struct Gamma { int shape; double rate; };
struct Gaussian { double mean; double variance; };
struct Dirac { double point; };
struct Uniform { double lo; double hi; };
/// Law of the first passage time of standard Brownian motion at level > 0.
struct LevyFirstPassage { double level; };

using DistributionSpec =
    std::variant<Exponential, Gamma, Gaussian, Dirac, Uniform, LevyFirstPassage>;

/// Throws std::invalid_argument when parameters are out of range.
void validate(const DistributionSpec& spec);

double spec_cdf(const DistributionSpec& spec, double x);
/// Leftmost quantile for p in (0, 1).
double spec_quantile(const DistributionSpec& spec, double p);
/// Analytic mean; +inf for the first-passage law.
double spec_mean(const DistributionSpec& spec);
/// Lower end of the support (-inf when unbounded).
double spec_support_min(const DistributionSpec& spec);
std::string spec_name(const DistributionSpec& spec);

struct QuantileGrid {};
struct UniformGrid { double lo; double hi; };
using DiscretizationScheme = std::variant<QuantileGrid, UniformGrid>;

/// Quantile grid: atoms at the quantiles of levels (k - 1/2)/n, weight 1/n.
/// Uniform grid: mass of each of n equal cells over [lo, hi] placed at the
/// cell midpoint, empty cells dropped, renormalized.
/// A Dirac spec always yields its single atom.
DiscreteMeasure discretize(const DistributionSpec& spec, int n,
                           const DiscretizationScheme& scheme = QuantileGrid{});

/// Portable uniform draw in the open interval (0, 1).
double uniform_open(std::mt19937_64& rng);

double sample_one(const DistributionSpec& spec, std::mt19937_64& rng);

/// Inverse-CDF sampling from a seeded generator; same seed, same output.
std::vector<double> sample(const DistributionSpec& spec, int count, std::uint64_t seed);

}  // namespace causalot
