#include "causalot/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/erf.hpp>

namespace causalot {

namespace {

template <class... Ts>
struct overloaded : Ts... { using Ts::operator()...; };
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

DiscreteMeasure::DiscreteMeasure(std::vector<double> support, std::vector<double> weights)
    : support_(std::move(support)), weights_(std::move(weights)) {
    if (support_.empty()) throw std::invalid_argument("measure: empty support");
    if (support_.size() != weights_.size())
        throw std::invalid_argument("measure: support and weights differ in length");
    for (std::size_t i = 0; i < support_.size(); ++i) {
        if (!std::isfinite(support_[i]))
            throw std::invalid_argument("measure: non-finite support point");
        if (i > 0 && !(support_[i] > support_[i - 1]))
            throw std::invalid_argument("measure: support not strictly increasing");
        if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i]))
            throw std::invalid_argument("measure: weights must be positive");
    }
    const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    const double err = std::abs(total - 1.0);
    if (err > kRenormalizeTolerance) {
        std::ostringstream os;
        os << "measure: weights sum to " << total << ", not 1";
        throw std::invalid_argument(os.str());
    }
    if (err > kSumTolerance)
        for (auto& w : weights_) w /= total;

    cumulative_.resize(weights_.size());
    std::partial_sum(weights_.begin(), weights_.end(), cumulative_.begin());
    cumulative_.back() = 1.0;
}

DiscreteMeasure DiscreteMeasure::from_atoms(std::span<const double> points,
                                            std::span<const double> weights) {
    if (points.size() != weights.size())
        throw std::invalid_argument("measure: points and weights differ in length");
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
    std::vector<double> support;
    std::vector<double> mass;
    for (std::size_t idx : order) {
        if (weights[idx] < 0.0) throw std::invalid_argument("measure: negative weight");
        if (weights[idx] == 0.0) continue;
        if (!support.empty() && support.back() == points[idx]) {
            mass.back() += weights[idx];
        } else {
            support.push_back(points[idx]);
            mass.push_back(weights[idx]);
        }
    }
    return DiscreteMeasure(std::move(support), std::move(mass));
}

DiscreteMeasure DiscreteMeasure::normalized(std::span<const double> points,
                                            std::span<const double> weights) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) throw std::invalid_argument("measure: total mass is zero");
    std::vector<double> scaled(weights.begin(), weights.end());
    for (auto& w : scaled) w /= total;
    return from_atoms(points, scaled);
}

DiscreteMeasure DiscreteMeasure::dirac(double point) {
    return DiscreteMeasure({point}, {1.0});
}

double DiscreteMeasure::cdf_at(double a) const {
    auto it = std::upper_bound(support_.begin(), support_.end(), a);
    if (it == support_.begin()) return 0.0;
    return cumulative_[static_cast<std::size_t>(it - support_.begin()) - 1];
}

double DiscreteMeasure::quantile(double p) const {
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: level outside (0, 1]");
    auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), p);
    if (it == cumulative_.end()) return support_.back();
    return support_[static_cast<std::size_t>(it - cumulative_.begin())];
}

double DiscreteMeasure::mean() const {
    double s = 0.0;
    for (std::size_t i = 0; i < support_.size(); ++i) s += support_[i] * weights_[i];
    return s;
}

std::size_t DiscreteMeasure::nearest_index(double x) const {
    auto it = std::lower_bound(support_.begin(), support_.end(), x);
    if (it == support_.begin()) return 0;
    if (it == support_.end()) return support_.size() - 1;
    const auto hi = static_cast<std::size_t>(it - support_.begin());
    return (x - support_[hi - 1] <= support_[hi] - x) ? hi - 1 : hi;
}

void validate(const DistributionSpec& spec) {
    std::visit(overloaded{
                   [](const Exponential& d) {
                       if (!(d.beta > 0.0)) throw std::invalid_argument("exponential: beta must be > 0");
                   },
                   [](const Gamma& d) {
                       if (d.shape < 1) throw std::invalid_argument("gamma: shape must be a positive integer");
                       if (!(d.rate > 0.0)) throw std::invalid_argument("gamma: rate must be > 0");
                   },
                   [](const Gaussian& d) {
                       if (!(d.variance > 0.0)) throw std::invalid_argument("gaussian: variance must be > 0");
                   },
                   [](const Dirac& d) {
                       if (!std::isfinite(d.point)) throw std::invalid_argument("dirac: point must be finite");
                   },
                   [](const Uniform& d) {
                       if (!(d.lo < d.hi)) throw std::invalid_argument("uniform: need lo < hi");
                   },
                   [](const LevyFirstPassage& d) {
                       if (!(d.level > 0.0)) throw std::invalid_argument("first passage: level must be > 0");
                   },
               },
               spec);
}

double spec_cdf(const DistributionSpec& spec, double x) {
    return std::visit(
        overloaded{
            [x](const Exponential& d) { return x <= 0.0 ? 0.0 : -std::expm1(-d.beta * x); },
            [x](const Gamma& d) {
                if (x <= 0.0) return 0.0;
                return boost::math::cdf(boost::math::gamma_distribution<>(d.shape, 1.0 / d.rate), x);
            },
            [x](const Gaussian& d) {
                return boost::math::cdf(boost::math::normal_distribution<>(d.mean, std::sqrt(d.variance)), x);
            },
            [x](const Dirac& d) { return x >= d.point ? 1.0 : 0.0; },
            [x](const Uniform& d) { return std::clamp((x - d.lo) / (d.hi - d.lo), 0.0, 1.0); },
            [x](const LevyFirstPassage& d) {
                return x <= 0.0 ? 0.0 : std::erfc(d.level / std::sqrt(2.0 * x));
            },
        },
        spec);
}

double spec_quantile(const DistributionSpec& spec, double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("quantile: level outside (0, 1)");
    return std::visit(
        overloaded{
            [p](const Exponential& d) { return -std::log1p(-p) / d.beta; },
            [p](const Gamma& d) {
                return boost::math::quantile(boost::math::gamma_distribution<>(d.shape, 1.0 / d.rate), p);
            },
            [p](const Gaussian& d) {
                return boost::math::quantile(
                    boost::math::normal_distribution<>(d.mean, std::sqrt(d.variance)), p);
            },
            [](const Dirac& d) { return d.point; },
            [p](const Uniform& d) { return d.lo + p * (d.hi - d.lo); },
            [p](const LevyFirstPassage& d) {
                // erfc(c / sqrt(2t)) = p  <=>  t = c^2 / (2 erfc^-1(p)^2)
                const double r = boost::math::erfc_inv(p);
                return d.level * d.level / (2.0 * r * r);
            },
        },
        spec);
}

double spec_mean(const DistributionSpec& spec) {
    return std::visit(overloaded{
                          [](const Exponential& d) { return 1.0 / d.beta; },
                          [](const Gamma& d) { return d.shape / d.rate; },
                          [](const Gaussian& d) { return d.mean; },
                          [](const Dirac& d) { return d.point; },
                          [](const Uniform& d) { return 0.5 * (d.lo + d.hi); },
                          [](const LevyFirstPassage&) { return kInf; },
                      },
                      spec);
}

double spec_support_min(const DistributionSpec& spec) {
    return std::visit(overloaded{
                          [](const Exponential&) { return 0.0; },
                          [](const Gamma&) { return 0.0; },
                          [](const Gaussian&) { return -kInf; },
                          [](const Dirac& d) { return d.point; },
                          [](const Uniform& d) { return d.lo; },
                          [](const LevyFirstPassage&) { return 0.0; },
                      },
                      spec);
}

std::string spec_name(const DistributionSpec& spec) {
    std::ostringstream os;
    os.precision(17);
    std::visit(overloaded{
                   [&](const Exponential& d) { os << "exponential(beta=" << d.beta << ")"; },
                   [&](const Gamma& d) { os << "gamma(shape=" << d.shape << ", rate=" << d.rate << ")"; },
                   [&](const Gaussian& d) { os << "gaussian(mean=" << d.mean << ", variance=" << d.variance << ")"; },
                   [&](const Dirac& d) { os << "dirac(" << d.point << ")"; },
                   [&](const Uniform& d) { os << "uniform(" << d.lo << ", " << d.hi << ")"; },
                   [&](const LevyFirstPassage& d) { os << "first_passage(level=" << d.level << ")"; },
               },
               spec);
    return os.str();
}

DiscreteMeasure discretize(const DistributionSpec& spec, int n, const DiscretizationScheme& scheme) {
    validate(spec);
    if (n < 1) throw std::invalid_argument("discretize: n must be >= 1");
    if (const auto* d = std::get_if<Dirac>(&spec)) return DiscreteMeasure::dirac(d->point);

    std::vector<double> points;
    std::vector<double> weights;
    if (std::holds_alternative<QuantileGrid>(scheme)) {
        points.reserve(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) points.push_back(spec_quantile(spec, (k + 0.5) / n));
        weights.assign(points.size(), 1.0 / n);
        return DiscreteMeasure::normalized(points, weights);
    }

    const auto& grid = std::get<UniformGrid>(scheme);
    if (!(grid.lo < grid.hi)) throw std::invalid_argument("discretize: uniform grid needs lo < hi");
    const double h = (grid.hi - grid.lo) / n;
    double left_cdf = spec_cdf(spec, grid.lo);
    for (int k = 0; k < n; ++k) {
        const double right = (k + 1 == n) ? grid.hi : grid.lo + (k + 1) * h;
        const double right_cdf = spec_cdf(spec, right);
        const double mass = right_cdf - left_cdf;
        if (mass > 0.0) {
            points.push_back(grid.lo + (k + 0.5) * h);
            weights.push_back(mass);
        }
        left_cdf = right_cdf;
    }
    if (points.empty()) throw std::invalid_argument("discretize: no mass inside the uniform grid");
    return DiscreteMeasure::normalized(points, weights);
}

double uniform_open(std::mt19937_64& rng) {
    // 53 random bits, centered in their cell so neither 0 nor 1 can occur.
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double sample_one(const DistributionSpec& spec, std::mt19937_64& rng) {
    if (const auto* d = std::get_if<Dirac>(&spec)) return d->point;
    return spec_quantile(spec, uniform_open(rng));
}

std::vector<double> sample(const DistributionSpec& spec, int count, std::uint64_t seed) {
    validate(spec);
    if (count < 1) throw std::invalid_argument("sample: count must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<double> out(static_cast<std::size_t>(count));
    for (auto& v : out) v = sample_one(spec, rng);
    return out;
}

}  // namespace causalot
