#pragma once

// Independent reference computations for the tests. Nothing here calls into
// the library's distribution code.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "causalot/measures.hpp"

namespace oracle {

/// Maclaurin series of erf, accurate for |x| <= 3.
inline double erf_series(double x) {
    double term = x;
    double sum = x;
    for (int n = 1; n < 200; ++n) {
        term *= -x * x / n;
        const double add = term / (2 * n + 1);
        sum += add;
        if (std::abs(add) < 1e-18) break;
    }
    return 2.0 / std::sqrt(M_PI) * sum;
}

/// Erlang CDF by its finite Poisson sum.
inline double erlang_cdf(int shape, double rate, double x) {
    if (x <= 0) return 0.0;
    const double lx = rate * x;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < shape; ++k) {
        term *= lx / k;
        sum += term;
    }
    return 1.0 - std::exp(-lx) * sum;
}

inline double normal_cdf(double x) { return 0.5 * (1.0 + erf_series(x / std::sqrt(2.0))); }

/// Root of a nondecreasing f(x) = p on [lo, hi] by plain bisection.
inline double bisect(const std::function<double(double)>& f, double p, double lo, double hi) {
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < p) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// Random finitely supported measure with integer-spaced atoms in [lo, lo + span].
inline causalot::DiscreteMeasure random_measure(std::mt19937_64& rng, int max_atoms, int lo, int span) {
    std::uniform_int_distribution<int> size(1, max_atoms);
    std::uniform_int_distribution<int> pos(lo, lo + span);
    std::uniform_int_distribution<int> wt(1, 9);
    const int n = size(rng);
    std::vector<double> pts;
    std::vector<double> ws;
    for (int k = 0; k < n; ++k) {
        pts.push_back(pos(rng));
        ws.push_back(wt(rng));
    }
    return causalot::DiscreteMeasure::normalized(pts, ws);
}

/// Sum of c(x_i, y_j) * gamma_ij recomputed from scratch.
template <class Plan, class C>
double plan_cost(const Plan& plan, C c) {
    double s = 0.0;
    for (std::size_t i = 0; i < plan.n(); ++i)
        for (std::size_t j = 0; j < plan.m(); ++j)
            s += c(plan.source().point(i), plan.target().point(j)) * plan.mass()(i, j);
    return s;
}

}  // namespace oracle
