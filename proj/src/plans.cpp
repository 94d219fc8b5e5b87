#include "causalot/plans.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace causalot {

namespace {

// Rounds to 12 significant decimal digits; used only as a matching key.
double snap_key(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.11e", v);
    return std::strtod(buf, nullptr);
}

// Union of target supports where points that agree to 12 significant digits
// are one atom; the smallest original value represents each atom.
class SnappedSupport {
public:
    void add(double v) { values_.push_back(v); }

    void finalize() {
        std::sort(values_.begin(), values_.end());
        std::vector<double> reps;
        for (double v : values_) {
            const double k = snap_key(v);
            if (keys_.empty() || keys_.back() != k) {
                keys_.push_back(k);
                reps.push_back(v);
            }
        }
        values_ = std::move(reps);
    }

    const std::vector<double>& points() const { return values_; }

    std::size_t index_of(double v) const {
        const double k = snap_key(v);
        auto it = std::lower_bound(keys_.begin(), keys_.end(), k);
        if (it == keys_.end() || *it != k) throw std::logic_error("snapped support: unknown point");
        return static_cast<std::size_t>(it - keys_.begin());
    }

private:
    std::vector<double> values_;
    std::vector<double> keys_;
};

void check_strictly_increasing(const std::vector<double>& v, const char* what) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1]))
            throw std::invalid_argument(std::string(what) + ": support not strictly increasing");
}

bool same_source(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (snap_key(a.point(i)) != snap_key(b.point(i))) return false;
        if (std::abs(a.weight(i) - b.weight(i)) > 1e-12) return false;
    }
    return true;
}

std::vector<double> distinct_sorted(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace

TransportPlan::TransportPlan(DiscreteMeasure source, DiscreteMeasure target, Matrix mass,
                             Kernel kernel)
    : source_(std::move(source)),
      target_(std::move(target)),
      mass_(std::move(mass)),
      kernel_(std::move(kernel)) {}

TransportPlan::TransportPlan(DiscreteMeasure source, DiscreteMeasure target, Matrix mass)
    : source_(std::move(source)), target_(std::move(target)), mass_(std::move(mass)) {
    const std::size_t n = source_.size();
    const std::size_t m = target_.size();
    if (mass_.rows() != n || mass_.cols() != m)
        throw std::invalid_argument("plan: mass matrix shape does not match the marginals");
    std::vector<double> col(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double v = mass_(i, j);
            if (!(v >= 0.0) || !std::isfinite(v))
                throw std::invalid_argument("plan: mass entries must be finite and nonnegative");
            row += v;
            col[j] += v;
        }
        if (std::abs(row - source_.weight(i)) > kMarginalTolerance) {
            std::ostringstream os;
            os << "plan: row " << i << " sums to " << row << ", source weight is " << source_.weight(i);
            throw std::invalid_argument(os.str());
        }
    }
    for (std::size_t j = 0; j < m; ++j)
        if (std::abs(col[j] - target_.weight(j)) > kMarginalTolerance) {
            std::ostringstream os;
            os << "plan: column " << j << " sums to " << col[j] << ", target weight is "
               << target_.weight(j);
            throw std::invalid_argument(os.str());
        }

    kernel_.rows = Matrix(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = source_.weight(i);
        for (std::size_t j = 0; j < m; ++j) kernel_.rows(i, j) = mass_(i, j) / w;
    }
}

TransportPlan TransportPlan::from_kernel(DiscreteMeasure source, DiscreteMeasure target,
                                         Kernel kernel) {
    const std::size_t n = source.size();
    const std::size_t m = target.size();
    if (kernel.rows.rows() != n || kernel.rows.cols() != m)
        throw std::invalid_argument("plan: kernel shape does not match the marginals");
    Matrix mass(n, m);
    std::vector<double> col(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double q = kernel.rows(i, j);
            if (!(q >= 0.0) || !std::isfinite(q))
                throw std::invalid_argument("plan: kernel entries must be finite and nonnegative");
            total += q;
            mass(i, j) = source.weight(i) * q;
            col[j] += mass(i, j);
        }
        if (std::abs(total - 1.0) > kMarginalTolerance)
            throw std::invalid_argument("plan: kernel row does not sum to one");
    }
    for (std::size_t j = 0; j < m; ++j)
        if (std::abs(col[j] - target.weight(j)) > kMarginalTolerance)
            throw std::invalid_argument("plan: kernel does not reproduce the target marginal");
    return TransportPlan(std::move(source), std::move(target), std::move(mass), std::move(kernel));
}

TransportPlan TransportPlan::from_kernel_rows(DiscreteMeasure source,
                                              const std::vector<double>& support,
                                              const Matrix& rows) {
    check_strictly_increasing(support, "plan");
    const std::size_t n = source.size();
    if (rows.rows() != n || rows.cols() != support.size())
        throw std::invalid_argument("plan: kernel rows do not match source and support");
    std::vector<double> induced(support.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < support.size(); ++j) induced[j] += source.weight(i) * rows(i, j);

    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < support.size(); ++j)
        if (induced[j] > 0.0) keep.push_back(j);
    std::vector<double> points;
    std::vector<double> weights;
    for (std::size_t j : keep) {
        points.push_back(support[j]);
        weights.push_back(induced[j]);
    }
    Kernel k{Matrix(n, keep.size())};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < keep.size(); ++c) k.rows(i, c) = rows(i, keep[c]);
    return from_kernel(std::move(source), DiscreteMeasure(std::move(points), std::move(weights)),
                       std::move(k));
}

std::vector<double> TransportPlan::cumulative_row(std::size_t i) const {
    auto row = kernel_.rows.row(i);
    std::vector<double> out(row.size());
    double acc = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
        acc += row[j];
        out[j] = acc;
    }
    return out;
}

TransportPlan product_plan(const DiscreteMeasure& source, const DiscreteMeasure& target) {
    Kernel k{Matrix(source.size(), target.size())};
    for (std::size_t i = 0; i < source.size(); ++i)
        std::copy(target.weights().begin(), target.weights().end(), k.rows.row(i).begin());
    return TransportPlan::from_kernel(source, target, std::move(k));
}

TransportPlan deterministic_plan(const DiscreteMeasure& source, const std::vector<double>& values) {
    if (values.size() != source.size())
        throw std::invalid_argument("deterministic plan: one value per source atom required");
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("deterministic plan: non-finite value");
    const auto support = distinct_sorted(values);
    Matrix rows(source.size(), support.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto it = std::lower_bound(support.begin(), support.end(), values[i]);
        rows(i, static_cast<std::size_t>(it - support.begin())) = 1.0;
    }
    return TransportPlan::from_kernel_rows(source, support, rows);
}

Kernel kernel(const TransportPlan& plan) { return plan.kernel(); }

double conditional_cdf(const TransportPlan& plan, std::size_t i, double a) {
    if (i >= plan.n()) throw std::out_of_range("conditional_cdf: source index out of range");
    const auto& ys = plan.target().support();
    const auto end = static_cast<std::size_t>(std::upper_bound(ys.begin(), ys.end(), a) - ys.begin());
    auto row = plan.kernel().rows.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < end; ++j) acc += row[j];
    return acc;
}

TransportPlan mix_plans(const std::vector<WeightedPlan>& components) {
    if (components.empty()) throw std::invalid_argument("mix_plans: no components");
    double total = 0.0;
    for (const auto& c : components) {
        if (!(c.weight > 0.0)) throw std::invalid_argument("mix_plans: weights must be positive");
        total += c.weight;
        if (!same_source(c.plan.source(), components.front().plan.source()))
            throw std::invalid_argument("mix_plans: components have different source measures");
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("mix_plans: weights must sum to one");

    SnappedSupport support;
    for (const auto& c : components)
        for (double y : c.plan.target().support()) support.add(y);
    support.finalize();

    const auto& source = components.front().plan.source();
    Matrix rows(source.size(), support.points().size());
    for (const auto& c : components) {
        std::vector<std::size_t> col_map;
        for (double y : c.plan.target().support()) col_map.push_back(support.index_of(y));
        const auto& q = c.plan.kernel().rows;
        for (std::size_t i = 0; i < source.size(); ++i)
            for (std::size_t j = 0; j < col_map.size(); ++j) rows(i, col_map[j]) += c.weight * q(i, j);
    }
    return TransportPlan::from_kernel_rows(source, support.points(), rows);
}

TransportPlan independent_sum_plan(const DistributionSpec& source_spec,
                                   const DistributionSpec& increment_spec, int n, int m) {
    validate(increment_spec);
    if (spec_support_min(increment_spec) < 0.0)
        throw std::invalid_argument("independent_sum_plan: increment must be supported on [0, inf)");
    const auto source = discretize(source_spec, n);
    const auto increment = discretize(increment_spec, m);

    SnappedSupport support;
    for (double x : source.support())
        for (double w : increment.support()) support.add(x + w);
    support.finalize();

    Matrix rows(source.size(), support.points().size());
    for (std::size_t i = 0; i < source.size(); ++i)
        for (std::size_t l = 0; l < increment.size(); ++l)
            rows(i, support.index_of(source.point(i) + increment.point(l))) += increment.weight(l);
    return TransportPlan::from_kernel_rows(source, support.points(), rows);
}

double cost(const TransportPlan& plan, const CostFunction& c) {
    double total = 0.0;
    for (std::size_t i = 0; i < plan.n(); ++i)
        for (std::size_t j = 0; j < plan.m(); ++j) {
            const double v = c(plan.source().point(i), plan.target().point(j));
            if (v < 0.0 || std::isnan(v)) throw std::invalid_argument("cost: negative cost on the support grid");
            total += v * plan.mass()(i, j);
        }
    return total;
}

TransportPlan plan_from_samples(const std::vector<std::pair<double, double>>& pairs,
                                const Binning& binning) {
    if (pairs.empty()) throw std::invalid_argument("plan_from_samples: empty sample");

    std::vector<double> xgrid;
    std::vector<double> ygrid;
    std::vector<std::size_t> xi(pairs.size());
    std::vector<std::size_t> yi(pairs.size());

    auto nearest = [](const std::vector<double>& grid, double v) {
        auto it = std::lower_bound(grid.begin(), grid.end(), v);
        if (it == grid.begin()) return std::size_t{0};
        if (it == grid.end()) return grid.size() - 1;
        const auto hi = static_cast<std::size_t>(it - grid.begin());
        return (v - grid[hi - 1] <= grid[hi] - v) ? hi - 1 : hi;
    };

    if (const auto* nb = std::get_if<NearestAtomBinning>(&binning)) {
        auto column = [&](auto proj) {
            std::vector<double> v;
            v.reserve(pairs.size());
            for (const auto& p : pairs) v.push_back(proj(p));
            return v;
        };
        xgrid = nb->source_grid ? *nb->source_grid : distinct_sorted(column([](auto& p) { return p.first; }));
        ygrid = nb->target_grid ? *nb->target_grid : distinct_sorted(column([](auto& p) { return p.second; }));
        if (xgrid.empty() || ygrid.empty()) throw std::invalid_argument("plan_from_samples: empty grid");
        check_strictly_increasing(xgrid, "plan_from_samples");
        check_strictly_increasing(ygrid, "plan_from_samples");
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            xi[k] = nearest(xgrid, pairs[k].first);
            yi[k] = nearest(ygrid, pairs[k].second);
        }
    } else {
        const auto& cells = std::get<CellBinning>(binning);
        if (cells.nx < 1 || cells.ny < 1) throw std::invalid_argument("plan_from_samples: need >= 1 cell");
        auto bin_axis = [&](int count, auto proj, std::vector<double>& grid, std::vector<std::size_t>& idx) {
            double lo = proj(pairs.front());
            double hi = lo;
            for (const auto& p : pairs) {
                lo = std::min(lo, proj(p));
                hi = std::max(hi, proj(p));
            }
            if (hi == lo) {
                grid = {lo};
                std::fill(idx.begin(), idx.end(), 0);
                return;
            }
            const double h = (hi - lo) / count;
            for (int c = 0; c < count; ++c) grid.push_back(lo + (c + 0.5) * h);
            for (std::size_t k = 0; k < pairs.size(); ++k) {
                const auto c = static_cast<long>(std::floor((proj(pairs[k]) - lo) / h));
                idx[k] = static_cast<std::size_t>(std::clamp(c, 0L, static_cast<long>(count - 1)));
            }
        };
        bin_axis(cells.nx, [](const auto& p) { return p.first; }, xgrid, xi);
        bin_axis(cells.ny, [](const auto& p) { return p.second; }, ygrid, yi);
    }

    Matrix counts(xgrid.size(), ygrid.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) counts(xi[k], yi[k]) += 1.0;

    std::vector<double> row_count(xgrid.size(), 0.0);
    std::vector<double> col_count(ygrid.size(), 0.0);
    for (std::size_t i = 0; i < xgrid.size(); ++i)
        for (std::size_t j = 0; j < ygrid.size(); ++j) {
            row_count[i] += counts(i, j);
            col_count[j] += counts(i, j);
        }
    std::vector<std::size_t> rows_kept;
    std::vector<std::size_t> cols_kept;
    for (std::size_t i = 0; i < xgrid.size(); ++i)
        if (row_count[i] > 0.0) rows_kept.push_back(i);
    for (std::size_t j = 0; j < ygrid.size(); ++j)
        if (col_count[j] > 0.0) cols_kept.push_back(j);

    const double total = static_cast<double>(pairs.size());
    std::vector<double> sx, sw, tx, tw;
    for (std::size_t i : rows_kept) {
        sx.push_back(xgrid[i]);
        sw.push_back(row_count[i] / total);
    }
    for (std::size_t j : cols_kept) {
        tx.push_back(ygrid[j]);
        tw.push_back(col_count[j] / total);
    }
    Matrix mass(rows_kept.size(), cols_kept.size());
    for (std::size_t r = 0; r < rows_kept.size(); ++r)
        for (std::size_t c = 0; c < cols_kept.size(); ++c)
            mass(r, c) = counts(rows_kept[r], cols_kept[c]) / total;
    return TransportPlan(DiscreteMeasure(std::move(sx), std::move(sw)),
                         DiscreteMeasure(std::move(tx), std::move(tw)), std::move(mass));
}

double brownian_passage_ccdf(double a, double b, double x, double y) {
    if (!(a > 0.0 && b > a)) throw std::invalid_argument("brownian_passage_ccdf: need 0 < a < b");
    if (!(y > x)) return 0.0;
    return std::erfc((b - a) / std::sqrt(2.0 * (y - x)));
}

std::vector<CcdfPoint> emit_ccdf_grid(const TransportPlan& plan, const std::vector<double>& xs,
                                      const std::vector<double>& ys) {
    const auto& targets = plan.target().support();
    std::vector<std::size_t> y_end;
    y_end.reserve(ys.size());
    for (double y : ys)
        y_end.push_back(static_cast<std::size_t>(std::upper_bound(targets.begin(), targets.end(), y) -
                                                 targets.begin()));

    std::map<std::size_t, std::vector<double>> rows;
    std::vector<CcdfPoint> out;
    out.reserve(xs.size() * ys.size());
    for (double x : xs) {
        const std::size_t i = plan.source().nearest_index(x);
        auto it = rows.find(i);
        if (it == rows.end()) it = rows.emplace(i, plan.cumulative_row(i)).first;
        const auto& cum = it->second;
        for (std::size_t k = 0; k < ys.size(); ++k)
            out.push_back({x, ys[k], y_end[k] == 0 ? 0.0 : cum[y_end[k] - 1]});
    }
    return out;
}

std::vector<double> linspace(double lo, double hi, int n) {
    if (n < 1) throw std::invalid_argument("linspace: need n >= 1");
    if (n == 1) return {lo};
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) v[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (n - 1);
    v.back() = hi;
    return v;
}

TransportPlan mixture_example_plan(const MixtureExampleParams& params) {
    const DistributionSpec source_spec = Exponential{params.source_beta};
    const auto source = discretize(source_spec, params.source_atoms);
    auto delayed = independent_sum_plan(source_spec, Exponential{params.delay_beta},
                                        params.source_atoms, params.delay_atoms);
    auto deadline = product_plan(source, DiscreteMeasure::dirac(params.t0));
    auto independent = product_plan(source, source);
    return mix_plans({{0.5, std::move(delayed)}, {0.25, std::move(deadline)}, {0.25, std::move(independent)}});
}

}  // namespace causalot
