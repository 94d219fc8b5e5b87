#include "causalot/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "causalot/causality.hpp"

namespace causalot {

namespace {

void require_nonnegative_delay(const DistributionSpec& z) {
    validate(z);
    if (spec_support_min(z) < 0.0)
        throw std::invalid_argument("coupling: delay law must be supported on [0, inf)");
}

/// Leftmost empirical quantile of sorted data.
double empirical_quantile(const std::vector<double>& sorted, double p) {
    const auto n = static_cast<double>(sorted.size());
    auto k = static_cast<std::size_t>(std::ceil(p * n));
    k = std::clamp<std::size_t>(k, 1, sorted.size());
    return sorted[k - 1];
}

/// Interior cut points at levels k / cells, deduplicated.
std::vector<double> cuts_for(std::vector<double> values, int cells) {
    std::vector<double> cuts;
    if (values.empty()) return cuts;
    std::sort(values.begin(), values.end());
    for (int k = 1; k < cells; ++k) {
        const double c = empirical_quantile(values, static_cast<double>(k) / cells);
        // a cut at the minimum would leave the first cell empty
        if (c > values.front() && (cuts.empty() || c > cuts.back())) cuts.push_back(c);
    }
    return cuts;
}

std::size_t cell_of(const std::vector<double>& cuts, double v) {
    return static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
}

struct ThresholdCells {
    double t;
    std::vector<std::size_t> members;
    std::vector<double> a_cuts;
    std::vector<double> b_cuts;
};

}  // namespace

CouplingSample simulate(const CouplingSpec& spec) {
    validate(spec.x);
    require_nonnegative_delay(spec.z);
    if (spec.samples < 1) throw std::invalid_argument("simulate: samples must be >= 1");
    if (const auto* ind = std::get_if<TauIndependent>(&spec.tau)) validate(ind->spec);

    const auto n = static_cast<std::size_t>(spec.samples);
    CouplingSample s;
    s.x.resize(n);
    s.tau.resize(n);
    s.z.resize(n);
    s.y.resize(n);
    std::mt19937_64 rng(spec.seed);
    for (std::size_t k = 0; k < n; ++k) {
        const double x = sample_one(spec.x, rng);
        double tau = kTauNever;
        if (const auto* ind = std::get_if<TauIndependent>(&spec.tau))
            tau = sample_one(ind->spec, rng);
        else if (std::holds_alternative<TauEqualToX>(spec.tau))
            tau = x;
        const double z = sample_one(spec.z, rng);
        s.x[k] = x;
        s.tau[k] = tau;
        s.z[k] = z;
        s.y[k] = x <= tau ? x + z : tau;
    }
    return s;
}

CouplingSample canonical_from_plan(const TransportPlan& plan, int samples, std::uint64_t seed) {
    if (samples < 1) throw std::invalid_argument("canonical_from_plan: samples must be >= 1");
    const auto report = check_plan_causal(plan, kDefaultPlanTolerance);
    if (!report.causal)
        throw std::invalid_argument("canonical_from_plan: plan is not causal (max deviation " +
                                    std::to_string(report.max_deviation) + ")");

    const std::size_t m = plan.m();
    const auto& mass = plan.mass().data();
    std::vector<double> cumulative(mass.size());
    double total = 0.0;
    for (std::size_t k = 0; k < mass.size(); ++k) {
        total += mass[k];
        cumulative[k] = total;
    }

    const auto n = static_cast<std::size_t>(samples);
    CouplingSample s;
    s.x.resize(n);
    s.tau.resize(n);
    s.z.resize(n);
    s.y.resize(n);
    std::mt19937_64 rng(seed);
    for (std::size_t k = 0; k < n; ++k) {
        const double u = uniform_open(rng) * total;
        auto cell = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                             cumulative.begin());
        cell = std::min(cell, mass.size() - 1);
        while (mass[cell] == 0.0 && cell > 0) --cell;  // never land on an empty entry
        const double x = plan.source().point(cell / m);
        const double y = plan.target().point(cell % m);
        const double tau = std::min(x, y);
        const double z = x <= tau ? y - x : 0.0;
        s.x[k] = x;
        s.tau[k] = tau;
        s.z[k] = z;
        s.y[k] = x <= tau ? x + z : tau;
    }
    return s;
}

std::vector<std::pair<double, double>> sample_pairs(const CouplingSample& sample) {
    std::vector<std::pair<double, double>> out(sample.size());
    for (std::size_t k = 0; k < sample.size(); ++k) out[k] = {sample.x[k], sample.y[k]};
    return out;
}

bool satisfies_coupling_equation(const CouplingSample& s) {
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (!(s.z[k] >= 0.0)) return false;
        const double expected = s.x[k] <= s.tau[k] ? s.x[k] + s.z[k] : s.tau[k];
        if (s.y[k] != expected) return false;
    }
    return true;
}

AxiomReport verify_axioms(const CouplingSample& sample, const std::vector<double>& tgrid, int cells,
                          double confidence) {
    if (sample.size() == 0) throw std::invalid_argument("verify_axioms: empty sample");
    if (cells < 1) throw std::invalid_argument("verify_axioms: cells must be >= 1");
    if (!(confidence > 0.0 && confidence < 1.0))
        throw std::invalid_argument("verify_axioms: confidence must lie in (0, 1)");

    AxiomReport report;
    report.confidence = confidence;
    report.delay_ok = std::all_of(sample.z.begin(), sample.z.end(), [](double z) { return z >= 0.0; });

    std::vector<double> ts = tgrid;
    if (ts.empty()) {
        std::vector<double> sorted = sample.x;
        std::sort(sorted.begin(), sorted.end());
        for (int k = 1; k <= 9; ++k) ts.push_back(empirical_quantile(sorted, k / 10.0));
        ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    }

    std::vector<ThresholdCells> plans;
    std::size_t total_cells = 0;
    for (double t : ts) {
        ThresholdCells tc{t, {}, {}, {}};
        std::vector<double> taus;
        std::vector<double> xs;
        for (std::size_t k = 0; k < sample.size(); ++k) {
            if (!(sample.x[k] >= t)) continue;
            tc.members.push_back(k);
            xs.push_back(sample.x[k]);
            if (sample.tau[k] < t) taus.push_back(sample.tau[k]);
        }
        if (tc.members.size() < kMinConditionalSamples) {
            report.skipped.push_back(t);
            continue;
        }
        tc.a_cuts = cuts_for(std::move(taus), cells);
        tc.b_cuts = cuts_for(std::move(xs), cells);
        total_cells += (tc.a_cuts.size() + 1) * (tc.b_cuts.size() + 1);
        plans.push_back(std::move(tc));
    }

    const double alpha = 1.0 - confidence;
    const double level = 1.0 - alpha / (2.0 * static_cast<double>(std::max<std::size_t>(total_cells, 1)));
    const double z = boost::math::quantile(boost::math::normal_distribution<double>(), level);

    for (const auto& tc : plans) {
        const std::size_t na = tc.a_cuts.size() + 1;
        const std::size_t nb = tc.b_cuts.size() + 1;
        std::vector<double> joint(na * nb, 0.0);
        std::vector<double> pa(na, 0.0);
        std::vector<double> pb(nb, 0.0);
        for (std::size_t k : tc.members) {
            const std::size_t b = cell_of(tc.b_cuts, sample.x[k]);
            pb[b] += 1.0;
            if (sample.tau[k] < tc.t) {
                const std::size_t a = cell_of(tc.a_cuts, sample.tau[k]);
                pa[a] += 1.0;
                joint[a * nb + b] += 1.0;
            }
        }
        const auto nt = static_cast<double>(tc.members.size());
        const double eps = z * std::sqrt(1.0 / (4.0 * nt));
        for (std::size_t a = 0; a < na; ++a)
            for (std::size_t b = 0; b < nb; ++b) {
                const double dev = std::abs(joint[a * nb + b] / nt - (pa[a] / nt) * (pb[b] / nt));
                IndependenceCell cell{tc.t,
                                      a == 0 ? -kTauNever : tc.a_cuts[a - 1],
                                      a + 1 == na ? tc.t : tc.a_cuts[a],
                                      b == 0 ? tc.t : tc.b_cuts[b - 1],
                                      b + 1 == nb ? kTauNever : tc.b_cuts[b],
                                      dev,
                                      eps};
                report.max_deviation = std::max(report.max_deviation, dev);
                report.max_ratio = std::max(report.max_ratio, dev / eps);
                report.tests.push_back(cell);
            }
    }
    report.pass = report.delay_ok && report.max_ratio <= 1.0;
    return report;
}

double empirical_cost(const CouplingSample& sample, const CostFunction& c) {
    if (sample.size() == 0) throw std::invalid_argument("empirical_cost: empty sample");
    double total = 0.0;
    for (std::size_t k = 0; k < sample.size(); ++k) {
        const double v = c(sample.x[k], sample.y[k]);
        if (v < 0.0) throw std::invalid_argument("empirical_cost: negative cost");
        total += v;
    }
    return total / static_cast<double>(sample.size());
}

}  // namespace causalot
