#include "causalot/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace causalot::io {

namespace {

template <class T>
T field(const json& j, const char* name) {
    if (!j.is_object() || !j.contains(name)) throw FormatError(std::string("missing field \"") + name + "\"");
    try {
        return j.at(name).get<T>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("field \"") + name + "\": " + e.what());
    }
}

double parse_number(const std::string& s, const std::string& context) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw FormatError("bad number \"" + s + "\" in " + context);
    return v;
}

json bound(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

}  // namespace

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json to_json(const DiscreteMeasure& m) {
    return {{"support", m.support()}, {"weights", m.weights()}};
}

DiscreteMeasure measure_from_json(const json& j) {
    auto support = field<std::vector<double>>(j, "support");
    auto weights = field<std::vector<double>>(j, "weights");
    try {
        return DiscreteMeasure(std::move(support), std::move(weights));
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("invalid measure: ") + e.what());
    }
}

json to_json(const DistributionSpec& spec) {
    return std::visit(
        [](const auto& s) -> json {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Exponential>) return {{"family", "exponential"}, {"beta", s.beta}};
            else if constexpr (std::is_same_v<S, Gamma>)
                return {{"family", "gamma"}, {"shape", s.shape}, {"rate", s.rate}};
            else if constexpr (std::is_same_v<S, Gaussian>)
                return {{"family", "gaussian"}, {"mean", s.mean}, {"variance", s.variance}};
            else if constexpr (std::is_same_v<S, Dirac>) return {{"family", "dirac"}, {"point", s.point}};
            else if constexpr (std::is_same_v<S, Uniform>) return {{"family", "uniform"}, {"lo", s.lo}, {"hi", s.hi}};
            else return {{"family", "levy_first_passage"}, {"level", s.level}};
        },
        spec);
}

DistributionSpec spec_from_json(const json& j) {
    const auto family = field<std::string>(j, "family");
    DistributionSpec spec;
    if (family == "exponential") spec = Exponential{field<double>(j, "beta")};
    else if (family == "gamma") spec = Gamma{field<int>(j, "shape"), field<double>(j, "rate")};
    else if (family == "gaussian") spec = Gaussian{field<double>(j, "mean"), field<double>(j, "variance")};
    else if (family == "dirac") spec = Dirac{field<double>(j, "point")};
    else if (family == "uniform") spec = Uniform{field<double>(j, "lo"), field<double>(j, "hi")};
    else if (family == "levy_first_passage") spec = LevyFirstPassage{field<double>(j, "level")};
    else throw FormatError("unknown family \"" + family + "\"");
    try {
        validate(spec);
    } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
    }
    return spec;
}

DistributionSpec parse_spec(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
    if (parts.empty()) throw FormatError("empty distribution spec");
    const std::string& name = parts[0];
    auto arg = [&](std::size_t k) { return parse_number(parts[k], "spec \"" + text + "\""); };
    auto want = [&](std::size_t count) {
        if (parts.size() != count + 1)
            throw FormatError("spec \"" + text + "\" expects " + std::to_string(count) + " parameter(s)");
    };
    DistributionSpec spec;
    if (name == "exp" || name == "exponential") {
        want(1);
        spec = Exponential{arg(1)};
    } else if (name == "gamma") {
        want(2);
        const double shape = arg(1);
        if (shape != std::floor(shape) || shape < 1 || shape > 1e6)
            throw FormatError("gamma shape must be a positive integer in \"" + text + "\"");
        spec = Gamma{static_cast<int>(shape), arg(2)};
    } else if (name == "gauss" || name == "gaussian") {
        want(2);
        spec = Gaussian{arg(1), arg(2)};
    } else if (name == "dirac") {
        want(1);
        spec = Dirac{arg(1)};
    } else if (name == "uniform") {
        want(2);
        spec = Uniform{arg(1), arg(2)};
    } else if (name == "levy") {
        want(1);
        spec = LevyFirstPassage{arg(1)};
    } else {
        throw FormatError("unknown distribution \"" + name + "\"");
    }
    try {
        validate(spec);
    } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
    }
    return spec;
}

json to_json(const TransportPlan& plan) {
    json rows = json::array();
    for (std::size_t i = 0; i < plan.n(); ++i) {
        const auto r = plan.mass().row(i);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    return {{"source", to_json(plan.source())}, {"target", to_json(plan.target())}, {"mass", rows}};
}

TransportPlan plan_from_json(const json& j) {
    if (!j.is_object() || !j.contains("source") || !j.contains("target"))
        throw FormatError("plan needs \"source\", \"target\" and \"mass\"");
    auto source = measure_from_json(j.at("source"));
    auto target = measure_from_json(j.at("target"));
    const auto rows = field<std::vector<std::vector<double>>>(j, "mass");
    if (rows.size() != source.size()) throw FormatError("mass: one row per source atom required");
    Matrix mass(source.size(), target.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != target.size()) throw FormatError("mass: one column per target atom required");
        for (std::size_t k = 0; k < rows[i].size(); ++k) mass(i, k) = rows[i][k];
    }
    try {
        return TransportPlan(std::move(source), std::move(target), std::move(mass));
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("invalid plan: ") + e.what());
    }
}

std::vector<double> map_from_json(const json& j) { return field<std::vector<double>>(j, "values"); }

CostSpec cost_from_json(const json& j) {
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (name == "abs") return AbsCost{};
        if (name == "square") return SquareCost{};
        throw FormatError("unknown cost \"" + name + "\"");
    }
    return TableCost{field<std::vector<std::vector<double>>>(j, "table")};
}

json to_json(const CostSpec& c) {
    if (std::holds_alternative<AbsCost>(c)) return "abs";
    if (std::holds_alternative<SquareCost>(c)) return "square";
    return {{"table", std::get<TableCost>(c).table}};
}

CostFunction make_cost(const CostSpec& c, const DiscreteMeasure& source, const DiscreteMeasure& target) {
    if (std::holds_alternative<AbsCost>(c)) return abs_cost;
    if (std::holds_alternative<SquareCost>(c)) return square_cost;
    const auto& table = std::get<TableCost>(c).table;
    if (table.size() != source.size()) throw FormatError("cost table: one row per source atom required");
    for (const auto& row : table)
        if (row.size() != target.size()) throw FormatError("cost table: one column per target atom required");
    return [table, xs = source.support(), ys = target.support()](double x, double y) {
        const auto i = std::lower_bound(xs.begin(), xs.end(), x) - xs.begin();
        const auto k = std::lower_bound(ys.begin(), ys.end(), y) - ys.begin();
        if (i == static_cast<std::ptrdiff_t>(xs.size()) || xs[static_cast<std::size_t>(i)] != x ||
            k == static_cast<std::ptrdiff_t>(ys.size()) || ys[static_cast<std::size_t>(k)] != y)
            throw std::invalid_argument("cost table queried off the support grid");
        return table[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    };
}

Instance instance_from_json(const json& j) {
    if (!j.is_object() || !j.contains("eta") || !j.contains("nu"))
        throw FormatError("instance needs \"eta\" and \"nu\"");
    Instance inst{measure_from_json(j.at("eta")), measure_from_json(j.at("nu")),
                  j.contains("cost") ? cost_from_json(j.at("cost")) : CostSpec{AbsCost{}}};
    return inst;
}

json to_json(const CausalityReport& r) {
    json v = json::array();
    for (const auto& x : r.violations) v.push_back({{"j", x.threshold}, {"k", x.row}, {"dev", x.deviation}});
    return {{"causal", r.causal}, {"tolerance", r.tolerance}, {"max_deviation", r.max_deviation}, {"violations", v}};
}

json to_json(const MapCausalityReport& r) {
    json out{{"causal", r.causal}, {"offending_mass", r.offending_mass}};
    out["branch"] = r.branch ? json(to_string(*r.branch)) : json(nullptr);
    out["t0"] = r.t0 ? json(*r.t0) : json(nullptr);
    return out;
}

json to_json(const CyclicalMonotonicityReport& r) {
    json w = json::array();
    for (const auto& [i, k] : r.witness) w.push_back({i, k});
    return {{"ok", r.ok}, {"worst_violation", r.worst_violation}, {"witness", w},
            {"subsets_checked", r.subsets_checked}};
}

json to_json(const SolveResult& r) {
    json out{{"status", to_string(r.status)},
             {"value", r.value},
             {"iterations", r.iterations},
             {"bland_iterations", r.bland_iterations},
             {"primal_residual", r.primal_residual},
             {"dual_gap", r.dual_gap},
             {"min_reduced_cost", r.min_reduced_cost},
             {"diagnostic", r.diagnostic}};
    if (r.causality_deviation) out["causality_deviation"] = *r.causality_deviation;
    if (r.cyclically_monotone) out["cyclically_monotone"] = *r.cyclically_monotone;
    if (r.plan) out["plan"] = to_json(*r.plan);
    return out;
}

json to_json(const AxiomReport& r) {
    json tests = json::array();
    for (const auto& c : r.tests)
        tests.push_back({{"t", c.t},
                         {"a", {bound(c.a_lo), bound(c.a_hi)}},
                         {"b", {bound(c.b_lo), bound(c.b_hi)}},
                         {"deviation", c.deviation},
                         {"epsilon", c.epsilon}});
    return {{"pass", r.pass},       {"delay_ok", r.delay_ok},   {"confidence", r.confidence},
            {"max_deviation", r.max_deviation}, {"max_ratio", r.max_ratio}, {"skipped", r.skipped},
            {"tests", tests}};
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(path.string() + ": cannot open");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(path.string() + ": cannot open for writing");
    out << text;
    if (!out) throw FormatError(path.string() + ": write failed");
}

std::string ccdf_csv(const std::vector<CcdfPoint>& points) {
    std::string s = "x,y,F\n";
    for (const auto& p : points) s += format_double(p.x) + ',' + format_double(p.y) + ',' + format_double(p.value) + '\n';
    return s;
}

std::string sample_csv(const CouplingSample& sample) {
    std::string s = "X,tau,Z,Y\n";
    for (std::size_t k = 0; k < sample.size(); ++k)
        s += format_double(sample.x[k]) + ',' + format_double(sample.tau[k]) + ',' + format_double(sample.z[k]) +
             ',' + format_double(sample.y[k]) + '\n';
    return s;
}

}  // namespace causalot::io
