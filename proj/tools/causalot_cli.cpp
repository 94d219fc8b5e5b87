// Command-line front end for the causal transport library.
//
// Exit codes: 0 success or causal, 2 semantic negative (not causal, axioms
// rejected, solver not optimal), 1 usage or I/O error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "causalot/causality.hpp"
#include "causalot/coupling.hpp"
#include "causalot/io.hpp"
#include "causalot/measures.hpp"
#include "causalot/plans.hpp"
#include "causalot/solver.hpp"

namespace fs = std::filesystem;
using namespace causalot;
using io::json;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kNegative = 2;

struct Global {
    std::uint64_t seed = 0;
    double tol = kDefaultPlanTolerance;
    std::string out;
};

/// A spec argument is a JSON file when such a file exists, else compact syntax.
DistributionSpec load_spec(const std::string& arg) {
    if (fs::exists(arg)) return io::spec_from_json(io::read_json_file(arg));
    if (arg.find(':') == std::string::npos) throw io::FormatError(arg + ": no such file");
    return io::parse_spec(arg);
}

void emit(const Global& g, const json& report) {
    const std::string text = report.dump(2) + "\n";
    if (g.out.empty()) std::cout << text;
    else io::write_text_file(g.out, text);
}

json header(const std::string& command, const Global& g) {
    return {{"command", command}, {"seed", g.seed}, {"tol", g.tol}, {"out", g.out}};
}

struct DiscretizeArgs {
    std::string spec;
    int n = 100;
    std::string scheme = "quantile";
    double lo = 0.0;
    double hi = 1.0;
};

int run_discretize(const Global& g, const DiscretizeArgs& a) {
    const auto spec = load_spec(a.spec);
    DiscretizationScheme scheme = QuantileGrid{};
    if (a.scheme == "uniform") scheme = UniformGrid{a.lo, a.hi};
    const auto m = discretize(spec, a.n, scheme);
    emit(g, io::to_json(m));
    return kOk;
}

struct CheckArgs {
    std::string plan;
    std::string measure;
    std::string map;
    double mass_tol = 0.0;
};

int run_check(const Global& g, const CheckArgs& a) {
    json report = {{"config", header("check", g)}};
    if (!a.plan.empty()) {
        report["config"]["plan"] = a.plan;
        const auto plan = io::plan_from_json(io::read_json_file(a.plan));
        const auto r = check_plan_causal(plan, g.tol);
        report["kind"] = "plan";
        report["result"] = io::to_json(r);
        emit(g, report);
        return r.causal ? kOk : kNegative;
    }
    report["config"]["measure"] = a.measure;
    report["config"]["map"] = a.map;
    report["config"]["mass_tol"] = a.mass_tol;
    const auto measure = io::measure_from_json(io::read_json_file(a.measure));
    const auto values = io::map_from_json(io::read_json_file(a.map));
    if (values.size() != measure.size())
        throw io::FormatError(a.map + ": expected " + std::to_string(measure.size()) + " values");
    const auto r = check_map_causal(measure, values, a.mass_tol);
    report["kind"] = "map";
    report["result"] = io::to_json(r);
    // the plan view gives a concrete witness for non-causal maps
    report["plan_check"] = io::to_json(check_plan_causal(deterministic_plan(measure, values), kDefaultPlanTolerance));
    emit(g, report);
    return r.causal ? kOk : kNegative;
}

struct SolveArgs {
    std::string instance;
    std::string eta;
    std::string nu;
    std::string cost = "abs";
    int max_iterations = SolverSettings{}.max_iterations;
};

int run_solve(const Global& g, const SolveArgs& a) {
    json report = {{"config", header("solve", g)}};
    report["config"]["max_iterations"] = a.max_iterations;
    std::optional<io::Instance> inst;
    if (!a.instance.empty()) {
        report["config"]["instance"] = a.instance;
        inst = io::instance_from_json(io::read_json_file(a.instance));
    } else {
        report["config"]["eta"] = a.eta;
        report["config"]["nu"] = a.nu;
        inst = io::Instance{io::measure_from_json(io::read_json_file(a.eta)),
                            io::measure_from_json(io::read_json_file(a.nu)), io::cost_from_json(json(a.cost))};
    }
    report["config"]["cost"] = io::to_json(inst->cost);
    const auto c = io::make_cost(inst->cost, inst->eta, inst->nu);
    SolverSettings settings;
    settings.max_iterations = a.max_iterations;
    const auto r = solve_causal_mk(inst->eta, inst->nu, c, settings);
    report["result"] = io::to_json(r);
    report["product_plan_cost"] = cost(product_plan(inst->eta, inst->nu), c);
    if (std::holds_alternative<io::AbsCost>(inst->cost))
        report["classic_value"] = classic_ot_1d(inst->eta, inst->nu).value;
    emit(g, report);
    return r.status == SolveStatus::optimal ? kOk : kNegative;
}

struct CoupleArgs {
    std::string x = "exp:1";
    std::string tau = "inf";
    std::string z = "dirac:0";
    std::string from_plan;
    int samples = 100000;
    int cells = 4;
    double confidence = 0.999;
    std::string csv = "coupling_sample.csv";
};

int run_couple(const Global& g, const CoupleArgs& a) {
    json report = {{"config", header("couple", g)}};
    auto& cfg = report["config"];
    cfg["samples"] = a.samples;
    cfg["cells"] = a.cells;
    cfg["confidence"] = a.confidence;
    cfg["csv"] = a.csv;
    CouplingSample sample;
    if (!a.from_plan.empty()) {
        cfg["from_plan"] = a.from_plan;
        const auto plan = io::plan_from_json(io::read_json_file(a.from_plan));
        const auto causal = check_plan_causal(plan, kDefaultPlanTolerance);
        if (!causal.causal) {
            report["plan_check"] = io::to_json(causal);
            emit(g, report);
            return kNegative;
        }
        sample = canonical_from_plan(plan, a.samples, g.seed);
    } else {
        CouplingSpec spec{load_spec(a.x), TauPlusInfinity{}, load_spec(a.z), a.samples, g.seed};
        if (a.tau == "equal-to-x") spec.tau = TauEqualToX{};
        else if (a.tau != "inf") spec.tau = TauIndependent{load_spec(a.tau)};
        cfg["x"] = io::to_json(spec.x);
        cfg["z"] = io::to_json(spec.z);
        cfg["tau"] = std::holds_alternative<TauIndependent>(spec.tau)
                         ? io::to_json(std::get<TauIndependent>(spec.tau).spec)
                         : json(a.tau);
        sample = simulate(spec);
    }
    const auto r = verify_axioms(sample, {}, a.cells, a.confidence);
    if (!a.csv.empty()) io::write_text_file(a.csv, io::sample_csv(sample));
    double mean_y = 0.0;
    for (double y : sample.y) mean_y += y;
    report["mean_y"] = mean_y / static_cast<double>(sample.size());
    report["mean_abs_delay"] = empirical_cost(sample, abs_cost);
    report["coupling_equation_exact"] = satisfies_coupling_equation(sample);
    report["axioms"] = io::to_json(r);
    emit(g, report);
    return r.pass ? kOk : kNegative;
}

struct ExampleArgs {
    std::string name;
    // fig2
    int source_atoms = 200;
    int delay_atoms = 50;
    int grid = 200;
    double extent = 2000.0;
    // brownian
    double a = 6.0;
    double b = 11.0;
    // gamma-poisson
    int shape = 2;
    int p = 1;
    double rate = 0.01;
    int atoms = 60;
    std::string csv;
};

int run_example(const Global& g, const ExampleArgs& a) {
    json report = {{"config", header("example", g)}};
    auto& cfg = report["config"];
    cfg["name"] = a.name;
    if (a.name == "fig2") {
        const std::string csv = a.csv.empty() ? "fig2_ccdf.csv" : a.csv;
        MixtureExampleParams params;
        params.source_atoms = a.source_atoms;
        params.delay_atoms = a.delay_atoms;
        cfg.update({{"source_beta", params.source_beta}, {"delay_beta", params.delay_beta}, {"t0", params.t0},
                    {"source_atoms", a.source_atoms}, {"delay_atoms", a.delay_atoms}, {"grid", a.grid},
                    {"extent", a.extent}, {"csv", csv}});
        const auto plan = mixture_example_plan(params);
        const auto causal = check_plan_causal(plan, g.tol);
        const auto axis = linspace(0.0, a.extent, a.grid);
        io::write_text_file(csv, io::ccdf_csv(emit_ccdf_grid(plan, axis, axis)));
        report["causality"] = io::to_json(causal);
        report["grid_points"] = axis.size() * axis.size();
        emit(g, report);
        return causal.causal ? kOk : kNegative;
    }
    if (a.name == "brownian") {
        const std::string csv = a.csv.empty() ? "brownian_ccdf.csv" : a.csv;
        cfg.update({{"a", a.a}, {"b", a.b}, {"csv", csv}});
        const auto xs = linspace(0.0, 50.0, 101);
        const auto ys = linspace(0.0, 100.0, 201);
        std::vector<CcdfPoint> points;
        for (double x : xs)
            for (double y : ys) points.push_back({x, y, brownian_passage_ccdf(a.a, a.b, x, y)});
        io::write_text_file(csv, io::ccdf_csv(points));
        const double lag = (a.b - a.a) * (a.b - a.a) / 2.0;
        report["probe"] = {{"x", 0.0}, {"y", lag}, {"F", brownian_passage_ccdf(a.a, a.b, 0.0, lag)}};
        report["grid_points"] = points.size();
        emit(g, report);
        return kOk;
    }
    if (a.name == "gamma-poisson") {
        cfg.update({{"shape", a.shape}, {"p", a.p}, {"rate", a.rate}, {"atoms", a.atoms}});
        const DistributionSpec eta_spec = Gamma{a.shape, a.rate};
        const DistributionSpec nu_spec = Gamma{a.shape + a.p, a.rate};
        const auto eta = discretize(eta_spec, a.atoms);
        const auto nu = discretize(nu_spec, a.atoms);
        const auto r = solve_causal_mk(eta, nu, abs_cost);
        const double expected = a.p / a.rate;
        const auto sum_plan = independent_sum_plan(eta_spec, Gamma{a.p, a.rate}, a.atoms, a.atoms);
        report["status"] = to_string(r.status);
        report["value"] = r.value;
        report["expected"] = expected;
        report["relative_gap"] = std::abs(r.value - expected) / expected;
        report["iterations"] = r.iterations;
        report["independent_sum_cost"] = cost(sum_plan, abs_cost);
        report["independent_sum_causal"] = check_plan_causal(sum_plan, g.tol).causal;
        emit(g, report);
        std::cerr << "value " << io::format_double(r.value) << " vs p/rate " << io::format_double(expected)
                  << ", relative gap " << io::format_double(std::abs(r.value - expected) / expected) << "\n";
        return r.status == SolveStatus::optimal ? kOk : kNegative;
    }
    throw CLI::ValidationError("example", "unknown example \"" + a.name + "\"");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Causal optimal transport on the real line"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand
    Global g;
    app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
    app.add_option("--tol", g.tol, "Causality tolerance")->capture_default_str();
    app.add_option("--out", g.out, "Report path (default: stdout)");

    DiscretizeArgs da;
    auto* disc = app.add_subcommand("discretize", "Discretize a named distribution");
    disc->add_option("spec", da.spec, "Spec JSON file or compact form such as exp:0.01")->required();
    disc->add_option("-n,--n", da.n, "Number of cells or atoms")->check(CLI::PositiveNumber)->capture_default_str();
    disc->add_option("--scheme", da.scheme)->check(CLI::IsMember({"quantile", "uniform"}))->capture_default_str();
    disc->add_option("--lo", da.lo)->capture_default_str();
    disc->add_option("--hi", da.hi)->capture_default_str();

    CheckArgs ca;
    auto* check = app.add_subcommand("check", "Check causality of a plan or of a map");
    auto* plan_opt = check->add_option("--plan", ca.plan, "Plan JSON");
    auto* measure_opt = check->add_option("--measure", ca.measure, "Source measure JSON");
    auto* map_opt = check->add_option("--map", ca.map, "Map JSON {\"values\": [...]}");
    check->add_option("--mass-tol", ca.mass_tol, "Source mass allowed to violate a map classification")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    plan_opt->excludes(measure_opt)->excludes(map_opt);
    measure_opt->needs(map_opt);
    map_opt->needs(measure_opt);

    SolveArgs sa;
    auto* solve_cmd = app.add_subcommand("solve", "Solve the causal transport LP");
    auto* inst_opt = solve_cmd->add_option("--instance", sa.instance, "Instance JSON");
    auto* eta_opt = solve_cmd->add_option("--eta", sa.eta, "Source measure JSON");
    auto* nu_opt = solve_cmd->add_option("--nu", sa.nu, "Target measure JSON");
    solve_cmd->add_option("--cost", sa.cost)->check(CLI::IsMember({"abs", "square"}))->capture_default_str();
    solve_cmd->add_option("--max-iter", sa.max_iterations)->check(CLI::PositiveNumber)->capture_default_str();
    inst_opt->excludes(eta_opt)->excludes(nu_opt);
    eta_opt->needs(nu_opt);
    nu_opt->needs(eta_opt);

    CoupleArgs ka;
    auto* couple = app.add_subcommand("couple", "Simulate an adapted coupling and test its axioms");
    couple->add_option("--x", ka.x, "Law of X")->capture_default_str();
    couple->add_option("--tau", ka.tau, "Waiting time: a law, equal-to-x or inf")->capture_default_str();
    couple->add_option("--z", ka.z, "Delay law")->capture_default_str();
    couple->add_option("--from-plan", ka.from_plan, "Canonical coupling of a causal plan JSON");
    couple->add_option("-N,--samples", ka.samples)->check(CLI::PositiveNumber)->capture_default_str();
    couple->add_option("--cells", ka.cells)->check(CLI::PositiveNumber)->capture_default_str();
    couple->add_option("--confidence", ka.confidence)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    couple->add_option("--csv", ka.csv, "Sample CSV path (empty: skip)")->capture_default_str();

    ExampleArgs ea;
    auto* example = app.add_subcommand("example", "Built-in examples");
    example->add_option("name", ea.name)->required()->check(CLI::IsMember({"fig2", "brownian", "gamma-poisson"}));
    example->add_option("--source-atoms", ea.source_atoms)->check(CLI::PositiveNumber)->capture_default_str();
    example->add_option("--delay-atoms", ea.delay_atoms)->check(CLI::PositiveNumber)->capture_default_str();
    example->add_option("--grid", ea.grid)->check(CLI::PositiveNumber)->capture_default_str();
    example->add_option("--extent", ea.extent)->check(CLI::PositiveNumber)->capture_default_str();
    example->add_option("--a", ea.a)->capture_default_str();
    example->add_option("--b", ea.b)->capture_default_str();
    example->add_option("--shape", ea.shape)->check(CLI::PositiveNumber)->capture_default_str();
    example->add_option("--p", ea.p)->check(CLI::PositiveNumber)->capture_default_str();
    example->add_option("--rate", ea.rate)->check(CLI::PositiveNumber)->capture_default_str();
    example->add_option("--atoms", ea.atoms)->check(CLI::PositiveNumber)->capture_default_str();
    example->add_option("--csv", ea.csv, "CCDF grid CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*disc) return run_discretize(g, da);
        if (*check) {
            if (ca.plan.empty() && ca.measure.empty()) throw CLI::ValidationError("check", "give --plan or --measure with --map");
            return run_check(g, ca);
        }
        if (*solve_cmd) {
            if (sa.instance.empty() && sa.eta.empty()) throw CLI::ValidationError("solve", "give --instance or --eta with --nu");
            return run_solve(g, sa);
        }
        if (*couple) return run_couple(g, ka);
        if (*example) return run_example(g, ea);
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
