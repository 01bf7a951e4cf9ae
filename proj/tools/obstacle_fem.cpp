#include "obstacle_fem/experiments.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

using namespace obstacle_fem;

namespace {

constexpr int kSolverFailure = 2;
constexpr int kConfigError = 3;

struct Overrides {
    std::string config;
    std::string problem;
    std::optional<int> n;
    std::optional<double> kappa0;
    std::optional<int> halvings;
    std::optional<double> q;
    std::vector<int> ell;
    std::string out;
    std::string obstacle;
    std::optional<double> load_scale;
    std::optional<int> n_max;
    bool warm_start = false;
    bool no_vtk = false;
};

void add_common(CLI::App* sub, Overrides& o) {
    sub->add_option("--config", o.config, "JSON config file; flags override its values");
    sub->add_option("--problem", o.problem, "biharmonic | shell");
    sub->add_option("--n", o.n, "Mesh resolution (power of two; h = r_A / n)");
    sub->add_option("--kappa0", o.kappa0, "Initial penalty of the kappa sweep");
    sub->add_option("--halvings", o.halvings, "Number of kappa halvings");
    sub->add_option("--q", o.q, "Exponent in kappa = h^q, 0 < q < 1/2");
    sub->add_option("--ell", o.ell, "Force levels of the force sweep")->delimiter(',');
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--obstacle", o.obstacle, "constant | two-planes (biharmonic), flat | wedge (shell)");
    sub->add_option("--load-scale", o.load_scale, "Multiplier on the forcing");
    sub->add_option("--n-max", o.n_max, "Finest mesh of the h sweep");
    sub->add_flag("--warm-start", o.warm_start, "Start each kappa from the previous solution");
    sub->add_flag("--no-vtk", o.no_vtk, "Skip VTK output");
}

ExperimentConfig build_config(const Overrides& o, bool force_sweep) {
    ExperimentConfig cfg;
    if (!o.config.empty()) {
        std::ifstream is(o.config);
        if (!is) throw ConfigError("cannot read config file " + o.config);
        nlohmann::json j;
        try {
            is >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
        }
        cfg = config_from_json(j);
    }
    if (!o.problem.empty()) cfg.problem = parse_problem(o.problem);
    if (o.n) {
        // --n sets the resolution of whichever experiment runs.
        cfg.n = *o.n;
        cfg.force_n = *o.n;
    }
    if (o.kappa0) cfg.kappa0 = *o.kappa0;
    if (o.halvings) cfg.halvings = *o.halvings;
    if (o.q) cfg.q = *o.q;
    if (!o.ell.empty()) cfg.ells = o.ell;
    if (!o.out.empty()) cfg.out = o.out;
    if (!o.obstacle.empty()) cfg.obstacle = o.obstacle;
    if (o.load_scale) cfg.load_scale = *o.load_scale;
    if (o.n_max) cfg.n_max = *o.n_max;
    if (o.warm_start) cfg.warm_start = true;
    if (o.no_vtk) cfg.write_vtk = false;
    (void)force_sweep;
    return cfg.resolved();
}

void print_report(const ConvergenceReport& r) {
    for (std::size_t c = 0; c < r.columns.size(); ++c) std::printf(c ? " %14s" : "%14s", r.columns[c].c_str());
    std::printf("\n");
    for (const auto& row : r.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) std::printf(c ? " %14.6e" : "%14.6e", row[c]);
        std::printf("\n");
    }
    for (const auto& f : r.failures) std::printf("failure: %s\n", f.c_str());
}

int run(const std::function<ConvergenceReport(const ExperimentConfig&)>& experiment, const Overrides& o, bool force_sweep) {
    const ExperimentConfig cfg = build_config(o, force_sweep);
    thread_limit();  // rejects a malformed OBSTACLE_FEM_THREADS up front
    const ConvergenceReport report = experiment(cfg);
    write_report(cfg, report);
    print_report(report);
    std::printf("wrote %s\n", (cfg.out / (report.name + ".csv")).string().c_str());
    if (report.metadata.contains("terminated") && !report.terminated && report.failures.empty())
        std::printf("threshold not reached before the mesh budget ran out\n");
    return report.failures.empty() ? 0 : kSolverFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Penalised mixed P1 solver for biharmonic and shallow-shell obstacle problems"};
    app.require_subcommand(1);
    Overrides kappa_o, cauchy_o, force_o;
    auto* kappa = app.add_subcommand("kappa-sweep", "Successive-solution errors as kappa is halved on a fixed mesh");
    add_common(kappa, kappa_o);
    auto* cauchy = app.add_subcommand("h-cauchy", "Cauchy errors over nested meshes with kappa = h^q");
    add_common(cauchy, cauchy_o);
    auto* force = app.add_subcommand("force-sweep", "Contact area as the load level ell grows");
    add_common(force, force_o);
    auto* validate = app.add_subcommand("validate", "Run the property suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    try {
        if (*kappa) return run(run_kappa_sweep, kappa_o, false);
        if (*cauchy) return run(run_h_cauchy, cauchy_o, false);
        if (*force) return run(run_force_sweep, force_o, true);
        if (*validate) {
            bool all = true;
            for (const auto& r : run_property_suite()) {
                std::printf("%s  %s: %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
                all = all && r.passed;
            }
            return all ? 0 : 1;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    } catch (const MeshError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    } catch (const NewtonError& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return kSolverFailure;
    } catch (const LinearSolveError& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return kSolverFailure;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
