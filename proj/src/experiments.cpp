#include "obstacle_fem/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace obstacle_fem {

using nlohmann::json;

namespace {

bool is_power_of_two(int n) { return n >= 1 && (n & (n - 1)) == 0; }

int num_fields(ProblemKind kind) { return kind == ProblemKind::Biharmonic ? 3 : 5; }

std::string criterion_name(StopCriterion c) {
    switch (c) {
        case StopCriterion::RelativeResidual:
            return "relative-residual";
        case StopCriterion::AbsoluteResidual:
            return "absolute-residual";
        case StopCriterion::Increment:
            return "increment";
    }
    return "relative-residual";
}

StopCriterion parse_criterion(const std::string& s) {
    if (s == "relative-residual") return StopCriterion::RelativeResidual;
    if (s == "absolute-residual") return StopCriterion::AbsoluteResidual;
    if (s == "increment") return StopCriterion::Increment;
    throw ConfigError("newton.criterion must be relative-residual, absolute-residual or increment, got '" + s + "'");
}

RadialForcing scaled(RadialForcing f, double k) {
    f.a *= k;
    f.c *= k;
    return f;
}

// H^1 norm of each field of a stacked difference.
std::vector<double> field_h1_norms(const Mesh& mesh, std::span<const double> x, int fields) {
    const std::size_t nv = mesh.num_vertices();
    std::vector<double> out;
    for (int f = 0; f < fields; ++f) out.push_back(h1_norm(mesh, x.subspan(static_cast<std::size_t>(f) * nv, nv)));
    return out;
}

double root_sum_squares(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

json mesh_stats(const Mesh& mesh) {
    return {{"vertices", mesh.num_vertices()},
            {"triangles", mesh.num_triangles()},
            {"nominal_h", mesh.nominal_h},
            {"max_edge", mesh.h},
            {"area", mesh.total_area()}};
}

template <typename T>
void read_field(const json& j, const char* key, T& dst) {
    if (!j.contains(key)) return;
    try {
        dst = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

template <typename T>
void read_optional(const json& j, const char* key, std::optional<T>& dst) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    T v{};
    read_field(j, key, v);
    dst = v;
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
            throw ConfigError("unknown config key '" + where + it.key() + "'");
    }
}

}  // namespace

std::string problem_name(ProblemKind kind) { return kind == ProblemKind::Biharmonic ? "biharmonic" : "shell"; }

ProblemKind parse_problem(const std::string& name) {
    if (name == "biharmonic" || name == "plate") return ProblemKind::Biharmonic;
    if (name == "shell") return ProblemKind::Shell;
    throw ConfigError("problem must be 'biharmonic' or 'shell', got '" + name + "'");
}

ExperimentConfig ExperimentConfig::resolved() const {
    ExperimentConfig c = *this;
    const bool plate = problem == ProblemKind::Biharmonic;
    if (!c.kappa0) c.kappa0 = plate ? 1.5e-9 : 6.0e-9;
    if (!c.cauchy_tol) c.cauchy_tol = plate ? 6.0e-5 : 2.0e-4;
    if (!c.sweep_coefficient) c.sweep_coefficient = plate ? 0.25 : 0.5;
    if (c.ells.empty()) c.ells = plate ? std::vector<int>{0, 40, 80, 120, 160, 199} : std::vector<int>{0, 2, 5, 10, 20, 39};
    if (!c.obstacle) c.obstacle = plate ? "constant" : "flat";
    if (!c.forcing) c.forcing = plate ? plate_batch_forcing() : shell_batch_forcing();
    c.validate();
    return c;
}

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (!(radius > 0.0) || !std::isfinite(radius)) fail("radius must be positive");
    if (!is_power_of_two(n)) fail("n must be a power of two >= 1");
    if (!is_power_of_two(n_start) || !is_power_of_two(n_max) || n_start > n_max) fail("n_start <= n_max must be powers of two");
    if (!is_power_of_two(force_n)) fail("force_n must be a power of two >= 1");
    if (kappa0 && !(*kappa0 > 0.0)) fail("kappa0 must be positive");
    if (halvings < 0) fail("halvings must be nonnegative");
    if (!(q > 0.0 && q < 0.5)) fail("q must lie in (0, 1/2)");
    if (cauchy_tol && !(*cauchy_tol > 0.0)) fail("cauchy_tol must be positive");
    if (sweep_coefficient && !std::isfinite(*sweep_coefficient)) fail("sweep_coefficient must be finite");
    for (int ell : ells)
        if (ell < 0) fail("ells must be nonnegative");
    if (!(load_scale >= 0.0) || !std::isfinite(load_scale)) fail("load_scale must be finite and nonnegative");
    if (!(contact_tol > 0.0)) fail("contact_tol must be positive");
    if (!std::isfinite(obstacle_value) || !std::isfinite(wedge_apex)) fail("obstacle levels must be finite");
    if (obstacle) {
        const bool plate = problem == ProblemKind::Biharmonic;
        const bool ok = plate ? (*obstacle == "constant" || *obstacle == "two-planes") : (*obstacle == "flat" || *obstacle == "wedge");
        if (!ok) fail("obstacle '" + *obstacle + "' is not valid for problem " + problem_name(problem));
    }
    if (forcing && (!std::isfinite(forcing->a) || !std::isfinite(forcing->c) || !(forcing->s >= 0.0)))
        fail("forcing needs finite a, c and s >= 0");
    try {
        shell.validate();
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }
    if (!(newton.tol > 0.0) || newton.max_iter < 1 || newton.max_halvings < 0 || !(newton.linear_rel_tol > 0.0))
        fail("newton options must be positive");
}

ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown(j,
                   {"problem", "radius", "n", "kappa0", "halvings", "warm_start", "q", "n_start", "n_max", "cauchy_tol",
                    "force_n", "ells", "sweep_coefficient", "load_scale", "contact_tol", "obstacle", "obstacle_value",
                    "wedge_apex", "forcing", "shell", "newton", "out", "write_vtk"},
                   "");
    ExperimentConfig c;
    if (j.contains("problem")) {
        std::string p;
        read_field(j, "problem", p);
        c.problem = parse_problem(p);
    }
    read_field(j, "radius", c.radius);
    read_field(j, "n", c.n);
    read_optional(j, "kappa0", c.kappa0);
    read_field(j, "halvings", c.halvings);
    read_field(j, "warm_start", c.warm_start);
    read_field(j, "q", c.q);
    read_field(j, "n_start", c.n_start);
    read_field(j, "n_max", c.n_max);
    read_optional(j, "cauchy_tol", c.cauchy_tol);
    read_field(j, "force_n", c.force_n);
    read_field(j, "ells", c.ells);
    read_optional(j, "sweep_coefficient", c.sweep_coefficient);
    read_field(j, "load_scale", c.load_scale);
    read_field(j, "contact_tol", c.contact_tol);
    read_optional(j, "obstacle", c.obstacle);
    read_field(j, "obstacle_value", c.obstacle_value);
    read_field(j, "wedge_apex", c.wedge_apex);
    if (j.contains("forcing") && !j.at("forcing").is_null()) {
        const auto& f = j.at("forcing");
        if (!f.is_object()) throw ConfigError("forcing must be an object {a, c, s} describing a|y|^2 + c on |y|^2 < s");
        reject_unknown(f, {"a", "c", "s"}, "forcing.");
        RadialForcing rf;
        read_field(f, "a", rf.a);
        read_field(f, "c", rf.c);
        if (f.contains("s") && !f.at("s").is_null()) read_field(f, "s", rf.s);
        c.forcing = rf;
    }
    if (j.contains("shell")) {
        const auto& s = j.at("shell");
        if (!s.is_object()) throw ConfigError("shell must be an object");
        reject_unknown(s, {"epsilon", "lambda", "mu", "z0"}, "shell.");
        read_field(s, "epsilon", c.shell.epsilon);
        read_field(s, "lambda", c.shell.lambda);
        read_field(s, "mu", c.shell.mu);
        read_field(s, "z0", c.shell.z0);
    }
    if (j.contains("newton")) {
        const auto& s = j.at("newton");
        if (!s.is_object()) throw ConfigError("newton must be an object");
        reject_unknown(s, {"tol", "max_iter", "max_halvings", "criterion", "linear_rel_tol"}, "newton.");
        read_field(s, "tol", c.newton.tol);
        read_field(s, "max_iter", c.newton.max_iter);
        read_field(s, "max_halvings", c.newton.max_halvings);
        read_field(s, "linear_rel_tol", c.newton.linear_rel_tol);
        if (s.contains("criterion")) {
            std::string name;
            read_field(s, "criterion", name);
            c.newton.criterion = parse_criterion(name);
        }
    }
    if (j.contains("out")) {
        std::string out;
        read_field(j, "out", out);
        c.out = out;
    }
    read_field(j, "write_vtk", c.write_vtk);
    c.validate();
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["problem"] = problem_name(c.problem);
    j["radius"] = c.radius;
    j["n"] = c.n;
    j["kappa0"] = c.kappa0 ? json(*c.kappa0) : json(nullptr);
    j["halvings"] = c.halvings;
    j["warm_start"] = c.warm_start;
    j["q"] = c.q;
    j["n_start"] = c.n_start;
    j["n_max"] = c.n_max;
    j["cauchy_tol"] = c.cauchy_tol ? json(*c.cauchy_tol) : json(nullptr);
    j["force_n"] = c.force_n;
    j["ells"] = c.ells;
    j["sweep_coefficient"] = c.sweep_coefficient ? json(*c.sweep_coefficient) : json(nullptr);
    j["load_scale"] = c.load_scale;
    j["contact_tol"] = c.contact_tol;
    j["obstacle"] = c.obstacle ? json(*c.obstacle) : json(nullptr);
    j["obstacle_value"] = c.obstacle_value;
    j["wedge_apex"] = c.wedge_apex;
    if (c.forcing) {
        j["forcing"] = {{"a", c.forcing->a}, {"c", c.forcing->c}, {"s", std::isfinite(c.forcing->s) ? json(c.forcing->s) : json(nullptr)}};
    } else {
        j["forcing"] = nullptr;
    }
    j["shell"] = {{"epsilon", c.shell.epsilon}, {"lambda", c.shell.lambda}, {"mu", c.shell.mu}, {"z0", c.shell.z0}};
    j["newton"] = {{"tol", c.newton.tol},
                   {"max_iter", c.newton.max_iter},
                   {"max_halvings", c.newton.max_halvings},
                   {"criterion", criterion_name(c.newton.criterion)},
                   {"linear_rel_tol", c.newton.linear_rel_tol}};
    j["out"] = c.out.string();
    j["write_vtk"] = c.write_vtk;
    return j;
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::string text = config_to_json(cfg).dump();
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<double> ConvergenceReport::column(const std::string& col) const {
    const auto it = std::find(columns.begin(), columns.end(), col);
    if (it == columns.end()) throw std::out_of_range("report has no column '" + col + "'");
    const auto idx = static_cast<std::size_t>(it - columns.begin());
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(r[idx]);
    return out;
}

ScalarObstacle configured_obstacle(const ExperimentConfig& cfg) {
    if (cfg.obstacle.value_or("constant") == "two-planes") return ScalarObstacle::two_planes();
    return ScalarObstacle::constant(cfg.obstacle_value);
}

std::vector<HalfSpaceConstraint> configured_constraints(const ExperimentConfig& cfg) {
    if (cfg.obstacle.value_or("flat") == "wedge") return HalfSpaceConstraint::wedge(cfg.wedge_apex);
    return {HalfSpaceConstraint::flat()};
}

RadialForcing sweep_forcing_for(const ExperimentConfig& cfg, int ell) {
    const double coefficient = cfg.sweep_coefficient.value_or(cfg.problem == ProblemKind::Biharmonic ? 0.25 : 0.5);
    return sweep_forcing(coefficient, ell);
}

SolveOutcome solve_configured(const ExperimentConfig& cfg, const Mesh& mesh, double kappa,
                              const std::optional<std::vector<double>>& initial, std::optional<RadialForcing> forcing_override) {
    const RadialForcing f = scaled(forcing_override.value_or(cfg.forcing.value_or(
                                       cfg.problem == ProblemKind::Biharmonic ? plate_batch_forcing() : shell_batch_forcing())),
                                   cfg.load_scale);
    SolveOutcome out;
    const std::size_t nv = mesh.num_vertices();
    if (cfg.problem == ProblemKind::Biharmonic) {
        const auto obstacle = configured_obstacle(cfg);
        std::optional<BiharmonicState> init;
        if (initial) init = BiharmonicState::from_stacked(*initial, nv);
        auto sol = solve_biharmonic(mesh, kappa, obstacle, DivergencePotential(f), cfg.newton, init);
        out.stacked = sol.state.stacked();
        out.report = std::move(sol.report);
        out.violation = constraint_violation(sol.state, mesh, obstacle);
        out.mixed_gap = mixed_gap(mesh, sol.state.u, sol.state.xi);
        out.contact_area = contact_area(sol.state, mesh, obstacle, cfg.contact_tol);
        out.min_gap = min_gap(sol.state, mesh, obstacle);
    } else {
        const auto constraints = configured_constraints(cfg);
        std::optional<ShellState> init;
        if (initial) init = ShellState::from_stacked(*initial, nv);
        ShellSolution sol;
        try {
            sol = solve_shell(mesh, cfg.shell, kappa, constraints, ShellLoads::transverse(f, cfg.shell.epsilon), cfg.newton, init);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        out.stacked = sol.state.stacked();
        out.report = std::move(sol.report);
        out.violation = constraint_violation(sol.state, mesh, cfg.shell, constraints);
        out.mixed_gap = mixed_gap(mesh, sol.state.zeta[2], sol.state.xi);
        out.contact_area = contact_area(sol.state, mesh, cfg.shell, constraints, cfg.contact_tol);
        out.min_gap = min_gap(sol.state, mesh, cfg.shell, constraints);
    }
    return out;
}

namespace {

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

json base_metadata(const ExperimentConfig& cfg, const std::string& kind) {
    return {{"experiment", kind}, {"config", config_to_json(cfg)}, {"config_hash", config_hash(cfg)}};
}

std::vector<std::string> field_names(ProblemKind kind) {
    if (kind == ProblemKind::Biharmonic) return {"u", "xi1", "xi2"};
    return {"zeta1", "zeta2", "zeta3", "xi1", "xi2"};
}

}  // namespace

ConvergenceReport run_kappa_sweep(const ExperimentConfig& raw) {
    const ExperimentConfig cfg = raw.resolved();
    if (cfg.halvings < 2) throw ConfigError("kappa sweep needs at least 2 halvings");
    const Timer timer;
    const Mesh mesh = build_disk_mesh(cfg.n, cfg.radius);
    const int fields = num_fields(cfg.problem);
    const std::size_t count = static_cast<std::size_t>(cfg.halvings) + 1;
    std::vector<double> kappas(count);
    for (std::size_t k = 0; k < count; ++k) kappas[k] = *cfg.kappa0 / std::pow(2.0, static_cast<double>(k));

    std::vector<std::optional<SolveOutcome>> outcomes(count);
    std::vector<std::string> errors(count);
    auto solve_one = [&](std::size_t k, const std::optional<std::vector<double>>& init) {
        try {
            outcomes[k] = solve_configured(cfg, mesh, kappas[k], init);
        } catch (const NewtonError& e) {
            errors[k] = e.what();
        } catch (const LinearSolveError& e) {
            errors[k] = e.what();
        }
    };
    if (cfg.warm_start) {
        for (std::size_t k = 0; k < count; ++k) {
            solve_one(k, k > 0 && outcomes[k - 1] ? std::optional<std::vector<double>>(outcomes[k - 1]->stacked) : std::nullopt);
            if (!outcomes[k]) break;
        }
    } else {
        parallel_for(count, [&](std::size_t k) { solve_one(k, std::nullopt); });
    }

    ConvergenceReport report;
    report.name = "kappa_sweep_" + problem_name(cfg.problem);
    report.columns = {"kappa", "error", "error_state"};
    for (const auto& f : field_names(cfg.problem)) report.columns.push_back("error_" + f);
    for (const char* c : {"iterations", "violation", "mixed_gap", "final_residual"}) report.columns.emplace_back(c);

    for (std::size_t k = 0; k + 1 < count; ++k) {
        if (!outcomes[k] || !outcomes[k + 1]) {
            const std::size_t bad = outcomes[k] ? k + 1 : k;
            report.failures.push_back("kappa=" + std::to_string(kappas[bad]) + ": " + errors[bad]);
            break;
        }
        std::vector<double> diff(outcomes[k]->stacked.size());
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = outcomes[k]->stacked[i] - outcomes[k + 1]->stacked[i];
        const auto per_field = field_h1_norms(mesh, diff, fields);
        const double primal = cfg.problem == ProblemKind::Biharmonic
                                  ? per_field[0]
                                  : root_sum_squares(std::span<const double>(per_field.data(), 3));
        std::vector<double> row{kappas[k], primal, root_sum_squares(per_field)};
        row.insert(row.end(), per_field.begin(), per_field.end());
        const auto& o = *outcomes[k];
        row.push_back(o.report.iterations);
        row.push_back(o.violation);
        row.push_back(o.mixed_gap);
        row.push_back(o.report.residual_history.empty() ? 0.0 : o.report.residual_history.back());
        report.rows.push_back(std::move(row));
    }
    report.terminated = report.failures.empty();
    report.metadata = base_metadata(cfg, "kappa-sweep");
    report.metadata["mesh"] = mesh_stats(mesh);
    report.metadata["wall_time_s"] = timer.seconds();
    report.metadata["failures"] = report.failures;
    return report;
}

ConvergenceReport run_h_cauchy(const ExperimentConfig& raw) {
    const ExperimentConfig cfg = raw.resolved();
    const Timer timer;
    ConvergenceReport report;
    report.name = "h_cauchy_" + problem_name(cfg.problem);
    report.columns = {"h", "n", "kappa", "error", "iterations", "violation", "mixed_gap"};
    const int primal_fields = cfg.problem == ProblemKind::Biharmonic ? 1 : 3;

    Mesh coarse = build_disk_mesh(cfg.n_start, cfg.radius);
    SolveOutcome coarse_sol;
    json meshes = json::array();
    try {
        coarse_sol = solve_configured(cfg, coarse, std::pow(coarse.nominal_h, cfg.q));
    } catch (const NewtonError& e) {
        report.failures.push_back(e.what());
    } catch (const LinearSolveError& e) {
        report.failures.push_back(e.what());
    }
    meshes.push_back(mesh_stats(coarse));
    report.terminated = false;
    for (int n = cfg.n_start * 2; report.failures.empty() && n <= cfg.n_max; n *= 2) {
        Mesh fine = refine(coarse);
        const double kappa = std::pow(fine.nominal_h, cfg.q);
        SolveOutcome fine_sol;
        try {
            fine_sol = solve_configured(cfg, fine, kappa);
        } catch (const NewtonError& e) {
            report.failures.push_back(e.what());
            break;
        } catch (const LinearSolveError& e) {
            report.failures.push_back(e.what());
            break;
        }
        meshes.push_back(mesh_stats(fine));
        const std::size_t nc = coarse.num_vertices();
        const std::size_t nf = fine.num_vertices();
        double err2 = 0.0;
        for (int f = 0; f < primal_fields; ++f) {
            const auto coarse_f = std::span<const double>(coarse_sol.stacked).subspan(static_cast<std::size_t>(f) * nc, nc);
            auto d = interpolate(coarse, coarse_f, fine);
            for (std::size_t i = 0; i < nf; ++i) d[i] -= fine_sol.stacked[static_cast<std::size_t>(f) * nf + i];
            const double e = h1_norm(fine, d);
            err2 += e * e;
        }
        const double err = std::sqrt(err2);
        report.rows.push_back({fine.nominal_h, static_cast<double>(n), kappa, err, static_cast<double>(fine_sol.report.iterations),
                               fine_sol.violation, fine_sol.mixed_gap});
        coarse = std::move(fine);
        coarse_sol = std::move(fine_sol);
        if (err < *cfg.cauchy_tol) {
            report.terminated = true;
            break;
        }
    }
    report.metadata = base_metadata(cfg, "h-cauchy");
    report.metadata["meshes"] = meshes;
    report.metadata["threshold"] = *cfg.cauchy_tol;
    report.metadata["terminated"] = report.terminated;
    report.metadata["wall_time_s"] = timer.seconds();
    report.metadata["failures"] = report.failures;
    return report;
}

ConvergenceReport run_force_sweep(const ExperimentConfig& raw) {
    const ExperimentConfig cfg = raw.resolved();
    const Timer timer;
    const Mesh mesh = build_disk_mesh(cfg.force_n, cfg.radius);
    const double kappa = std::pow(mesh.nominal_h, cfg.q);
    std::vector<int> ells = cfg.ells;
    std::sort(ells.begin(), ells.end());
    ells.erase(std::unique(ells.begin(), ells.end()), ells.end());

    std::vector<std::optional<SolveOutcome>> outcomes(ells.size());
    std::vector<std::string> errors(ells.size());
    parallel_for(ells.size(), [&](std::size_t i) {
        try {
            outcomes[i] = solve_configured(cfg, mesh, kappa, std::nullopt, sweep_forcing_for(cfg, ells[i]));
        } catch (const NewtonError& e) {
            errors[i] = e.what();
        } catch (const LinearSolveError& e) {
            errors[i] = e.what();
        }
    });

    ConvergenceReport report;
    report.name = "force_sweep_" + problem_name(cfg.problem);
    report.columns = {"ell", "contact_area", "min_gap", "violation", "mixed_gap", "iterations"};
    const std::filesystem::path vtk_dir = cfg.out / report.name;
    if (cfg.write_vtk) std::filesystem::create_directories(vtk_dir);
    const auto names = field_names(cfg.problem);
    const std::size_t nv = mesh.num_vertices();
    for (std::size_t i = 0; i < ells.size(); ++i) {
        if (!outcomes[i]) {
            report.failures.push_back("ell=" + std::to_string(ells[i]) + ": " + errors[i]);
            continue;
        }
        const auto& o = *outcomes[i];
        report.rows.push_back({static_cast<double>(ells[i]), o.contact_area, o.min_gap, o.violation, o.mixed_gap,
                               static_cast<double>(o.report.iterations)});
        if (!cfg.write_vtk) continue;
        char file[32];
        std::snprintf(file, sizeof file, "ell_%03d.vtk", ells[i]);
        std::vector<VtkField> fields;
        for (std::size_t f = 0; f < names.size(); ++f)
            fields.push_back({names[f], 1, std::vector<double>(o.stacked.begin() + static_cast<std::ptrdiff_t>(f * nv),
                                                               o.stacked.begin() + static_cast<std::ptrdiff_t>((f + 1) * nv))});
        if (cfg.problem == ProblemKind::Shell) {
            const auto state = ShellState::from_stacked(o.stacked, nv);
            export_vtk(mesh, deformed_surface(state, mesh, cfg.shell), fields, vtk_dir / file);
        } else {
            std::vector<Vec3> pts(nv);
            for (std::size_t v = 0; v < nv; ++v) pts[v] = {mesh.vertices[v].x, mesh.vertices[v].y, o.stacked[v]};
            export_vtk(mesh, pts, fields, vtk_dir / file);
        }
    }
    report.terminated = report.failures.empty();
    report.metadata = base_metadata(cfg, "force-sweep");
    report.metadata["mesh"] = mesh_stats(mesh);
    report.metadata["kappa"] = kappa;
    report.metadata["contact_tol"] = cfg.contact_tol;
    report.metadata["wall_time_s"] = timer.seconds();
    report.metadata["failures"] = report.failures;
    return report;
}

namespace {

std::string fmt_exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void export_vtk(const Mesh& mesh, const std::vector<Vec3>& points, const std::vector<VtkField>& fields,
                const std::filesystem::path& path) {
    const std::size_t nv = mesh.num_vertices();
    if (points.size() != nv) throw std::invalid_argument("export_vtk: point count does not match the mesh");
    for (const auto& f : fields) {
        if (f.components != 1 && f.components != 3) throw std::invalid_argument("export_vtk: fields need 1 or 3 components");
        if (f.values.size() != nv * static_cast<std::size_t>(f.components))
            throw std::invalid_argument("export_vtk: field '" + f.name + "' does not match the mesh");
        if (f.name.empty() || f.name.find_first_of(" \t\n") != std::string::npos)
            throw std::invalid_argument("export_vtk: field names must be single words");
    }
    std::ofstream os(path);
    if (!os) throw std::runtime_error("export_vtk: cannot open " + path.string());
    os << "# vtk DataFile Version 3.0\nobstacle_fem\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << nv << " double\n";
    for (const auto& p : points) os << fmt_exact(p[0]) << ' ' << fmt_exact(p[1]) << ' ' << fmt_exact(p[2]) << '\n';
    const std::size_t nt = mesh.num_triangles();
    os << "CELLS " << nt << ' ' << 4 * nt << '\n';
    for (const auto& t : mesh.triangles) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    os << "CELL_TYPES " << nt << '\n';
    for (std::size_t t = 0; t < nt; ++t) os << "5\n";
    if (!fields.empty()) os << "POINT_DATA " << nv << '\n';
    for (const auto& f : fields) {
        if (f.components == 1) {
            os << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
            for (double v : f.values) os << fmt_exact(v) << '\n';
        } else {
            os << "VECTORS " << f.name << " double\n";
            for (std::size_t v = 0; v < nv; ++v)
                os << fmt_exact(f.values[3 * v]) << ' ' << fmt_exact(f.values[3 * v + 1]) << ' ' << fmt_exact(f.values[3 * v + 2]) << '\n';
        }
    }
    if (!os) throw std::runtime_error("export_vtk: write failed for " + path.string());
}

void export_vtk(const Mesh& mesh, const std::vector<VtkField>& fields, const std::filesystem::path& path) {
    std::vector<Vec3> pts(mesh.num_vertices());
    for (std::size_t v = 0; v < pts.size(); ++v) pts[v] = {mesh.vertices[v].x, mesh.vertices[v].y, 0.0};
    export_vtk(mesh, pts, fields, path);
}

VtkData read_vtk(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_vtk: cannot open " + path.string());
    auto fail = [&](const std::string& m) { throw std::runtime_error("read_vtk: " + m); };
    std::string line;
    std::getline(is, line);
    if (line.rfind("# vtk DataFile Version", 0) != 0) fail("missing header");
    std::getline(is, line);  // title
    std::getline(is, line);
    if (line != "ASCII") fail("only ASCII files are supported");
    std::string word;
    is >> word >> line;
    if (word != "DATASET" || line != "UNSTRUCTURED_GRID") fail("expected DATASET UNSTRUCTURED_GRID");
    VtkData d;
    std::size_t npts = 0;
    while (is >> word) {
        if (word == "POINTS") {
            is >> npts >> line;
            d.points.resize(npts);
            for (auto& p : d.points) is >> p[0] >> p[1] >> p[2];
        } else if (word == "CELLS") {
            std::size_t nc = 0, total = 0;
            is >> nc >> total;
            if (total != 4 * nc) fail("only triangle cells are supported");
            d.cells.resize(nc);
            for (auto& c : d.cells) {
                int k = 0;
                is >> k >> c[0] >> c[1] >> c[2];
                if (k != 3) fail("cell with " + std::to_string(k) + " nodes");
            }
        } else if (word == "CELL_TYPES") {
            std::size_t nc = 0;
            is >> nc;
            d.cell_types.resize(nc);
            for (auto& t : d.cell_types) is >> t;
        } else if (word == "POINT_DATA") {
            std::size_t n = 0;
            is >> n;
            if (n != npts) fail("POINT_DATA count differs from POINTS");
        } else if (word == "SCALARS") {
            VtkField f;
            int comps = 1;
            is >> f.name >> line >> comps >> word >> line;  // LOOKUP_TABLE default
            if (comps != 1) fail("multi-component SCALARS are not supported");
            f.values.resize(npts);
            for (auto& v : f.values) is >> v;
            d.fields.push_back(std::move(f));
        } else if (word == "VECTORS") {
            VtkField f;
            f.components = 3;
            is >> f.name >> line;
            f.values.resize(3 * npts);
            for (auto& v : f.values) is >> v;
            d.fields.push_back(std::move(f));
        } else {
            fail("unexpected keyword " + word);
        }
        if (!is) fail("truncated section " + word);
    }
    return d;
}

std::string format_csv(const ConvergenceReport& report) {
    std::ostringstream os;
    for (std::size_t c = 0; c < report.columns.size(); ++c) os << (c ? "," : "") << report.columns[c];
    os << '\n';
    char buf[40];
    for (const auto& row : report.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            std::snprintf(buf, sizeof buf, "%.10e", row[c]);
            os << (c ? "," : "") << buf;
        }
        os << '\n';
    }
    return os.str();
}

void export_csv(const ConvergenceReport& report, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("export_csv: cannot open " + path.string());
    os << format_csv(report);
    if (!os) throw std::runtime_error("export_csv: write failed for " + path.string());
}

void write_report(const ExperimentConfig& cfg, const ConvergenceReport& report) {
    std::filesystem::create_directories(cfg.out);
    export_csv(report, cfg.out / (report.name + ".csv"));
    json meta = report.metadata;
    meta["columns"] = report.columns;
    meta["rows"] = report.rows.size();
    meta["terminated"] = report.terminated;
    std::ofstream os(cfg.out / (report.name + ".json"));
    if (!os) throw std::runtime_error("write_report: cannot open metadata file in " + cfg.out.string());
    os << meta.dump(2) << '\n';
}

int thread_limit() {
    const char* env = std::getenv("OBSTACLE_FEM_THREADS");
    if (env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 1) throw ConfigError(std::string("OBSTACLE_FEM_THREADS must be a positive integer, got '") + env + "'");
        return static_cast<int>(std::min<long>(v, 1024));
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_limit()), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace obstacle_fem
