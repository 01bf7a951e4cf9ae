#pragma once

#include "obstacle_fem/biharmonic.hpp"
#include "obstacle_fem/shell.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace obstacle_fem {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ProblemKind { Biharmonic, Shell };

/**
 * Everything a sweep needs. Unset optional fields take per-problem defaults
 * (see resolved()). JSON keys mirror the field names.
 */
struct ExperimentConfig {
    ProblemKind problem = ProblemKind::Biharmonic;
    double radius = 0.5;

    // kappa sweep
    int n = 8;
    std::optional<double> kappa0;  // 1.5e-9 plate, 6.0e-9 shell
    int halvings = 7;
    bool warm_start = false;

    // h sweep: nested meshes n_start, 2 n_start, ..., n_max with kappa = h^q
    double q = 0.3;
    int n_start = 8;
    int n_max = 64;
    std::optional<double> cauchy_tol;  // 6.0e-5 plate, 2.0e-4 shell

    // force sweep at (force_n, q)
    int force_n = 16;
    std::vector<int> ells;  // defaults {0,40,...,199} plate, {0,2,5,10,20,39} shell
    std::optional<double> sweep_coefficient;  // 0.25 plate, 0.5 shell
    double load_scale = 1.0;
    double contact_tol = 1e-8;

    // obstacle: "constant" or "two-planes" (plate); "flat" or "wedge" (shell)
    std::optional<std::string> obstacle;
    double obstacle_value = -1.0;
    double wedge_apex = -0.15;

    // forcing of the kappa and h sweeps; defaults to the batch forcing
    std::optional<RadialForcing> forcing;

    ShellParams shell;
    NewtonOptions newton;

    std::filesystem::path out = "out";
    bool write_vtk = true;

    /// Copy with all per-problem defaults filled in. Throws ConfigError.
    ExperimentConfig resolved() const;
    /// Throws ConfigError on any inconsistent value.
    void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
/// 64-bit FNV-1a of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);
std::string problem_name(ProblemKind kind);
ProblemKind parse_problem(const std::string& name);

/// Rows ordered by the sweep parameter; the first column is the parameter.
struct ConvergenceReport {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    /// False when an h sweep ran out of meshes above the threshold.
    bool terminated = true;
    std::vector<std::string> failures;
    nlohmann::json metadata;

    std::vector<double> column(const std::string& name) const;
};

/// Solver-agnostic view of one solve.
struct SolveOutcome {
    std::vector<double> stacked;
    NewtonReport report;
    double violation = 0.0;
    double mixed_gap = 0.0;
    double contact_area = 0.0;
    double min_gap = 0.0;
};

/// One solve of the configured problem on `mesh` with penalty `kappa`.
SolveOutcome solve_configured(const ExperimentConfig& cfg, const Mesh& mesh, double kappa,
                              const std::optional<std::vector<double>>& initial = std::nullopt,
                              std::optional<RadialForcing> forcing_override = std::nullopt);

/// Obstacle / constraints and loads the configuration describes.
ScalarObstacle configured_obstacle(const ExperimentConfig& cfg);
std::vector<HalfSpaceConstraint> configured_constraints(const ExperimentConfig& cfg);
RadialForcing sweep_forcing_for(const ExperimentConfig& cfg, int ell);

/**
 * kappa_k = kappa0 / 2^k, k = 0..halvings. Row k holds kappa_k and the H^1
 * norms of x(kappa_k) - x(kappa_{k+1}): "error" is u (plate) or zeta
 * (shell); "error_state" the full stacked state; per-field columns follow.
 * Diagnostics (iterations, violation, mixed gap) refer to x(kappa_k).
 */
ConvergenceReport run_kappa_sweep(const ExperimentConfig& cfg);

/**
 * Meshes n_start, 2 n_start, ... up to n_max with kappa = h^q, h = r_A / n.
 * Row j holds the fine h and the H^1 norm, on the fine mesh, of the
 * interpolated coarse primal solution minus the fine one.
 */
ConvergenceReport run_h_cauchy(const ExperimentConfig& cfg);

/// One solve per ell at (force_n, q); rows (ell, contact area, min gap, ...).
/// When `vtk_dir` is set a VTK file per ell is written there.
ConvergenceReport run_force_sweep(const ExperimentConfig& cfg);

/// Point-data field: 1 component (scalars) or 3 (vectors).
struct VtkField {
    std::string name;
    int components = 1;
    std::vector<double> values;  // vertex-major
};

/// Legacy ASCII VTK 3.0 unstructured grid of triangles (cell type 5).
void export_vtk(const Mesh& mesh, const std::vector<Vec3>& points, const std::vector<VtkField>& fields,
                const std::filesystem::path& path);
void export_vtk(const Mesh& mesh, const std::vector<VtkField>& fields, const std::filesystem::path& path);

struct VtkData {
    std::vector<Vec3> points;
    std::vector<std::array<int, 3>> cells;
    std::vector<int> cell_types;
    std::vector<VtkField> fields;
};
/// Reads back what export_vtk writes. Throws std::runtime_error on malformed input.
VtkData read_vtk(const std::filesystem::path& path);

/// CSV with a header row and every value in %.10e.
void export_csv(const ConvergenceReport& report, const std::filesystem::path& path);
std::string format_csv(const ConvergenceReport& report);

/// Writes <out>/<name>.csv and <out>/<name>.json (config, hash, metadata).
void write_report(const ExperimentConfig& cfg, const ConvergenceReport& report);

struct PropertyResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// The validation suite behind the `validate` subcommand.
std::vector<PropertyResult> run_property_suite();

/// Thread cap from OBSTACLE_FEM_THREADS (>= 1), else hardware concurrency.
int thread_limit();

/// Runs fn(i) for i in [0, count) on at most thread_limit() threads.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace obstacle_fem
