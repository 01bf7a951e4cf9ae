#include "obstacle_fem/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>

namespace obstacle_fem {

namespace {

// Loads far beyond the default sweeps, so that the obstacle is actually
// touched and the semismooth branches are exercised.
constexpr double kPlateContactScale = 2000.0;
constexpr double kShellContactScale = 40.0;

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::vector<double> random_vector(std::size_t n, double amplitude, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-amplitude, amplitude);
    std::vector<double> x(n);
    for (auto& v : x) v = d(rng);
    return x;
}

void zero_dofs(std::vector<double>& x, const std::vector<int>& dofs) {
    for (int d : dofs) x[static_cast<std::size_t>(d)] = 0.0;
}

// Relative l2 distance between the residual and a central difference of the energy.
template <typename Problem>
double fd_gradient_error(const Problem& p, std::vector<double> x) {
    const auto r = p.residual(x);
    const double h = 1e-6 * norm2(x);
    std::vector<bool> fixed(x.size(), false);
    for (int d : p.dirichlet_dofs()) fixed[static_cast<std::size_t>(d)] = true;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (fixed[i]) continue;
        const double xi = x[i];
        x[i] = xi + h;
        const double ep = p.energy(x);
        x[i] = xi - h;
        const double em = p.energy(x);
        x[i] = xi;
        const double g = (ep - em) / (2.0 * h);
        num += (g - r[i]) * (g - r[i]);
        den += r[i] * r[i];
    }
    return std::sqrt(num / den);
}

double stacked_h1(const Mesh& mesh, std::span<const double> x) {
    const std::size_t nv = mesh.num_vertices();
    double s = 0.0;
    for (std::size_t f = 0; f * nv < x.size(); ++f) {
        const double e = h1_norm(mesh, x.subspan(f * nv, nv));
        s += e * e;
    }
    return std::sqrt(s);
}

ExperimentConfig base(ProblemKind kind) {
    ExperimentConfig c;
    c.problem = kind;
    return c.resolved();
}

PropertyResult jacobian_symmetry() {
    std::mt19937_64 rng(11);
    const Mesh mesh = build_disk_mesh(4, 0.5);
    const BiharmonicProblem plate(mesh, 0.05, ScalarObstacle::constant(0.0), DivergencePotential(plate_batch_forcing()));
    auto x = random_vector(plate.size(), 0.3, rng);
    zero_dofs(x, plate.dirichlet_dofs());
    const double a1 = plate.jacobian(x).max_asymmetry();
    const ShellProblem shell(mesh, ShellParams{}, 0.05, HalfSpaceConstraint::wedge(-0.15),
                             ShellLoads::transverse(shell_batch_forcing(), 0.001));
    auto y = random_vector(shell.size(), 0.3, rng);
    zero_dofs(y, shell.dirichlet_dofs());
    const double a2 = shell.jacobian(y).max_asymmetry();
    return {"jacobian symmetric (exact)", a1 == 0.0 && a2 == 0.0,
            "max|J-J^T| plate " + fmt("%.3g", a1) + ", shell " + fmt("%.3g", a2)};
}

PropertyResult gradient_consistency() {
    std::mt19937_64 rng(12);
    const Mesh mesh = build_disk_mesh(4, 0.5);
    const BiharmonicProblem plate(mesh, 0.05, ScalarObstacle::constant(0.0), DivergencePotential(plate_batch_forcing()));
    auto x = random_vector(plate.size(), 0.3, rng);
    zero_dofs(x, plate.dirichlet_dofs());
    const double e1 = fd_gradient_error(plate, x);
    const ShellProblem shell(mesh, ShellParams{}, 0.05, HalfSpaceConstraint::wedge(-0.15),
                             ShellLoads::transverse(shell_batch_forcing(), 0.001));
    auto y = random_vector(shell.size(), 0.3, rng);
    zero_dofs(y, shell.dirichlet_dofs());
    const double e2 = fd_gradient_error(shell, y);
    return {"residual = finite-difference energy gradient", e1 <= 1e-5 && e2 <= 1e-5,
            "relative error plate " + fmt("%.2e", e1) + ", shell " + fmt("%.2e", e2)};
}

PropertyResult newton_reference_configs() {
    struct Case {
        std::string label;
        ExperimentConfig cfg;
        double kappa;
        std::optional<RadialForcing> forcing;
    };
    std::vector<Case> cases;
    const double h16 = 0.5 / 16.0;
    {
        auto c = base(ProblemKind::Biharmonic);
        cases.push_back({"plate kappa-sweep", c, 3.7e-10, std::nullopt});
        for (double q : {0.1, 0.2, 0.3, 0.4}) cases.push_back({"plate h-sweep q=" + fmt("%.1f", q), c, std::pow(h16, q), std::nullopt});
        c.obstacle = "two-planes";
        cases.push_back({"plate force ell=199", c, std::pow(h16, 0.3), sweep_forcing(0.25, 199)});
    }
    {
        auto c = base(ProblemKind::Shell);
        cases.push_back({"shell kappa-sweep", c, 1.5e-9, std::nullopt});
        for (double q : {0.1, 0.2, 0.3, 0.4}) cases.push_back({"shell h-sweep q=" + fmt("%.1f", q), c, std::pow(h16, q), std::nullopt});
        cases.push_back({"shell force ell=39", c, std::pow(h16, 0.3), sweep_forcing(0.5, 39)});
        c.obstacle = "wedge";
        cases.push_back({"shell wedge ell=39", c, std::pow(h16, 0.3), sweep_forcing(0.5, 39)});
    }
    const Mesh mesh = build_disk_mesh(16, 0.5);
    bool ok = true;
    int worst = 0;
    std::ostringstream detail;
    for (const auto& cs : cases) {
        try {
            const auto o = solve_configured(cs.cfg, mesh, cs.kappa, std::nullopt, cs.forcing);
            const auto& h = o.report.residual_history;
            const bool good = o.report.converged && o.report.iterations <= 30 && h.back() <= cs.cfg.newton.tol * h.front();
            worst = std::max(worst, o.report.iterations);
            if (!good) {
                ok = false;
                detail << cs.label << " failed (" << o.report.iterations << " it); ";
            }
        } catch (const std::exception& e) {
            ok = false;
            detail << cs.label << ": " << e.what() << "; ";
        }
    }
    detail << cases.size() << " configs at n=16, max " << worst << " iterations";
    return {"Newton reaches 1e-8 within 30 iterations", ok, detail.str()};
}

PropertyResult initial_guess_independence() {
    std::mt19937_64 rng(13);
    const Mesh mesh = build_disk_mesh(16, 0.5);
    const double kappa = std::pow(mesh.nominal_h, 0.3);
    bool ok = true;
    std::ostringstream detail;
    for (ProblemKind kind : {ProblemKind::Biharmonic, ProblemKind::Shell}) {
        auto cfg = base(kind);
        const bool plate = kind == ProblemKind::Biharmonic;
        cfg.obstacle = plate ? "two-planes" : "flat";
        cfg.load_scale = plate ? kPlateContactScale : kShellContactScale;
        const auto f = plate ? sweep_forcing(0.25, 199) : sweep_forcing(0.5, 39);
        const auto a = solve_configured(cfg, mesh, kappa, std::nullopt, f);
        auto start = random_vector(a.stacked.size(), plate ? 0.5 : 0.05, rng);
        const auto b = solve_configured(cfg, mesh, kappa, start, f);
        std::vector<double> d(a.stacked.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = a.stacked[i] - b.stacked[i];
        const double rel = stacked_h1(mesh, d) / stacked_h1(mesh, a.stacked);
        ok = ok && rel <= 1e-10 && a.contact_area > 0.0;
        detail << problem_name(kind) << " rel diff " << fmt("%.2e", rel) << " (contact area " << fmt("%.3g", a.contact_area) << "); ";
    }
    return {"solution independent of the initial guess", ok, detail.str()};
}

PropertyResult zero_load() {
    const Mesh mesh = build_disk_mesh(16, 0.5);
    double worst = 0.0;
    for (ProblemKind kind : {ProblemKind::Biharmonic, ProblemKind::Shell}) {
        auto cfg = base(kind);
        const auto o = solve_configured(cfg, mesh, 1e-3, std::nullopt, RadialForcing{0.0, 0.0});
        for (double v : o.stacked) worst = std::max(worst, std::abs(v));
    }
    return {"zero load gives the zero solution", worst == 0.0, "max |x| = " + fmt("%.3g", worst)};
}

PropertyResult lambda_zero() {
    const Mesh mesh = build_disk_mesh(8, 0.5);
    ShellParams p;
    p.lambda = 0.0;
    const double a = assemble_shell_linear_parts(mesh, p, 1e-3).div_div.max_abs();
    const double b = assemble_shell_linear_parts(mesh, ShellParams{}, 1e-3).div_div.max_abs();
    return {"lambda = 0 removes the div-div blocks", a == 0.0 && b > 0.0,
            "max |div-div| " + fmt("%.3g", a) + " (lambda = 0.4: " + fmt("%.3g", b) + ")"};
}

PropertyResult rotational_symmetry() {
    const Mesh mesh = build_disk_mesh(16, 0.5);
    auto cfg = base(ProblemKind::Shell);
    cfg.load_scale = kShellContactScale;
    const double kappa = std::pow(mesh.nominal_h, 0.3);
    const auto o = solve_configured(cfg, mesh, kappa, std::nullopt, sweep_forcing(0.5, 39));
    const std::size_t nv = mesh.num_vertices();
    const auto key = [](Point2 p) {
        return std::pair<long long, long long>{std::llround(p.x * 1e9), std::llround(p.y * 1e9)};
    };
    std::map<std::pair<long long, long long>, std::size_t> index;
    for (std::size_t v = 0; v < nv; ++v) index[key(mesh.vertices[v])] = v;
    double scale = 0.0;
    for (std::size_t v = 0; v < nv; ++v) scale = std::max(scale, std::abs(o.stacked[2 * nv + v]));
    double worst = 0.0;
    std::size_t missing = 0;
    const double c = 0.5, s = std::sqrt(3.0) / 2.0;
    for (std::size_t v = 0; v < nv; ++v) {
        const Point2 p = mesh.vertices[v];
        const auto it = index.find(key({c * p.x - s * p.y, s * p.x + c * p.y}));
        if (it == index.end()) {
            ++missing;
            continue;
        }
        worst = std::max(worst, std::abs(o.stacked[2 * nv + v] - o.stacked[2 * nv + it->second]));
    }
    const double rel = worst / scale;
    return {"radial shell load gives a rotationally symmetric zeta3", missing == 0 && rel <= 1e-8 && o.contact_area > 0.0,
            "max rel difference under 60 deg rotation " + fmt("%.2e", rel) + ", unmatched vertices " + std::to_string(missing)};
}

}  // namespace

std::vector<PropertyResult> run_property_suite() {
    std::vector<PropertyResult> out;
    for (auto* prop : {jacobian_symmetry, gradient_consistency, newton_reference_configs, initial_guess_independence, zero_load,
                       lambda_zero, rotational_symmetry}) {
        try {
            out.push_back(prop());
        } catch (const std::exception& e) {
            out.push_back({"property raised", false, e.what()});
        }
    }
    return out;
}

}  // namespace obstacle_fem
