#include "obstacle_fem/shell.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace obstacle_fem {

void ShellParams::validate() const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("shell: epsilon must be positive");
    if (!(mu > 0.0)) throw std::invalid_argument("shell: mu must be positive");
    if (!(lambda >= 0.0)) throw std::invalid_argument("shell: lambda must be nonnegative");
    if (!std::isfinite(z0)) throw std::invalid_argument("shell: z0 must be finite");
}

std::vector<HalfSpaceConstraint> HalfSpaceConstraint::wedge(double apex_z) {
    const double a = std::sqrt(5.0) / 5.0;
    const double b = 2.0 * std::sqrt(5.0) / 5.0;
    return {{{-a, 0.0, b}, b * apex_z}, {{a, 0.0, b}, b * apex_z}};
}

void validate_constraints(std::span<const HalfSpaceConstraint> constraints) {
    if (constraints.empty()) throw std::invalid_argument("shell: at least one half-space is required");
    for (const auto& c : constraints) {
        const double n = std::sqrt(c.q[0] * c.q[0] + c.q[1] * c.q[1] + c.q[2] * c.q[2]);
        if (std::abs(n - 1.0) > 1e-12) throw std::invalid_argument("shell: half-space normal is not a unit vector");
        if (!std::isfinite(c.level)) throw std::invalid_argument("shell: half-space level must be finite");
    }
}

double reference_clearance(const Mesh& mesh, const ShellParams& params, std::span<const HalfSpaceConstraint> constraints) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& v : mesh.vertices)
        for (const auto& c : constraints) m = std::min(m, c.gap({v.x, v.y, params.z0}));
    return m;
}

ShellLoads ShellLoads::transverse(const RadialForcing& g, double epsilon) {
    ShellLoads loads;
    loads.P = DivergencePotential(g, epsilon * epsilon * epsilon);
    return loads;
}

ShellState ShellState::zero(std::size_t nv) {
    ShellState s;
    for (auto& z : s.zeta) z.assign(nv, 0.0);
    for (auto& x : s.xi) x.assign(nv, 0.0);
    return s;
}

ShellState ShellState::from_stacked(std::span<const double> x, std::size_t nv) {
    if (x.size() != 5 * nv) throw std::invalid_argument("ShellState: stacked vector has the wrong length");
    ShellState s;
    for (int f = 0; f < 5; ++f) {
        auto part = x.subspan(static_cast<std::size_t>(f) * nv, nv);
        auto& dst = f < 3 ? s.zeta[static_cast<std::size_t>(f)] : s.xi[static_cast<std::size_t>(f - 3)];
        dst.assign(part.begin(), part.end());
    }
    return s;
}

std::vector<double> ShellState::stacked() const {
    std::vector<double> x;
    x.reserve(5 * zeta[0].size());
    for (const auto& z : zeta) x.insert(x.end(), z.begin(), z.end());
    for (const auto& z : xi) x.insert(x.end(), z.begin(), z.end());
    return x;
}

Strain membrane_strain(const Mesh& mesh, std::size_t t, std::span<const double> zeta1, std::span<const double> zeta2) {
    const auto g = element_geometry(mesh, t);
    const Point2 g1 = element_gradient(g, mesh, zeta1, t);
    const Point2 g2 = element_gradient(g, mesh, zeta2, t);
    const double shear = 0.5 * (g1.y + g2.x);
    return {{{g1.x, shear}, {shear, g2.y}}};
}

Vec3 penalty_beta(const Vec3& x, std::span<const HalfSpaceConstraint> constraints) {
    Vec3 beta{0.0, 0.0, 0.0};
    for (const auto& c : constraints) {
        const double neg = negative_part(c.gap(x));
        for (int k = 0; k < 3; ++k) beta[k] -= neg * c.q[k];
    }
    return beta;
}

ShellLinearParts assemble_shell_linear_parts(const Mesh& mesh, const ShellParams& params, double kappa) {
    params.validate();
    if (!(kappa > 0.0)) throw std::invalid_argument("assemble_shell_linear_blocks: kappa must be positive");
    const std::size_t nv = mesh.num_vertices();
    const double eps = params.epsilon;
    const double eps3 = eps * eps * eps;
    const double k = params.lame_ratio();
    const double four_mu = 4.0 * params.mu;

    const auto stiffness = assemble_laplacian(mesh);
    const auto mass = assemble_mass(mesh);
    std::array<std::array<CsrMatrix, 2>, 2> d;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) d[a][b] = assemble_derivative_product(mesh, a, b);

    BlockAssembler div_div(nv, 5);
    BlockAssembler rest(nv, 5);
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            div_div.add_block(d[a][b], a, b, eps * k);
            div_div.add_block(d[a][b], 3 + a, 3 + b, eps3 / 3.0 * k);
            // e(phi e_a) : e(phi e_b) = (delta_ab grad.grad + d_b phi_i d_a phi_j) / 2
            rest.add_block(d[b][a], a, b, eps * four_mu * 0.5);
        }
        rest.add_block(stiffness, a, a, eps * four_mu * 0.5);
        rest.add_block(stiffness, 3 + a, 3 + a, eps3 / 3.0 * four_mu);
        rest.add_block(mass, 3 + a, 3 + a, eps3 / kappa);
        rest.add_symmetric_pair(assemble_gradient_coupling(mesh, a), 2, 3 + a, -eps3 / kappa);
    }
    rest.add_block(stiffness, 2, 2, eps3 * kappa + eps3 / kappa);
    return {div_div.build(), rest.build()};
}

CsrMatrix assemble_shell_linear_blocks(const Mesh& mesh, const ShellParams& params, double kappa) {
    const auto parts = assemble_shell_linear_parts(mesh, params, kappa);
    return add(parts.div_div, parts.rest);
}

ShellProblem::ShellProblem(const Mesh& mesh, const ShellParams& params, double kappa,
                           std::vector<HalfSpaceConstraint> constraints, const ShellLoads& loads)
    : mesh_(&mesh), params_(params), kappa_(kappa), constraints_(std::move(constraints)) {
    params_.validate();
    if (!(kappa > 0.0)) throw std::invalid_argument("ShellProblem: kappa must be positive");
    validate_constraints(constraints_);
    const double clearance = reference_clearance(mesh, params_, constraints_);
    if (!(clearance > 0.0)) {
        std::ostringstream msg;
        msg << "ShellProblem: reference surface is not strictly inside the admissible set (min gap " << clearance << ")";
        throw std::invalid_argument(msg.str());
    }
    linear_ = assemble_shell_linear_blocks(mesh, params_, kappa);
    dirichlet_ = boundary_dofs(mesh, 5);

    const std::size_t nv = mesh.num_vertices();
    load_.assign(5 * nv, 0.0);
    const auto rule = quadrature(2);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const double area = mesh.signed_area(t);
        const auto& tri = mesh.triangles[t];
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const Point2 P = loads.P(map_point(mesh, t, rule.points[q]));
            const double w = area * rule.weights[q];
            for (int i = 0; i < 3; ++i) {
                const double phi = w * rule.points[q][i];
                load_[tri[i]] += loads.p_alpha[0] * phi;
                load_[nv + tri[i]] += loads.p_alpha[1] * phi;
                load_[3 * nv + tri[i]] -= (P.x + loads.s_alpha[0]) * phi;
                load_[4 * nv + tri[i]] -= (P.y + loads.s_alpha[1]) * phi;
            }
        }
    }
}

template <typename F>
void ShellProblem::for_each_qp_gap(std::span<const double> x, F&& f) const {
    const Mesh& mesh = *mesh_;
    const std::size_t nv = mesh.num_vertices();
    const auto rule = quadrature(2);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const double area = mesh.signed_area(t);
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const auto& bq = rule.points[q];
            const Point2 y = map_point(mesh, t, bq);
            const Vec3 pos{y.x + eval_p1(mesh, x.subspan(0, nv), t, bq), y.y + eval_p1(mesh, x.subspan(nv, nv), t, bq),
                           params_.z0 + eval_p1(mesh, x.subspan(2 * nv, nv), t, bq)};
            for (const auto& c : constraints_) f(t, bq, area * rule.weights[q], c, c.gap(pos));
        }
    }
}

double ShellProblem::energy(std::span<const double> x) const {
    const Mesh& mesh = *mesh_;
    const std::size_t nv = mesh.num_vertices();
    std::array<std::span<const double>, 5> fld;
    for (std::size_t f = 0; f < 5; ++f) fld[f] = x.subspan(f * nv, nv);
    const double eps = params_.epsilon;
    const double eps3 = eps * eps * eps;
    const double k = params_.lame_ratio();
    const double four_mu = 4.0 * params_.mu;
    const auto rule = quadrature(2);

    double e = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto g = element_geometry(mesh, t);
        std::array<Point2, 5> grad;
        for (std::size_t f = 0; f < 5; ++f) grad[f] = element_gradient(g, mesh, fld[f], t);
        const double shear = 0.5 * (grad[0].y + grad[1].x);
        const double div_h = grad[0].x + grad[1].y;
        const double ee = grad[0].x * grad[0].x + grad[1].y * grad[1].y + 2.0 * shear * shear;
        const double div_xi = grad[3].x + grad[4].y;
        const double gg = grad[3].x * grad[3].x + grad[3].y * grad[3].y + grad[4].x * grad[4].x + grad[4].y * grad[4].y;
        const double g3 = grad[2].x * grad[2].x + grad[2].y * grad[2].y;
        double local = eps * (k * div_h * div_h + four_mu * ee);
        local += eps3 / 3.0 * (k * div_xi * div_xi + four_mu * gg);
        local += eps3 * kappa_ * g3;
        double gap = 0.0;
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const double dx = eval_p1(mesh, fld[3], t, rule.points[q]) - grad[2].x;
            const double dy = eval_p1(mesh, fld[4], t, rule.points[q]) - grad[2].y;
            gap += rule.weights[q] * (dx * dx + dy * dy);
        }
        local += eps3 / kappa_ * gap;
        e += 0.5 * g.area * local;
    }
    double pen = 0.0;
    for_each_qp_gap(x, [&](std::size_t, const std::array<double, 3>&, double w, const HalfSpaceConstraint&, double s) {
        const double neg = negative_part(s);
        pen += w * neg * neg;
    });
    return e + 0.5 * eps3 / kappa_ * pen - dot(load_, x);
}

std::vector<double> ShellProblem::residual(std::span<const double> x) const {
    const Mesh& mesh = *mesh_;
    const std::size_t nv = mesh.num_vertices();
    auto r = spmv(linear_, x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= load_[i];
    const double scale = params_.epsilon * params_.epsilon * params_.epsilon / kappa_;
    for_each_qp_gap(x, [&](std::size_t t, const std::array<double, 3>& bq, double w, const HalfSpaceConstraint& c, double s) {
        const double neg = negative_part(s);
        if (neg == 0.0) return;
        const auto& tri = mesh.triangles[t];
        for (std::size_t comp = 0; comp < 3; ++comp) {
            if (c.q[comp] == 0.0) continue;
            for (int i = 0; i < 3; ++i) r[comp * nv + tri[i]] -= scale * w * neg * c.q[comp] * bq[i];
        }
    });
    for (int d : dirichlet_) r[static_cast<std::size_t>(d)] = 0.0;
    return r;
}

CsrMatrix ShellProblem::jacobian(std::span<const double> x) const {
    const Mesh& mesh = *mesh_;
    const int nv = static_cast<int>(mesh.num_vertices());
    const double scale = params_.epsilon * params_.epsilon * params_.epsilon / kappa_;
    std::vector<Triplet> active;
    for_each_qp_gap(x, [&](std::size_t t, const std::array<double, 3>& bq, double w, const HalfSpaceConstraint& c, double s) {
        if (!(s < 0.0)) return;  // kink treated as inactive
        const auto& tri = mesh.triangles[t];
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                const double qq = c.q[a] * c.q[b];
                if (qq == 0.0) continue;
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j)
                        active.push_back({a * nv + tri[i], b * nv + tri[j], scale * w * qq * (bq[i] * bq[j])});
            }
        }
    });
    CsrMatrix jac = linear_;
    if (!active.empty()) jac = add(linear_, CsrMatrix::from_triplets(active, size(), size()));
    const std::vector<double> zero(size(), 0.0);
    return apply_dirichlet(jac, zero, dirichlet_).first;
}

NewtonProblem ShellProblem::as_newton_problem() const {
    return {[this](std::span<const double> x) { return energy(x); },
            [this](std::span<const double> x) { return residual(x); },
            [this](std::span<const double> x) { return jacobian(x); },
            norm2(residual(std::vector<double>(size(), 0.0)))};
}

ShellSolution solve_shell(const Mesh& mesh, const ShellParams& params, double kappa,
                          const std::vector<HalfSpaceConstraint>& constraints, const ShellLoads& loads,
                          const NewtonOptions& options, const std::optional<ShellState>& initial) {
    const ShellProblem problem(mesh, params, kappa, constraints, loads);
    std::vector<double> x0 = initial ? initial->stacked() : std::vector<double>(problem.size(), 0.0);
    for (int d : problem.dirichlet_dofs()) x0[static_cast<std::size_t>(d)] = 0.0;
    auto result = newton(problem.as_newton_problem(), std::move(x0), options);
    return {ShellState::from_stacked(result.x, mesh.num_vertices()), std::move(result.report)};
}

namespace {

Vec3 surface_point(const ShellState& s, const ShellParams& params, Point2 y, std::size_t v) {
    return {y.x + s.zeta[0][v], y.y + s.zeta[1][v], params.z0 + s.zeta[2][v]};
}

}  // namespace

double constraint_violation(const ShellState& state, const Mesh& mesh, const ShellParams& params,
                            std::span<const HalfSpaceConstraint> constraints) {
    const auto rule = quadrature(2);
    double total = 0.0;
    for (const auto& c : constraints) {
        double s = 0.0;
        for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
            const double area = mesh.signed_area(t);
            for (std::size_t q = 0; q < rule.points.size(); ++q) {
                const auto& bq = rule.points[q];
                const Point2 y = map_point(mesh, t, bq);
                const Vec3 pos{y.x + eval_p1(mesh, state.zeta[0], t, bq), y.y + eval_p1(mesh, state.zeta[1], t, bq),
                               params.z0 + eval_p1(mesh, state.zeta[2], t, bq)};
                const double neg = negative_part(c.gap(pos));
                s += area * rule.weights[q] * neg * neg;
            }
        }
        total += std::sqrt(s);
    }
    return total;
}

double contact_area(const ShellState& state, const Mesh& mesh, const ShellParams& params,
                    std::span<const HalfSpaceConstraint> constraints, double tol) {
    std::vector<bool> touching(mesh.num_vertices(), false);
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        const Vec3 pos = surface_point(state, params, mesh.vertices[v], v);
        for (const auto& c : constraints) touching[v] = touching[v] || c.gap(pos) <= tol;
    }
    double area = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        if (touching[tri[0]] && touching[tri[1]] && touching[tri[2]]) area += mesh.signed_area(t);
    }
    return area;
}

double min_gap(const ShellState& state, const Mesh& mesh, const ShellParams& params,
               std::span<const HalfSpaceConstraint> constraints) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        const Vec3 pos = surface_point(state, params, mesh.vertices[v], v);
        for (const auto& c : constraints) m = std::min(m, c.gap(pos));
    }
    return m;
}

std::vector<Vec3> deformed_surface(const ShellState& state, const Mesh& mesh, const ShellParams& params) {
    std::vector<Vec3> out(mesh.num_vertices());
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) out[v] = surface_point(state, params, mesh.vertices[v], v);
    return out;
}

ShellLoads scaled_loads(std::array<double, 2> f_alpha, const RadialForcing& f3, double epsilon) {
    const double eps3 = epsilon * epsilon * epsilon;
    ShellLoads loads;
    loads.p_alpha = {2.0 * eps3 * f_alpha[0], 2.0 * eps3 * f_alpha[1]};
    loads.P = DivergencePotential(f3, 2.0 * eps3 * epsilon);
    return loads;
}

ShellState descale(const ShellState& state, double epsilon) {
    ShellState out = state;
    for (int a = 0; a < 2; ++a)
        for (auto& v : out.zeta[a]) v /= epsilon * epsilon;
    for (auto& v : out.zeta[2]) v /= epsilon;
    for (auto& x : out.xi)
        for (auto& v : x) v /= epsilon;
    return out;
}

}  // namespace obstacle_fem
