#include "obstacle_fem/biharmonic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace obstacle_fem {

BiharmonicState BiharmonicState::zero(std::size_t num_vertices) {
    return {ScalarField(num_vertices, 0.0), {ScalarField(num_vertices, 0.0), ScalarField(num_vertices, 0.0)}};
}

BiharmonicState BiharmonicState::from_stacked(std::span<const double> x, std::size_t nv) {
    if (x.size() != 3 * nv) throw std::invalid_argument("BiharmonicState: stacked vector has the wrong length");
    BiharmonicState s;
    s.u.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(nv));
    s.xi[0].assign(x.begin() + static_cast<std::ptrdiff_t>(nv), x.begin() + static_cast<std::ptrdiff_t>(2 * nv));
    s.xi[1].assign(x.begin() + static_cast<std::ptrdiff_t>(2 * nv), x.end());
    return s;
}

std::vector<double> BiharmonicState::stacked() const {
    std::vector<double> x;
    x.reserve(3 * u.size());
    x.insert(x.end(), u.begin(), u.end());
    x.insert(x.end(), xi[0].begin(), xi[0].end());
    x.insert(x.end(), xi[1].begin(), xi[1].end());
    return x;
}

CsrMatrix assemble_linear_blocks(const Mesh& mesh, double kappa) {
    if (!(kappa > 0.0)) throw std::invalid_argument("assemble_linear_blocks: kappa must be positive");
    const auto stiffness = assemble_laplacian(mesh);
    const auto mass = assemble_mass(mesh);
    BlockAssembler blocks(mesh.num_vertices(), 3);
    blocks.add_block(stiffness, 0, 0, kappa + 1.0 / kappa);
    for (int b = 0; b < 2; ++b) {
        blocks.add_symmetric_pair(assemble_gradient_coupling(mesh, b), 0, 1 + b, -1.0 / kappa);
        blocks.add_block(stiffness, 1 + b, 1 + b, 1.0);
        blocks.add_block(mass, 1 + b, 1 + b, 1.0 / kappa);
    }
    return blocks.build();
}

BiharmonicProblem::BiharmonicProblem(const Mesh& mesh, double kappa, ScalarObstacle obstacle, DivergencePotential potential)
    : mesh_(&mesh), kappa_(kappa), obstacle_(std::move(obstacle)) {
    if (!(kappa > 0.0)) throw std::invalid_argument("BiharmonicProblem: kappa must be positive");
    linear_ = assemble_linear_blocks(mesh, kappa);
    dirichlet_ = boundary_dofs(mesh, 3);

    const auto rule = quadrature(2);
    const std::size_t nv = mesh.num_vertices();
    load_.assign(3 * nv, 0.0);
    theta_at_qp_.resize(3 * mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const double area = mesh.signed_area(t);
        const auto& tri = mesh.triangles[t];
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const Point2 y = map_point(mesh, t, rule.points[q]);
            theta_at_qp_[3 * t + q] = obstacle_(y);
            const Point2 f = potential(y);
            const double w = area * rule.weights[q];
            for (int i = 0; i < 3; ++i) {
                const double phi = rule.points[q][i];
                load_[nv + tri[i]] -= w * f.x * phi;
                load_[2 * nv + tri[i]] -= w * f.y * phi;
            }
        }
    }
}

double BiharmonicProblem::energy(std::span<const double> x) const {
    const Mesh& mesh = *mesh_;
    const std::size_t nv = mesh.num_vertices();
    const auto u = x.subspan(0, nv);
    const auto xi1 = x.subspan(nv, nv);
    const auto xi2 = x.subspan(2 * nv, nv);
    const auto rule = quadrature(2);
    double e = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto g = element_geometry(mesh, t);
        const Point2 gu = element_gradient(g, mesh, u, t);
        const Point2 g1 = element_gradient(g, mesh, xi1, t);
        const Point2 g2 = element_gradient(g, mesh, xi2, t);
        e += 0.5 * kappa_ * g.area * (gu.x * gu.x + gu.y * gu.y);
        e += 0.5 * g.area * (g1.x * g1.x + g1.y * g1.y + g2.x * g2.x + g2.y * g2.y);
        double pen = 0.0;
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const auto& bq = rule.points[q];
            const double dx = gu.x - eval_p1(mesh, xi1, t, bq);
            const double dy = gu.y - eval_p1(mesh, xi2, t, bq);
            const double neg = negative_part(eval_p1(mesh, u, t, bq) - theta_at_qp_[3 * t + q]);
            pen += rule.weights[q] * (dx * dx + dy * dy + neg * neg);
        }
        e += 0.5 / kappa_ * g.area * pen;
    }
    return e - dot(load_, x);
}

std::vector<double> BiharmonicProblem::residual(std::span<const double> x) const {
    const Mesh& mesh = *mesh_;
    const std::size_t nv = mesh.num_vertices();
    auto r = spmv(linear_, x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= load_[i];
    const auto u = x.subspan(0, nv);
    const auto rule = quadrature(2);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const double area = mesh.signed_area(t);
        const auto& tri = mesh.triangles[t];
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const auto& bq = rule.points[q];
            const double neg = negative_part(eval_p1(mesh, u, t, bq) - theta_at_qp_[3 * t + q]);
            if (neg == 0.0) continue;
            const double w = area * rule.weights[q] / kappa_;
            for (int i = 0; i < 3; ++i) r[tri[i]] -= w * neg * bq[i];
        }
    }
    for (int d : dirichlet_) r[static_cast<std::size_t>(d)] = 0.0;
    return r;
}

CsrMatrix BiharmonicProblem::jacobian(std::span<const double> x) const {
    const Mesh& mesh = *mesh_;
    const std::size_t nv = mesh.num_vertices();
    const auto u = x.subspan(0, nv);
    const auto rule = quadrature(2);
    std::vector<Triplet> active;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const double area = mesh.signed_area(t);
        const auto& tri = mesh.triangles[t];
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const auto& bq = rule.points[q];
            // The kink t = 0 is treated as inactive.
            if (!(eval_p1(mesh, u, t, bq) - theta_at_qp_[3 * t + q] < 0.0)) continue;
            const double w = area * rule.weights[q] / kappa_;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) active.push_back({tri[i], tri[j], w * (bq[i] * bq[j])});
        }
    }
    CsrMatrix jac = linear_;
    if (!active.empty()) jac = add(linear_, CsrMatrix::from_triplets(active, 3 * nv, 3 * nv));
    const std::vector<double> zero(3 * nv, 0.0);
    return apply_dirichlet(jac, zero, dirichlet_).first;
}

NewtonProblem BiharmonicProblem::as_newton_problem() const {
    return {[this](std::span<const double> x) { return energy(x); },
            [this](std::span<const double> x) { return residual(x); },
            [this](std::span<const double> x) { return jacobian(x); },
            norm2(residual(std::vector<double>(size(), 0.0)))};
}

BiharmonicSolution solve_biharmonic(const Mesh& mesh, double kappa, const ScalarObstacle& obstacle,
                                    const DivergencePotential& potential, const NewtonOptions& options,
                                    const std::optional<BiharmonicState>& initial) {
    const BiharmonicProblem problem(mesh, kappa, obstacle, potential);
    std::vector<double> x0 = initial ? initial->stacked() : std::vector<double>(problem.size(), 0.0);
    for (int d : problem.dirichlet_dofs()) x0[static_cast<std::size_t>(d)] = 0.0;
    auto result = newton(problem.as_newton_problem(), std::move(x0), options);
    return {BiharmonicState::from_stacked(result.x, mesh.num_vertices()), std::move(result.report)};
}

double constraint_violation(const BiharmonicState& state, const Mesh& mesh, const ScalarObstacle& obstacle) {
    const auto rule = quadrature(2);
    double s = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const double area = mesh.signed_area(t);
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const auto& bq = rule.points[q];
            const double neg = negative_part(eval_p1(mesh, state.u, t, bq) - obstacle(map_point(mesh, t, bq)));
            s += area * rule.weights[q] * neg * neg;
        }
    }
    return std::sqrt(s);
}

double mixed_gap(const Mesh& mesh, std::span<const double> u, const std::array<ScalarField, 2>& xi) {
    const auto rule = quadrature(2);
    double s = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto g = element_geometry(mesh, t);
        const Point2 gu = element_gradient(g, mesh, u, t);
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const double dx = gu.x - eval_p1(mesh, xi[0], t, rule.points[q]);
            const double dy = gu.y - eval_p1(mesh, xi[1], t, rule.points[q]);
            s += g.area * rule.weights[q] * (dx * dx + dy * dy);
        }
    }
    return std::sqrt(s);
}

double contact_area(const BiharmonicState& state, const Mesh& mesh, const ScalarObstacle& obstacle, double tol) {
    std::vector<bool> touching(mesh.num_vertices());
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) touching[v] = state.u[v] - obstacle(mesh.vertices[v]) <= tol;
    double area = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        if (touching[tri[0]] && touching[tri[1]] && touching[tri[2]]) area += mesh.signed_area(t);
    }
    return area;
}

double min_gap(const BiharmonicState& state, const Mesh& mesh, const ScalarObstacle& obstacle) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) m = std::min(m, state.u[v] - obstacle(mesh.vertices[v]));
    return m;
}

}  // namespace obstacle_fem
