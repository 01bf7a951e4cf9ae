#include "obstacle_fem/fem.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace obstacle_fem;

namespace {

std::vector<double> sample(const Mesh& m, double (*f)(Point2)) {
    std::vector<double> u(m.num_vertices());
    for (std::size_t v = 0; v < u.size(); ++v) u[v] = f(m.vertices[v]);
    return u;
}

double affine(Point2 p) { return 0.3 + 2.0 * p.x - 1.5 * p.y; }

Mesh single_triangle(Point2 a, Point2 b, Point2 c) {
    Mesh m;
    m.vertices = {a, b, c};
    m.triangles = {{0, 1, 2}};
    m.boundary = {true, true, true};
    return m;
}

}  // namespace

TEST(Element, ReferenceTriangle) {
    const auto g = element_geometry(single_triangle({0, 0}, {1, 0}, {0, 1}), 0);
    EXPECT_DOUBLE_EQ(g.area, 0.5);
    const auto k = element_laplacian(g);
    const double kref[3][3] = {{1.0, -0.5, -0.5}, {-0.5, 0.5, 0.0}, {-0.5, 0.0, 0.5}};
    const auto m = element_mass(g.area);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            EXPECT_NEAR(k[i][j], kref[i][j], 1e-14);
            EXPECT_NEAR(m[i][j], (i == j ? 2.0 : 1.0) / 24.0, 1e-14);
        }
}

TEST(Element, GeneralTriangleProperties) {
    const auto g = element_geometry(single_triangle({0.1, 0.2}, {0.7, -0.1}, {0.3, 0.9}), 0);
    const auto k = element_laplacian(g);
    for (int i = 0; i < 3; ++i) {
        double row = 0.0;
        for (int j = 0; j < 3; ++j) {
            row += k[i][j];
            EXPECT_EQ(k[i][j], k[j][i]);
        }
        EXPECT_NEAR(row, 0.0, 1e-14);
    }
    double total = 0.0;
    for (const auto& r : element_mass(g.area))
        for (double v : r) total += v;
    EXPECT_NEAR(total, g.area, 1e-15);
}

TEST(Quadrature, MidpointRuleIsExactForQuadratics) {
    const auto q = quadrature(2);
    ASSERT_EQ(q.points.size(), 3u);
    double w = 0.0, l2 = 0.0, l1l2 = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        w += q.weights[i];
        l2 += q.weights[i] * q.points[i][0] * q.points[i][0];
        l1l2 += q.weights[i] * q.points[i][0] * q.points[i][1];
    }
    EXPECT_NEAR(w, 1.0, 1e-15);
    // (1/|T|) int lambda_i^2 = 1/6, (1/|T|) int lambda_i lambda_j = 1/12
    EXPECT_NEAR(l2, 1.0 / 6.0, 1e-15);
    EXPECT_NEAR(l1l2, 1.0 / 12.0, 1e-15);
    EXPECT_THROW(quadrature(5), std::invalid_argument);
}

TEST(Assembly, LaplacianAnnihilatesAffineOffBoundary) {
    const Mesh m = build_disk_mesh(8, 0.5);
    const auto k = assemble_laplacian(m);
    const auto y = spmv(k, sample(m, affine));
    for (std::size_t v = 0; v < m.num_vertices(); ++v)
        if (!m.boundary[v]) EXPECT_NEAR(y[v], 0.0, 1e-13);
    EXPECT_EQ(k.max_asymmetry(), 0.0);
}

TEST(Assembly, MassIntegratesProducts) {
    const Mesh m = build_disk_mesh(8, 0.5);
    const auto mass = assemble_mass(m);
    const std::vector<double> one(m.num_vertices(), 1.0);
    EXPECT_NEAR(mass.quadratic_form(one), m.total_area(), 1e-14);
    const auto x = sample(m, [](Point2 p) { return p.x; });
    const auto y = sample(m, [](Point2 p) { return p.y; });
    // int x y over a mesh symmetric under y -> -y vanishes
    EXPECT_NEAR(dot(x, spmv(mass, y)), 0.0, 1e-15);
}

TEST(Assembly, GradientCouplingOfAffineField) {
    const Mesh m = build_disk_mesh(4, 0.5);
    const auto u = sample(m, affine);
    const std::vector<double> one(m.num_vertices(), 1.0);
    // sum_ij u_i B_b(i, j) = int d_b u = const * area
    const double dx = dot(u, spmv(assemble_gradient_coupling(m, 0), one));
    const double dy = dot(u, spmv(assemble_gradient_coupling(m, 1), one));
    EXPECT_NEAR(dx, 2.0 * m.total_area(), 1e-13);
    EXPECT_NEAR(dy, -1.5 * m.total_area(), 1e-13);
}

TEST(Assembly, DerivativeProductsAreTransposes) {
    const Mesh m = build_disk_mesh(4, 0.5);
    const auto d01 = assemble_derivative_product(m, 0, 1).to_dense();
    const auto d10 = assemble_derivative_product(m, 1, 0).to_dense();
    const std::size_t n = m.num_vertices();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) EXPECT_EQ(d01[i * n + j], d10[j * n + i]);
    const auto d00 = assemble_derivative_product(m, 0, 0);
    const auto d11 = assemble_derivative_product(m, 1, 1);
    const auto k = assemble_laplacian(m);
    const auto s = add(d00, d11);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(s.at(i, j), k.at(i, j), 1e-14);
}

TEST(Norms, AffineField) {
    const Mesh m = build_disk_mesh(8, 0.5);
    const auto x = sample(m, [](Point2 p) { return p.x; });
    EXPECT_NEAR(h1_seminorm(m, x), std::sqrt(m.total_area()), 1e-14);
    const std::vector<double> one(m.num_vertices(), 1.0);
    EXPECT_NEAR(l2_norm(m, one), std::sqrt(m.total_area()), 1e-14);
    EXPECT_NEAR(h1_norm(m, one), std::sqrt(m.total_area()), 1e-14);
}

TEST(Interpolate, ReproducesAffineFields) {
    const Mesh c = build_disk_mesh(4, 0.5);
    const Mesh f = refine(c);
    const auto u = interpolate(c, sample(c, affine), f);
    for (std::size_t v = 0; v < f.num_vertices(); ++v) EXPECT_NEAR(u[v], affine(f.vertices[v]), 1e-13);
}

TEST(Interpolate, RejectsWrongLength) {
    const Mesh c = build_disk_mesh(2, 0.5);
    EXPECT_THROW(interpolate(c, std::vector<double>(3, 0.0), refine(c)), std::invalid_argument);
}

TEST(Dirichlet, EliminatesRowsAndColumns) {
    const Mesh m = build_disk_mesh(2, 0.5);
    const auto k = assemble_laplacian(m);
    const auto dofs = boundary_dofs(m, 1);
    std::vector<double> b(m.num_vertices(), 1.0);
    const auto [a, rhs] = apply_dirichlet(k, b, dofs);
    for (int d : dofs) {
        const auto i = static_cast<std::size_t>(d);
        EXPECT_EQ(rhs[i], 0.0);
        for (std::size_t j = 0; j < m.num_vertices(); ++j) {
            EXPECT_EQ(a.at(i, j), i == j ? 1.0 : 0.0);
            EXPECT_EQ(a.at(j, i), i == j ? 1.0 : 0.0);
        }
    }
    EXPECT_EQ(a.max_asymmetry(), 0.0);
    EXPECT_EQ(boundary_dofs(m, 3).size(), 3 * dofs.size());
}

TEST(Dirichlet, PoissonConvergesToDiskSolution) {
    // -lap u = 1, u = 0 on r = 1/2: u = (1/4 - r^2) / 4
    double prev = 1.0;
    for (int n : {4, 8, 16, 32}) {
        const Mesh m = build_disk_mesh(n, 0.5);
        const auto mass = assemble_mass(m);
        const auto b = spmv(mass, std::vector<double>(m.num_vertices(), 1.0));
        const auto [a, rhs] = apply_dirichlet(assemble_laplacian(m), b, boundary_dofs(m, 1));
        const auto u = solve_spd(a, rhs);
        std::vector<double> e(u.size());
        for (std::size_t v = 0; v < u.size(); ++v) {
            const auto p = m.vertices[v];
            e[v] = u[v] - (0.25 - p.x * p.x - p.y * p.y) / 4.0;
        }
        const double err = l2_norm(m, e);
        EXPECT_LT(err, prev / 3.0);
        prev = err;
    }
}

TEST(BlockAssembler, PlacesBlocks) {
    const Mesh m = build_disk_mesh(1, 0.5);
    const auto k = assemble_laplacian(m);
    BlockAssembler ba(m.num_vertices(), 2);
    ba.add_symmetric_pair(k, 0, 1, 2.0);
    const auto a = ba.build();
    EXPECT_EQ(a.rows(), 14u);
    EXPECT_EQ(a.at(0, 7), 2.0 * k.at(0, 0));
    EXPECT_EQ(a.at(8, 0), 2.0 * k.at(0, 1));
    EXPECT_EQ(a.at(0, 0), 0.0);
}
