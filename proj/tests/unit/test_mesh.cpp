#include "obstacle_fem/mesh.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace obstacle_fem;

TEST(Mesh, HexagonFan) {
    const Mesh m = build_disk_mesh(1, 0.5);
    EXPECT_EQ(m.num_vertices(), 7u);
    EXPECT_EQ(m.num_triangles(), 6u);
    EXPECT_DOUBLE_EQ(m.nominal_h, 0.5);
    EXPECT_NEAR(m.h, 0.5, 1e-15);
    EXPECT_FALSE(check_mesh_invariants(m));
}

class MeshLevels : public ::testing::TestWithParam<int> {};

TEST_P(MeshLevels, CountsAndInvariants) {
    const int n = GetParam();
    const Mesh m = build_disk_mesh(n, 0.5);
    EXPECT_EQ(m.num_triangles(), 6u * n * n);
    EXPECT_EQ(m.boundary_vertices().size(), 6u * n);
    // Euler characteristic of a disk
    const auto e = mesh_edges(m);
    EXPECT_EQ(static_cast<long>(m.num_vertices()) - static_cast<long>(e.size()) + static_cast<long>(m.num_triangles()), 1);
    EXPECT_FALSE(check_mesh_invariants(m)) << *check_mesh_invariants(m);
    EXPECT_DOUBLE_EQ(m.nominal_h, 0.5 / n);
    EXPECT_DOUBLE_EQ(m.h, max_edge_length(m));
    for (std::size_t t = 0; t < m.num_triangles(); ++t) EXPECT_GT(m.signed_area(t), 0.0);
    for (int v : m.boundary_vertices()) {
        const auto p = m.vertices[static_cast<std::size_t>(v)];
        EXPECT_NEAR(std::hypot(p.x, p.y), 0.5, 1e-14);
    }
}

INSTANTIATE_TEST_SUITE_P(Levels, MeshLevels, ::testing::Values(1, 2, 4, 8, 16, 32));

TEST(Mesh, AreaConvergesToDisk) {
    const double disk = std::numbers::pi * 0.25;
    double prev = 1.0;
    for (int n : {2, 4, 8, 16, 32, 64}) {
        const double err = disk - build_disk_mesh(n, 0.5).total_area();
        EXPECT_GT(err, 0.0);
        EXPECT_LT(err, prev / 3.5);  // O(h^2)
        prev = err;
    }
}

TEST(Mesh, RefineMatchesBuild) {
    const Mesh a = refine(build_disk_mesh(4, 0.5));
    const Mesh b = build_disk_mesh(8, 0.5);
    ASSERT_EQ(a.num_vertices(), b.num_vertices());
    ASSERT_EQ(a.triangles, b.triangles);
    for (std::size_t v = 0; v < a.num_vertices(); ++v) {
        EXPECT_EQ(a.vertices[v].x, b.vertices[v].x);
        EXPECT_EQ(a.vertices[v].y, b.vertices[v].y);
    }
    EXPECT_DOUBLE_EQ(a.nominal_h, b.nominal_h);
}

TEST(Mesh, RefineKeepsParentVertices) {
    const Mesh c = build_disk_mesh(4, 0.5);
    const Mesh f = refine(c);
    for (std::size_t v = 0; v < c.num_vertices(); ++v) {
        EXPECT_EQ(c.vertices[v].x, f.vertices[v].x);
        EXPECT_EQ(c.vertices[v].y, f.vertices[v].y);
    }
}

TEST(Mesh, RejectsBadResolution) {
    EXPECT_THROW(build_disk_mesh(3, 0.5), MeshError);
    EXPECT_THROW(build_disk_mesh(0, 0.5), MeshError);
    EXPECT_THROW(build_disk_mesh(4, -1.0), MeshError);
}

TEST(Mesh, InvariantCheckerFlagsClockwiseTriangle) {
    Mesh m = build_disk_mesh(2, 0.5);
    std::swap(m.triangles[0][1], m.triangles[0][2]);
    EXPECT_TRUE(check_mesh_invariants(m));
}

TEST(Mesh, LocatorAgreesWithBruteForce) {
    const Mesh m = build_disk_mesh(8, 0.5);
    const PointLocator loc(m);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(-0.55, 0.55);
    for (int k = 0; k < 2000; ++k) {
        const Point2 p{d(rng), d(rng)};
        // brute force: any triangle with all barycentrics >= -1e-12
        bool inside = false;
        for (std::size_t t = 0; t < m.num_triangles() && !inside; ++t) {
            const auto b = barycentric_coordinates(m, t, p);
            inside = b[0] >= -1e-12 && b[1] >= -1e-12 && b[2] >= -1e-12;
        }
        const auto a = locate_point(m, p);
        const auto c = loc.locate(p);
        EXPECT_EQ(static_cast<bool>(a), inside);
        ASSERT_EQ(static_cast<bool>(a), static_cast<bool>(c));
        if (!a) continue;
        EXPECT_EQ(a->triangle, c->triangle);
        double s = 0.0;
        for (double b : a->barycentric) {
            EXPECT_GE(b, -1e-12);
            s += b;
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(Mesh, BarycentricReproducesVertices) {
    const Mesh m = build_disk_mesh(2, 0.5);
    for (std::size_t t = 0; t < m.num_triangles(); ++t)
        for (int i = 0; i < 3; ++i) {
            const auto b = barycentric_coordinates(m, t, m.vertices[m.triangles[t][i]]);
            for (int j = 0; j < 3; ++j) EXPECT_NEAR(b[j], i == j ? 1.0 : 0.0, 1e-13);
        }
}
