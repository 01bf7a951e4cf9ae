#pragma once

#include "obstacle_fem/mesh.hpp"
#include "obstacle_fem/sparse.hpp"

#include <array>
#include <span>
#include <utility>
#include <vector>

namespace obstacle_fem {

/// P1 nodal coefficients, one per mesh vertex.
using ScalarField = std::vector<double>;

struct ElementGeometry {
    double area = 0.0;
    std::array<Point2, 3> grads{};
};

ElementGeometry element_geometry(const Mesh& mesh, std::size_t t);

struct QuadratureRule {
    int degree = 0;
    std::vector<std::array<double, 3>> points;  // barycentric
    std::vector<double> weights;                // sum to 1; multiply by the element area
};

/// Only degree 2 (edge-midpoint rule) is available.
QuadratureRule quadrature(int degree);

using ElementMatrix = std::array<std::array<double, 3>, 3>;

ElementMatrix element_laplacian(const ElementGeometry& g);
ElementMatrix element_mass(double area);

/// Stiffness matrix of -Laplace (no boundary conditions).
CsrMatrix assemble_laplacian(const Mesh& mesh);
/// Consistent P1 mass matrix.
CsrMatrix assemble_mass(const Mesh& mesh);
/// (i, j) -> integral of d_beta(phi_i) * phi_j.
CsrMatrix assemble_gradient_coupling(const Mesh& mesh, int beta);
/// (i, j) -> integral of d_alpha(phi_i) * d_beta(phi_j).
CsrMatrix assemble_derivative_product(const Mesh& mesh, int alpha, int beta);

/// {v}^- = -min(v, 0)
constexpr double negative_part(double v) { return v < 0.0 ? -v : 0.0; }

/**
 * Symmetric elimination of the listed dofs: their rows and columns are
 * zeroed, the diagonal set to one and the right-hand side entries to zero.
 */
std::pair<CsrMatrix, std::vector<double>> apply_dirichlet(const CsrMatrix& a, std::span<const double> b, std::span<const int> dofs);

double h1_seminorm(const Mesh& mesh, std::span<const double> u);
double l2_norm(const Mesh& mesh, std::span<const double> u);
double h1_norm(const Mesh& mesh, std::span<const double> u);

/// Evaluates the coarse P1 field at every fine vertex; fine boundary vertices
/// outside the coarse polygon are extrapolated from the nearest element.
ScalarField interpolate(const Mesh& coarse, std::span<const double> u, const Mesh& fine);

/// Value of a P1 field at barycentric point `bary` of triangle t.
inline double eval_p1(const Mesh& mesh, std::span<const double> u, std::size_t t, const std::array<double, 3>& bary) {
    const auto& tri = mesh.triangles[t];
    return bary[0] * u[tri[0]] + bary[1] * u[tri[1]] + bary[2] * u[tri[2]];
}

/// Physical coordinates of barycentric point `bary` in triangle t.
inline Point2 map_point(const Mesh& mesh, std::size_t t, const std::array<double, 3>& bary) {
    const auto& tri = mesh.triangles[t];
    const Point2 a = mesh.vertices[tri[0]], b = mesh.vertices[tri[1]], c = mesh.vertices[tri[2]];
    return {bary[0] * a.x + bary[1] * b.x + bary[2] * c.x, bary[0] * a.y + bary[1] * b.y + bary[2] * c.y};
}

/// Constant gradient of a P1 field on triangle t.
Point2 element_gradient(const ElementGeometry& g, const Mesh& mesh, std::span<const double> u, std::size_t t);

/**
 * Triplet accumulator for systems with several P1 fields stacked field-major
 * (dof = field * num_vertices + vertex).
 */
class BlockAssembler {
public:
    BlockAssembler(std::size_t num_vertices, int num_fields) : nv_(num_vertices), nf_(num_fields) {}

    void add_block(const CsrMatrix& block, int row_field, int col_field, double scale);
    /// Adds scale * block at (row, col) and its transpose at (col, row).
    void add_symmetric_pair(const CsrMatrix& block, int row_field, int col_field, double scale);
    void add(int row_field, int row_vertex, int col_field, int col_vertex, double value);

    std::size_t size() const { return nv_ * static_cast<std::size_t>(nf_); }
    CsrMatrix build() const { return CsrMatrix::from_triplets(triplets_, size(), size()); }
    std::vector<Triplet>& triplets() { return triplets_; }

private:
    std::size_t nv_;
    int nf_;
    std::vector<Triplet> triplets_;
};

/// Dofs of every boundary vertex in each of `num_fields` stacked fields.
std::vector<int> boundary_dofs(const Mesh& mesh, int num_fields);

}  // namespace obstacle_fem
