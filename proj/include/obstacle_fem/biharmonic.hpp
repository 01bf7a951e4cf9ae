#pragma once

#include "obstacle_fem/fem.hpp"
#include "obstacle_fem/loads.hpp"
#include "obstacle_fem/newton.hpp"

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace obstacle_fem {

/// Primal deflection u and dual variable xi ~ grad u, all vanishing on the boundary.
struct BiharmonicState {
    ScalarField u;
    std::array<ScalarField, 2> xi;

    static BiharmonicState zero(std::size_t num_vertices);
    static BiharmonicState from_stacked(std::span<const double> x, std::size_t num_vertices);
    std::vector<double> stacked() const;
};

/**
 * Linear part of the penalised mixed plate system over stacked (u, xi_1, xi_2):
 *
 *   u,u      (kappa + 1/kappa) K
 *   u,xi_b   -(1/kappa) B_b          B_b(i, j) = int d_b(phi_i) phi_j
 *   xi_b,xi_b K + (1/kappa) M
 *
 * with K the P1 stiffness and M the mass matrix; no boundary conditions.
 */
CsrMatrix assemble_linear_blocks(const Mesh& mesh, double kappa);

/**
 * Discrete penalised mixed biharmonic obstacle problem on a fixed mesh. The
 * energy is
 *
 *   (kappa/2)|u|_1^2 + (1/2) sum_b |xi_b|_1^2 + 1/(2 kappa) ||{u - theta}^-||^2
 *     + 1/(2 kappa) ||grad u - xi||^2 + int F . xi
 *
 * with the negative part integrated by the three-point midpoint rule. Vectors
 * are stacked (u, xi_1, xi_2); residual() is the gradient restricted to the
 * dofs off the boundary (boundary entries are zero) and jacobian() already has
 * the boundary rows and columns eliminated.
 */
class BiharmonicProblem {
public:
    BiharmonicProblem(const Mesh& mesh, double kappa, ScalarObstacle obstacle, DivergencePotential potential);

    double energy(std::span<const double> x) const;
    std::vector<double> residual(std::span<const double> x) const;
    CsrMatrix jacobian(std::span<const double> x) const;

    /// Right-hand side -int F . eta on the xi dofs.
    const std::vector<double>& load() const { return load_; }
    const CsrMatrix& linear_blocks() const { return linear_; }
    const std::vector<int>& dirichlet_dofs() const { return dirichlet_; }
    const Mesh& mesh() const { return *mesh_; }
    double kappa() const { return kappa_; }
    std::size_t size() const { return 3 * mesh_->num_vertices(); }

    NewtonProblem as_newton_problem() const;

private:
    const Mesh* mesh_;
    double kappa_;
    ScalarObstacle obstacle_;
    CsrMatrix linear_;
    std::vector<double> load_;
    std::vector<int> dirichlet_;
    std::vector<double> theta_at_qp_;  // 3 per triangle
};

struct BiharmonicSolution {
    BiharmonicState state;
    NewtonReport report;
};

/// Newton from `initial` (zero state when absent).
BiharmonicSolution solve_biharmonic(const Mesh& mesh, double kappa, const ScalarObstacle& obstacle,
                                    const DivergencePotential& potential, const NewtonOptions& options = {},
                                    const std::optional<BiharmonicState>& initial = std::nullopt);

/// ||{u - theta}^-||_{L2} by the midpoint rule.
double constraint_violation(const BiharmonicState& state, const Mesh& mesh, const ScalarObstacle& obstacle);

/// ||grad u - xi||_{L2}
double mixed_gap(const Mesh& mesh, std::span<const double> u, const std::array<ScalarField, 2>& xi);

/// Area of triangles whose three vertices satisfy u - theta <= tol.
double contact_area(const BiharmonicState& state, const Mesh& mesh, const ScalarObstacle& obstacle, double tol);

/// Smallest u - theta over the vertices.
double min_gap(const BiharmonicState& state, const Mesh& mesh, const ScalarObstacle& obstacle);

}  // namespace obstacle_fem
