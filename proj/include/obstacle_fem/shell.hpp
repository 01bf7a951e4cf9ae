#pragma once

#include "obstacle_fem/fem.hpp"
#include "obstacle_fem/loads.hpp"
#include "obstacle_fem/newton.hpp"

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace obstacle_fem {

using Vec3 = std::array<double, 3>;

/// Flat shallow shell with middle surface theta(y) = (y1, y2, z0).
struct ShellParams {
    double epsilon = 0.001;
    double lambda = 0.4;
    double mu = 0.012;
    double z0 = 0.15;

    /// 4 lambda mu / (lambda + 2 mu)
    double lame_ratio() const { return 4.0 * lambda * mu / (lambda + 2.0 * mu); }
    /// Throws std::invalid_argument unless epsilon > 0, mu > 0, lambda >= 0.
    void validate() const;
};

/**
 * Half-space {x : x . q >= level} with unit inward normal q. The plain
 * confinement of the experiments has level 0.
 */
struct HalfSpaceConstraint {
    Vec3 q{0.0, 0.0, 1.0};
    double level = 0.0;

    double gap(const Vec3& x) const { return x[0] * q[0] + x[1] * q[1] + x[2] * q[2] - level; }

    /// Above the plane z = 0.
    static HalfSpaceConstraint flat() { return {}; }
    /// The two planes z = +-y1/2 + apex_z; inward normals (-+sqrt5/5, 0, 2 sqrt5/5).
    static std::vector<HalfSpaceConstraint> wedge(double apex_z = 0.0);
};

/// Throws std::invalid_argument for a non-unit normal or an empty list.
void validate_constraints(std::span<const HalfSpaceConstraint> constraints);

/// Smallest gap of the undeformed surface over the mesh vertices; must be > 0.
double reference_clearance(const Mesh& mesh, const ShellParams& params, std::span<const HalfSpaceConstraint> constraints);

/**
 * Loads of the penalised problem: constant in-plane resultants p^alpha,
 * constant first moments s_alpha and a potential P with div P = p^3.
 */
struct ShellLoads {
    std::array<double, 2> p_alpha{0.0, 0.0};
    std::array<double, 2> s_alpha{0.0, 0.0};
    DivergencePotential P{RadialForcing{}};

    /// p = (0, 0, eps^3 g).
    static ShellLoads transverse(const RadialForcing& g, double epsilon);
};

struct ShellState {
    std::array<ScalarField, 3> zeta;
    std::array<ScalarField, 2> xi;

    static ShellState zero(std::size_t num_vertices);
    static ShellState from_stacked(std::span<const double> x, std::size_t num_vertices);
    std::vector<double> stacked() const;
};

using Strain = std::array<std::array<double, 2>, 2>;

/// e_ab = (d_a zeta_b + d_b zeta_a) / 2 on triangle t.
Strain membrane_strain(const Mesh& mesh, std::size_t t, std::span<const double> zeta1, std::span<const double> zeta2);

/// beta(x) = -sum_j {x . q_j - level_j}^- q_j at a point x = theta + zeta.
Vec3 penalty_beta(const Vec3& x, std::span<const HalfSpaceConstraint> constraints);

struct ShellLinearParts {
    /// Both lame_ratio-weighted divergence terms (membrane and bending).
    CsrMatrix div_div;
    /// Everything else.
    CsrMatrix rest;
};

/**
 * Linear part over stacked (zeta1, zeta2, zeta3, xi1, xi2):
 *
 *   zeta_H      eps [k div.div + 4 mu e:e]
 *   zeta3       eps^3 kappa K + (eps^3/kappa) K
 *   zeta3,xi_b  -(eps^3/kappa) B_b
 *   xi          (eps^3/3) [k div.div + 4 mu grad:grad] + (eps^3/kappa) M
 *
 * with k = 4 lambda mu / (lambda + 2 mu).
 */
ShellLinearParts assemble_shell_linear_parts(const Mesh& mesh, const ShellParams& params, double kappa);
CsrMatrix assemble_shell_linear_blocks(const Mesh& mesh, const ShellParams& params, double kappa);

/**
 * Discrete penalised mixed flat-shell obstacle problem. Energy:
 *
 *   1/2 a(x, x) + eps^3/(2 kappa) sum_j ||{(theta + zeta) . q_j - level_j}^-||^2 - l(x)
 *
 * with l(eta, phi) = int p^a eta_a - int P . phi - int s_a phi_a and the
 * penalties integrated by the midpoint rule.
 */
class ShellProblem {
public:
    ShellProblem(const Mesh& mesh, const ShellParams& params, double kappa, std::vector<HalfSpaceConstraint> constraints,
                 const ShellLoads& loads);

    double energy(std::span<const double> x) const;
    std::vector<double> residual(std::span<const double> x) const;
    CsrMatrix jacobian(std::span<const double> x) const;

    const std::vector<double>& load() const { return load_; }
    const CsrMatrix& linear_blocks() const { return linear_; }
    const std::vector<int>& dirichlet_dofs() const { return dirichlet_; }
    const Mesh& mesh() const { return *mesh_; }
    const ShellParams& params() const { return params_; }
    double kappa() const { return kappa_; }
    std::size_t size() const { return 5 * mesh_->num_vertices(); }

    NewtonProblem as_newton_problem() const;

private:
    // Gaps of every constraint at every quadrature point.
    template <typename F>
    void for_each_qp_gap(std::span<const double> x, F&& f) const;

    const Mesh* mesh_;
    ShellParams params_;
    double kappa_;
    std::vector<HalfSpaceConstraint> constraints_;
    CsrMatrix linear_;
    std::vector<double> load_;
    std::vector<int> dirichlet_;
};

struct ShellSolution {
    ShellState state;
    NewtonReport report;
};

ShellSolution solve_shell(const Mesh& mesh, const ShellParams& params, double kappa,
                          const std::vector<HalfSpaceConstraint>& constraints, const ShellLoads& loads,
                          const NewtonOptions& options = {}, const std::optional<ShellState>& initial = std::nullopt);

/// sum_j ||{(theta + zeta) . q_j - level_j}^-||_{L2} by the midpoint rule.
double constraint_violation(const ShellState& state, const Mesh& mesh, const ShellParams& params,
                            std::span<const HalfSpaceConstraint> constraints);

/// Area of triangles whose vertices each have gap <= tol for some constraint.
double contact_area(const ShellState& state, const Mesh& mesh, const ShellParams& params,
                    std::span<const HalfSpaceConstraint> constraints, double tol);

/// Smallest gap of the deformed surface over vertices and constraints.
double min_gap(const ShellState& state, const Mesh& mesh, const ShellParams& params,
               std::span<const HalfSpaceConstraint> constraints);

/// Deformed middle surface theta + zeta at every vertex.
std::vector<Vec3> deformed_surface(const ShellState& state, const Mesh& mesh, const ShellParams& params);

/**
 * Scaled-data bookkeeping: body forces f_alpha^eps = eps^2 f_alpha and
 * f_3^eps = eps^3 f_3, independent of the transverse coordinate, integrate to
 * p^alpha = 2 eps^3 f_alpha, p^3 = 2 eps^4 f_3 and s_alpha = 0.
 */
ShellLoads scaled_loads(std::array<double, 2> f_alpha, const RadialForcing& f3, double epsilon);

/// zeta_alpha / eps^2, zeta_3 / eps, xi / eps.
ShellState descale(const ShellState& state, double epsilon);

}  // namespace obstacle_fem
