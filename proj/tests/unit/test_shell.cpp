#include "obstacle_fem/shell.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace obstacle_fem;

namespace {

std::vector<double> random_state(const ShellProblem& p, double amp, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-amp, amp);
    std::vector<double> x(p.size());
    for (auto& v : x) v = d(rng);
    for (int i : p.dirichlet_dofs()) x[static_cast<std::size_t>(i)] = 0.0;
    return x;
}

const ShellLoads kBatch = ShellLoads::transverse(shell_batch_forcing(), 0.001);

}  // namespace

TEST(ShellParams, LameRatioAndValidation) {
    const ShellParams p;
    EXPECT_NEAR(p.lame_ratio(), 4.0 * 0.4 * 0.012 / 0.424, 1e-16);
    ShellParams bad;
    bad.mu = 0.0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = ShellParams{};
    bad.lambda = -1.0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(HalfSpace, WedgeNormalsAndGaps) {
    const auto w = HalfSpaceConstraint::wedge(0.0);
    ASSERT_EQ(w.size(), 2u);
    EXPECT_NO_THROW(validate_constraints(w));
    // the planes z = +-y1/2 pass through the origin and (2, 0, 1)
    EXPECT_NEAR(w[0].gap({0, 0, 0}), 0.0, 1e-15);
    EXPECT_NEAR(w[0].gap({2.0, 0.0, 1.0}), 0.0, 1e-15);
    EXPECT_NEAR(w[1].gap({-2.0, 0.0, 1.0}), 0.0, 1e-15);
    EXPECT_GT(w[0].gap({0, 0, 1}), 0.0);
    // shifted apex
    const auto s = HalfSpaceConstraint::wedge(-0.15);
    EXPECT_NEAR(s[0].gap({0, 0, -0.15}), 0.0, 1e-15);
    const std::vector<HalfSpaceConstraint> bad{{{0, 0, 2}, 0}};
    EXPECT_THROW(validate_constraints(bad), std::invalid_argument);
}

TEST(HalfSpace, PenaltyBeta) {
    const std::vector<HalfSpaceConstraint> c{HalfSpaceConstraint::flat()};
    const auto b = penalty_beta({0.1, 0.2, -0.3}, c);
    EXPECT_DOUBLE_EQ(b[2], -0.3);
    EXPECT_EQ(b[0], 0.0);
    EXPECT_EQ(penalty_beta({0, 0, 0.3}, c)[2], 0.0);
}

TEST(Shell, InfeasibleReferenceIsRejected) {
    const Mesh m = build_disk_mesh(4, 0.5);
    // apex at z0 = 0.15 cuts the reference plane for |y1| > 0.3
    EXPECT_THROW(ShellProblem(m, ShellParams{}, 0.1, HalfSpaceConstraint::wedge(0.0), kBatch), std::invalid_argument);
    EXPECT_GT(reference_clearance(m, ShellParams{}, HalfSpaceConstraint::wedge(-0.15)), 0.0);
}

TEST(Shell, MembraneStrainOfAffineField) {
    const Mesh m = build_disk_mesh(2, 0.5);
    std::vector<double> z1(m.num_vertices()), z2(m.num_vertices());
    for (std::size_t v = 0; v < z1.size(); ++v) {
        z1[v] = 2.0 * m.vertices[v].x + 3.0 * m.vertices[v].y;
        z2[v] = -1.0 * m.vertices[v].x + 0.5 * m.vertices[v].y;
    }
    const auto e = membrane_strain(m, 3, z1, z2);
    EXPECT_NEAR(e[0][0], 2.0, 1e-13);
    EXPECT_NEAR(e[1][1], 0.5, 1e-13);
    EXPECT_NEAR(e[0][1], 1.0, 1e-13);
    EXPECT_EQ(e[0][1], e[1][0]);
}

TEST(Shell, LinearBlocksAndLambdaZero) {
    const Mesh m = build_disk_mesh(4, 0.5);
    const auto a = assemble_shell_linear_blocks(m, ShellParams{}, 0.1);
    EXPECT_EQ(a.max_asymmetry(), 0.0);
    ShellParams p;
    p.lambda = 0.0;
    EXPECT_EQ(assemble_shell_linear_parts(m, p, 0.1).div_div.max_abs(), 0.0);
    EXPECT_GT(assemble_shell_linear_parts(m, ShellParams{}, 0.1).div_div.max_abs(), 0.0);
}

TEST(Shell, ResidualIsEnergyGradientAndJacobianSymmetric) {
    const Mesh m = build_disk_mesh(4, 0.5);
    const ShellProblem p(m, ShellParams{}, 0.05, HalfSpaceConstraint::wedge(-0.15), kBatch);
    auto x = random_state(p, 0.3, 21);
    EXPECT_EQ(p.jacobian(x).max_asymmetry(), 0.0);
    const auto r = p.residual(x);
    const double h = 1e-6;
    std::vector<bool> fixed(p.size(), false);
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
        const double g = (ep - em) / (2 * h);
        num += (g - r[i]) * (g - r[i]);
        den += r[i] * r[i];
    }
    EXPECT_LT(std::sqrt(num / den), 1e-6);
}

TEST(Shell, ZeroLoadGivesZero) {
    const Mesh m = build_disk_mesh(8, 0.5);
    const auto s = solve_shell(m, ShellParams{}, 1e-3, {HalfSpaceConstraint::flat()}, ShellLoads{});
    for (double v : s.state.stacked()) EXPECT_EQ(v, 0.0);
}

TEST(Shell, ContactUnderStrongLoad) {
    const Mesh m = build_disk_mesh(8, 0.5);
    const ShellParams prm;
    const std::vector<HalfSpaceConstraint> c{HalfSpaceConstraint::flat()};
    ShellLoads loads;
    loads.P = DivergencePotential(sweep_forcing(0.5, 39), 40.0 * 1e-9);
    const double kappa = std::pow(m.nominal_h, 0.3);
    const auto s = solve_shell(m, prm, kappa, c, loads);
    EXPECT_TRUE(s.report.converged);
    EXPECT_GT(contact_area(s.state, m, prm, c, 1e-8), 0.0);
    EXPECT_LT(min_gap(s.state, m, prm, c), 0.0);  // penalised: slight penetration
    EXPECT_GT(constraint_violation(s.state, m, prm, c), 0.0);
    const auto surf = deformed_surface(s.state, m, prm);
    for (std::size_t v = 0; v < m.num_vertices(); ++v)
        EXPECT_DOUBLE_EQ(surf[v][2], prm.z0 + s.state.zeta[2][v]);
}

TEST(Shell, ScaledDataDescaleConsistently) {
    // scaled solutions, de-scaled, should approach a limit as eps -> 0
    const Mesh m = build_disk_mesh(8, 0.5);
    const std::vector<HalfSpaceConstraint> c{HalfSpaceConstraint::flat()};
    const RadialForcing f3 = shell_batch_forcing();
    std::array<std::vector<double>, 2> z3;
    int k = 0;
    for (double eps : {0.002, 0.001}) {
        ShellParams prm;
        prm.epsilon = eps;
        const auto s = solve_shell(m, prm, 1e-2, c, scaled_loads({0.0, 0.0}, f3, eps));
        z3[k++] = descale(s.state, eps).zeta[2];
    }
    std::vector<double> d(z3[0].size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = z3[0][i] - z3[1][i];
    EXPECT_GT(h1_norm(m, z3[1]), 0.0);
    EXPECT_LT(h1_norm(m, d), 0.5 * h1_norm(m, z3[1]));
}

TEST(Shell, ScaledLoadsBookkeeping) {
    const auto l = scaled_loads({1.0, -2.0}, RadialForcing{0.0, 1.0}, 0.1);
    EXPECT_NEAR(l.p_alpha[0], 2e-3, 1e-18);
    EXPECT_NEAR(l.p_alpha[1], -4e-3, 1e-18);
    EXPECT_NEAR(l.P.scale(), 2e-4, 1e-18);
    EXPECT_EQ(l.s_alpha[0], 0.0);
    ShellState s = ShellState::zero(2);
    s.zeta = {{{0.01, 0.01}, {0.02, 0.02}, {0.1, 0.1}}};
    s.xi = {{{0.3, 0.3}, {0.4, 0.4}}};
    const auto d = descale(s, 0.1);
    EXPECT_NEAR(d.zeta[0][0], 1.0, 1e-14);
    EXPECT_NEAR(d.zeta[2][0], 1.0, 1e-14);
    EXPECT_NEAR(d.xi[1][0], 4.0, 1e-14);
}
