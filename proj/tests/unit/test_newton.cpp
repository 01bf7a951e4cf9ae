#include "obstacle_fem/newton.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace obstacle_fem;

namespace {

// Separable model: E(x) = sum_i a x_i^2 / 2 + {x_i - t_i}^-^2 / (2 kappa) - b_i x_i.
struct Model {
    double a = 1.0;
    double kappa = 1e-3;
    std::vector<double> t, b;

    double grad(double x, std::size_t i) const { return a * x - (x < t[i] ? (t[i] - x) / kappa : 0.0) - b[i]; }

    NewtonProblem problem() const {
        NewtonProblem p;
        p.energy = [this](std::span<const double> x) {
            double e = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double n = x[i] < t[i] ? t[i] - x[i] : 0.0;
                e += 0.5 * a * x[i] * x[i] + n * n / (2 * kappa) - b[i] * x[i];
            }
            return e;
        };
        p.residual = [this](std::span<const double> x) {
            std::vector<double> r(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) r[i] = grad(x[i], i);
            return r;
        };
        p.jacobian = [this](std::span<const double> x) {
            std::vector<Triplet> tr;
            for (std::size_t i = 0; i < x.size(); ++i)
                tr.push_back({static_cast<int>(i), static_cast<int>(i), a + (x[i] < t[i] ? 1.0 / kappa : 0.0)});
            return CsrMatrix::from_triplets(tr, x.size(), x.size());
        };
        return p;
    }

    // Root of the monotone residual by bisection.
    double bisect(std::size_t i) const {
        double lo = -1e3, hi = 1e3;
        for (int k = 0; k < 200; ++k) {
            const double mid = 0.5 * (lo + hi);
            (grad(mid, i) > 0 ? hi : lo) = mid;
        }
        return 0.5 * (lo + hi);
    }
};

}  // namespace

TEST(Newton, SemismoothScalarProblemsMatchBisection) {
    Model m;
    m.t = {0.0, 0.0, 0.5, -1.0, 0.2};
    m.b = {1.0, -1.0, 0.1, -3.0, 0.2};
    NewtonOptions opt;
    opt.criterion = StopCriterion::AbsoluteResidual;
    opt.tol = 1e-12;
    const auto res = newton(m.problem(), std::vector<double>(5, 0.0), opt);
    EXPECT_TRUE(res.report.converged);
    EXPECT_LE(res.report.iterations, 10);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(res.x[i], m.bisect(i), 1e-10) << i;
}

TEST(Newton, DampedStepsOnPiecewiseQuadratic) {
    // full steps overshoot into the stiff penalty branch and get halved
    Model m;
    m.t = std::vector<double>(50, 0.0);
    m.b.resize(50);
    for (std::size_t i = 0; i < 50; ++i) m.b[i] = std::sin(0.7 * static_cast<double>(i));
    const auto res = newton(m.problem(), std::vector<double>(50, 0.3));
    EXPECT_TRUE(res.report.converged);
    EXPECT_LE(res.report.iterations, 15);
    EXPECT_GT(res.report.step_halvings, 0);
    EXPECT_LT(res.report.residual_history.back(), 1e-12);
}

TEST(Newton, ZeroResidualStopsImmediately) {
    Model m;
    m.t = {-1.0};
    m.b = {0.0};
    const auto res = newton(m.problem(), {0.0});
    EXPECT_TRUE(res.report.converged);
    EXPECT_EQ(res.report.iterations, 0);
}

TEST(Newton, ResidualReferenceSetsTheScale) {
    Model m;
    m.t = {-10.0};
    m.b = {1.0};
    auto p = m.problem();
    p.residual_reference = 1.0;
    NewtonOptions opt;
    opt.tol = 1e-8;
    const auto res = newton(p, {1e6}, opt);
    EXPECT_LE(res.report.residual_history.back(), 1e-8);
    EXPECT_NEAR(res.x[0], 1.0, 1e-8);
}

TEST(Newton, IncrementCriterion) {
    Model m;
    m.t = {0.0, 0.0};
    m.b = {2.0, -2.0};
    NewtonOptions opt;
    opt.criterion = StopCriterion::Increment;
    opt.tol = 1e-14;
    const auto res = newton(m.problem(), {0.0, 0.0}, opt);
    EXPECT_TRUE(res.report.converged);
    EXPECT_NEAR(res.x[0], m.bisect(0), 1e-12);
    EXPECT_NEAR(res.x[1], m.bisect(1), 1e-12);
}

TEST(Newton, ThrowsWhenIterationBudgetRunsOut) {
    Model m;
    m.t = std::vector<double>(20, 0.0);
    m.b.resize(20);
    for (std::size_t i = 0; i < 20; ++i) m.b[i] = std::cos(1.3 * static_cast<double>(i));
    NewtonOptions opt;
    opt.max_iter = 1;
    opt.tol = 1e-14;
    EXPECT_THROW(newton(m.problem(), std::vector<double>(20, 5.0), opt), NewtonError);
}

TEST(Newton, LinearSolveFailureBecomesNewtonError) {
    Model m;
    m.t = {0.0};
    m.b = {1.0};
    auto p = m.problem();
    p.jacobian = [](std::span<const double>) { return CsrMatrix::identity(1).scaled(-1.0); };
    try {
        newton(p, {0.0});
        FAIL() << "expected NewtonError";
    } catch (const NewtonError& e) {
        EXPECT_FALSE(e.report.converged);
    }
}
