#pragma once

#include "obstacle_fem/sparse.hpp"

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace obstacle_fem {

enum class StopCriterion {
    /// ||r_k|| <= tol * ||r_ref||, r_ref = NewtonProblem::residual_reference
    /// when set, else r(x0); an exactly zero reference stops immediately
    RelativeResidual,
    /// ||r_k|| <= tol
    AbsoluteResidual,
    /// ||delta_k|| <= tol after a full step, or ||r_k|| == 0
    Increment,
};

struct NewtonOptions {
    double tol = 1e-8;
    int max_iter = 50;
    int max_halvings = 30;
    StopCriterion criterion = StopCriterion::RelativeResidual;
    double linear_rel_tol = 1e-12;
};

struct NewtonReport {
    int iterations = 0;
    std::vector<double> residual_history;
    bool converged = false;
    int step_halvings = 0;
};

class NewtonError : public std::runtime_error {
public:
    NewtonError(const std::string& what, NewtonReport report) : std::runtime_error(what), report(std::move(report)) {}
    NewtonReport report;
};

/**
 * Callbacks of a convex minimisation problem. `residual` is the gradient of
 * `energy`; `jacobian` its (generalised) Hessian, symmetric and positive
 * definite, with any constrained dofs already eliminated.
 */
struct NewtonProblem {
    std::function<double(std::span<const double>)> energy;
    std::function<std::vector<double>(std::span<const double>)> residual;
    std::function<CsrMatrix(std::span<const double>)> jacobian;
    /// Scale of the relative criterion, typically ||r(0)|| (the load). Zero
    /// means ||r(x0)||, which makes the tolerance depend on the start.
    double residual_reference = 0.0;
};

struct NewtonResult {
    std::vector<double> x;
    NewtonReport report;
};

/**
 * Damped semismooth Newton. Each step solves J d = -r with solve_spd and is
 * halved (at most max_halvings times) until the energy does not increase
 * beyond round-off, or the residual norm decreases.
 */
NewtonResult newton(const NewtonProblem& problem, std::vector<double> x0, const NewtonOptions& options = {});

}  // namespace obstacle_fem
