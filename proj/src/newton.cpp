#include "obstacle_fem/newton.hpp"

#include <cmath>
#include <sstream>

namespace obstacle_fem {

namespace {

bool converged(const NewtonOptions& opt, double rnorm, double r0norm) {
    switch (opt.criterion) {
        case StopCriterion::RelativeResidual:
            return rnorm <= opt.tol * r0norm;
        case StopCriterion::AbsoluteResidual:
            return rnorm <= opt.tol;
        case StopCriterion::Increment:
            return rnorm == 0.0;
    }
    return false;
}

}  // namespace

NewtonResult newton(const NewtonProblem& problem, std::vector<double> x0, const NewtonOptions& options) {
    NewtonResult result;
    result.x = std::move(x0);
    auto& report = result.report;
    auto& x = result.x;

    auto r = problem.residual(x);
    double rnorm = norm2(r);
    const double r0norm = problem.residual_reference > 0.0 ? problem.residual_reference : rnorm;
    double energy = problem.energy(x);
    report.residual_history.push_back(rnorm);
    if (converged(options, rnorm, r0norm)) {
        report.converged = true;
        return result;
    }

    for (int it = 0; it < options.max_iter; ++it) {
        const CsrMatrix jac = problem.jacobian(x);
        std::vector<double> minus_r(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) minus_r[i] = -r[i];
        std::vector<double> step;
        try {
            step = solve_spd(jac, minus_r, options.linear_rel_tol);
        } catch (const LinearSolveError& e) {
            throw NewtonError(std::string("newton: linear solve failed: ") + e.what(), report);
        }

        double t = 1.0;
        std::vector<double> trial(x.size());
        std::vector<double> trial_r;
        double trial_energy = 0.0;
        double trial_norm = 0.0;
        bool accepted = false;
        for (int halving = 0; halving <= options.max_halvings; ++halving) {
            for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + t * step[i];
            trial_energy = problem.energy(trial);
            trial_r = problem.residual(trial);
            trial_norm = norm2(trial_r);
            const double slack = 1e-12 * (std::abs(energy) + std::abs(trial_energy));
            if (trial_energy <= energy + slack || trial_norm < rnorm) {
                accepted = true;
                break;
            }
            t *= 0.5;
            ++report.step_halvings;
        }
        if (!accepted) {
            std::ostringstream msg;
            msg << "newton: line search failed after " << options.max_halvings << " halvings at iteration " << it + 1;
            throw NewtonError(msg.str(), report);
        }

        x.swap(trial);
        r = std::move(trial_r);
        rnorm = trial_norm;
        energy = trial_energy;
        ++report.iterations;
        report.residual_history.push_back(rnorm);

        bool done = converged(options, rnorm, r0norm);
        if (options.criterion == StopCriterion::Increment && t == 1.0 && norm2(step) <= options.tol) done = true;
        if (done) {
            report.converged = true;
            return result;
        }
    }
    std::ostringstream msg;
    msg << "newton: no convergence in " << options.max_iter << " iterations, residual " << rnorm;
    throw NewtonError(msg.str(), report);
}

}  // namespace obstacle_fem
