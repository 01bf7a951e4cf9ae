#pragma once

#include "obstacle_fem/mesh.hpp"

#include <limits>
#include <vector>

namespace obstacle_fem {

/// f(y) = a |y|^2 + c inside |y|^2 < s, zero outside.
struct RadialForcing {
    double a = 0.0;
    double c = 0.0;
    double s = std::numeric_limits<double>::infinity();

    double operator()(Point2 y) const {
        const double r2 = y.x * y.x + y.y * y.y;
        return r2 < s ? a * r2 + c : 0.0;
    }
};

/**
 * Vector field F(y) = g(|y|) y / |y| with div F = f for a radial forcing f,
 * where g(r) = (1/r) * integral_0^r t f(t) dt in closed form.
 */
class DivergencePotential {
public:
    DivergencePotential() = default;
    explicit DivergencePotential(RadialForcing f, double scale = 1.0) : f_(f), scale_(scale) {}

    /// Radial profile g(r).
    double radial(double r) const;
    Point2 operator()(Point2 y) const;

    const RadialForcing& forcing() const { return f_; }
    double scale() const { return scale_; }

private:
    RadialForcing f_{};
    double scale_ = 1.0;
};

inline DivergencePotential radial_div_potential(const RadialForcing& f) { return DivergencePotential(f); }

/// Forcing of the first two biharmonic experiment batches.
inline RadialForcing plate_batch_forcing() { return {7.5, -0.295, 0.060}; }
/// Transverse load profile g of the first two shell experiment batches.
inline RadialForcing shell_batch_forcing() { return {5.0, -0.295, 0.060}; }
/// Force-sweep profile (coefficient 0.25 for the plate, 0.5 for the shell).
inline RadialForcing sweep_forcing(double coefficient, int ell) {
    const double level = 0.0059 * ell;
    return {coefficient, -level, level};
}

/// Max over affine pieces a . y + b.
struct AffinePiece {
    double ax = 0.0;
    double ay = 0.0;
    double b = 0.0;
};

struct ScalarObstacle {
    std::vector<AffinePiece> pieces{{0.0, 0.0, -1.0}};

    double operator()(Point2 y) const;

    static ScalarObstacle constant(double value) { return ScalarObstacle{{{0.0, 0.0, value}}}; }
    /// theta(y) = (|y_1| - 1) / 2
    static ScalarObstacle two_planes() { return ScalarObstacle{{{0.5, 0.0, -0.5}, {-0.5, 0.0, -0.5}}}; }
};

}  // namespace obstacle_fem
