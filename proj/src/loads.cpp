#include "obstacle_fem/loads.hpp"

#include <algorithm>
#include <cmath>

namespace obstacle_fem {

double DivergencePotential::radial(double r) const {
    if (r <= 0.0) return 0.0;
    const double r2 = r * r;
    double g;
    if (r2 <= f_.s) {
        g = f_.a * r2 * r / 4.0 + f_.c * r / 2.0;
    } else {
        // Net flux through the support divided by 2 pi r.
        g = (f_.a * f_.s * f_.s / 4.0 + f_.c * f_.s / 2.0) / r;
    }
    return scale_ * g;
}

Point2 DivergencePotential::operator()(Point2 y) const {
    const double r = std::hypot(y.x, y.y);
    if (r == 0.0) return {0.0, 0.0};
    const double g = radial(r);
    return {g * y.x / r, g * y.y / r};
}

double ScalarObstacle::operator()(Point2 y) const {
    double value = -std::numeric_limits<double>::infinity();
    for (const auto& p : pieces) value = std::max(value, p.ax * y.x + p.ay * y.y + p.b);
    return value;
}

}  // namespace obstacle_fem
