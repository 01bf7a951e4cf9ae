#include "obstacle_fem/fem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace obstacle_fem {

ElementGeometry element_geometry(const Mesh& mesh, std::size_t t) {
    const auto& tri = mesh.triangles[t];
    const Point2 p0 = mesh.vertices[tri[0]], p1 = mesh.vertices[tri[1]], p2 = mesh.vertices[tri[2]];
    const double det = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
    ElementGeometry g;
    g.area = 0.5 * det;
    // grad(phi_i) = rot90(opposite edge) / det
    g.grads[0] = {(p1.y - p2.y) / det, (p2.x - p1.x) / det};
    g.grads[1] = {(p2.y - p0.y) / det, (p0.x - p2.x) / det};
    g.grads[2] = {(p0.y - p1.y) / det, (p1.x - p0.x) / det};
    return g;
}

QuadratureRule quadrature(int degree) {
    if (degree != 2) {
        std::ostringstream msg;
        msg << "quadrature: unsupported degree " << degree << " (only 2 is available)";
        throw std::invalid_argument(msg.str());
    }
    QuadratureRule q;
    q.degree = 2;
    q.points = {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};
    q.weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    return q;
}

ElementMatrix element_laplacian(const ElementGeometry& g) {
    ElementMatrix k{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) k[i][j] = g.area * (g.grads[i].x * g.grads[j].x + g.grads[i].y * g.grads[j].y);
    return k;
}

ElementMatrix element_mass(double area) {
    ElementMatrix m{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m[i][j] = area * (i == j ? 2.0 : 1.0) / 12.0;
    return m;
}

namespace {

template <typename ElementFn>
CsrMatrix assemble_scalar(const Mesh& mesh, ElementFn&& element) {
    std::vector<Triplet> t;
    t.reserve(9 * mesh.num_triangles());
    for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
        const auto g = element_geometry(mesh, e);
        const ElementMatrix k = element(g);
        const auto& tri = mesh.triangles[e];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) t.push_back({tri[i], tri[j], k[i][j]});
    }
    return CsrMatrix::from_triplets(t, mesh.num_vertices(), mesh.num_vertices());
}

double component(Point2 p, int i) { return i == 0 ? p.x : p.y; }

}  // namespace

CsrMatrix assemble_laplacian(const Mesh& mesh) {
    return assemble_scalar(mesh, [](const ElementGeometry& g) { return element_laplacian(g); });
}

CsrMatrix assemble_mass(const Mesh& mesh) {
    return assemble_scalar(mesh, [](const ElementGeometry& g) { return element_mass(g.area); });
}

CsrMatrix assemble_gradient_coupling(const Mesh& mesh, int beta) {
    return assemble_scalar(mesh, [beta](const ElementGeometry& g) {
        ElementMatrix k{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) k[i][j] = component(g.grads[i], beta) * g.area / 3.0;
        return k;
    });
}

CsrMatrix assemble_derivative_product(const Mesh& mesh, int alpha, int beta) {
    return assemble_scalar(mesh, [alpha, beta](const ElementGeometry& g) {
        ElementMatrix k{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) k[i][j] = g.area * (component(g.grads[i], alpha) * component(g.grads[j], beta));
        return k;
    });
}

std::pair<CsrMatrix, std::vector<double>> apply_dirichlet(const CsrMatrix& a, std::span<const double> b, std::span<const int> dofs) {
    std::vector<bool> fixed(a.rows(), false);
    for (int d : dofs) fixed.at(static_cast<std::size_t>(d)) = true;
    std::vector<Triplet> t;
    t.reserve(a.nonzeros());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        if (fixed[i]) {
            t.push_back({static_cast<int>(i), static_cast<int>(i), 1.0});
            continue;
        }
        for (std::size_t k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k) {
            const int j = a.col_idx()[k];
            if (!fixed[static_cast<std::size_t>(j)]) t.push_back({static_cast<int>(i), j, a.values()[k]});
        }
    }
    std::vector<double> rhs(b.begin(), b.end());
    for (int d : dofs) rhs[static_cast<std::size_t>(d)] = 0.0;
    return {CsrMatrix::from_triplets(t, a.rows(), a.cols()), std::move(rhs)};
}

Point2 element_gradient(const ElementGeometry& g, const Mesh& mesh, std::span<const double> u, std::size_t t) {
    const auto& tri = mesh.triangles[t];
    Point2 grad{};
    for (int i = 0; i < 3; ++i) grad = grad + u[tri[i]] * g.grads[i];
    return grad;
}

double h1_seminorm(const Mesh& mesh, std::span<const double> u) {
    double s = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto g = element_geometry(mesh, t);
        const Point2 grad = element_gradient(g, mesh, u, t);
        s += g.area * (grad.x * grad.x + grad.y * grad.y);
    }
    return std::sqrt(s);
}

double l2_norm(const Mesh& mesh, std::span<const double> u) {
    double s = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        const double a = u[tri[0]], b = u[tri[1]], c = u[tri[2]];
        // integral of a P1 function squared = area/6 (a^2+b^2+c^2+ab+bc+ca)
        s += mesh.signed_area(t) / 6.0 * (a * a + b * b + c * c + a * b + b * c + c * a);
    }
    return std::sqrt(std::max(s, 0.0));
}

double h1_norm(const Mesh& mesh, std::span<const double> u) {
    const double l2 = l2_norm(mesh, u);
    const double semi = h1_seminorm(mesh, u);
    return std::sqrt(l2 * l2 + semi * semi);
}

namespace {

// Refined boundary vertices sit on the circle, just outside the coarse
// polygon. They take the extrapolated value from the least-outside triangle,
// which keeps globally linear fields exact.
std::optional<PointLocation> nearest_boundary_element(const Mesh& mesh, Point2 p) {
    std::optional<PointLocation> best;
    double best_min = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        if (!mesh.boundary[tri[0]] && !mesh.boundary[tri[1]] && !mesh.boundary[tri[2]]) continue;
        const auto bary = barycentric_coordinates(mesh, t, p);
        const double m = std::min({bary[0], bary[1], bary[2]});
        if (m > best_min) {
            best_min = m;
            best = PointLocation{t, bary};
        }
    }
    return best;
}

}  // namespace

ScalarField interpolate(const Mesh& coarse, std::span<const double> u, const Mesh& fine) {
    if (u.size() != coarse.num_vertices()) throw std::invalid_argument("interpolate: field length does not match the coarse mesh");
    const PointLocator locator(coarse);
    ScalarField out(fine.num_vertices());
    for (std::size_t v = 0; v < fine.num_vertices(); ++v) {
        auto loc = locator.locate(fine.vertices[v]);
        if (!loc && fine.boundary[v]) loc = nearest_boundary_element(coarse, fine.vertices[v]);
        if (!loc) {
            std::ostringstream msg;
            msg << "interpolate: fine vertex " << v << " (" << fine.vertices[v].x << ", " << fine.vertices[v].y << ") lies outside the coarse mesh";
            throw MeshError(msg.str());
        }
        out[v] = eval_p1(coarse, u, loc->triangle, loc->barycentric);
    }
    return out;
}

void BlockAssembler::add_block(const CsrMatrix& block, int row_field, int col_field, double scale) {
    const int ro = row_field * static_cast<int>(nv_);
    const int co = col_field * static_cast<int>(nv_);
    for (std::size_t i = 0; i < block.rows(); ++i)
        for (std::size_t k = block.row_ptr()[i]; k < block.row_ptr()[i + 1]; ++k)
            triplets_.push_back({ro + static_cast<int>(i), co + block.col_idx()[k], scale * block.values()[k]});
}

void BlockAssembler::add_symmetric_pair(const CsrMatrix& block, int row_field, int col_field, double scale) {
    const int ro = row_field * static_cast<int>(nv_);
    const int co = col_field * static_cast<int>(nv_);
    for (std::size_t i = 0; i < block.rows(); ++i)
        for (std::size_t k = block.row_ptr()[i]; k < block.row_ptr()[i + 1]; ++k) {
            const double v = scale * block.values()[k];
            triplets_.push_back({ro + static_cast<int>(i), co + block.col_idx()[k], v});
            triplets_.push_back({co + block.col_idx()[k], ro + static_cast<int>(i), v});
        }
}

void BlockAssembler::add(int row_field, int row_vertex, int col_field, int col_vertex, double value) {
    triplets_.push_back({row_field * static_cast<int>(nv_) + row_vertex, col_field * static_cast<int>(nv_) + col_vertex, value});
}

std::vector<int> boundary_dofs(const Mesh& mesh, int num_fields) {
    const auto bv = mesh.boundary_vertices();
    std::vector<int> dofs;
    dofs.reserve(bv.size() * static_cast<std::size_t>(num_fields));
    for (int f = 0; f < num_fields; ++f)
        for (int v : bv) dofs.push_back(f * static_cast<int>(mesh.num_vertices()) + v);
    return dofs;
}

}  // namespace obstacle_fem
