#include "obstacle_fem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

namespace obstacle_fem {

namespace {

constexpr double kInsideTol = 1e-12;
constexpr double kSnapTol = 1e-10;

double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
double norm(Point2 a) { return std::hypot(a.x, a.y); }

// Closest point to p on segment [a, b], returned as parameter s in [0, 1].
double segment_parameter(Point2 a, Point2 b, Point2 p) {
    const Point2 d = b - a;
    const double len2 = d.x * d.x + d.y * d.y;
    if (len2 == 0.0) return 0.0;
    const double s = ((p.x - a.x) * d.x + (p.y - a.y) * d.y) / len2;
    return std::clamp(s, 0.0, 1.0);
}

std::vector<bool> flag_boundary(const Mesh& mesh) {
    std::map<std::array<int, 2>, int> count;
    for (const auto& t : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            int a = t[k], b = t[(k + 1) % 3];
            ++count[{std::min(a, b), std::max(a, b)}];
        }
    }
    std::vector<bool> flags(mesh.vertices.size(), false);
    for (const auto& [edge, c] : count) {
        if (c == 1) {
            flags[edge[0]] = true;
            flags[edge[1]] = true;
        }
    }
    return flags;
}

bool is_power_of_two(int n) { return n >= 1 && (n & (n - 1)) == 0; }

// Distance from p to triangle t and the barycentric coordinates of the
// closest point.
std::pair<double, std::array<double, 3>> closest_on_triangle(const Mesh& mesh, std::size_t t, Point2 p) {
    const auto bary = barycentric_coordinates(mesh, t, p);
    if (bary[0] >= 0.0 && bary[1] >= 0.0 && bary[2] >= 0.0) return {0.0, bary};
    const auto& tri = mesh.triangles[t];
    double best = std::numeric_limits<double>::infinity();
    std::array<double, 3> best_bary{};
    for (int k = 0; k < 3; ++k) {
        const int i = k, j = (k + 1) % 3;
        const Point2 a = mesh.vertices[tri[i]];
        const Point2 b = mesh.vertices[tri[j]];
        const double s = segment_parameter(a, b, p);
        const Point2 q = a + s * (b - a);
        const double d = norm(p - q);
        if (d < best) {
            best = d;
            best_bary = {0.0, 0.0, 0.0};
            best_bary[i] = 1.0 - s;
            best_bary[j] = s;
        }
    }
    return {best, best_bary};
}

bool inside(const std::array<double, 3>& b) {
    return b[0] >= -kInsideTol && b[1] >= -kInsideTol && b[2] >= -kInsideTol;
}

template <typename Candidates>
std::optional<PointLocation> locate_among(const Mesh& mesh, const Candidates& candidates, Point2 p) {
    for (std::size_t t : candidates) {
        const auto b = barycentric_coordinates(mesh, t, p);
        if (inside(b)) return PointLocation{t, b};
    }
    double best = std::numeric_limits<double>::infinity();
    std::optional<PointLocation> found;
    for (std::size_t t : candidates) {
        auto [d, b] = closest_on_triangle(mesh, t, p);
        if (d < best) {
            best = d;
            found = PointLocation{t, b};
        }
    }
    if (best <= kSnapTol * mesh.radius) return found;
    return std::nullopt;
}

}  // namespace

double Mesh::signed_area(std::size_t t) const {
    const auto& tri = triangles[t];
    const Point2 a = vertices[tri[0]], b = vertices[tri[1]], c = vertices[tri[2]];
    return 0.5 * cross(b - a, c - a);
}

double Mesh::total_area() const {
    double area = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) area += signed_area(t);
    return area;
}

std::vector<int> Mesh::boundary_vertices() const {
    std::vector<int> out;
    for (std::size_t v = 0; v < boundary.size(); ++v)
        if (boundary[v]) out.push_back(static_cast<int>(v));
    return out;
}

std::vector<std::array<int, 2>> mesh_edges(const Mesh& mesh) {
    std::vector<std::array<int, 2>> edges;
    edges.reserve(3 * mesh.triangles.size());
    for (const auto& t : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            int a = t[k], b = t[(k + 1) % 3];
            edges.push_back({std::min(a, b), std::max(a, b)});
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

double max_edge_length(const Mesh& mesh) {
    double h = 0.0;
    for (const auto& e : mesh_edges(mesh))
        h = std::max(h, norm(mesh.vertices[e[1]] - mesh.vertices[e[0]]));
    return h;
}

Mesh build_disk_mesh(int n, double radius) {
    if (!is_power_of_two(n)) throw MeshError("build_disk_mesh: resolution must be a power of two >= 1, got " + std::to_string(n));
    if (!(radius > 0.0)) throw MeshError("build_disk_mesh: radius must be positive");

    Mesh mesh;
    mesh.radius = radius;
    mesh.vertices.push_back({0.0, 0.0});
    for (int k = 0; k < 6; ++k) {
        const double angle = k * std::numbers::pi / 3.0;
        mesh.vertices.push_back({radius * std::cos(angle), radius * std::sin(angle)});
    }
    for (int k = 0; k < 6; ++k) mesh.triangles.push_back({0, 1 + k, 1 + (k + 1) % 6});
    mesh.boundary = flag_boundary(mesh);
    mesh.h = max_edge_length(mesh);
    mesh.nominal_h = radius;

    for (int level = n; level > 1; level /= 2) mesh = refine(mesh);
    return mesh;
}

Mesh refine(const Mesh& mesh) {
    // Edge -> number of adjacent triangles, ordered by (min, max) parent index.
    std::map<std::array<int, 2>, int> edge_count;
    for (const auto& t : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            int a = t[k], b = t[(k + 1) % 3];
            ++edge_count[{std::min(a, b), std::max(a, b)}];
        }
    }

    Mesh out;
    out.radius = mesh.radius;
    out.vertices = mesh.vertices;
    std::map<std::array<int, 2>, int> midpoint;
    for (const auto& [edge, count] : edge_count) {
        Point2 m = 0.5 * (mesh.vertices[edge[0]] + mesh.vertices[edge[1]]);
        if (count == 1) {
            const double r = norm(m);
            m = (mesh.radius / r) * m;
        }
        midpoint[edge] = static_cast<int>(out.vertices.size());
        out.vertices.push_back(m);
    }

    auto mid = [&](int a, int b) { return midpoint.at({std::min(a, b), std::max(a, b)}); };
    out.triangles.reserve(4 * mesh.triangles.size());
    for (const auto& t : mesh.triangles) {
        const int a = t[0], b = t[1], c = t[2];
        const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
        out.triangles.push_back({a, ab, ca});
        out.triangles.push_back({ab, b, bc});
        out.triangles.push_back({ca, bc, c});
        out.triangles.push_back({ab, bc, ca});
    }
    out.boundary = flag_boundary(out);
    out.h = max_edge_length(out);
    out.nominal_h = 0.5 * mesh.nominal_h;
    return out;
}

std::array<double, 3> barycentric_coordinates(const Mesh& mesh, std::size_t t, Point2 p) {
    const auto& tri = mesh.triangles[t];
    const Point2 a = mesh.vertices[tri[0]], b = mesh.vertices[tri[1]], c = mesh.vertices[tri[2]];
    const double det = cross(b - a, c - a);
    const double l1 = cross(p - a, c - a) / det;
    const double l2 = cross(b - a, p - a) / det;
    return {1.0 - l1 - l2, l1, l2};
}

std::optional<PointLocation> locate_point(const Mesh& mesh, Point2 p) {
    std::vector<std::size_t> all(mesh.triangles.size());
    for (std::size_t t = 0; t < all.size(); ++t) all[t] = t;
    return locate_among(mesh, all, p);
}

PointLocator::PointLocator(const Mesh& mesh) : mesh_(&mesh) {
    const double extent = 2.0 * mesh.radius * (1.0 + 1e-6);
    cells_ = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(mesh.triangles.size()) / 2.0)));
    cell_size_ = extent / cells_;
    origin_ = -0.5 * extent;
    buckets_.resize(static_cast<std::size_t>(cells_) * cells_);
    const double pad = kSnapTol * mesh.radius * 2.0;
    auto cell_of = [&](double x) {
        return std::clamp(static_cast<int>(std::floor((x - origin_) / cell_size_)), 0, cells_ - 1);
    };
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
        for (int v : mesh.triangles[t]) {
            xmin = std::min(xmin, mesh.vertices[v].x);
            xmax = std::max(xmax, mesh.vertices[v].x);
            ymin = std::min(ymin, mesh.vertices[v].y);
            ymax = std::max(ymax, mesh.vertices[v].y);
        }
        for (int i = cell_of(xmin - pad); i <= cell_of(xmax + pad); ++i)
            for (int j = cell_of(ymin - pad); j <= cell_of(ymax + pad); ++j)
                buckets_[static_cast<std::size_t>(i) * cells_ + j].push_back(t);
    }
}

std::optional<PointLocation> PointLocator::locate(Point2 p) const {
    const int i = static_cast<int>(std::floor((p.x - origin_) / cell_size_));
    const int j = static_cast<int>(std::floor((p.y - origin_) / cell_size_));
    if (i < 0 || j < 0 || i >= cells_ || j >= cells_) return std::nullopt;
    return locate_among(*mesh_, buckets_[static_cast<std::size_t>(i) * cells_ + j], p);
}

std::optional<std::string> check_mesh_invariants(const Mesh& mesh) {
    std::ostringstream msg;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        if (!(mesh.signed_area(t) > 0.0)) {
            msg << "triangle " << t << " has nonpositive signed area";
            return msg.str();
        }
    }
    std::map<std::array<int, 2>, int> count;
    for (const auto& t : mesh.triangles)
        for (int k = 0; k < 3; ++k) {
            int a = t[k], b = t[(k + 1) % 3];
            ++count[{std::min(a, b), std::max(a, b)}];
        }
    std::vector<bool> on_boundary_edge(mesh.vertices.size(), false);
    for (const auto& [e, c] : count) {
        if (c > 2) {
            msg << "edge (" << e[0] << "," << e[1] << ") shared by " << c << " triangles";
            return msg.str();
        }
        if (c == 1) on_boundary_edge[e[0]] = on_boundary_edge[e[1]] = true;
    }
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        if (mesh.boundary[v] != on_boundary_edge[v]) {
            msg << "boundary flag of vertex " << v << " disagrees with edge incidence";
            return msg.str();
        }
        if (mesh.boundary[v] && std::abs(norm(mesh.vertices[v]) - mesh.radius) > 1e-12 * mesh.radius) {
            msg << "boundary vertex " << v << " is off the circle";
            return msg.str();
        }
    }
    if (mesh.h != max_edge_length(mesh)) return std::string("h differs from the longest edge");
    return std::nullopt;
}

}  // namespace obstacle_fem
