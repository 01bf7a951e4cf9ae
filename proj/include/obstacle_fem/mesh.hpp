#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace obstacle_fem {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }

using Triangle = std::array<int, 3>;

class MeshError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Conforming triangulation of the disk of radius `radius` centred at the
 * origin. Triangles are counterclockwise; `boundary[v]` is set iff v lies on
 * a boundary edge (and then |v| == radius).
 *
 * `h` is the longest edge. `nominal_h` is radius / n for meshes produced by
 * build_disk_mesh (and halved by every refine); it is the mesh size used for
 * penalty-mesh couplings.
 */
struct Mesh {
    std::vector<Point2> vertices;
    std::vector<Triangle> triangles;
    std::vector<bool> boundary;
    double radius = 0.0;
    double h = 0.0;
    double nominal_h = 0.0;

    std::size_t num_vertices() const { return vertices.size(); }
    std::size_t num_triangles() const { return triangles.size(); }

    double signed_area(std::size_t t) const;
    double total_area() const;
    std::vector<int> boundary_vertices() const;
};

/// Hexagon fan (7 vertices, 6 triangles) refined log2(n) times.
Mesh build_disk_mesh(int n, double radius);

/**
 * Red refinement: every triangle is split into four through its edge
 * midpoints, and boundary-edge midpoints are pushed radially onto the circle.
 * Vertex order: parents first, then midpoints sorted by (min parent, max
 * parent).
 */
Mesh refine(const Mesh& mesh);

/// Longest edge length.
double max_edge_length(const Mesh& mesh);

/// Undirected edges as (lo, hi) pairs, sorted.
std::vector<std::array<int, 2>> mesh_edges(const Mesh& mesh);

struct PointLocation {
    std::size_t triangle = 0;
    std::array<double, 3> barycentric{};
};

/// Barycentric coordinates of p with respect to triangle t (unclamped).
std::array<double, 3> barycentric_coordinates(const Mesh& mesh, std::size_t t, Point2 p);

/**
 * Finds the first triangle (by index) containing `p`. Points outside the mesh
 * by at most 1e-10 * radius are snapped to the closest point of the nearest
 * triangle; anything farther yields std::nullopt.
 */
std::optional<PointLocation> locate_point(const Mesh& mesh, Point2 p);

/// Bucketed point location for repeated queries; same results as locate_point.
class PointLocator {
public:
    explicit PointLocator(const Mesh& mesh);
    std::optional<PointLocation> locate(Point2 p) const;

private:
    const Mesh* mesh_;
    int cells_ = 1;
    double cell_size_ = 1.0;
    double origin_ = 0.0;
    std::vector<std::vector<std::size_t>> buckets_;
};

/// Checks every Mesh invariant; returns a description of the first violation.
std::optional<std::string> check_mesh_invariants(const Mesh& mesh);

}  // namespace obstacle_fem
