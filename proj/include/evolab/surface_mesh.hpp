#pragma once

// Polyhedral approximations of the unit sphere (icosphere refinement) and the
// geometry needed to move functions between the flat mesh and the sphere.

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace evolab {

using Vec3 = Eigen::Vector3d;
using TriangleCorners = std::array<Vec3, 3>;

/// Closed triangulated surface with vertices on the unit sphere and outward
/// (counterclockwise seen from outside) triangle orientation.
struct TriangulatedSurface {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
    int level = 0;

    std::size_t vertex_count() const noexcept { return vertices.size(); }
    std::size_t triangle_count() const noexcept { return triangles.size(); }
    TriangleCorners corners(std::size_t triangle) const;
};

struct QuadratureRule {
    std::vector<std::array<double, 3>> points;  ///< barycentric coordinates
    std::vector<double> weights;                ///< sum to 1; integral = area * sum w f
    int degree = 0;
};

struct MeshMetrics {
    double h = 0.0;  ///< max edge length
    double min_edge = 0.0;
    double quasi_uniformity = 1.0;  ///< max edge / min edge
    double total_area = 0.0;        ///< flat area of the polyhedron
};

inline constexpr int kMaxIcosphereLevel = 7;

/// Icosahedron at level 0; each level splits every triangle into four through
/// edge midpoints pushed back onto the sphere.
TriangulatedSurface build_icosphere(int level);

/// Closest point projection onto the unit sphere, x / |x|, for |x| >= 0.5.
Vec3 project_to_sphere(const Vec3& x);

double triangle_area(const TriangleCorners& tri);

/// Unit normal from the corner ordering; throws GeometryError for degenerate triangles.
Vec3 triangle_normal(const TriangleCorners& tri);

/// Jacobian of the radial projection from the triangle's plane to the sphere,
/// (x . nu_h) / |x|^3.
double area_quotient(const TriangleCorners& tri, const Vec3& point);

/// Point with the given barycentric coordinates.
Vec3 barycentric_point(const TriangleCorners& tri, const std::array<double, 3>& bary);

MeshMetrics mesh_metrics(const TriangulatedSurface& mesh);

/// degree 2: three edge midpoints; degree 4: the six-point symmetric rule.
QuadratureRule reference_quadrature(int degree);

/// max |1 - delta_h| over the quadrature points of every triangle.
double max_area_quotient_defect(const TriangulatedSurface& mesh, const QuadratureRule& rule);

/// sum over triangles of int delta_h d sigma_h, i.e. the sphere area seen through the lift.
double lifted_total_area(const TriangulatedSurface& mesh, const QuadratureRule& rule);

/// Every undirected edge used by exactly two triangles, once in each direction.
bool is_closed_and_oriented(const TriangulatedSurface& mesh);

std::size_t edge_count(const TriangulatedSurface& mesh);
long euler_characteristic(const TriangulatedSurface& mesh);

/// Sum of v1 . (v2 x v3) / 6 over triangles.
double enclosed_volume(const TriangulatedSurface& mesh);

/// OFF text: "OFF", "V F 0", vertex lines "x y z", face lines "3 i j k".
/// Coordinates use 17 significant digits so reading back is bit-exact.
void write_off(const TriangulatedSurface& mesh, std::ostream& out);
void write_off(const TriangulatedSurface& mesh, const std::string& path);
TriangulatedSurface read_off(std::istream& in);
TriangulatedSurface read_off(const std::string& path);

}  // namespace evolab
