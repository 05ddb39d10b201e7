#include "evolab/surface_mesh.hpp"

#include "evolab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace evolab {

namespace {

constexpr double kDegenerateArea = 1e-16;

std::uint64_t edge_key(int a, int b)
{
    const auto lo = static_cast<std::uint64_t>(std::min(a, b));
    const auto hi = static_cast<std::uint64_t>(std::max(a, b));
    return (hi << 32) | lo;
}

TriangulatedSurface icosahedron()
{
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    TriangulatedSurface mesh;
    const std::array<Vec3, 12> raw = {
        Vec3(-1, t, 0), Vec3(1, t, 0), Vec3(-1, -t, 0), Vec3(1, -t, 0),
        Vec3(0, -1, t), Vec3(0, 1, t), Vec3(0, -1, -t), Vec3(0, 1, -t),
        Vec3(t, 0, -1), Vec3(t, 0, 1), Vec3(-t, 0, -1), Vec3(-t, 0, 1),
    };
    for (const auto& v : raw) {
        mesh.vertices.push_back(v.normalized());
    }
    mesh.triangles = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
    };
    return mesh;
}

TriangulatedSurface subdivide(const TriangulatedSurface& coarse)
{
    TriangulatedSurface fine;
    fine.level = coarse.level + 1;
    fine.vertices = coarse.vertices;
    fine.triangles.reserve(4 * coarse.triangles.size());

    std::unordered_map<std::uint64_t, int> midpoints;
    midpoints.reserve(coarse.triangles.size() * 3 / 2);
    const auto midpoint = [&](int a, int b) {
        const auto [it, inserted] = midpoints.try_emplace(edge_key(a, b), 0);
        if (inserted) {
            const Vec3 mid = 0.5 * (coarse.vertices[static_cast<std::size_t>(a)] +
                                    coarse.vertices[static_cast<std::size_t>(b)]);
            fine.vertices.push_back(mid.normalized());
            it->second = static_cast<int>(fine.vertices.size() - 1);
        }
        return it->second;
    };

    for (const auto& [a, b, c] : coarse.triangles) {
        const int ab = midpoint(a, b);
        const int bc = midpoint(b, c);
        const int ca = midpoint(c, a);
        fine.triangles.push_back({a, ab, ca});
        fine.triangles.push_back({b, bc, ab});
        fine.triangles.push_back({c, ca, bc});
        fine.triangles.push_back({ab, bc, ca});
    }
    return fine;
}

std::map<std::uint64_t, std::pair<int, int>> edge_incidence(const TriangulatedSurface& mesh)
{
    // key -> (uses as a->b with a < b, uses as b->a)
    std::map<std::uint64_t, std::pair<int, int>> edges;
    for (const auto& tri : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            const int a = tri[static_cast<std::size_t>(k)];
            const int b = tri[static_cast<std::size_t>((k + 1) % 3)];
            auto& uses = edges[edge_key(a, b)];
            if (a < b) {
                ++uses.first;
            } else {
                ++uses.second;
            }
        }
    }
    return edges;
}

int infer_level(std::size_t vertices, std::size_t triangles)
{
    std::size_t power = 1;
    for (int level = 0; level <= kMaxIcosphereLevel; ++level) {
        if (vertices == 10 * power + 2 && triangles == 20 * power) {
            return level;
        }
        power *= 4;
    }
    return 0;
}

}  // namespace

TriangleCorners TriangulatedSurface::corners(std::size_t triangle) const
{
    const auto& tri = triangles.at(triangle);
    return {vertices.at(static_cast<std::size_t>(tri[0])),
            vertices.at(static_cast<std::size_t>(tri[1])),
            vertices.at(static_cast<std::size_t>(tri[2]))};
}

TriangulatedSurface build_icosphere(int level)
{
    if (level < 0) {
        throw DomainError("build_icosphere: level must be >= 0");
    }
    if (level > kMaxIcosphereLevel) {
        throw CapacityError("build_icosphere: level " + std::to_string(level) +
                            " exceeds the limit of " + std::to_string(kMaxIcosphereLevel));
    }
    TriangulatedSurface mesh = icosahedron();
    for (int l = 0; l < level; ++l) {
        mesh = subdivide(mesh);
    }
    return mesh;
}

Vec3 project_to_sphere(const Vec3& x)
{
    const double norm = x.norm();
    if (!(norm >= 0.5)) {
        throw GeometryError("project_to_sphere: point outside the tubular neighborhood (|x| < 0.5)");
    }
    return x / norm;
}

double triangle_area(const TriangleCorners& tri)
{
    return 0.5 * (tri[1] - tri[0]).cross(tri[2] - tri[0]).norm();
}

Vec3 triangle_normal(const TriangleCorners& tri)
{
    const Vec3 cross = (tri[1] - tri[0]).cross(tri[2] - tri[0]);
    const double twice_area = cross.norm();
    if (!(0.5 * twice_area >= kDegenerateArea)) {
        throw GeometryError("degenerate triangle (area below 1e-16)");
    }
    return cross / twice_area;
}

double area_quotient(const TriangleCorners& tri, const Vec3& point)
{
    const Vec3 normal = triangle_normal(tri);
    const double r = point.norm();
    return point.dot(normal) / (r * r * r);
}

Vec3 barycentric_point(const TriangleCorners& tri, const std::array<double, 3>& bary)
{
    return bary[0] * tri[0] + bary[1] * tri[1] + bary[2] * tri[2];
}

MeshMetrics mesh_metrics(const TriangulatedSurface& mesh)
{
    MeshMetrics metrics;
    metrics.min_edge = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto tri = mesh.corners(t);
        for (int k = 0; k < 3; ++k) {
            const double length =
                (tri[static_cast<std::size_t>(k)] - tri[static_cast<std::size_t>((k + 1) % 3)]).norm();
            metrics.h = std::max(metrics.h, length);
            metrics.min_edge = std::min(metrics.min_edge, length);
        }
        metrics.total_area += triangle_area(tri);
    }
    metrics.quasi_uniformity = metrics.h / metrics.min_edge;
    return metrics;
}

QuadratureRule reference_quadrature(int degree)
{
    QuadratureRule rule;
    rule.degree = degree;
    if (degree == 2) {
        rule.points = {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};
        rule.weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
        return rule;
    }
    if (degree == 4) {
        // Six-point symmetric rule; closed forms of the orbit parameters.
        const double s10 = std::sqrt(10.0);
        const double q = std::sqrt(38.0 - 44.0 * std::sqrt(2.0 / 5.0));
        const double r = std::sqrt(213125.0 - 53320.0 * s10);
        const double a1 = (8.0 - s10 + q) / 18.0;
        const double a2 = (8.0 - s10 - q) / 18.0;
        const double w1 = (620.0 + r) / 3720.0;
        const double w2 = (620.0 - r) / 3720.0;
        for (const auto& [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
            const double b = 1.0 - 2.0 * a;
            rule.points.push_back({b, a, a});
            rule.points.push_back({a, b, a});
            rule.points.push_back({a, a, b});
            rule.weights.insert(rule.weights.end(), 3, w);
        }
        return rule;
    }
    throw DomainError("reference_quadrature: unsupported degree " + std::to_string(degree));
}

double max_area_quotient_defect(const TriangulatedSurface& mesh, const QuadratureRule& rule)
{
    double worst = 0.0;
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto tri = mesh.corners(t);
        for (const auto& bary : rule.points) {
            worst = std::max(worst, std::abs(1.0 - area_quotient(tri, barycentric_point(tri, bary))));
        }
    }
    return worst;
}

double lifted_total_area(const TriangulatedSurface& mesh, const QuadratureRule& rule)
{
    double total = 0.0;
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto tri = mesh.corners(t);
        const double area = triangle_area(tri);
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            total += area * rule.weights[q] * area_quotient(tri, barycentric_point(tri, rule.points[q]));
        }
    }
    return total;
}

bool is_closed_and_oriented(const TriangulatedSurface& mesh)
{
    for (const auto& [key, uses] : edge_incidence(mesh)) {
        if (uses.first != 1 || uses.second != 1) {
            return false;
        }
    }
    return true;
}

std::size_t edge_count(const TriangulatedSurface& mesh)
{
    return edge_incidence(mesh).size();
}

long euler_characteristic(const TriangulatedSurface& mesh)
{
    return static_cast<long>(mesh.vertex_count()) - static_cast<long>(edge_count(mesh)) +
           static_cast<long>(mesh.triangle_count());
}

double enclosed_volume(const TriangulatedSurface& mesh)
{
    double volume = 0.0;
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto tri = mesh.corners(t);
        volume += tri[0].dot(tri[1].cross(tri[2])) / 6.0;
    }
    return volume;
}

void write_off(const TriangulatedSurface& mesh, std::ostream& out)
{
    out << "OFF\n" << mesh.vertex_count() << ' ' << mesh.triangle_count() << " 0\n";
    char buffer[96];
    for (const auto& v : mesh.vertices) {
        std::snprintf(buffer, sizeof buffer, "%.17g %.17g %.17g\n", v.x(), v.y(), v.z());
        out << buffer;
    }
    for (const auto& [a, b, c] : mesh.triangles) {
        out << "3 " << a << ' ' << b << ' ' << c << '\n';
    }
    if (!out) {
        throw IoError("write_off: stream failure");
    }
}

void write_off(const TriangulatedSurface& mesh, const std::string& path)
{
    std::ofstream out(path);
    if (!out) {
        throw IoError("write_off: cannot open " + path);
    }
    write_off(mesh, out);
}

TriangulatedSurface read_off(std::istream& in)
{
    // Content lines with '#' comments and blank lines removed.
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
            lines.push_back(line);
        }
    }
    if (lines.empty() || lines.front().substr(0, 3) != "OFF") {
        throw IoError("read_off: missing OFF header");
    }
    std::size_t cursor = 1;
    const auto next_line = [&]() -> std::istringstream {
        if (cursor >= lines.size()) {
            throw IoError("read_off: unexpected end of file");
        }
        return std::istringstream(lines[cursor++]);
    };

    std::size_t nv = 0;
    std::size_t nf = 0;
    std::size_t ne = 0;
    if (!(next_line() >> nv >> nf >> ne)) {
        throw IoError("read_off: malformed count line");
    }
    TriangulatedSurface mesh;
    mesh.vertices.reserve(nv);
    mesh.triangles.reserve(nf);
    for (std::size_t i = 0; i < nv; ++i) {
        Vec3 v;
        if (!(next_line() >> v.x() >> v.y() >> v.z())) {
            throw IoError("read_off: malformed vertex line " + std::to_string(i));
        }
        mesh.vertices.push_back(v);
    }
    for (std::size_t i = 0; i < nf; ++i) {
        auto stream = next_line();
        int corners = 0;
        std::array<int, 3> tri{};
        if (!(stream >> corners >> tri[0] >> tri[1] >> tri[2]) || corners != 3) {
            throw IoError("read_off: face " + std::to_string(i) + " is not a triangle");
        }
        for (int index : tri) {
            if (index < 0 || static_cast<std::size_t>(index) >= nv) {
                throw IoError("read_off: face " + std::to_string(i) + " has an out-of-range index");
            }
        }
        mesh.triangles.push_back(tri);
    }
    mesh.level = infer_level(nv, nf);
    return mesh;
}

TriangulatedSurface read_off(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("read_off: cannot open " + path);
    }
    return read_off(in);
}

}  // namespace evolab
