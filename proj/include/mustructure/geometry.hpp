// SPDX-License-Identifier: Apache-2.0
#pragma once

// Flat components (segments and planar polygons) embedded in R^3, their
// pairwise junctions, tangent frames, and junction-conforming P1 meshes.

#include "mustructure/common.hpp"
#include "mustructure/expr.hpp"

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mustructure {

enum class ShapeKind { Interval, Rectangle, Polygon, Disc };

/// Shape in component-local coordinates.
struct ShapeSpec {
    ShapeKind kind = ShapeKind::Interval;
    double a = 0.0, b = 0.0;       // Interval
    Vec2 lo{0, 0}, hi{0, 0};       // Rectangle
    std::vector<Vec2> vertices;    // Polygon
    Vec2 center{0, 0};             // Disc
    double radius = 0.0;           // Disc
};

/// Which shape vertices belong to the declared outer boundary.
struct BoundarySpec {
    enum class Mode { All, None, Listed } mode = Mode::All;
    std::vector<int> vertices;
};

struct ComponentSpec {
    int id = 0;
    int dim = 1;
    Vec3 origin{0, 0, 0};
    std::vector<Vec3> tangents;
    ShapeSpec shape;
    std::string density_expr = "1";
    BoundarySpec boundary;
};

struct StructureSpec {
    std::vector<ComponentSpec> components;
    double h = 0.1;
};

/// A validated flat component. Local coordinates map to R^3 through
/// x = origin + sum_k local[k] * tangents[k].
struct Component {
    int id = 0;
    int dim = 1;
    Vec3 origin{0, 0, 0};
    std::vector<Vec3> tangents;
    ShapeKind kind = ShapeKind::Interval;
    double a = 0.0, b = 0.0;         // dim 1
    std::vector<Vec2> polygon;       // dim 2, counter-clockwise
    std::vector<bool> boundary_vertex;  // per interval endpoint {a, b} or polygon vertex
    expr::Expr density;
    std::string density_text;
    double min_density = 0.0;        // filled by build_structure

    Vec3 to_ambient(const Vec2& local) const;
    Vec2 to_local(const Vec3& x) const;         // orthogonal projection onto the span
    double normal_distance(const Vec3& x) const;
    bool shape_contains(const Vec2& local, double tol) const;
    bool contains(const Vec3& x, double tol = kIncidenceTol) const;
    Mat3 projector() const;                      // onto the tangent span
    double measure() const;                      // length or area
};

struct Junction {
    int ci = 0, cj = 0;                // component indices (positions, ci < cj)
    bool is_segment = false;           // otherwise a point
    Vec3 p0{0, 0, 0}, p1{0, 0, 0};     // ambient endpoints; p1 == p0 for points
    Vec2 local_i0{0, 0}, local_i1{0, 0};
    Vec2 local_j0{0, 0}, local_j1{0, 0};
    bool coupled = false;
    // Filled by build_meshes: matching node indices, ordered by arclength from p0.
    std::vector<int> nodes_i, nodes_j;
    std::vector<double> arclength;

    double length() const { return (p1 - p0).norm(); }
    Vec3 direction() const;            // unit p0 -> p1; zero for points
};

/// P1 mesh of one component. 1D cells use the first two entries.
struct Mesh {
    std::vector<Vec2> local;
    std::vector<Vec3> nodes;
    std::vector<std::array<int, 3>> cells;
    bool tensor = false;

    int cell_size() const { return cells.empty() || cells[0][2] < 0 ? 2 : 3; }
    std::vector<std::array<int, 2>> edges() const;  // unique, sorted
};

struct TangentFrame {
    Vec3 point{0, 0, 0};
    std::vector<Vec3> basis;
    Mat3 projector = Mat3::Zero();
    Mat3 normal_projector = Mat3::Identity();

    int rank() const { return static_cast<int>(basis.size()); }
};

/// Frame spanned by an explicit set of vectors (Gram-Schmidt, threshold 1e-8).
TangentFrame frame_from_vectors(const Vec3& point, const std::vector<Vec3>& vectors);

struct Structure {
    std::vector<Component> components;
    std::vector<Junction> junctions;
    std::vector<Mesh> meshes;
    double h = 0.0;

    int index_of(int component_id) const;  // throws ConfigError if unknown
    double total_measure() const;
};

/// Validate a single component description (frames, shape, density text).
Component make_component(const ComponentSpec& spec, double h);

/// Pairwise intersections of components; throws DegenerateOverlap for
/// coincident pieces of full dimension and NonTransversal for nested contact.
std::vector<Junction> compute_junctions(const std::vector<Component>& components);

/// Full pipeline: components, junctions, class checks, meshes, density check.
Structure build_structure(const StructureSpec& spec);

/// (Re)mesh every component at size h and record junction node matches.
Structure build_meshes(Structure s, double h);

TangentFrame tangent_frame_at(const Structure& s, const Vec3& x);

/// Locates points in a mesh and returns P1 barycentric data.
class PointLocator {
public:
    PointLocator() = default;
    PointLocator(const Component& c, const Mesh& m);

    struct Hit {
        int cell = -1;
        std::array<double, 3> bary{0, 0, 0};
    };
    /// Returns nullopt when the local point is outside the mesh by more than tol.
    std::optional<Hit> locate(const Vec2& local, double tol = 1e-10) const;

private:
    const Mesh* mesh_ = nullptr;
    int dim_ = 1;
    Vec2 lo_{0, 0};
    double cell_ = 1.0;
    int nx_ = 1, ny_ = 1;
    std::vector<std::vector<int>> buckets_;
};

}  // namespace mustructure
