#pragma once

// Curved 2D meshes: curves, faces, elements and their geometric queries.
//
// Elements are simply connected regions whose boundary is a closed,
// counter-clockwise loop of faces. Each face carries an exact C1 curve. The
// curve taxonomy is closed (segments, circular arcs, ellipse arcs); a new
// curve type only has to provide `eval`, `signed_area_integral` and a
// parameter interval.

#include <Eigen/Core>

#include <cstddef>
#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace curvedhho {

using Point = Eigen::Vector2d;
using Vector = Eigen::Vector2d;

using VertexId = std::size_t;
using FaceId = std::size_t;
using ElementId = std::size_t;

/// Marker for the missing side of a boundary face.
inline constexpr ElementId kBoundary = std::numeric_limits<ElementId>::max();

/// Straight segment, gamma(t) = a + t (b - a), t in [0, 1].
struct Segment {
    Point a;
    Point b;
};

/// gamma(t) = center + radius (cos(s t), sin(s t)) with s = orientation = +-1.
struct CircularArc {
    Point center;
    double radius = 1.0;
    double t0 = 0.0;
    double t1 = 0.0;
    int orientation = 1;
};

/// gamma(t) = center + axes (cos t, sin t), axes invertible.
struct EllipseArc {
    Point center;
    Eigen::Matrix2d axes;
    double t0 = 0.0;
    double t1 = 0.0;
};

struct CurvePoint {
    Point point;
    Vector tangent;
};

class Curve {
public:
    using Variant = std::variant<Segment, CircularArc, EllipseArc>;

    Curve() : shape_(Segment{Point::Zero(), Point::UnitX()}) {}
    Curve(Segment s) : shape_(s) {}
    Curve(CircularArc c) : shape_(c) {}
    Curve(EllipseArc e) : shape_(e) {}

    /// Point and derivative at parameter t; throws DomainError outside [t0, t1].
    CurvePoint eval(double t) const;

    double t0() const;
    double t1() const;
    Point start() const { return eval(t0()).point; }
    Point end() const { return eval(t1()).point; }

    bool is_straight() const { return std::holds_alternative<Segment>(shape_); }

    /// Right-hand unit normal of the forward tangent at t.
    Vector right_normal(double t) const;

    /// Exact value of 1/2 * int (x dy - y dx) along the curve.
    double signed_area_integral() const;

    /// Same curve over the parameter range [a, b], a < b. Segments require
    /// [a, b] within [0, 1]; conic arcs accept any range (they are periodic).
    Curve restricted(double a, double b) const;

    /// The chord joining the end points.
    Curve chord() const { return Segment{start(), end()}; }

    const Variant& shape() const { return shape_; }

    bool operator==(const Curve& other) const;

private:
    Variant shape_;
};

/// Curve of a full circle / ellipse written as center + axes (cos t, sin t).
struct ConicForm {
    Point center;
    Eigen::Matrix2d axes;
};

/// Conic form of a circular or ellipse arc; throws DomainError for segments.
ConicForm conic_form(const Curve& curve);

struct Face {
    Curve curve;
    ElementId elem_left = kBoundary;  ///< element traversing the curve forward
    ElementId elem_right = kBoundary; ///< element traversing the curve backward
    int normal_orientation = 1;       ///< n_F = orientation * right_normal
    VertexId v_begin = 0;
    VertexId v_end = 0;

    bool is_boundary() const { return elem_left == kBoundary || elem_right == kBoundary; }
    bool is_straight() const { return curve.is_straight(); }

    /// Face normal n_F at parameter t.
    Vector normal(double t) const { return static_cast<double>(normal_orientation) * curve.right_normal(t); }
};

struct FaceUse {
    FaceId face = 0;
    bool reversed = false;
};

struct Element {
    std::vector<FaceUse> faces;
    int region = 0;
    double diameter = 0.0;
    double area = 0.0;
    Point centroid = Point::Zero();
};

class Mesh {
public:
    Mesh() = default;

    /// Builds a mesh and caches element area, centroid and diameter. Face
    /// vertex ids are taken as given; use `snap_face_vertices` when they are
    /// unknown.
    Mesh(std::vector<Point> vertices, std::vector<Face> faces, std::vector<Element> elements);

    const std::vector<Point>& vertices() const { return vertices_; }
    const std::vector<Face>& faces() const { return faces_; }
    const std::vector<Element>& elements() const { return elements_; }

    const Face& face(FaceId id) const { return faces_.at(id); }
    const Element& element(ElementId id) const { return elements_.at(id); }

    std::size_t num_elements() const { return elements_.size(); }
    std::size_t num_faces() const { return faces_.size(); }
    std::size_t num_internal_faces() const;

    /// max over elements of the diameter.
    double h() const { return h_; }

    double total_area() const;

private:
    std::vector<Point> vertices_;
    std::vector<Face> faces_;
    std::vector<Element> elements_;
    double h_ = 0.0;
};

/// Assigns v_begin / v_end of each face to the closest listed vertex.
/// Throws StructuralError if an end point has no vertex within `tol`.
void snap_face_vertices(const std::vector<Point>& vertices, std::vector<Face>& faces, double tol);

/// Point and derivative of a curve at parameter t.
CurvePoint curve_eval(const Curve& curve, double t);

/// +1 if the element traverses the face forward, -1 otherwise. Outward
/// normal = sign * right_normal. Throws IncidenceError if the face is not in
/// the element's loop.
double outward_sign(const Mesh& mesh, ElementId element, FaceId face);

/// Unit normal to `face` at parameter t pointing out of `element`.
Vector outward_normal(const Mesh& mesh, ElementId element, FaceId face, double t);

/// Area by the closed-form boundary integral 1/2 int (x dy - y dx).
double element_area_closed_form(const Mesh& mesh, ElementId element);

/// Diameter from a boundary sample (vertices and edge nodes) with local
/// refinement of the farthest pair along curved faces.
double element_diameter(const Mesh& mesh, ElementId element);

/// Vertex ids of an element in loop order (start vertex of each face use).
std::vector<VertexId> element_vertices(const Mesh& mesh, ElementId element);

struct MeshViolation {
    enum class Kind { Incidence, Closure, Skeleton, Geometry, Normal, Area };
    Kind kind;
    std::string message;
};

/// Checks mesh, element and face invariants. Empty result means valid.
std::vector<MeshViolation> validate_mesh(const Mesh& mesh);

std::string to_string(MeshViolation::Kind kind);

} // namespace curvedhho
