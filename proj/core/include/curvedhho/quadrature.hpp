#pragma once

// Quadrature on curved elements.
//
// Edge rules come from mapping a Gauss-Legendre rule through the face
// parameterization. Element rules rewrite the area integral as a boundary
// integral of an inverse-divergence field anchored at a base point nu:
//
//   int_T v = int_dT (x - nu).n_T int_0^1 t v(t x + (1 - t) nu) dt ds,
//
// and apply an edge rule to the outer integral and a Gauss-Legendre rule
// (weight t folded in) to the radial one.

#include "curvedhho/geometry.hpp"

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace curvedhho {

struct Rule1D {
    std::vector<double> nodes;   ///< in [0, 1]
    std::vector<double> weights; ///< positive, summing to 1
    std::size_t size() const { return nodes.size(); }
};

/// N-point Gauss-Legendre rule on [0, 1], exact up to degree 2N - 1.
Rule1D gauss_legendre(std::size_t n);

struct EdgeRule {
    FaceId face = 0;
    std::vector<Point> points;
    std::vector<double> weights;   ///< include the |gamma'| factor
    std::vector<Vector> normals;   ///< face normal n_F at each point
    std::vector<double> params;    ///< curve parameter of each point
    std::size_t size() const { return points.size(); }
};

/// Maps `base` onto the face curve.
EdgeRule edge_rule(const Face& face, FaceId id, const Rule1D& base);

struct ElemRule {
    ElementId element = 0;
    Point base = Point::Zero();
    std::vector<Point> points;
    std::vector<double> weights;
    /// False when some boundary node sees the base point from outside
    /// ((x - nu).n_T < 0): radial segments then leave the element.
    bool star_shaped_wrt_base = true;
    std::size_t size() const { return points.size(); }
};

/// Inverse-divergence element rule. `edge_rules` is indexed like the
/// element's face loop.
ElemRule element_rule(const Mesh& mesh, ElementId element, std::span<const EdgeRule> edge_rules,
                      const Rule1D& radial, const Point& base);

/// Convenience overload: builds edge rules from `edge_base` and picks the
/// base vertex with `choose_base_vertex`.
ElemRule element_rule(const Mesh& mesh, ElementId element, const Rule1D& edge_base, const Rule1D& radial);

/// Vertex incident to the most straight faces of the element, lowest vertex
/// id on ties.
VertexId choose_base_vertex(const Mesh& mesh, ElementId element);

using ScalarField = std::function<double(const Point&)>;
using VectorField = std::function<Vector(const Point&)>;

/// Sum of weight * f(point); throws EvaluationError on a non-finite value.
double integrate(const ElemRule& rule, const ScalarField& f);
double integrate(const EdgeRule& rule, const ScalarField& f);
/// Integral of a vector field dotted with the face normal n_F.
double integrate_flux(const EdgeRule& rule, const VectorField& f);

/// Writes "x,y,weight" lines with 17 significant digits.
void dump_rule_csv(std::ostream& os, std::span<const Point> points, std::span<const double> weights);

} // namespace curvedhho
