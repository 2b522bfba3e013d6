#include "curvedhho/quadrature.hpp"

#include "curvedhho/errors.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

namespace curvedhho {

Rule1D gauss_legendre(std::size_t n)
{
    if (n == 0) throw DomainError("Gauss-Legendre rule needs at least one point");
    Rule1D rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        // Newton on P_n from the Chebyshev-like initial guess.
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double kk = static_cast<double>(k);
                const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
                p0 = p1;
                p1 = p2;
            }
            const double pn = n == 1 ? x : p1;
            const double pnm1 = n == 1 ? 1.0 : p0;
            dp = static_cast<double>(n) * (x * pn - pnm1) / (x * x - 1.0);
            const double dx = pn / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0;
        double p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
            const double kk = static_cast<double>(k);
            const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
            p0 = p1;
            p1 = p2;
        }
        const double pn = n == 1 ? x : p1;
        const double pnm1 = n == 1 ? 1.0 : p0;
        dp = static_cast<double>(n) * (x * pn - pnm1) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1], ascending order
        rule.nodes[i] = 0.5 * (1.0 - x);
        rule.nodes[n - 1 - i] = 0.5 * (1.0 + x);
        rule.weights[i] = 0.5 * w;
        rule.weights[n - 1 - i] = 0.5 * w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.5;
    return rule;
}

EdgeRule edge_rule(const Face& face, FaceId id, const Rule1D& base)
{
    EdgeRule rule;
    rule.face = id;
    const double a = face.curve.t0();
    const double b = face.curve.t1();
    rule.points.reserve(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        const double t = a + (b - a) * base.nodes[i];
        const CurvePoint cp = face.curve.eval(t);
        rule.points.push_back(cp.point);
        rule.weights.push_back((b - a) * base.weights[i] * cp.tangent.norm());
        rule.normals.push_back(face.normal(t));
        rule.params.push_back(t);
    }
    return rule;
}

ElemRule element_rule(const Mesh& mesh, ElementId element, std::span<const EdgeRule> edge_rules,
                      const Rule1D& radial, const Point& base)
{
    const Element& el = mesh.element(element);
    if (el.faces.empty()) throw StructuralError("element " + std::to_string(element) + " has no faces");
    if (edge_rules.size() != el.faces.size()) {
        throw StructuralError("element rule needs one edge rule per face of element " + std::to_string(element));
    }
    ElemRule rule;
    rule.element = element;
    rule.base = base;
    const double scale = el.diameter > 0.0 ? el.diameter : 1.0;

    for (std::size_t k = 0; k < el.faces.size(); ++k) {
        const FaceUse& use = el.faces[k];
        const Face& face = mesh.face(use.face);
        const EdgeRule& er = edge_rules[k];
        const double sign = (use.reversed ? -1.0 : 1.0) * static_cast<double>(face.normal_orientation);
        if (face.is_straight()) {
            // (x - nu).n vanishes identically when nu lies on the segment's line.
            const Point a = face.curve.start();
            const Vector n = face.curve.right_normal(face.curve.t0());
            if (std::abs((a - base).dot(n)) <= 1e-12 * scale) continue;
        }
        for (std::size_t i = 0; i < er.size(); ++i) {
            const Vector nT = sign * er.normals[i];
            const double factor = er.weights[i] * (er.points[i] - base).dot(nT);
            if ((er.points[i] - base).dot(nT) < -1e-12 * scale) rule.star_shaped_wrt_base = false;
            for (std::size_t j = 0; j < radial.size(); ++j) {
                const double xj = radial.nodes[j];
                rule.points.push_back(xj * er.points[i] + (1.0 - xj) * base);
                rule.weights.push_back(factor * radial.weights[j] * xj);
            }
        }
    }
    return rule;
}

ElemRule element_rule(const Mesh& mesh, ElementId element, const Rule1D& edge_base, const Rule1D& radial)
{
    const Element& el = mesh.element(element);
    std::vector<EdgeRule> rules;
    rules.reserve(el.faces.size());
    for (const FaceUse& use : el.faces) rules.push_back(edge_rule(mesh.face(use.face), use.face, edge_base));
    const Point base = mesh.vertices().at(choose_base_vertex(mesh, element));
    return element_rule(mesh, element, rules, radial, base);
}

VertexId choose_base_vertex(const Mesh& mesh, ElementId element)
{
    const Element& el = mesh.element(element);
    if (el.faces.empty()) throw StructuralError("element " + std::to_string(element) + " has no vertices");
    const std::vector<VertexId> verts = element_vertices(mesh, element);
    const std::size_t n = el.faces.size();
    VertexId best = verts[0];
    int best_count = -1;
    for (std::size_t i = 0; i < n; ++i) {
        // vertex i starts face use i and ends face use i - 1
        int count = 0;
        if (mesh.face(el.faces[i].face).is_straight()) ++count;
        if (n > 1 && mesh.face(el.faces[(i + n - 1) % n].face).is_straight()) ++count;
        if (count > best_count || (count == best_count && verts[i] < best)) {
            best_count = count;
            best = verts[i];
        }
    }
    return best;
}

namespace {

template <class Rule>
double integrate_impl(const Rule& rule, const ScalarField& f)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.points.size(); ++i) {
        const double v = f(rule.points[i]);
        if (!std::isfinite(v)) {
            std::ostringstream msg;
            msg << std::setprecision(17) << "non-finite integrand at (" << rule.points[i].x() << ", "
                << rule.points[i].y() << ")";
            throw EvaluationError(msg.str());
        }
        sum += rule.weights[i] * v;
    }
    return sum;
}

} // namespace

double integrate(const ElemRule& rule, const ScalarField& f) { return integrate_impl(rule, f); }

double integrate(const EdgeRule& rule, const ScalarField& f) { return integrate_impl(rule, f); }

double integrate_flux(const EdgeRule& rule, const VectorField& f)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.points.size(); ++i) {
        const double v = f(rule.points[i]).dot(rule.normals[i]);
        if (!std::isfinite(v)) throw EvaluationError("non-finite flux integrand");
        sum += rule.weights[i] * v;
    }
    return sum;
}

void dump_rule_csv(std::ostream& os, std::span<const Point> points, std::span<const double> weights)
{
    os << "x,y,weight\n" << std::setprecision(17);
    for (std::size_t i = 0; i < points.size(); ++i) {
        os << points[i].x() << ',' << points[i].y() << ',' << weights[i] << '\n';
    }
}

} // namespace curvedhho
