#include "curvedhho/geometry.hpp"

#include "curvedhho/errors.hpp"
#include "curvedhho/quadrature.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace curvedhho {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double cross(const Vector& a, const Vector& b) { return a.x() * b.y() - a.y() * b.x(); }

const Rule1D& sampling_rule()
{
    static const Rule1D rule = gauss_legendre(30);
    return rule;
}

} // namespace

CurvePoint Curve::eval(double t) const
{
    const double a = t0();
    const double b = t1();
    const double slack = 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
    if (!(t >= a - slack && t <= b + slack)) {
        std::ostringstream msg;
        msg << "curve parameter " << t << " outside [" << a << ", " << b << "]";
        throw DomainError(msg.str());
    }
    return std::visit(
        overloaded{
            [t](const Segment& s) { return CurvePoint{s.a + t * (s.b - s.a), s.b - s.a}; },
            [t](const CircularArc& c) {
                const double s = static_cast<double>(c.orientation);
                const double th = s * t;
                return CurvePoint{c.center + c.radius * Point(std::cos(th), std::sin(th)),
                                  c.radius * s * Vector(-std::sin(th), std::cos(th))};
            },
            [t](const EllipseArc& e) {
                return CurvePoint{e.center + e.axes * Point(std::cos(t), std::sin(t)),
                                  e.axes * Vector(-std::sin(t), std::cos(t))};
            },
        },
        shape_);
}

double Curve::t0() const
{
    return std::visit(overloaded{[](const Segment&) { return 0.0; }, [](const CircularArc& c) { return c.t0; },
                                 [](const EllipseArc& e) { return e.t0; }},
                      shape_);
}

double Curve::t1() const
{
    return std::visit(overloaded{[](const Segment&) { return 1.0; }, [](const CircularArc& c) { return c.t1; },
                                 [](const EllipseArc& e) { return e.t1; }},
                      shape_);
}

Vector Curve::right_normal(double t) const
{
    const Vector tau = eval(t).tangent;
    return Vector(tau.y(), -tau.x()) / tau.norm();
}

double Curve::signed_area_integral() const
{
    return std::visit(overloaded{
                          [](const Segment& s) { return 0.5 * cross(s.a, s.b); },
                          [](const CircularArc& c) {
                              const double s = static_cast<double>(c.orientation);
                              const double lin = c.radius * (c.center.x() * (std::sin(s * c.t1) - std::sin(s * c.t0)) -
                                                             c.center.y() * (std::cos(s * c.t1) - std::cos(s * c.t0)));
                              return 0.5 * (lin + c.radius * c.radius * s * (c.t1 - c.t0));
                          },
                          [](const EllipseArc& e) {
                              const Vector du(std::cos(e.t1) - std::cos(e.t0), std::sin(e.t1) - std::sin(e.t0));
                              return 0.5 * (cross(e.center, e.axes * du) + e.axes.determinant() * (e.t1 - e.t0));
                          },
                      },
                      shape_);
}

Curve Curve::restricted(double a, double b) const
{
    if (!(a < b)) throw DomainError("restricted curve needs a < b");
    return std::visit(overloaded{
                          [&](const Segment&) { return Curve(Segment{eval(a).point, eval(b).point}); },
                          [&](CircularArc c) {
                              c.t0 = a;
                              c.t1 = b;
                              return Curve(c);
                          },
                          [&](EllipseArc e) {
                              e.t0 = a;
                              e.t1 = b;
                              return Curve(e);
                          },
                      },
                      shape_);
}

bool Curve::operator==(const Curve& other) const
{
    if (shape_.index() != other.shape_.index()) return false;
    return std::visit(
        overloaded{
            [&](const Segment& s) {
                const auto& o = std::get<Segment>(other.shape_);
                return s.a == o.a && s.b == o.b;
            },
            [&](const CircularArc& c) {
                const auto& o = std::get<CircularArc>(other.shape_);
                return c.center == o.center && c.radius == o.radius && c.t0 == o.t0 && c.t1 == o.t1 &&
                       c.orientation == o.orientation;
            },
            [&](const EllipseArc& e) {
                const auto& o = std::get<EllipseArc>(other.shape_);
                return e.center == o.center && e.axes == o.axes && e.t0 == o.t0 && e.t1 == o.t1;
            },
        },
        shape_);
}

ConicForm conic_form(const Curve& curve)
{
    return std::visit(overloaded{
                          [](const Segment&) -> ConicForm { throw DomainError("a segment has no conic form"); },
                          [](const CircularArc& c) {
                              Eigen::Matrix2d axes;
                              axes << c.radius, 0.0, 0.0, c.radius * c.orientation;
                              return ConicForm{c.center, axes};
                          },
                          [](const EllipseArc& e) { return ConicForm{e.center, e.axes}; },
                      },
                      curve.shape());
}

CurvePoint curve_eval(const Curve& curve, double t) { return curve.eval(t); }

Mesh::Mesh(std::vector<Point> vertices, std::vector<Face> faces, std::vector<Element> elements)
    : vertices_(std::move(vertices)), faces_(std::move(faces)), elements_(std::move(elements))
{
    const Rule1D& rule = sampling_rule();
    for (std::size_t e = 0; e < elements_.size(); ++e) {
        Element& el = elements_[e];
        const bool ids_ok = std::all_of(el.faces.begin(), el.faces.end(),
                                        [&](const FaceUse& u) { return u.face < faces_.size(); });
        if (!ids_ok || el.faces.empty()) continue;
        el.area = element_area_closed_form(*this, e);

        // int_T x = int_dT x^2/2 n_x, int_T y = int_dT y^2/2 n_y
        Point moment = Point::Zero();
        for (const FaceUse& use : el.faces) {
            const Face& f = faces_[use.face];
            const double a = f.curve.t0();
            const double b = f.curve.t1();
            const double sgn = use.reversed ? -1.0 : 1.0;
            for (std::size_t i = 0; i < rule.size(); ++i) {
                const CurvePoint cp = f.curve.eval(a + (b - a) * rule.nodes[i]);
                // n ds = (tau_y, -tau_x) dt
                const double w = (b - a) * rule.weights[i] * sgn;
                moment.x() += w * 0.5 * cp.point.x() * cp.point.x() * cp.tangent.y();
                moment.y() -= w * 0.5 * cp.point.y() * cp.point.y() * cp.tangent.x();
            }
        }
        el.centroid = el.area != 0.0 ? Point(moment / el.area) : Point::Zero();
        el.diameter = element_diameter(*this, e);
        h_ = std::max(h_, el.diameter);
    }
}

std::size_t Mesh::num_internal_faces() const
{
    return static_cast<std::size_t>(
        std::count_if(faces_.begin(), faces_.end(), [](const Face& f) { return !f.is_boundary(); }));
}

double Mesh::total_area() const
{
    double sum = 0.0;
    for (const Element& el : elements_) sum += el.area;
    return sum;
}

void snap_face_vertices(const std::vector<Point>& vertices, std::vector<Face>& faces, double tol)
{
    auto closest = [&](const Point& p) {
        VertexId best = 0;
        double dist = std::numeric_limits<double>::infinity();
        for (VertexId v = 0; v < vertices.size(); ++v) {
            const double d = (vertices[v] - p).norm();
            if (d < dist) {
                dist = d;
                best = v;
            }
        }
        if (dist > tol) {
            std::ostringstream msg;
            msg << "no vertex within " << tol << " of face end point (" << p.x() << ", " << p.y() << ")";
            throw StructuralError(msg.str());
        }
        return best;
    };
    for (Face& f : faces) {
        f.v_begin = closest(f.curve.start());
        f.v_end = closest(f.curve.end());
    }
}

double outward_sign(const Mesh& mesh, ElementId element, FaceId face)
{
    for (const FaceUse& use : mesh.element(element).faces) {
        if (use.face == face) return use.reversed ? -1.0 : 1.0;
    }
    std::ostringstream msg;
    msg << "face " << face << " is not on the boundary of element " << element;
    throw IncidenceError(msg.str());
}

Vector outward_normal(const Mesh& mesh, ElementId element, FaceId face, double t)
{
    const double s = outward_sign(mesh, element, face);
    return s * mesh.face(face).curve.right_normal(t);
}

double element_area_closed_form(const Mesh& mesh, ElementId element)
{
    double area = 0.0;
    for (const FaceUse& use : mesh.element(element).faces) {
        const double a = mesh.face(use.face).curve.signed_area_integral();
        area += use.reversed ? -a : a;
    }
    return area;
}

std::vector<VertexId> element_vertices(const Mesh& mesh, ElementId element)
{
    std::vector<VertexId> out;
    for (const FaceUse& use : mesh.element(element).faces) {
        const Face& f = mesh.face(use.face);
        out.push_back(use.reversed ? f.v_end : f.v_begin);
    }
    return out;
}

double element_diameter(const Mesh& mesh, ElementId element)
{
    const Element& el = mesh.element(element);
    if (el.faces.empty()) throw StructuralError("element " + std::to_string(element) + " has an empty boundary");

    struct Sample {
        const Curve* curve; // null for a fixed vertex
        double t;
        double window;
        Point p;
    };
    std::vector<Sample> samples;
    const Rule1D& rule = sampling_rule();
    for (const FaceUse& use : el.faces) {
        const Curve& c = mesh.face(use.face).curve;
        samples.push_back({nullptr, 0.0, 0.0, c.start()});
        if (c.is_straight()) continue;
        const double a = c.t0();
        const double b = c.t1();
        const double window = 2.0 * (b - a) / static_cast<double>(rule.size());
        for (double x : rule.nodes) {
            const double t = a + (b - a) * x;
            samples.push_back({&c, t, window, c.eval(t).point});
        }
    }

    std::size_t bi = 0;
    std::size_t bj = 0;
    double best = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (std::size_t j = i + 1; j < samples.size(); ++j) {
            const double d = (samples[i].p - samples[j].p).squaredNorm();
            if (d > best) {
                best = d;
                bi = i;
                bj = j;
            }
        }
    }
    Sample p = samples[bi];
    Sample q = samples[bj];
    if (p.curve == nullptr && q.curve == nullptr) return std::sqrt(best);

    // Alternating golden-section maximization along the curved members.
    auto refine = [](Sample& moving, const Point& fixed) {
        if (moving.curve == nullptr) return;
        const double lo_lim = moving.curve->t0();
        const double hi_lim = moving.curve->t1();
        double lo = std::max(lo_lim, moving.t - moving.window);
        double hi = std::min(hi_lim, moving.t + moving.window);
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        auto dist = [&](double t) { return (moving.curve->eval(t).point - fixed).squaredNorm(); };
        double x1 = hi - g * (hi - lo);
        double x2 = lo + g * (hi - lo);
        double f1 = dist(x1);
        double f2 = dist(x2);
        for (int it = 0; it < 80 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
            if (f1 < f2) {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = dist(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = dist(x1);
            }
        }
        const double t = 0.5 * (lo + hi);
        const Point cand = moving.curve->eval(t).point;
        if ((cand - fixed).squaredNorm() > (moving.p - fixed).squaredNorm()) {
            moving.t = t;
            moving.p = cand;
        }
    };
    for (int round = 0; round < 4; ++round) {
        refine(p, q.p);
        refine(q, p.p);
    }
    return std::max(std::sqrt(best), (p.p - q.p).norm());
}

std::string to_string(MeshViolation::Kind kind)
{
    switch (kind) {
    case MeshViolation::Kind::Incidence:
        return "incidence";
    case MeshViolation::Kind::Closure:
        return "closure";
    case MeshViolation::Kind::Skeleton:
        return "skeleton";
    case MeshViolation::Kind::Geometry:
        return "geometry";
    case MeshViolation::Kind::Normal:
        return "normal";
    case MeshViolation::Kind::Area:
        return "area";
    }
    return "unknown";
}

std::vector<MeshViolation> validate_mesh(const Mesh& mesh)
{
    using Kind = MeshViolation::Kind;
    std::vector<MeshViolation> out;
    auto report = [&](Kind kind, const std::string& what) { out.push_back({kind, what}); };

    const std::size_t nf = mesh.num_faces();
    const std::size_t ne = mesh.num_elements();

    // Curves and normals.
    for (FaceId f = 0; f < nf; ++f) {
        const Face& face = mesh.face(f);
        const Curve& c = face.curve;
        const std::string tag = "face " + std::to_string(f);
        if (!(c.t0() < c.t1())) {
            report(Kind::Geometry, tag + ": empty parameter interval");
            continue;
        }
        if (const auto* arc = std::get_if<CircularArc>(&c.shape()); arc && !(arc->radius > 0.0)) {
            report(Kind::Geometry, tag + ": non-positive radius");
            continue;
        }
        if (const auto* ell = std::get_if<EllipseArc>(&c.shape()); ell && ell->axes.determinant() == 0.0) {
            report(Kind::Geometry, tag + ": singular ellipse axes");
            continue;
        }
        if (face.normal_orientation != 1 && face.normal_orientation != -1) {
            report(Kind::Normal, tag + ": normal orientation must be +-1");
        }
        for (int i = 0; i <= 8; ++i) {
            const double t = c.t0() + (c.t1() - c.t0()) * i / 8.0;
            const Vector tau = c.eval(t).tangent;
            if (!(tau.norm() > 0.0)) {
                report(Kind::Geometry, tag + ": vanishing tangent");
                break;
            }
            const Vector n = face.normal(t);
            if (std::abs(n.dot(tau)) > 1e-13 * tau.norm() || std::abs(n.norm() - 1.0) > 1e-13) {
                report(Kind::Normal, tag + ": normal not unit/orthogonal");
                break;
            }
        }
        if (face.elem_left == kBoundary && face.elem_right == kBoundary) {
            report(Kind::Skeleton, tag + ": no incident element");
        }
        for (ElementId e : {face.elem_left, face.elem_right}) {
            if (e != kBoundary && e >= ne) report(Kind::Incidence, tag + ": unknown element " + std::to_string(e));
        }
    }

    // Element loops and incidence symmetry.
    std::vector<int> forward_uses(nf, 0);
    std::vector<int> backward_uses(nf, 0);
    for (ElementId e = 0; e < ne; ++e) {
        const Element& el = mesh.element(e);
        const std::string tag = "element " + std::to_string(e);
        if (el.faces.empty()) {
            report(Kind::Closure, tag + ": empty face loop");
            continue;
        }
        bool ids_ok = true;
        for (const FaceUse& use : el.faces) {
            if (use.face >= nf) {
                report(Kind::Incidence, tag + ": unknown face " + std::to_string(use.face));
                ids_ok = false;
                continue;
            }
            (use.reversed ? backward_uses : forward_uses)[use.face] += 1;
            const Face& face = mesh.face(use.face);
            const ElementId expect = use.reversed ? face.elem_right : face.elem_left;
            if (expect != e) {
                report(Kind::Incidence, tag + ": face " + std::to_string(use.face) + " does not list it on the " +
                                            (use.reversed ? "right" : "left"));
            }
        }
        if (!ids_ok) continue;
        const double scale = el.diameter > 0.0 ? el.diameter : 1.0;
        for (std::size_t i = 0; i < el.faces.size(); ++i) {
            const FaceUse& a = el.faces[i];
            const FaceUse& b = el.faces[(i + 1) % el.faces.size()];
            const Curve& ca = mesh.face(a.face).curve;
            const Curve& cb = mesh.face(b.face).curve;
            const Point end = a.reversed ? ca.start() : ca.end();
            const Point start = b.reversed ? cb.end() : cb.start();
            if ((end - start).norm() > 1e-12 * scale) {
                report(Kind::Closure, tag + ": loop opens after face " + std::to_string(a.face));
            }
        }
        if (!(el.area > 0.0)) report(Kind::Area, tag + ": non-positive area");
        if (!(el.diameter > 0.0)) report(Kind::Area, tag + ": non-positive diameter");
        if (el.area > 0.0) {
            const ElemRule rule = element_rule(mesh, e, gauss_legendre(30), gauss_legendre(30));
            double quad_area = 0.0;
            for (double w : rule.weights) quad_area += w;
            if (std::abs(quad_area - el.area) > 1e-10 * el.area) {
                std::ostringstream msg;
                msg << tag << ": quadrature area " << quad_area << " differs from boundary area " << el.area;
                report(Kind::Area, msg.str());
            }
        }
    }

    for (FaceId f = 0; f < nf; ++f) {
        const Face& face = mesh.face(f);
        const int expected_fwd = face.elem_left == kBoundary ? 0 : 1;
        const int expected_bwd = face.elem_right == kBoundary ? 0 : 1;
        if (forward_uses[f] != expected_fwd || backward_uses[f] != expected_bwd) {
            report(Kind::Skeleton, "face " + std::to_string(f) + " referenced " +
                                       std::to_string(forward_uses[f] + backward_uses[f]) +
                                       " times, inconsistent with its incidence");
        }
    }
    return out;
}

} // namespace curvedhho
