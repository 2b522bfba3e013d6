#pragma once

// Small meshes and independent integration oracles shared by the tests.

#include "curvedhho/geometry.hpp"
#include "curvedhho/meshgen.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace testing_support {

using curvedhho::Point;

/// One element bounded by straight segments through `pts` (counter-clockwise).
inline curvedhho::Mesh polygon_mesh(const std::vector<Point>& pts)
{
    std::vector<curvedhho::Face> faces;
    curvedhho::Element el;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        curvedhho::Face f;
        f.curve = curvedhho::Segment{pts[i], pts[(i + 1) % pts.size()]};
        f.elem_left = 0;
        f.v_begin = i;
        f.v_end = (i + 1) % pts.size();
        faces.push_back(f);
        el.faces.push_back({i, false});
    }
    return curvedhho::Mesh(pts, faces, {el});
}

inline curvedhho::Mesh unit_square_mesh()
{
    return polygon_mesh({Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1)});
}

/// Quarter of the unit disc as a single element: two radii and one arc.
inline curvedhho::Mesh quarter_disc_mesh()
{
    using namespace curvedhho;
    std::vector<Point> v{Point(0, 0), Point(1, 0), Point(0, 1)};
    std::vector<Face> faces(3);
    faces[0].curve = Segment{v[0], v[1]};
    faces[1].curve = CircularArc{Point(0, 0), 1.0, 0.0, std::numbers::pi / 2, 1};
    faces[2].curve = Segment{v[2], v[0]};
    for (std::size_t i = 0; i < 3; ++i) {
        faces[i].elem_left = 0;
        faces[i].v_begin = i;
        faces[i].v_end = (i + 1) % 3;
    }
    Element el;
    el.faces = {{0, false}, {1, false}, {2, false}};
    return Mesh(v, faces, {el});
}

/// Uniform n x n grid on [0,1]^2 without curved cuts.
inline curvedhho::Mesh square_grid(std::size_t n)
{
    curvedhho::CutSpec spec;
    spec.n = n;
    return curvedhho::cut_cartesian(spec);
}

/// Random simple polygon, star-shaped about `center`, counter-clockwise.
/// Radii vary enough to produce non-convex polygons.
inline std::vector<Point> random_polygon(std::mt19937& rng, Point center, std::size_t nv, double rmin, double rmax)
{
    std::uniform_real_distribution<double> jitter(0.15, 0.85);
    std::uniform_real_distribution<double> radius(rmin, rmax);
    const double step = 2.0 * std::numbers::pi / static_cast<double>(nv);
    std::vector<Point> pts;
    for (std::size_t i = 0; i < nv; ++i) {
        const double a = step * (static_cast<double>(i) + jitter(rng));
        const double r = radius(rng);
        pts.emplace_back(center.x() + r * std::cos(a), center.y() + r * std::sin(a));
    }
    return pts;
}

/// Exact integral of x^a y^b over a polygon by Green's theorem with the
/// edge integrals expanded in binomial sums.
inline double polygon_monomial_integral(const std::vector<Point>& pts, int a, int b)
{
    auto binom = [](int n, int k) {
        double r = 1.0;
        for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
        return r;
    };
    double sum = 0.0;
    for (std::size_t e = 0; e < pts.size(); ++e) {
        const Point p = pts[e];
        const Point d = pts[(e + 1) % pts.size()] - p;
        // int_0^1 x(t)^(a+1) y(t)^b dy/dt dt
        double edge = 0.0;
        for (int i = 0; i <= a + 1; ++i) {
            for (int j = 0; j <= b; ++j) {
                edge += binom(a + 1, i) * std::pow(p.x(), a + 1 - i) * std::pow(d.x(), i) * binom(b, j) *
                        std::pow(p.y(), b - j) * std::pow(d.y(), j) / (i + j + 1);
            }
        }
        sum += d.y() * edge;
    }
    return sum / (a + 1);
}

/// Composite Simpson rule on [lo, hi] with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int n)
{
    const double h = (hi - lo) / n;
    double s = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
    return s * h / 3.0;
}

} // namespace testing_support
