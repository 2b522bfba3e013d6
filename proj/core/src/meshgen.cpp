#include "curvedhho/meshgen.hpp"

#include "curvedhho/errors.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <numbers>
#include <sstream>
#include <tuple>

namespace curvedhho {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Loop {
    Curve curve;
    ConicForm conic;
    Eigen::Matrix2d inverse;
    bool ccw = true;
    LoopRole role = LoopRole::Boundary;
    int interface_bit = -1;

    bool contains(const Point& p) const { return (inverse * (p - conic.center)).squaredNorm() < 1.0; }
};

struct Crossing {
    std::size_t loop = 0;
    double t = 0.0;
    Point p;
    bool vertical = false; // lies on a line x = const
    std::size_t line = 0;
    std::size_t seg = 0;
    double along = 0.0;
};

struct ArcPiece {
    std::size_t loop = 0;
    std::size_t index = 0; // piece index within the loop
    double ta = 0.0;
    double tb = 0.0;
    std::size_t start = 0; // crossing ids
    std::size_t end = 0;
    std::size_t ci = 0;
    std::size_t cj = 0;
};

class Grid {
public:
    explicit Grid(const CutSpec& spec) : lo_(spec.box_min), hi_(spec.box_max), n_(spec.n) {}

    double x(std::size_t i) const { return coord(lo_.x(), hi_.x(), i); }
    double y(std::size_t j) const { return coord(lo_.y(), hi_.y(), j); }
    double sx() const { return (hi_.x() - lo_.x()) / static_cast<double>(n_); }
    double sy() const { return (hi_.y() - lo_.y()) / static_cast<double>(n_); }
    std::size_t n() const { return n_; }
    const Point& lo() const { return lo_; }
    const Point& hi() const { return hi_; }

    bool strictly_inside(const Point& p) const
    {
        return p.x() > lo_.x() && p.x() < hi_.x() && p.y() > lo_.y() && p.y() < hi_.y();
    }

private:
    double coord(double a, double b, std::size_t i) const
    {
        if (i == n_) return b;
        return a + (b - a) * static_cast<double>(i) / static_cast<double>(n_);
    }
    Point lo_;
    Point hi_;
    std::size_t n_;
};

double wrap(double t, double t0)
{
    double r = std::fmod(t - t0, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    return t0 + r;
}

// Crossings of a loop with all grid lines of one direction.
void line_crossings(const Grid& grid, const Loop& loop, std::size_t loop_id, bool vertical,
                    std::vector<Crossing>& out)
{
    const int row = vertical ? 0 : 1;
    const double a = loop.conic.axes(row, 0);
    const double b = loop.conic.axes(row, 1);
    const double radius = std::hypot(a, b);
    const double phase = std::atan2(b, a);
    const double center = loop.conic.center(row);
    const double t0 = loop.curve.t0();
    const double spacing_other = vertical ? grid.sy() : grid.sx();
    for (std::size_t i = 0; i <= grid.n(); ++i) {
        const double c = vertical ? grid.x(i) : grid.y(i);
        const double rho = (c - center) / radius;
        if (std::abs(std::abs(rho) - 1.0) <= 1e-12) {
            std::ostringstream msg;
            msg << "cutting loop " << loop_id << " grazes grid line " << (vertical ? "x = " : "y = ") << c
                << "; shift the grid offset";
            throw DegenerateCutError(msg.str());
        }
        if (std::abs(rho) > 1.0) continue;
        const double delta = std::acos(rho);
        for (double t : {phase + delta, phase - delta}) {
            t = wrap(t, t0);
            Point p = loop.curve.eval(t).point;
            p(row) = c;
            const double other = p(1 - row);
            const double lo = vertical ? grid.lo().y() : grid.lo().x();
            const double hi = vertical ? grid.hi().y() : grid.hi().x();
            if (other < lo || other > hi) continue;
            const double rel = (other - lo) / spacing_other;
            const double nearest = std::round(rel);
            if (std::abs(rel - nearest) <= 1e-10) {
                std::ostringstream msg;
                msg << "cutting loop " << loop_id << " passes through grid vertex (" << p.x() << ", " << p.y()
                    << "); shift the grid offset";
                throw DegenerateCutError(msg.str());
            }
            Crossing cr;
            cr.loop = loop_id;
            cr.t = t;
            cr.p = p;
            cr.vertical = vertical;
            cr.line = i;
            cr.seg = std::min(static_cast<std::size_t>(std::floor(rel)), grid.n() - 1);
            cr.along = other;
            out.push_back(cr);
        }
    }
}

std::vector<Loop> prepare_loops(const CutSpec& spec)
{
    std::vector<Loop> loops;
    int bit = 0;
    for (std::size_t l = 0; l < spec.loops.size(); ++l) {
        const CutLoop& cl = spec.loops[l];
        if (cl.curve.is_straight()) throw CutSpecError("cutting loop " + std::to_string(l) + " must be a conic");
        if (std::abs((cl.curve.t1() - cl.curve.t0()) - kTwoPi) > 1e-12) {
            throw CutSpecError("cutting loop " + std::to_string(l) + " is open (must span one full period)");
        }
        Loop loop;
        loop.curve = cl.curve;
        loop.conic = conic_form(cl.curve);
        const double det = loop.conic.axes.determinant();
        if (det == 0.0) throw CutSpecError("cutting loop " + std::to_string(l) + " is degenerate");
        loop.inverse = loop.conic.axes.inverse();
        loop.ccw = det > 0.0;
        loop.role = cl.role;
        if (cl.role == LoopRole::Interface) loop.interface_bit = bit++;
        loops.push_back(loop);
    }
    // Loops must not intersect: sample one against the other's implicit form.
    for (std::size_t a = 0; a < loops.size(); ++a) {
        for (std::size_t b = 0; b < loops.size(); ++b) {
            if (a == b) continue;
            bool in = false;
            bool out = false;
            for (int s = 0; s < 720; ++s) {
                const double t = loops[a].curve.t0() + kTwoPi * s / 720.0;
                (loops[b].contains(loops[a].curve.eval(t).point) ? in : out) = true;
            }
            if (in && out) {
                throw CutSpecError("cutting loops " + std::to_string(a) + " and " + std::to_string(b) + " intersect");
            }
        }
    }
    return loops;
}

} // namespace

Mesh cut_cartesian(const CutSpec& spec)
{
    if (spec.n == 0) throw CutSpecError("grid resolution must be positive");
    if (!(spec.box_max.x() > spec.box_min.x() && spec.box_max.y() > spec.box_min.y())) {
        throw CutSpecError("empty bounding box");
    }
    if (!(spec.small_cell_fraction >= 0.0 && spec.small_cell_fraction < 0.5)) {
        throw CutSpecError("small-cell threshold must lie in [0, 0.5)");
    }
    const Grid grid(spec);
    const std::vector<Loop> loops = prepare_loops(spec);
    const std::size_t n = grid.n();

    // Crossings, sorted along each loop, then arc pieces between them.
    std::vector<Crossing> crossings;
    std::vector<std::vector<std::size_t>> by_loop(loops.size());
    for (std::size_t l = 0; l < loops.size(); ++l) {
        std::vector<Crossing> local;
        line_crossings(grid, loops[l], l, true, local);
        line_crossings(grid, loops[l], l, false, local);
        std::sort(local.begin(), local.end(), [](const Crossing& a, const Crossing& b) { return a.t < b.t; });
        for (std::size_t k = 1; k < local.size(); ++k) {
            if (local[k].t - local[k - 1].t <= 1e-13) {
                throw DegenerateCutError("cutting loop " + std::to_string(l) + " has coincident grid crossings");
            }
        }
        if (local.empty() && grid.strictly_inside(loops[l].curve.start())) {
            throw CutSpecError("cutting loop " + std::to_string(l) +
                               " lies inside a single grid cell; refine the grid");
        }
        for (Crossing& c : local) {
            by_loop[l].push_back(crossings.size());
            crossings.push_back(c);
        }
    }

    std::vector<ArcPiece> arcs;
    std::vector<std::array<std::size_t, 2>> arcs_at(crossings.size(), {SIZE_MAX, SIZE_MAX}); // [ending, starting]
    for (std::size_t l = 0; l < loops.size(); ++l) {
        const auto& ids = by_loop[l];
        const std::size_t m = ids.size();
        for (std::size_t k = 0; k < m; ++k) {
            ArcPiece arc;
            arc.loop = l;
            arc.index = k;
            arc.start = ids[k];
            arc.end = ids[(k + 1) % m];
            arc.ta = crossings[arc.start].t;
            arc.tb = crossings[arc.end].t + (k + 1 == m ? kTwoPi : 0.0);
            const Point mid = loops[l].curve.restricted(arc.ta, arc.tb).eval(0.5 * (arc.ta + arc.tb)).point;
            if (!grid.strictly_inside(mid)) continue;
            arc.ci = std::min(static_cast<std::size_t>((mid.x() - grid.lo().x()) / grid.sx()), n - 1);
            arc.cj = std::min(static_cast<std::size_t>((mid.y() - grid.lo().y()) / grid.sy()), n - 1);
            arcs_at[arc.start][1] = arcs.size();
            arcs_at[arc.end][0] = arcs.size();
            arcs.push_back(arc);
        }
    }

    // Crossings on each cell boundary, and along each grid edge.
    std::vector<std::vector<std::size_t>> cell_crossings(n * n);
    std::map<std::tuple<bool, std::size_t, std::size_t>, std::vector<double>> edge_splits;
    for (std::size_t c = 0; c < crossings.size(); ++c) {
        const Crossing& cr = crossings[c];
        edge_splits[{cr.vertical, cr.line, cr.seg}].push_back(cr.along);
        // cells on both sides of the grid edge
        if (cr.vertical) {
            if (cr.line > 0) cell_crossings[cr.seg * n + cr.line - 1].push_back(c);
            if (cr.line < n) cell_crossings[cr.seg * n + cr.line].push_back(c);
        } else {
            if (cr.line > 0) cell_crossings[(cr.line - 1) * n + cr.seg].push_back(c);
            if (cr.line < n) cell_crossings[cr.line * n + cr.seg].push_back(c);
        }
    }
    for (auto& [key, v] : edge_splits) std::sort(v.begin(), v.end());

    std::vector<Point> vertices;
    std::map<std::tuple<int, std::size_t, std::size_t>, VertexId> vertex_ids; // (kind, a, b)
    auto vertex_for = [&](int kind, std::size_t a, std::size_t b, const Point& p) {
        const auto key = std::make_tuple(kind, a, b);
        auto it = vertex_ids.find(key);
        if (it != vertex_ids.end()) return it->second;
        vertex_ids.emplace(key, vertices.size());
        vertices.push_back(p);
        return vertices.size() - 1;
    };

    std::vector<Face> faces;
    std::map<std::tuple<int, std::size_t, std::size_t, std::size_t>, FaceId> face_ids;
    std::vector<Element> elements;

    const double cell_area = grid.sx() * grid.sy();

    for (std::size_t cj = 0; cj < n; ++cj) {
        for (std::size_t ci = 0; ci < n; ++ci) {
            const double x0 = grid.x(ci);
            const double x1 = grid.x(ci + 1);
            const double y0 = grid.y(cj);
            const double y1 = grid.y(cj + 1);

            // Boundary nodes in counter-clockwise perimeter order.
            struct Node {
                double s;
                Point p;
                bool corner;
                std::size_t id; // corner index 0..3 or crossing id
            };
            std::vector<Node> nodes = {{0.0, Point(x0, y0), true, 0},
                                       {1.0, Point(x1, y0), true, 1},
                                       {2.0, Point(x1, y1), true, 2},
                                       {3.0, Point(x0, y1), true, 3}};
            for (std::size_t c : cell_crossings[cj * n + ci]) {
                const Crossing& cr = crossings[c];
                double s = 0.0;
                if (cr.vertical) {
                    s = cr.line == ci ? 3.0 + (y1 - cr.along) / (y1 - y0) : 1.0 + (cr.along - y0) / (y1 - y0);
                } else {
                    s = cr.line == cj ? (cr.along - x0) / (x1 - x0) : 2.0 + (x1 - cr.along) / (x1 - x0);
                }
                nodes.push_back({s, cr.p, false, c});
            }
            std::sort(nodes.begin(), nodes.end(), [](const Node& a, const Node& b) { return a.s < b.s; });
            const std::size_t nn = nodes.size();
            std::map<std::size_t, std::size_t> node_of_crossing;
            for (std::size_t k = 0; k < nn; ++k) {
                if (!nodes[k].corner) node_of_crossing[nodes[k].id] = k;
            }
            auto arc_in_cell = [&](std::size_t crossing) -> std::size_t {
                for (std::size_t a : arcs_at[crossing]) {
                    if (a != SIZE_MAX && arcs[a].ci == ci && arcs[a].cj == cj) return a;
                }
                throw StructuralError("cut cell (" + std::to_string(ci) + ", " + std::to_string(cj) +
                                      "): crossing without an arc inside the cell");
            };

            auto node_vertex = [&](const Node& node) {
                if (node.corner) {
                    const std::size_t gi = ci + (node.id == 1 || node.id == 2 ? 1 : 0);
                    const std::size_t gj = cj + (node.id >= 2 ? 1 : 0);
                    return vertex_for(0, gi, gj, node.p);
                }
                return vertex_for(1, node.id, 0, node.p);
            };

            struct Piece {
                bool arc;
                std::size_t index; // sub-segment start node or arc id
                bool forward;      // arc direction
            };
            std::vector<bool> used(nn, false);
            for (std::size_t start = 0; start < nn; ++start) {
                if (used[start]) continue;
                std::vector<Piece> region;
                std::size_t cur = start;
                while (true) {
                    if (used[cur]) {
                        throw StructuralError("cut cell (" + std::to_string(ci) + ", " + std::to_string(cj) +
                                              "): region tracing revisits a boundary piece");
                    }
                    used[cur] = true;
                    region.push_back({false, cur, true});
                    std::size_t next = (cur + 1) % nn;
                    if (!nodes[next].corner) {
                        const std::size_t a = arc_in_cell(nodes[next].id);
                        const bool forward = arcs[a].start == nodes[next].id;
                        region.push_back({true, a, forward});
                        const std::size_t other = forward ? arcs[a].end : arcs[a].start;
                        next = node_of_crossing.at(other);
                    }
                    cur = next;
                    if (cur == start) break;
                }

                // Region classification against every loop.
                bool keep = true;
                int tag = 0;
                for (std::size_t l = 0; l < loops.size(); ++l) {
                    std::optional<bool> inside;
                    for (const Piece& pc : region) {
                        if (pc.arc && arcs[pc.index].loop == l) {
                            inside = pc.forward == loops[l].ccw;
                            break;
                        }
                    }
                    if (!inside) {
                        for (const Piece& pc : region) {
                            if (pc.arc) continue;
                            const Node& node = nodes[pc.index];
                            if (!node.corner && crossings[node.id].loop == l) continue;
                            inside = loops[l].contains(node.p);
                            break;
                        }
                    }
                    if (!inside) throw StructuralError("cannot classify cut region against loop " + std::to_string(l));
                    if (loops[l].role == LoopRole::Boundary && !*inside) keep = false;
                    if (loops[l].role == LoopRole::Interface && *inside) tag |= 1 << loops[l].interface_bit;
                }
                if (!keep) continue;

                const ElementId eid = elements.size();
                Element el;
                el.region = tag;
                for (const Piece& pc : region) {
                    if (pc.arc) {
                        const ArcPiece& arc = arcs[pc.index];
                        const auto key = std::make_tuple(1, arc.loop, arc.index, std::size_t{0});
                        auto it = face_ids.find(key);
                        if (it == face_ids.end()) {
                            Face f;
                            f.curve = loops[arc.loop].curve.restricted(arc.ta, arc.tb);
                            f.v_begin = vertex_for(1, arc.start, 0, crossings[arc.start].p);
                            f.v_end = vertex_for(1, arc.end, 0, crossings[arc.end].p);
                            it = face_ids.emplace(key, faces.size()).first;
                            faces.push_back(f);
                        }
                        Face& f = faces[it->second];
                        (pc.forward ? f.elem_left : f.elem_right) = eid;
                        el.faces.push_back({it->second, !pc.forward});
                        continue;
                    }
                    const Node& a = nodes[pc.index];
                    const Node& b = nodes[(pc.index + 1) % nn];
                    // Which cell side the sub-segment lies on.
                    const double smid = 0.5 * (a.s + (b.s == 0.0 ? 4.0 : b.s));
                    const int side = static_cast<int>(std::floor(smid));
                    const bool vertical = side == 1 || side == 3;
                    const std::size_t line = side == 0 ? cj : side == 1 ? ci + 1 : side == 2 ? cj + 1 : ci;
                    const std::size_t seg = vertical ? cj : ci;
                    const bool forward = side == 0 || side == 1;
                    const Point& lo_pt = forward ? a.p : b.p;
                    const Point& hi_pt = forward ? b.p : a.p;
                    const double mid_along = vertical ? 0.5 * (lo_pt.y() + hi_pt.y()) : 0.5 * (lo_pt.x() + hi_pt.x());
                    std::size_t piece = 0;
                    if (auto sp = edge_splits.find({vertical, line, seg}); sp != edge_splits.end()) {
                        piece = static_cast<std::size_t>(
                            std::lower_bound(sp->second.begin(), sp->second.end(), mid_along) - sp->second.begin());
                    }
                    const auto key = std::make_tuple(vertical ? 2 : 3, line, seg, piece);
                    auto it = face_ids.find(key);
                    if (it == face_ids.end()) {
                        Face f;
                        f.curve = Segment{lo_pt, hi_pt};
                        f.v_begin = node_vertex(forward ? a : b);
                        f.v_end = node_vertex(forward ? b : a);
                        it = face_ids.emplace(key, faces.size()).first;
                        faces.push_back(f);
                    }
                    Face& f = faces[it->second];
                    (forward ? f.elem_left : f.elem_right) = eid;
                    el.faces.push_back({it->second, !forward});
                }

                double area = 0.0;
                for (const FaceUse& use : el.faces) {
                    const double s = faces[use.face].curve.signed_area_integral();
                    area += use.reversed ? -s : s;
                }
                if (!(area > 0.0)) {
                    throw StructuralError("cut cell (" + std::to_string(ci) + ", " + std::to_string(cj) +
                                          ") produced a region of non-positive area");
                }
                if (area < spec.small_cell_fraction * cell_area && spec.small_cell_policy == SmallCellPolicy::Reject) {
                    std::ostringstream msg;
                    msg << "cut cell (" << ci << ", " << cj << ") produced a sliver of relative area "
                        << area / cell_area << "; shift the grid offset";
                    throw DegenerateCutError(msg.str());
                }
                elements.push_back(std::move(el));
            }
        }
    }
    if (elements.empty()) throw CutSpecError("the cut removes every grid cell");
    return Mesh(std::move(vertices), std::move(faces), std::move(elements));
}

Mesh straighten(const Mesh& mesh, StraightenScope scope)
{
    std::vector<Face> faces = mesh.faces();
    for (FaceId f = 0; f < faces.size(); ++f) {
        Face& face = faces[f];
        if (face.is_straight()) continue;
        if (scope == StraightenScope::InteriorOnly && face.is_boundary()) continue;
        const Point a = face.curve.start();
        const Point b = face.curve.end();
        const double scale = std::max(1.0, std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()));
        if ((b - a).norm() <= 1e-14 * scale) {
            throw StructuralError("face " + std::to_string(f) + " has a zero-length chord");
        }
        face.curve = Segment{a, b};
    }
    return Mesh(mesh.vertices(), std::move(faces), mesh.elements());
}

std::vector<MeshPair> mesh_sequence(CutSpec spec, std::size_t levels, StraightenScope scope)
{
    if (levels == 0) throw CutSpecError("mesh sequence needs at least one level");
    std::vector<MeshPair> out;
    for (std::size_t l = 0; l < levels; ++l) {
        Mesh curved = cut_cartesian(spec);
        Mesh straight = straighten(curved, scope);
        out.push_back({std::move(curved), std::move(straight)});
        spec.n *= 2;
    }
    return out;
}

} // namespace curvedhho
