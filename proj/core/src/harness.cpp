#include "curvedhho/harness.hpp"

#include "curvedhho/errors.hpp"

#include <json.hpp>

#include <Eigen/Geometry>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace curvedhho {

namespace {

constexpr double kAlpha = 0.8;
constexpr double kInterfaceRadius = 0.8;
constexpr double kBeta1 = 1e-6;
constexpr double kBeta2 = 1.0;

double level_set(const Point& p) { return kAlpha * kAlpha - (p.x() * p.x() + p.x() * p.y() + p.y() * p.y()); }

Eigen::Matrix2d hetero_tensor(double beta)
{
    Eigen::Matrix2d K;
    K << 1.0, 1.0 - beta, 1.0 - beta, 1.0;
    return K;
}

double elapsed(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace

TestCase ellipse_case()
{
    TestCase tc;
    tc.name = "ellipse";
    const double r3 = 1.0 / std::sqrt(3.0);
    EllipseArc boundary;
    boundary.center = Point::Zero();
    boundary.axes << kAlpha * r3, -kAlpha, kAlpha * r3, kAlpha;
    boundary.t0 = 0.0;
    boundary.t1 = 2.0 * std::numbers::pi;
    tc.spec.box_min = Point(-1.0, -1.0);
    tc.spec.box_max = Point(1.0, 1.0);
    tc.spec.n = 4;
    tc.spec.loops = {CutLoop{Curve(boundary), LoopRole::Boundary}};
    tc.diffusion = Diffusion::identity();
    tc.source = [](const Point& p) {
        const double L = level_set(p);
        const double x = p.x();
        const double y = p.y();
        return 4.0 * std::cos(L) + (5.0 * x * x + 8.0 * x * y + 5.0 * y * y) * std::sin(L);
    };
    tc.exact = [](const Point& p) { return std::sin(level_set(p)); };
    tc.exact_gradient = [](const Point& p) {
        const double c = std::cos(level_set(p));
        return Vector(-c * (2.0 * p.x() + p.y()), -c * (p.x() + 2.0 * p.y()));
    };
    return tc;
}

TestCase hetero_case()
{
    TestCase tc;
    tc.name = "hetero";
    // Half-width chosen so that the level-0 grid cell diagonal is 0.7654.
    const double half = 2.0 * std::sin(std::numbers::pi / 8.0) * std::numbers::sqrt2;
    tc.spec.box_min = Point(-half, -half);
    tc.spec.box_max = Point(half, half);
    tc.spec.n = 4;
    CircularArc outer{Point::Zero(), 1.0, 0.0, 2.0 * std::numbers::pi, 1};
    CircularArc inner{Point::Zero(), kInterfaceRadius, 0.0, 2.0 * std::numbers::pi, 1};
    tc.spec.loops = {CutLoop{Curve(outer), LoopRole::Boundary}, CutLoop{Curve(inner), LoopRole::Interface}};
    tc.straight_scope = StraightenScope::InteriorOnly;
    tc.diffusion = Diffusion(DiffusionTensor(hetero_tensor(kBeta2)));
    tc.diffusion.set(1, DiffusionTensor(hetero_tensor(kBeta1)));
    tc.source = [](const Point&) { return 1.0; };
    return tc;
}

Mesh case_mesh(const TestCase& tc, std::size_t level, MeshMode mode)
{
    CutSpec spec = tc.spec;
    spec.n = tc.spec.n << level;
    Mesh mesh = cut_cartesian(spec);
    if (mode == MeshMode::Straight) return straighten(mesh, tc.straight_scope);
    return mesh;
}

CaseRun run_case(const TestCase& tc, Mesh mesh, int k, const RunOptions& options)
{
    const auto start = std::chrono::steady_clock::now();
    CaseRun run(std::move(mesh), k, options.quadrature);
    run.ops = build_local_operators(run.disc, tc.diffusion);
    run.dofs = DofMap(run.disc);
    if (options.uncondensed) {
        run.solution = solve_uncondensed(run.disc, run.ops, assemble_uncondensed(run.disc, run.ops, tc.source));
    } else {
        run.solution = solve(run.disc, run.ops, assemble(run.disc, run.ops, tc.source));
    }
    run.seconds = elapsed(start);
    return run;
}

ErrorMeasures error_measures(const TestCase& tc, const CaseRun& run)
{
    if (!tc.has_exact() || !tc.exact_gradient) {
        throw ContractError("error measures need an exact solution for case '" + tc.name + "'");
    }
    const Discretization& disc = run.disc;
    double l2_err = 0.0;
    double l2_ref = 0.0;
    double h1_err = 0.0;
    double h1_ref = 0.0;
    for (ElementId e = 0; e < disc.mesh().num_elements(); ++e) {
        const ElemRule& rule = disc.element_rule(e);
        const BasisTable t = disc.cell_basis(e).tabulate(rule.points);
        const Eigen::VectorXd& c = run.solution.potential.at(e);
        const Eigen::VectorXd p = t.values * c;
        const Eigen::VectorXd px = t.dx * c;
        const Eigen::VectorXd py = t.dy * c;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto i = static_cast<Eigen::Index>(q);
            const double u = tc.exact(rule.points[q]);
            const Vector g = tc.exact_gradient(rule.points[q]);
            const double w = rule.weights[q];
            l2_err += w * (u - p(i)) * (u - p(i));
            l2_ref += w * u * u;
            h1_err += w * ((g.x() - px(i)) * (g.x() - px(i)) + (g.y() - py(i)) * (g.y() - py(i)));
            h1_ref += w * g.squaredNorm();
        }
    }
    const Eigen::VectorXd interp = interpolate_global(disc, run.dofs, tc.exact);
    const double a_ref = energy_norm(disc, run.ops, run.dofs, interp);
    const double a_err = energy_norm(disc, run.ops, run.dofs, run.solution.dofs - interp);
    if (!(l2_ref > 0.0) || !(h1_ref > 0.0) || !(a_ref > 0.0)) {
        throw ContractError("error measures undefined: the exact solution has zero norm");
    }
    ErrorMeasures m;
    m.e0 = std::sqrt(std::max(0.0, l2_err) / l2_ref);
    m.e1 = std::sqrt(std::max(0.0, h1_err) / h1_ref);
    m.ea = a_err / a_ref;
    return m;
}

ReferenceFunctionals reference_functionals(const CaseRun& run)
{
    const Discretization& disc = run.disc;
    ReferenceFunctionals out;
    double h1sq = 0.0;
    for (ElementId e = 0; e < disc.mesh().num_elements(); ++e) {
        const ElemRule& rule = disc.element_rule(e);
        const BasisTable t = disc.cell_basis(e).tabulate(rule.points);
        const Eigen::VectorXd& c = run.solution.potential.at(e);
        const Eigen::Map<const Eigen::VectorXd> w(rule.weights.data(), static_cast<Eigen::Index>(rule.size()));
        out.integral += w.dot(t.values * c);
        const Eigen::VectorXd px = t.dx * c;
        const Eigen::VectorXd py = t.dy * c;
        h1sq += w.dot(px.cwiseProduct(px) + py.cwiseProduct(py));
    }
    out.h1 = std::sqrt(std::max(0.0, h1sq));
    return out;
}

double evaluate_potential(const CaseRun& run, ElementId e, const Point& x)
{
    return run.disc.cell_basis(e).values(x).dot(run.solution.potential.at(e));
}

ConvergenceTable run_convergence(const TestCase& tc, const ConvergenceOptions& options)
{
    ConvergenceTable table;
    table.sweep = options.sweep;
    const bool exact = tc.has_exact();
    if (exact) {
        table.error_names = {"L2Error", "H1Error", "EnergyError"};
    } else {
        if (!options.reference) {
            throw ContractError("case '" + tc.name + "' has no exact solution and no reference values were given");
        }
        table.error_names = {"integral_error", "h1_norm_error"};
    }

    auto add_row = [&](std::size_t index, int k, Mesh mesh) {
        ConvergenceRow row;
        row.mesh_index = index;
        row.degree = k;
        row.h = mesh.h();
        row.elements = mesh.num_elements();
        row.internal_edges = mesh.num_internal_faces();
        const CaseRun run = run_case(tc, std::move(mesh), k, options.run);
        row.seconds = run.seconds;
        if (exact) {
            const ErrorMeasures m = error_measures(tc, run);
            row.errors = {m.e0, m.e1, m.ea};
        } else {
            const ReferenceFunctionals r = reference_functionals(run);
            row.errors = {std::abs(r.integral - options.reference->integral), std::abs(r.h1 - options.reference->h1)};
        }
        if (!table.rows.empty()) {
            const ConvergenceRow& prev = table.rows.back();
            for (std::size_t i = 0; i < row.errors.size(); ++i) {
                const double ratio = prev.errors[i] / row.errors[i];
                row.rates.push_back(options.sweep == Sweep::H ? std::log(ratio) / std::log(prev.h / row.h) : ratio);
            }
        }
        table.rows.push_back(std::move(row));
        if (options.on_row) options.on_row(table);
    };

    if (options.sweep == Sweep::H) {
        if (options.levels < 1) throw ContractError("an h-sweep needs at least one level");
        for (std::size_t l = 0; l < options.levels; ++l) {
            const std::size_t level = options.first_level + l;
            add_row(level, options.k, case_mesh(tc, level, options.mode));
        }
    } else {
        if (options.k_min > options.k || options.k_min < 0) throw ContractError("invalid degree range");
        const Mesh mesh = case_mesh(tc, options.first_level, options.mode);
        for (int k = options.k_min; k <= options.k; ++k) add_row(options.first_level, k, mesh);
    }
    return table;
}

void write_dat(std::ostream& os, const ConvergenceTable& table)
{
    os << (table.sweep == Sweep::H ? "MeshSize" : "EdgeDegree");
    for (const std::string& name : table.error_names) os << ' ' << name;
    os << '\n' << std::setprecision(17);
    for (const ConvergenceRow& row : table.rows) {
        if (table.sweep == Sweep::H) {
            os << row.h;
        } else {
            os << row.degree;
        }
        for (const double e : row.errors) os << ' ' << e;
        os << '\n';
    }
}

void emit_dat(const ConvergenceTable& table, const std::filesystem::path& path)
{
    if (table.rows.empty()) throw ContractError("refusing to write an empty table to " + path.string());
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    write_dat(os, table);
    if (!os) throw IoError("failed writing " + path.string());
}

DatTable parse_dat(std::istream& is)
{
    DatTable out;
    std::string line;
    if (!std::getline(is, line)) throw IoError("empty table");
    std::istringstream hs(line);
    for (std::string tok; hs >> tok;) out.header.push_back(tok);
    while (std::getline(is, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        std::vector<double> row;
        for (double v; ls >> v;) row.push_back(v);
        if (row.size() != out.header.size()) throw IoError("table row has " + std::to_string(row.size()) + " columns");
        out.rows.push_back(std::move(row));
    }
    return out;
}

void write_mesh_table(std::ostream& os, const ConvergenceTable& table)
{
    os << "MeshIndex MeshSize NbCells NbInternalEdges\n" << std::setprecision(17);
    for (const ConvergenceRow& row : table.rows) {
        os << row.mesh_index << ' ' << row.h << ' ' << row.elements << ' ' << row.internal_edges << '\n';
    }
}

void write_metadata(const std::filesystem::path& path, const std::map<std::string, std::string>& values)
{
    nlohmann::json j(values);
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os << j.dump(2) << '\n';
    if (!os) throw IoError("failed writing " + path.string());
}

namespace {

// Boundary polygon through the vertices and edge nodes, in loop order.
std::vector<Point> boundary_polygon(const Discretization& disc, ElementId e)
{
    std::vector<Point> poly;
    for (const FaceUse& use : disc.mesh().element(e).faces) {
        const Face& face = disc.mesh().face(use.face);
        const EdgeRule& rule = disc.edge_rule(use.face);
        if (use.reversed) {
            poly.push_back(face.curve.end());
            for (std::size_t i = rule.size(); i-- > 0;) poly.push_back(rule.points[i]);
        } else {
            poly.push_back(face.curve.start());
            for (const Point& p : rule.points) poly.push_back(p);
        }
    }
    return poly;
}

bool inside_polygon(const std::vector<Point>& poly, const Point& x)
{
    bool in = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const Point& a = poly[i];
        const Point& b = poly[j];
        if ((a.y() > x.y()) != (b.y() > x.y()) &&
            x.x() < (b.x() - a.x()) * (x.y() - a.y()) / (b.y() - a.y()) + a.x()) {
            in = !in;
        }
    }
    return in;
}

} // namespace

void write_point_samples(std::ostream& os, const CaseRun& run, std::size_t nx, std::size_t ny)
{
    const Discretization& disc = run.disc;
    const std::size_t ne = disc.mesh().num_elements();
    std::vector<std::vector<Point>> polys(ne);
    std::vector<Eigen::AlignedBox2d> boxes(ne);
    Eigen::AlignedBox2d all;
    for (ElementId e = 0; e < ne; ++e) {
        polys[e] = boundary_polygon(disc, e);
        for (const Point& p : polys[e]) boxes[e].extend(p);
        all.extend(boxes[e]);
    }
    os << "x,y,value\n" << std::setprecision(17);
    if (ne == 0 || nx < 2 || ny < 2) return;
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const Point x(all.min().x() + (all.max().x() - all.min().x()) * static_cast<double>(i) / static_cast<double>(nx - 1),
                          all.min().y() + (all.max().y() - all.min().y()) * static_cast<double>(j) / static_cast<double>(ny - 1));
            for (ElementId e = 0; e < ne; ++e) {
                if (!boxes[e].contains(x) || !inside_polygon(polys[e], x)) continue;
                os << x.x() << ',' << x.y() << ',' << evaluate_potential(run, e, x) << '\n';
                break;
            }
        }
    }
}

} // namespace curvedhho
