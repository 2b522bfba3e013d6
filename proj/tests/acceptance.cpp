// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit status
// when any criterion fails.

#include "curvedhho/errors.hpp"
#include "curvedhho/harness.hpp"
#include "support.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

using namespace curvedhho;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

class Report {
public:
    void fail(const std::string& why)
    {
        if (out_.pass) first_failure_ = why;
        out_.pass = false;
    }
    void require(bool ok, const std::string& why)
    {
        if (!ok) fail(why);
    }
    std::ostringstream& note() { return notes_; }
    Outcome finish()
    {
        out_.detail = notes_.str();
        if (!out_.pass) out_.detail += (out_.detail.empty() ? "" : "; ") + std::string("first failure: ") + first_failure_;
        return out_;
    }

private:
    Outcome out_;
    std::ostringstream notes_;
    std::string first_failure_;
};

std::string sci(double v)
{
    std::ostringstream s;
    s << std::scientific << std::setprecision(2) << v;
    return s.str();
}

std::string fix(double v)
{
    std::ostringstream s;
    s << std::fixed << std::setprecision(3) << v;
    return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::size_t ceil_half(int n) { return static_cast<std::size_t>((n + 1) / 2); }

// Smallest LDL^T pivot seen by any global solve below (criterion 5).
double g_min_pivot = std::numeric_limits<double>::infinity();
std::size_t g_solves = 0;

void record_solve(const CaseRun& run)
{
    g_min_pivot = std::min(g_min_pivot, run.solution.min_pivot);
    ++g_solves;
}

Mesh full_ellipse_mesh()
{
    const double r3 = 1.0 / std::sqrt(3.0);
    EllipseArc e;
    e.center = Point::Zero();
    e.axes << 0.8 * r3, -0.8, 0.8 * r3, 0.8;
    e.t0 = 0.0;
    e.t1 = 2.0 * std::numbers::pi;
    Face f;
    f.curve = e;
    f.elem_left = 0;
    Element el;
    el.faces = {{0, false}};
    return Mesh({f.curve.start()}, {f}, {el});
}

struct NamedMesh {
    std::string name;
    Mesh mesh;
    double area;
};

std::vector<NamedMesh> generated_meshes(MeshMode mode)
{
    std::vector<NamedMesh> out;
    const double ellipse_area = std::numbers::pi * 0.64 * 2.0 / std::sqrt(3.0);
    const TestCase ell = ellipse_case();
    const TestCase het = hetero_case();
    const std::string tag = mode == MeshMode::Curved ? "curved" : "straight";
    for (std::size_t l = 0; l < 4; ++l) {
        out.push_back({"ellipse-" + tag + "-L" + std::to_string(l), case_mesh(ell, l, mode), ellipse_area});
        out.push_back({"hetero-" + tag + "-L" + std::to_string(l), case_mesh(het, l, mode), std::numbers::pi});
    }
    return out;
}

// 1. Quadrature exactness on random polygons.
Outcome quadrature_exactness()
{
    Report rep;
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937 rng(7);
    std::uniform_int_distribution<std::size_t> sides(3, 10);
    double worst = 0.0;
    std::size_t nonconvex = 0;
    for (int p = 0; p < 50; ++p) {
        const std::size_t nv = sides(rng);
        // Even trials: vertices on a circle (convex); odd: varying radii.
        const auto pts = p % 2 == 0 ? testing_support::random_polygon(rng, Point(1.5, 1.5), nv, 1.0, 1.0)
                                    : testing_support::random_polygon(rng, Point(1.5, 1.5), nv, 0.25, 1.2);
        bool convex = true;
        for (std::size_t i = 0; i < nv; ++i) {
            const Vector a = pts[(i + 1) % nv] - pts[i], b = pts[(i + 2) % nv] - pts[(i + 1) % nv];
            convex = convex && a.x() * b.y() - a.y() * b.x() > 0.0;
        }
        nonconvex += convex ? 0 : 1;
        const Mesh mesh = testing_support::polygon_mesh(pts);
        for (int k = 0; k <= 6; ++k) {
            const std::size_t n = ceil_half(k + 1), m = ceil_half(k + 2);
            const ElemRule rule = element_rule(mesh, 0, gauss_legendre(n), gauss_legendre(m));
            rep.require(rule.size() == (nv - 2) * n * m, "point count on polygon " + std::to_string(p));
            for (int d = 0; d <= k; ++d) {
                for (int b = 0; b <= d; ++b) {
                    const int a = d - b;
                    const double exact = testing_support::polygon_monomial_integral(pts, a, b);
                    const double q = integrate(rule, [&](const Point& x) { return std::pow(x.x(), a) * std::pow(x.y(), b); });
                    worst = std::max(worst, std::abs(q - exact) / std::abs(exact));
                }
            }
        }
    }
    const double t = seconds_since(t0);
    rep.require(worst <= 1e-12, "relative error " + sci(worst));
    rep.require(nonconvex > 0, "no nonconvex polygon generated");
    rep.require(t < 5.0, "runtime " + fix(t) + " s");
    rep.note() << "50 polygons (" << nonconvex << " nonconvex), k<=6, max rel err " << sci(worst) << ", " << fix(t) << " s";
    return rep.finish();
}

// 2. Curved-area recovery.
Outcome area_recovery()
{
    Report rep;
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<NamedMesh> meshes = generated_meshes(MeshMode::Curved);
    meshes.push_back({"quarter-disc", testing_support::quarter_disc_mesh(), std::numbers::pi / 4});
    meshes.push_back({"full-ellipse", full_ellipse_mesh(), std::numbers::pi * 0.64 * 2.0 / std::sqrt(3.0)});
    const Rule1D gl = gauss_legendre(30);
    double worst = 0.0, worst_quad = 0.0;
    for (const auto& nm : meshes) {
        const double err = std::abs(nm.mesh.total_area() - nm.area) / nm.area;
        worst = std::max(worst, err);
        rep.require(err <= 1e-10, nm.name + " area error " + sci(err));
        // Same check through the element quadrature.
        double q = 0.0;
        for (ElementId e = 0; e < nm.mesh.num_elements(); ++e) {
            q += integrate(element_rule(nm.mesh, e, gl, gl), [](const Point&) { return 1.0; });
        }
        const double qerr = std::abs(q - nm.area) / nm.area;
        worst_quad = std::max(worst_quad, qerr);
        rep.require(qerr <= 1e-10, nm.name + " quadrature area error " + sci(qerr));
    }
    const double t = seconds_since(t0);
    rep.require(t < 10.0, "runtime " + fix(t) + " s");
    rep.note() << meshes.size() << " meshes, max rel err " << sci(worst) << " (closed form), " << sci(worst_quad)
               << " (quadrature), " << fix(t) << " s";
    return rep.finish();
}

// 3. P o I equals the elliptic projector.
Outcome commutation()
{
    Report rep;
    const auto t0 = std::chrono::steady_clock::now();
    const TestCase tc = ellipse_case();
    const Mesh mesh = case_mesh(tc, 1, MeshMode::Curved);
    const Eigen::Matrix2d K = Eigen::Matrix2d::Identity();
    double worst = 0.0;
    std::size_t probes = 0;
    for (int k = 0; k <= 3; ++k) {
        const Discretization disc(mesh, k);
        for (ElementId e = 0; e < mesh.num_elements(); ++e) {
            const Eigen::MatrixXd P = potential_reconstruction(disc, e, K);
            const Element& el = mesh.element(e);
            const ScaledMonomials mono(el.centroid, el.diameter, k + 2);
            std::vector<std::pair<ScalarField, VectorField>> fields;
            for (std::size_t j = 0; j < mono.size(); ++j) {
                fields.emplace_back([&mono, j](const Point& x) { return mono.values(x)[static_cast<Eigen::Index>(j)]; },
                                    [&mono, j](const Point& x) { return Vector(mono.gradients(x).col(static_cast<Eigen::Index>(j))); });
            }
            fields.emplace_back(tc.exact, tc.exact_gradient);
            for (const auto& [f, g] : fields) {
                const Eigen::VectorXd lhs = P * interpolate(disc, e, f);
                const Eigen::VectorXd rhs = elliptic_project(f, g, disc.cell_basis(e), K, disc.element_rule(e));
                const double err = (lhs - rhs).cwiseAbs().maxCoeff();
                worst = std::max(worst, err);
                ++probes;
            }
        }
    }
    rep.require(worst <= 1e-9, "coefficient error " + sci(worst));
    const double t = seconds_since(t0);
    rep.require(t < 30.0, "runtime " + fix(t) + " s");
    rep.note() << mesh.num_elements() << " elements, k=0..3, " << probes << " probes, max coefficient error "
               << sci(worst) << ", " << fix(t) << " s";
    return rep.finish();
}

// 4. S I(w) = 0 for w in P^{k+1}(T).
Outcome stabilisation_consistency()
{
    Report rep;
    double worst = 0.0;
    std::size_t elements = 0;
    for (const TestCase& tc : {ellipse_case(), hetero_case()}) {
        const Mesh mesh = case_mesh(tc, 1, MeshMode::Curved);
        for (int k = 0; k <= 3; ++k) {
            const Discretization disc(mesh, k);
            const auto ops = build_local_operators(disc, tc.diffusion);
            for (ElementId e = 0; e < mesh.num_elements(); ++e) {
                const Element& el = mesh.element(e);
                const ScaledMonomials mono(el.centroid, el.diameter, k + 1);
                const double snorm = ops[e].stabilisation.norm();
                for (std::size_t j = 0; j < mono.size(); ++j) {
                    const Eigen::VectorXd v = interpolate(disc, e, [&](const Point& x) {
                        return mono.values(x)[static_cast<Eigen::Index>(j)];
                    });
                    worst = std::max(worst, (ops[e].stabilisation * v).norm() / (snorm * v.norm()));
                }
                ++elements;
            }
        }
    }
    rep.require(worst <= 1e-9, "relative residual " + sci(worst));
    rep.note() << elements << " element/degree pairs (ellipse and hetero level 1, k=0..3), max |S I w|/(|S||I w|) "
               << sci(worst);
    return rep.finish();
}

// 5. One-dimensional kernel of A_T and positive pivots.
Outcome kernel_and_pivots()
{
    Report rep;
    // Eigenvalues below this fraction of lambda_max count as null. Anisotropic
    // hetero elements have lambda_2/lambda_max near 1e-11, round-off sits
    // near 1e-16.
    const double null_cut = 1e-13;
    double worst_const = 0.0, max_first = 0.0, min_second = 1.0;
    std::size_t bad_kernels = 0;
    for (const TestCase& tc : {ellipse_case(), hetero_case()}) {
        for (const MeshMode mode : {MeshMode::Curved, MeshMode::Straight}) {
            for (std::size_t level = 0; level < 3; ++level) {
                for (int k : {0, 1, 3}) {
                    if (level == 2 && k == 3) continue;
                    CaseRun run = run_case(tc, case_mesh(tc, level, mode), k);
                    record_solve(run);
                    for (ElementId e = 0; e < run.disc.mesh().num_elements(); ++e) {
                        const Eigen::MatrixXd& A = run.ops[e].stiffness;
                        const Eigen::VectorXd one = interpolate(run.disc, e, [](const Point&) { return 1.0; });
                        const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A, Eigen::EigenvaluesOnly).eigenvalues();
                        const double lmax = ev[ev.size() - 1];
                        worst_const = std::max(worst_const, (A * one).norm() / (A.norm() * one.norm()));
                        std::size_t null_dim = 0;
                        for (Eigen::Index i = 0; i < ev.size(); ++i) null_dim += std::abs(ev[i]) <= null_cut * lmax ? 1 : 0;
                        bad_kernels += null_dim == 1 ? 0 : 1;
                        max_first = std::max(max_first, std::abs(ev[0]) / lmax);
                        min_second = std::min(min_second, ev[1] / lmax);
                    }
                }
            }
        }
    }
    // Kernel: constants are annihilated and exactly one eigenvalue is null.
    rep.require(worst_const <= 1e-10, "|A 1|/(|A||1|) = " + sci(worst_const));
    rep.require(bad_kernels == 0, std::to_string(bad_kernels) + " local matrices without a 1-D kernel");
    rep.require(g_min_pivot > 0.0, "non-positive pivot " + sci(g_min_pivot));
    rep.note() << "|A 1|/(|A||1|) <= " << sci(worst_const) << ", |lambda_1|/lambda_max <= " << sci(max_first)
               << ", lambda_2/lambda_max >= " << sci(min_second) << " (null cut " << sci(null_cut) << "); " << g_solves
               << " global solves, min pivot " << sci(g_min_pivot);
    return rep.finish();
}

ConvergenceTable h_sweep(MeshMode mode, int k)
{
    ConvergenceOptions opts;
    opts.mode = mode;
    opts.k = k;
    opts.levels = 4;
    return run_convergence(ellipse_case(), opts);
}

// 6. h-convergence on curved ellipse meshes.
Outcome h_convergence(const ConvergenceTable& k1, const ConvergenceTable& k3)
{
    Report rep;
    const std::vector<std::pair<const ConvergenceTable*, std::vector<double>>> cases{{&k1, {2.6, 1.7, 1.7}},
                                                                                    {&k3, {4.4, 3.5, 3.5}}};
    for (const auto& [t, minimum] : cases) {
        const auto& last = t->rows.back();
        rep.note() << "k=" << (t == &k1 ? 1 : 3) << " rates";
        for (std::size_t i = 0; i < 3; ++i) {
            rep.note() << ' ' << fix(last.rates[i]);
            rep.require(last.rates[i] >= minimum[i], t->error_names[i] + " rate " + fix(last.rates[i]));
        }
        rep.note() << " (" << last.elements << " elements); ";
    }
    return rep.finish();
}

// 7. Straight meshes saturate at order 2.
Outcome straight_saturation(const ConvergenceTable& curved, const ConvergenceTable& straight)
{
    Report rep;
    const double rate = straight.rows.back().rates[0];
    const double ratio = straight.rows.back().errors[0] / curved.rows.back().errors[0];
    rep.require(rate <= 2.5, "straight E0 rate " + fix(rate));
    rep.require(ratio >= 10.0, "straight/curved E0 " + sci(ratio));
    rep.note() << "k=3 straight final E0 rate " << fix(rate) << ", finest E0 straight " << sci(straight.rows.back().errors[0])
               << " vs curved " << sci(curved.rows.back().errors[0]) << " (x" << sci(ratio) << ")";
    return rep.finish();
}

// 8. k-convergence on the level-1 ellipse mesh.
Outcome k_convergence()
{
    Report rep;
    ConvergenceOptions opts;
    opts.sweep = Sweep::K;
    opts.k_min = 0;
    opts.k = 5;
    opts.first_level = 1;
    const ConvergenceTable curved = run_convergence(ellipse_case(), opts);
    opts.mode = MeshMode::Straight;
    const ConvergenceTable straight = run_convergence(ellipse_case(), opts);
    rep.require(std::abs(curved.rows.front().h - 0.3536) < 1e-3, "mesh size " + fix(curved.rows.front().h));

    double min_factor = 1e300;
    for (std::size_t r = 1; r < curved.rows.size(); ++r) {
        for (std::size_t i = 0; i < 3; ++i) {
            min_factor = std::min(min_factor, curved.rows[r].rates[i]);
            rep.require(curved.rows[r].rates[i] >= 2.0, curved.error_names[i] + " factor " +
                                                            fix(curved.rows[r].rates[i]) + " at k=" +
                                                            std::to_string(curved.rows[r].degree));
        }
    }
    double min_ratio = 1e300;
    for (std::size_t r = 3; r < straight.rows.size(); ++r) {
        for (std::size_t i = 0; i < 3; ++i) {
            const double ratio = straight.rows[r].errors[i] / straight.rows[r - 1].errors[i];
            min_ratio = std::min(min_ratio, ratio);
            rep.require(ratio >= 0.8, "straight " + straight.error_names[i] + " ratio " + fix(ratio) + " at k=" +
                                          std::to_string(straight.rows[r].degree));
        }
    }
    rep.note() << "h=" << fix(curved.rows.front().h) << ", curved min decrease factor " << fix(min_factor)
               << " (k=0..5, E0 at k=5 " << sci(curved.rows.back().errors[0]) << "), straight min E_{k+1}/E_k "
               << fix(min_ratio) << " for k>=2";
    return rep.finish();
}

// 9. Heterogeneous diffusion: reference values and the property fallback.
Outcome hetero_cross_check()
{
    Report rep;
    const double target_integral = 0.46006947, target_h1 = 0.80699766;
    const TestCase tc = hetero_case();
    CaseRun ref_run = run_case(tc, case_mesh(tc, 3, MeshMode::Curved), 6);
    record_solve(ref_run);
    const ReferenceFunctionals ref = reference_functionals(ref_run);
    const double di = std::abs(ref.integral - target_integral), dh = std::abs(ref.h1 - target_h1);
    rep.require(di <= 5e-4, "integral off by " + sci(di));
    rep.require(dh <= 5e-3, "H1 seminorm off by " + sci(dh));
    rep.note() << "reference (level 3, k=6, " << ref_run.disc.mesh().num_elements() << " elements): int u "
               << std::setprecision(9) << ref.integral << " (|diff| " << sci(di) << "), |u|_H1 " << std::setprecision(9)
               << ref.h1 << " (|diff| " << sci(dh) << ")";

    ConvergenceOptions opts;
    opts.sweep = Sweep::K;
    opts.k_min = 0;
    opts.k = 6;
    opts.first_level = 0;
    opts.reference = ref;
    const ConvergenceTable curved = run_convergence(tc, opts);
    opts.mode = MeshMode::Straight;
    const ConvergenceTable straight = run_convergence(tc, opts);
    for (std::size_t r = 1; r < curved.rows.size(); ++r) {
        for (std::size_t i = 0; i < 2; ++i) {
            rep.require(curved.rows[r].errors[i] < curved.rows[r - 1].errors[i],
                        "curved " + curved.error_names[i] + " not decreasing at k=" + std::to_string(curved.rows[r].degree));
        }
    }
    for (std::size_t i = 0; i < 2; ++i) {
        double lo = 1e300, hi = 0.0;
        for (std::size_t r = 2; r < straight.rows.size(); ++r) {
            lo = std::min(lo, straight.rows[r].errors[i]);
            hi = std::max(hi, straight.rows[r].errors[i]);
        }
        const double curved_last = curved.rows.back().errors[i];
        rep.require(hi <= 10.0 * lo, "straight " + straight.error_names[i] + " spread " + sci(hi / lo));
        rep.require(lo >= 100.0 * curved_last, "straight " + straight.error_names[i] + " min " + sci(lo) +
                                                   " vs curved " + sci(curved_last));
        rep.note() << "; " << curved.error_names[i] << ": curved k=6 " << sci(curved_last) << ", straight k>=2 in ["
                   << sci(lo) << ", " << sci(hi) << "]";
    }
    return rep.finish();
}

// 10. Face-space dimensions and constants.
Outcome face_structure()
{
    Report rep;
    std::vector<NamedMesh> meshes = generated_meshes(MeshMode::Curved);
    for (auto& m : generated_meshes(MeshMode::Straight)) meshes.push_back(std::move(m));
    meshes.push_back({"quarter-disc", testing_support::quarter_disc_mesh(), 0.0});
    const Rule1D gl = gauss_legendre(30);
    std::size_t segments = 0, curved = 0;
    double worst_const = 0.0;
    for (const auto& nm : meshes) {
        for (FaceId f = 0; f < nm.mesh.num_faces(); ++f) {
            const Face& face = nm.mesh.face(f);
            const EdgeRule rule = edge_rule(face, f, gl);
            (face.is_straight() ? segments : curved) += 1;
            for (int k = 0; k <= 5; ++k) {
                const FaceSpace s = build_face_space(face, f, k, rule);
                const auto d = s.dimension();
                const auto ku = static_cast<std::size_t>(k);
                if (face.is_straight()) {
                    rep.require(d == ku + 1, nm.name + " segment face " + std::to_string(f) + " D_F=" + std::to_string(d));
                } else {
                    rep.require(d >= ku + 1 && d <= 1 + (ku + 1) * (ku + 2),
                                nm.name + " curved face " + std::to_string(f) + " D_F=" + std::to_string(d));
                }
                const Eigen::VectorXd c = l2_project_face([](const Point&) { return 1.0; }, s, rule);
                const Eigen::VectorXd back = s.tabulate(rule) * c;
                worst_const = std::max(worst_const, (back.array() - 1.0).abs().maxCoeff());
            }
        }
    }
    rep.require(worst_const <= 1e-12, "constant reconstruction error " + sci(worst_const));
    rep.note() << meshes.size() << " meshes, " << segments << " segment and " << curved
               << " curved faces, k=0..5, max constant error " << sci(worst_const);
    return rep.finish();
}

} // namespace

int main()
{
    int failures = 0;
    auto emit = [&](int id, const std::string& name, const std::function<Outcome()>& check) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << id << ' ' << name << ": " << o.detail << " ["
                  << fix(seconds_since(t0)) << " s]" << std::endl;
    };

    emit(1, "quadrature exactness", quadrature_exactness);
    emit(2, "curved area recovery", area_recovery);
    emit(3, "commutation identity", commutation);
    emit(4, "stabilisation consistency", stabilisation_consistency);

    // Sweeps shared by criteria 5-7; their solves also feed the pivot check.
    ConvergenceTable k1, k3, k3_straight;
    std::string sweep_error;
    const auto t_sweeps = std::chrono::steady_clock::now();
    try {
        k1 = h_sweep(MeshMode::Curved, 1);
        k3 = h_sweep(MeshMode::Curved, 3);
        k3_straight = h_sweep(MeshMode::Straight, 3);
    } catch (const std::exception& e) {
        sweep_error = e.what();
    }
    const double sweep_seconds = seconds_since(t_sweeps);
    auto needs_sweeps = [&](std::function<Outcome()> f) {
        return [&, f]() {
            if (!sweep_error.empty()) throw Error("h-sweep failed: " + sweep_error);
            return f();
        };
    };

    emit(5, "kernel and positive pivots", kernel_and_pivots);
    emit(6, "h-convergence on curved meshes", needs_sweeps([&] {
             Outcome o = h_convergence(k1, k3);
             o.detail += "sweeps " + fix(sweep_seconds) + " s";
             return o;
         }));
    emit(7, "straight-mesh saturation", needs_sweeps([&] { return straight_saturation(k3, k3_straight); }));
    emit(8, "k-convergence on a fixed mesh", k_convergence);
    emit(9, "heterogeneous diffusion cross-check", hetero_cross_check);
    emit(10, "face-space structure", face_structure);

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
