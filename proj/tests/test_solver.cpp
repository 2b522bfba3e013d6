#include "curvedhho/errors.hpp"
#include "curvedhho/harness.hpp"
#include "curvedhho/solver.hpp"
#include "support.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace curvedhho;

namespace {

struct Problem {
    Discretization disc;
    std::vector<LocalOperators> ops;
    Problem(Mesh m, int k, const Diffusion& d = Diffusion::identity())
        : disc(std::move(m), k), ops(build_local_operators(disc, d))
    {
    }
};

const ScalarField bubble = [](const Point& x) { return x.x() * (1 - x.x()) * x.y() * (1 - x.y()); };
const ScalarField bubble_source = [](const Point& x) { return 2 * x.y() * (1 - x.y()) + 2 * x.x() * (1 - x.x()); };

// Random global vector with zero boundary blocks.
Eigen::VectorXd random_admissible(const Discretization& disc, const DofMap& dofs, std::mt19937& rng)
{
    std::normal_distribution<double> g;
    Eigen::VectorXd v(static_cast<Eigen::Index>(dofs.total()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = g(rng);
    for (FaceId f = 0; f < disc.mesh().num_faces(); ++f) {
        if (dofs.is_boundary(f)) {
            v.segment(static_cast<Eigen::Index>(dofs.face_offset(f)), static_cast<Eigen::Index>(dofs.face_dim(f))).setZero();
        }
    }
    return v;
}

} // namespace

TEST_CASE("dof map layout")
{
    const Problem p(testing_support::square_grid(3), 2);
    const DofMap dofs(p.disc);
    CHECK(dofs.num_cell_dofs() == 9 * 6);
    CHECK(dofs.num_face_dofs() == 24 * 3);
    CHECK(dofs.num_condensed() == 12 * 3);
    CHECK(dofs.total() == dofs.num_cell_dofs() + dofs.num_face_dofs());
    std::size_t boundary = 0;
    for (FaceId f = 0; f < p.disc.mesh().num_faces(); ++f) {
        if (dofs.is_boundary(f)) {
            CHECK(dofs.condensed_offset(f) == kBoundary);
            ++boundary;
        }
    }
    CHECK(boundary == 12);
    const auto l2g = dofs.local_to_global(p.disc, 4);
    CHECK(l2g.size() == p.disc.local_size(4));
    CHECK(l2g.front() == dofs.cell_offset(4));
}

TEST_CASE("single element with zero data")
{
    const Problem p(testing_support::unit_square_mesh(), 1);
    const GlobalSystem sys = assemble(p.disc, p.ops, [](const Point&) { return 0.0; });
    CHECK(sys.dofs.num_condensed() == 0);
    const DiscreteSolution sol = solve(p.disc, p.ops, sys);
    CHECK(sol.dofs.norm() == 0.0);
}

TEST_CASE("condensed system size on a curved mesh")
{
    const Problem p(case_mesh(ellipse_case(), 1, MeshMode::Curved), 2);
    const GlobalSystem sys = assemble(p.disc, p.ops, ellipse_case().source);
    std::size_t expected = 0;
    for (FaceId f = 0; f < p.disc.mesh().num_faces(); ++f) {
        if (!p.disc.mesh().face(f).is_boundary()) expected += p.disc.face_dim(f);
    }
    CHECK(static_cast<std::size_t>(sys.matrix.rows()) == expected);
    CHECK(sys.rhs.size() == sys.matrix.rows());
    CHECK((SparseMatrix(sys.matrix.transpose()) - sys.matrix).norm() <= 1e-12 * sys.matrix.norm());
}

TEST_CASE("patch test: P^{k+1} solutions are reproduced")
{
    const Problem p(testing_support::square_grid(4), 3);
    const GlobalSystem sys = assemble(p.disc, p.ops, bubble_source);
    const DiscreteSolution sol = solve(p.disc, p.ops, sys);
    CHECK(sol.min_pivot > 0.0);
    CHECK(sol.relative_residual < 1e-10);
    const Eigen::VectorXd ref = interpolate_global(p.disc, sys.dofs, bubble);
    CHECK((sol.dofs - ref).norm() <= 1e-9 * ref.norm());
    // Reconstruction equals u itself.
    for (ElementId e = 0; e < p.disc.mesh().num_elements(); ++e) {
        const Point x = p.disc.mesh().element(e).centroid + Point(0.03, -0.05);
        CHECK(p.disc.cell_basis(e).values(x).dot(sol.potential[e]) == doctest::Approx(bubble(x)).epsilon(1e-9));
    }
}

TEST_CASE("condensed and uncondensed solves agree")
{
    const TestCase tc = hetero_case();
    const Problem p(case_mesh(tc, 0, MeshMode::Curved), 2, tc.diffusion);
    const DiscreteSolution a = solve(p.disc, p.ops, assemble(p.disc, p.ops, tc.source));
    const DiscreteSolution b = solve_uncondensed(p.disc, p.ops, assemble_uncondensed(p.disc, p.ops, tc.source));
    CHECK((a.dofs - b.dofs).norm() <= 1e-10 * b.dofs.norm());
    CHECK(a.relative_residual < 1e-10);
    CHECK(b.relative_residual < 1e-10);
}

TEST_CASE("energy norm and Galerkin orthogonality")
{
    const TestCase tc = ellipse_case();
    const Problem p(case_mesh(tc, 1, MeshMode::Curved), 1);
    const GlobalSystem sys = assemble(p.disc, p.ops, tc.source);
    const DiscreteSolution sol = solve(p.disc, p.ops, sys);
    const DofMap& dofs = sys.dofs;
    const auto n_el = p.disc.mesh().num_elements();

    std::mt19937 rng(12345);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::VectorXd v = random_admissible(p.disc, dofs, rng);
        double a_uv = 0.0, a_vv = 0.0, load = 0.0, scale = 0.0;
        for (ElementId e = 0; e < n_el; ++e) {
            const Eigen::VectorXd ve = gather(p.disc, dofs, e, v);
            const Eigen::VectorXd ue = gather(p.disc, dofs, e, sol.dofs);
            a_uv += ve.dot(p.ops[e].stiffness * ue);
            a_vv += ve.dot(p.ops[e].stiffness * ve);
            const Eigen::VectorXd b = cell_load(p.disc, e, tc.source);
            load += b.dot(ve.head(b.size()));
            scale += std::abs(ve.dot(p.ops[e].stiffness * ue)) + std::abs(b.dot(ve.head(b.size())));
        }
        CHECK(std::abs(a_uv - load) <= 1e-10 * scale);
        CHECK(energy_norm(p.disc, p.ops, dofs, v) == doctest::Approx(std::sqrt(a_vv)).epsilon(1e-12));
    }
}

TEST_CASE("solution dump lists every element")
{
    const Problem p(testing_support::square_grid(2), 0);
    const DiscreteSolution sol = solve(p.disc, p.ops, assemble(p.disc, p.ops, bubble_source));
    std::ostringstream os;
    write_solution(os, p.disc, sol);
    const std::string text = os.str();
    CHECK(!text.empty());
    std::size_t lines = 0;
    for (char c : text) lines += c == '\n' ? 1 : 0;
    CHECK(lines >= 4);
}
