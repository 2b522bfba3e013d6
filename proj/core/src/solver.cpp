#include "curvedhho/solver.hpp"

#include "curvedhho/errors.hpp"
#include "parallel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace curvedhho {

DofMap::DofMap(const Discretization& disc)
{
    const Mesh& mesh = disc.mesh();
    const std::size_t nc = disc.cell_dim();
    cell_offsets_.resize(mesh.num_elements());
    for (ElementId e = 0; e < mesh.num_elements(); ++e) cell_offsets_[e] = e * nc;
    num_cell_ = nc * mesh.num_elements();

    const std::size_t nf = mesh.num_faces();
    face_offsets_.resize(nf);
    face_dims_.resize(nf);
    boundary_.resize(nf);
    condensed_offsets_.resize(nf);
    std::size_t off = num_cell_;
    for (FaceId f = 0; f < nf; ++f) {
        face_offsets_[f] = off;
        face_dims_[f] = disc.face_dim(f);
        off += face_dims_[f];
        boundary_[f] = mesh.face(f).is_boundary();
        if (boundary_[f]) {
            condensed_offsets_[f] = kBoundary;
        } else {
            condensed_offsets_[f] = num_condensed_;
            num_condensed_ += face_dims_[f];
        }
    }
    num_face_ = off - num_cell_;
}

std::vector<std::size_t> DofMap::local_to_global(const Discretization& disc, ElementId e) const
{
    std::vector<std::size_t> out;
    out.reserve(disc.local_size(e));
    for (std::size_t i = 0; i < disc.cell_dim(); ++i) out.push_back(cell_offset(e) + i);
    for (const FaceUse& use : disc.mesh().element(e).faces) {
        for (std::size_t i = 0; i < face_dim(use.face); ++i) out.push_back(face_offset(use.face) + i);
    }
    return out;
}

Eigen::VectorXd cell_load(const Discretization& disc, ElementId e, const ScalarField& f)
{
    return l2_project_cell(f, disc.cell_basis(e), disc.element_rule(e)).head(static_cast<Eigen::Index>(disc.cell_dim()));
}

namespace {

using Triplet = Eigen::Triplet<double>;

SparseMatrix from_triplets(std::vector<Triplet>& trips, std::size_t n)
{
    // Sorted before summation so the result is independent of insertion order.
    std::stable_sort(trips.begin(), trips.end(), [](const Triplet& a, const Triplet& b) {
        return a.col() != b.col() ? a.col() < b.col() : a.row() < b.row();
    });
    SparseMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();
    return m;
}

struct ElementCondensation {
    std::vector<std::size_t> rows; // condensed index per local face unknown, kBoundary if constrained
    Eigen::MatrixXd schur;
    Eigen::VectorXd rhs;
    CellRecovery recovery;
};

ElementCondensation condense(const Discretization& disc, const DofMap& dofs, const LocalOperators& op, ElementId e,
                             const ScalarField& f)
{
    const auto nc = static_cast<Eigen::Index>(disc.cell_dim());
    const Eigen::MatrixXd& A = op.stiffness;
    const Eigen::Index nf = A.rows() - nc;

    const Eigen::LLT<Eigen::MatrixXd> llt(A.topLeftCorner(nc, nc));
    if (llt.info() != Eigen::Success) {
        throw StructuralError("cell block of the local stiffness is not positive definite on element " +
                              std::to_string(e));
    }
    ElementCondensation out;
    const Eigen::VectorXd bT = cell_load(disc, e, f);
    out.recovery.Z = llt.solve(A.topRightCorner(nc, nf));
    out.recovery.z = llt.solve(bT);
    out.schur = A.bottomRightCorner(nf, nf) - A.bottomLeftCorner(nf, nc) * out.recovery.Z;
    out.schur = 0.5 * (out.schur + out.schur.transpose());
    out.rhs = -A.bottomLeftCorner(nf, nc) * out.recovery.z;

    for (const FaceUse& use : disc.mesh().element(e).faces) {
        const std::size_t base = dofs.condensed_offset(use.face);
        for (std::size_t i = 0; i < dofs.face_dim(use.face); ++i) {
            out.rows.push_back(base == kBoundary ? kBoundary : base + i);
        }
    }
    return out;
}

double min_ldlt_pivot(const Eigen::VectorXd& d) { return d.size() ? d.minCoeff() : 0.0; }

} // namespace

GlobalSystem assemble(const Discretization& disc, const std::vector<LocalOperators>& ops, const ScalarField& f)
{
    const Mesh& mesh = disc.mesh();
    if (ops.size() != mesh.num_elements()) throw ContractError("one set of local operators per element is required");
    GlobalSystem sys;
    sys.dofs = DofMap(disc);
    const std::size_t n = sys.dofs.num_condensed();

    std::vector<ElementCondensation> parts(mesh.num_elements());
    detail::parallel_for(parts.size(), [&](std::size_t e) { parts[e] = condense(disc, sys.dofs, ops[e], e, f); });

    std::vector<Triplet> trips;
    sys.rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    sys.recovery.resize(parts.size());
    for (std::size_t e = 0; e < parts.size(); ++e) {
        ElementCondensation& p = parts[e];
        for (std::size_t i = 0; i < p.rows.size(); ++i) {
            if (p.rows[i] == kBoundary) continue;
            sys.rhs(static_cast<Eigen::Index>(p.rows[i])) += p.rhs(static_cast<Eigen::Index>(i));
            for (std::size_t j = 0; j < p.rows.size(); ++j) {
                if (p.rows[j] == kBoundary) continue;
                trips.emplace_back(static_cast<int>(p.rows[i]), static_cast<int>(p.rows[j]),
                                   p.schur(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
            }
        }
        sys.recovery[e] = std::move(p.recovery);
    }
    sys.matrix = from_triplets(trips, n);
    return sys;
}

namespace {

Eigen::VectorXd ldlt_solve(const SparseMatrix& A, const Eigen::VectorXd& b, double& min_pivot, double& residual)
{
    if (A.rows() == 0) {
        min_pivot = 0.0;
        residual = 0.0;
        return Eigen::VectorXd();
    }
    Eigen::SimplicialLDLT<SparseMatrix> ldlt;
    ldlt.compute(A);
    if (ldlt.info() != Eigen::Success) throw ConditioningError("sparse LDL^T factorization failed");
    const Eigen::VectorXd d = ldlt.vectorD();
    min_pivot = min_ldlt_pivot(d);
    if (!(min_pivot > 0.0)) {
        std::ostringstream msg;
        msg << "global matrix is not positive definite: smallest pivot " << min_pivot << ", largest "
            << d.maxCoeff();
        throw ConditioningError(msg.str());
    }
    Eigen::VectorXd x = ldlt.solve(b);
    const double bn = b.norm();
    residual = bn > 0.0 ? (A * x - b).norm() / bn : (A * x - b).norm();
    return x;
}

void reconstruct(const Discretization& disc, const std::vector<LocalOperators>& ops, const DofMap& dofs,
                 DiscreteSolution& sol)
{
    sol.potential.resize(disc.mesh().num_elements());
    for (ElementId e = 0; e < disc.mesh().num_elements(); ++e) {
        sol.potential[e] = ops[e].reconstruction * gather(disc, dofs, e, sol.dofs);
    }
}

} // namespace

DiscreteSolution solve(const Discretization& disc, const std::vector<LocalOperators>& ops, const GlobalSystem& system)
{
    const DofMap& dofs = system.dofs;
    DiscreteSolution sol;
    const Eigen::VectorXd x = ldlt_solve(system.matrix, system.rhs, sol.min_pivot, sol.relative_residual);

    sol.dofs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dofs.total()));
    const Mesh& mesh = disc.mesh();
    for (FaceId f = 0; f < mesh.num_faces(); ++f) {
        if (dofs.is_boundary(f)) continue;
        const auto n = static_cast<Eigen::Index>(dofs.face_dim(f));
        sol.dofs.segment(static_cast<Eigen::Index>(dofs.face_offset(f)), n) =
            x.segment(static_cast<Eigen::Index>(dofs.condensed_offset(f)), n);
    }
    const auto nc = static_cast<Eigen::Index>(disc.cell_dim());
    for (ElementId e = 0; e < mesh.num_elements(); ++e) {
        const Eigen::VectorXd local = gather(disc, dofs, e, sol.dofs);
        const CellRecovery& r = system.recovery.at(e);
        sol.dofs.segment(static_cast<Eigen::Index>(dofs.cell_offset(e)), nc) = r.z - r.Z * local.tail(local.size() - nc);
    }
    reconstruct(disc, ops, dofs, sol);
    return sol;
}

FullSystem assemble_uncondensed(const Discretization& disc, const std::vector<LocalOperators>& ops,
                                const ScalarField& f)
{
    const Mesh& mesh = disc.mesh();
    if (ops.size() != mesh.num_elements()) throw ContractError("one set of local operators per element is required");
    FullSystem sys;
    sys.dofs = DofMap(disc);
    sys.reduced_index.assign(sys.dofs.total(), kBoundary);
    std::size_t n = 0;
    for (std::size_t i = 0; i < sys.dofs.num_cell_dofs(); ++i) sys.reduced_index[i] = n++;
    for (FaceId fc = 0; fc < mesh.num_faces(); ++fc) {
        if (sys.dofs.is_boundary(fc)) continue;
        for (std::size_t i = 0; i < sys.dofs.face_dim(fc); ++i) sys.reduced_index[sys.dofs.face_offset(fc) + i] = n++;
    }

    std::vector<Triplet> trips;
    sys.rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (ElementId e = 0; e < mesh.num_elements(); ++e) {
        const std::vector<std::size_t> l2g = sys.dofs.local_to_global(disc, e);
        const Eigen::VectorXd bT = cell_load(disc, e, f);
        for (Eigen::Index i = 0; i < bT.size(); ++i) {
            sys.rhs(static_cast<Eigen::Index>(sys.reduced_index[l2g[static_cast<std::size_t>(i)]])) += bT(i);
        }
        const Eigen::MatrixXd& A = ops[e].stiffness;
        for (std::size_t i = 0; i < l2g.size(); ++i) {
            const std::size_t r = sys.reduced_index[l2g[i]];
            if (r == kBoundary) continue;
            for (std::size_t j = 0; j < l2g.size(); ++j) {
                const std::size_t c = sys.reduced_index[l2g[j]];
                if (c == kBoundary) continue;
                trips.emplace_back(static_cast<int>(r), static_cast<int>(c),
                                   A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
            }
        }
    }
    sys.matrix = from_triplets(trips, n);
    return sys;
}

DiscreteSolution solve_uncondensed(const Discretization& disc, const std::vector<LocalOperators>& ops,
                                   const FullSystem& system)
{
    DiscreteSolution sol;
    const Eigen::VectorXd x = ldlt_solve(system.matrix, system.rhs, sol.min_pivot, sol.relative_residual);
    sol.dofs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(system.dofs.total()));
    for (std::size_t g = 0; g < system.reduced_index.size(); ++g) {
        if (system.reduced_index[g] != kBoundary) {
            sol.dofs(static_cast<Eigen::Index>(g)) = x(static_cast<Eigen::Index>(system.reduced_index[g]));
        }
    }
    reconstruct(disc, ops, system.dofs, sol);
    return sol;
}

Eigen::VectorXd gather(const Discretization& disc, const DofMap& dofs, ElementId e, const Eigen::VectorXd& global)
{
    const std::vector<std::size_t> l2g = dofs.local_to_global(disc, e);
    Eigen::VectorXd out(static_cast<Eigen::Index>(l2g.size()));
    for (std::size_t i = 0; i < l2g.size(); ++i) out(static_cast<Eigen::Index>(i)) = global(static_cast<Eigen::Index>(l2g[i]));
    return out;
}

Eigen::VectorXd interpolate_global(const Discretization& disc, const DofMap& dofs, const ScalarField& v)
{
    const Mesh& mesh = disc.mesh();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dofs.total()));
    const auto nc = static_cast<Eigen::Index>(disc.cell_dim());
    for (ElementId e = 0; e < mesh.num_elements(); ++e) {
        out.segment(static_cast<Eigen::Index>(dofs.cell_offset(e)), nc) =
            l2_project_cell(v, disc.cell_basis(e), disc.element_rule(e)).head(nc);
    }
    for (FaceId f = 0; f < mesh.num_faces(); ++f) {
        out.segment(static_cast<Eigen::Index>(dofs.face_offset(f)), static_cast<Eigen::Index>(dofs.face_dim(f))) =
            l2_project_face(v, disc.face_space(f), disc.edge_rule(f));
    }
    return out;
}

double energy_norm(const Discretization& disc, const std::vector<LocalOperators>& ops, const DofMap& dofs,
                   const Eigen::VectorXd& v)
{
    double sum = 0.0;
    for (ElementId e = 0; e < disc.mesh().num_elements(); ++e) {
        const Eigen::VectorXd local = gather(disc, dofs, e, v);
        sum += local.dot(ops.at(e).stiffness * local);
    }
    return std::sqrt(std::max(0.0, sum));
}

void write_solution(std::ostream& os, const Discretization& disc, const DiscreteSolution& sol)
{
    os << "# element cx cy scale degree coefficients (monomial exponents in graded order)\n";
    os << std::setprecision(17);
    for (ElementId e = 0; e < disc.mesh().num_elements(); ++e) {
        const CellBasis& b = disc.cell_basis(e);
        // Expand the orthonormal coefficients on the scaled monomials.
        const Eigen::VectorXd mono = b.coeffs().transpose() * sol.potential.at(e);
        os << e << ' ' << b.monomials().center().x() << ' ' << b.monomials().center().y() << ' '
           << b.monomials().scale() << ' ' << b.degree();
        for (Eigen::Index i = 0; i < mono.size(); ++i) os << ' ' << mono(i);
        os << '\n';
    }
}

} // namespace curvedhho
