#pragma once

// Global assembly, static condensation and direct solution of the HHO
// system with homogeneous Dirichlet conditions.

#include "curvedhho/hho.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <iosfwd>
#include <vector>

namespace curvedhho {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Global numbering: cell blocks first (element order), then face blocks
/// (face order). Boundary faces keep their block but are constrained to 0.
class DofMap {
public:
    DofMap() = default;
    explicit DofMap(const Discretization& disc);

    std::size_t cell_offset(ElementId e) const { return cell_offsets_.at(e); }
    std::size_t face_offset(FaceId f) const { return face_offsets_.at(f); }
    std::size_t face_dim(FaceId f) const { return face_dims_.at(f); }
    bool is_boundary(FaceId f) const { return boundary_.at(f); }

    /// Offset in the condensed (interior-face) numbering; kBoundary for
    /// boundary faces.
    std::size_t condensed_offset(FaceId f) const { return condensed_offsets_.at(f); }

    std::size_t num_cell_dofs() const { return num_cell_; }
    std::size_t num_face_dofs() const { return num_face_; }
    std::size_t num_condensed() const { return num_condensed_; }
    std::size_t total() const { return num_cell_ + num_face_; }

    /// Global index of every local unknown of element e.
    std::vector<std::size_t> local_to_global(const Discretization& disc, ElementId e) const;

private:
    std::vector<std::size_t> cell_offsets_;
    std::vector<std::size_t> face_offsets_;
    std::vector<std::size_t> face_dims_;
    std::vector<bool> boundary_;
    std::vector<std::size_t> condensed_offsets_;
    std::size_t num_cell_ = 0;
    std::size_t num_face_ = 0;
    std::size_t num_condensed_ = 0;
};

/// Per-element data to recover cell unknowns: v_T = z - Z v_F.
struct CellRecovery {
    Eigen::MatrixXd Z;
    Eigen::VectorXd z;
};

struct GlobalSystem {
    DofMap dofs;
    SparseMatrix matrix; ///< over interior-face unknowns
    Eigen::VectorXd rhs;
    std::vector<CellRecovery> recovery;
};

struct DiscreteSolution {
    Eigen::VectorXd dofs;                   ///< full vector, cells then faces
    std::vector<Eigen::VectorXd> potential; ///< P^{k+1} coefficients per element
    double min_pivot = 0.0;                 ///< smallest LDL^T pivot
    double relative_residual = 0.0;         ///< of the solved linear system
};

/// Cell load vector <f, phi_j>_T on the P^k basis.
Eigen::VectorXd cell_load(const Discretization& disc, ElementId e, const ScalarField& f);

/// Condensed system. Throws StructuralError naming the element if a cell
/// block cannot be factored.
GlobalSystem assemble(const Discretization& disc, const std::vector<LocalOperators>& ops, const ScalarField& f);

/// Sparse LDL^T solve of the condensed system, cell recovery and potential
/// reconstruction. Throws ConditioningError on a non-positive pivot.
DiscreteSolution solve(const Discretization& disc, const std::vector<LocalOperators>& ops,
                       const GlobalSystem& system);

/// Uncondensed system over cell and interior-face unknowns (reference path).
struct FullSystem {
    DofMap dofs;
    SparseMatrix matrix;
    Eigen::VectorXd rhs;
    std::vector<std::size_t> reduced_index; ///< global index -> row, or kBoundary
};

FullSystem assemble_uncondensed(const Discretization& disc, const std::vector<LocalOperators>& ops,
                                const ScalarField& f);
DiscreteSolution solve_uncondensed(const Discretization& disc, const std::vector<LocalOperators>& ops,
                                   const FullSystem& system);

/// Local unknowns of element e extracted from a global vector.
Eigen::VectorXd gather(const Discretization& disc, const DofMap& dofs, ElementId e, const Eigen::VectorXd& global);

/// Global interpolant; boundary-face blocks are kept (not zeroed).
Eigen::VectorXd interpolate_global(const Discretization& disc, const DofMap& dofs, const ScalarField& v);

/// (sum_T a_T(v, v))^{1/2}.
double energy_norm(const Discretization& disc, const std::vector<LocalOperators>& ops, const DofMap& dofs,
                   const Eigen::VectorXd& v);

/// Per-element basis metadata and reconstructed coefficients.
void write_solution(std::ostream& os, const Discretization& disc, const DiscreteSolution& sol);

} // namespace curvedhho
