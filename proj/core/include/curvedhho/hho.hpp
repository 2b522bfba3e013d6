#pragma once

// Element-local HHO operators on curved meshes.
//
// Local unknowns of element T are ordered as [cell | face_0 | face_1 | ...],
// following the element's face loop. Cell unknowns are coefficients in the
// leading dim P^k(T) functions of the orthonormal P^{k+1}(T) basis; face
// unknowns are coefficients in the orthonormal curved-face space of each
// face. Face traces are shared between the two neighbours of a face.

#include "curvedhho/geometry.hpp"
#include "curvedhho/quadrature.hpp"
#include "curvedhho/spaces.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <map>
#include <vector>

namespace curvedhho {

/// Symmetric positive-definite 2x2 diffusion matrix.
class DiffusionTensor {
public:
    DiffusionTensor() = default;
    /// Throws DomainError unless K is symmetric to 1e-14 and positive definite.
    explicit DiffusionTensor(const Eigen::Matrix2d& K);

    const Eigen::Matrix2d& matrix() const { return K_; }
    double lambda_min() const { return lmin_; }
    double lambda_max() const { return lmax_; }
    double anisotropy() const { return lmax_ / lmin_; }

private:
    Eigen::Matrix2d K_ = Eigen::Matrix2d::Identity();
    double lmin_ = 1.0;
    double lmax_ = 1.0;
};

/// Piecewise-constant diffusion indexed by element region tag.
class Diffusion {
public:
    Diffusion() = default;
    explicit Diffusion(DiffusionTensor fallback) : fallback_(fallback) {}

    static Diffusion identity() { return Diffusion(); }

    Diffusion& set(int region, const DiffusionTensor& K)
    {
        regions_[region] = K;
        return *this;
    }
    const DiffusionTensor& at(int region) const;
    const Eigen::Matrix2d& matrix(const Mesh& mesh, ElementId element) const
    {
        return at(mesh.element(element).region).matrix();
    }

private:
    DiffusionTensor fallback_;
    std::map<int, DiffusionTensor> regions_;
};

struct QuadratureOptions {
    std::size_t edge_points = 30;
    std::size_t radial_points = 30;
    double rank_threshold = 1e-15;
};

/// Mesh plus the quadrature rules and bases needed by degree-k operators.
class Discretization {
public:
    Discretization(Mesh mesh, int k, QuadratureOptions options = {});

    const Mesh& mesh() const { return mesh_; }
    int degree() const { return k_; }
    const QuadratureOptions& options() const { return options_; }

    const EdgeRule& edge_rule(FaceId f) const { return edge_rules_.at(f); }
    const FaceSpace& face_space(FaceId f) const { return face_spaces_.at(f); }
    const std::vector<FaceSpace>& face_spaces() const { return face_spaces_; }
    const ElemRule& element_rule(ElementId e) const { return elem_rules_.at(e); }
    /// Orthonormal P^{k+1}(T) basis; its leading cell_dim() functions span P^k(T).
    const CellBasis& cell_basis(ElementId e) const { return cell_bases_.at(e); }

    std::size_t cell_dim() const { return poly_dim(k_); }
    std::size_t recon_dim() const { return poly_dim(k_ + 1); }
    std::size_t face_dim(FaceId f) const { return face_spaces_.at(f).dimension(); }

    /// Number of local unknowns of element e.
    std::size_t local_size(ElementId e) const;
    /// Offset of each face block inside the local vector (loop order).
    std::vector<std::size_t> local_face_offsets(ElementId e) const;

    /// n_T = sign * n_F on face `use` of element e.
    double normal_sign(ElementId e, std::size_t local_face) const;

private:
    Mesh mesh_;
    int k_;
    QuadratureOptions options_;
    std::vector<EdgeRule> edge_rules_;
    std::vector<FaceSpace> face_spaces_;
    std::vector<ElemRule> elem_rules_;
    std::vector<CellBasis> cell_bases_;
};

using LocalDofs = Eigen::VectorXd;

struct LocalOperators {
    Eigen::MatrixXd reconstruction; ///< P: recon_dim x local_size
    Eigen::MatrixXd stabilisation;  ///< S: local_size x local_size
    Eigen::MatrixXd stiffness;      ///< A = P^T G_K P + S
    Eigen::MatrixXd gradient_gram;  ///< G_K on the P^{k+1} basis
};

/// Cell L2 projection and face L2 projections of v.
LocalDofs interpolate(const Discretization& disc, ElementId e, const ScalarField& v);

/// K-weighted gradient Gram matrix of the P^{k+1} basis.
Eigen::MatrixXd gradient_gram(const Discretization& disc, ElementId e, const Eigen::Matrix2d& K);

/// Potential reconstruction matrix P. Solves
///   (K grad p, grad w) = -(v_T, div(K grad w)) + <v_F, (K grad w).n_T>
/// for every w in P^{k+1}(T), with int_T (p - v_T) = 0 imposed by a
/// Lagrange multiplier.
Eigen::MatrixXd potential_reconstruction(const Discretization& disc, ElementId e, const Eigen::Matrix2d& K);

/// S = dT^T G_K dT + h_T^{-1} sum_F dF^T M_F dF with dT = v_T - pi_T P v,
/// dF = v_F - pi_F P v, and M_F the face mass matrix weighted by K n.n.
Eigen::MatrixXd stabilisation(const Discretization& disc, ElementId e, const Eigen::Matrix2d& K,
                              const Eigen::MatrixXd& P);

LocalOperators local_stiffness(const Discretization& disc, ElementId e, const Eigen::Matrix2d& K);

/// Local operators of every element, built in parallel.
std::vector<LocalOperators> build_local_operators(const Discretization& disc, const Diffusion& diffusion);

/// Squared discrete seminorm |v_T|_{K,H1}^2 + h_T^{-1} sum_F ||v_F - v_T||_{K,F}^2.
double local_seminorm_squared(const Discretization& disc, ElementId e, const LocalDofs& v, const Eigen::Matrix2d& K);

/// Dense text dump of P, S and A (17 significant digits).
void write_local_operators(std::ostream& os, ElementId e, const LocalOperators& ops);

} // namespace curvedhho
