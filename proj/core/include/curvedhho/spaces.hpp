#pragma once

// Orthonormal bases for cell polynomials and for the curved-face unknowns,
// plus the L2 and oblique elliptic projectors.
//
// The face space on F is P0(F) + P^k(R^2)^2 . n_F. It is assembled from the
// spanning set {1} u {m n_x} u {m n_y} (m ambient scaled monomials of degree
// <= k restricted to F); numerically dependent members are removed with a
// fully pivoted LU of the Gram matrix before Gram-Schmidt. On a straight
// face this reduces to P^k(F); on a curved face the functions are not
// polynomial along the face.

#include "curvedhho/geometry.hpp"
#include "curvedhho/quadrature.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <utility>
#include <vector>

namespace curvedhho {

inline std::size_t poly_dim(int degree) { return degree < 0 ? 0 : static_cast<std::size_t>((degree + 1) * (degree + 2) / 2); }

/// Monomials ((x - c)/s)^a ((y - c)/s)^b in graded lexicographic order.
class ScaledMonomials {
public:
    ScaledMonomials() = default;
    ScaledMonomials(Point center, double scale, int degree);

    std::size_t size() const { return exponents_.size(); }
    int degree() const { return degree_; }
    const Point& center() const { return center_; }
    double scale() const { return scale_; }
    const std::vector<std::pair<int, int>>& exponents() const { return exponents_; }

    Eigen::VectorXd values(const Point& x) const;
    /// Row 0: d/dx, row 1: d/dy.
    Eigen::Matrix<double, 2, Eigen::Dynamic> gradients(const Point& x) const;
    /// Rows: d2/dx2, d2/dxdy, d2/dy2.
    Eigen::Matrix<double, 3, Eigen::Dynamic> hessians(const Point& x) const;

private:
    Point center_ = Point::Zero();
    double scale_ = 1.0;
    int degree_ = 0;
    std::vector<std::pair<int, int>> exponents_;
};

/// Values of a basis at a point set: one row per point.
struct BasisTable {
    Eigen::MatrixXd values;
    Eigen::MatrixXd dx;
    Eigen::MatrixXd dy;
    Eigen::MatrixXd dxx;
    Eigen::MatrixXd dxy;
    Eigen::MatrixXd dyy;
};

/// Orthonormal basis of P^degree(T); phi_m = sum_j coeffs(m, j) monomial_j.
/// Lower-degree bases are leading sub-blocks (graded Gram-Schmidt).
class CellBasis {
public:
    CellBasis() = default;
    CellBasis(ElementId element, ScaledMonomials monomials, Eigen::MatrixXd coeffs);

    ElementId element() const { return element_; }
    int degree() const { return monomials_.degree(); }
    std::size_t size() const { return monomials_.size(); }
    const ScaledMonomials& monomials() const { return monomials_; }
    const Eigen::MatrixXd& coeffs() const { return coeffs_; }

    Eigen::VectorXd values(const Point& x) const;
    Eigen::Matrix<double, 2, Eigen::Dynamic> gradients(const Point& x) const;

    /// Tabulates the basis at `points`; second derivatives only on request.
    BasisTable tabulate(const std::vector<Point>& points, bool with_hessians = false) const;

    /// Same functions restricted to degree <= `degree`.
    CellBasis truncated(int degree) const;

private:
    ElementId element_ = 0;
    ScaledMonomials monomials_;
    Eigen::MatrixXd coeffs_;
};

/// Modified Gram-Schmidt (two passes) on centroid/diameter scaled monomials.
/// Throws ConditioningError naming the element when a normalized pivot drops
/// below 1e-13.
CellBasis build_cell_basis(const Mesh& mesh, ElementId element, int degree, const ElemRule& rule);

struct DroppedFunction {
    std::size_t spanning_index; ///< 0 is the constant, then m n_x, then m n_y
    double pivot;               ///< relative pivot magnitude that caused the drop
};

class FaceSpace {
public:
    FaceSpace() = default;
    FaceSpace(FaceId face, ScaledMonomials monomials, Eigen::MatrixXd coeffs, std::vector<DroppedFunction> dropped,
              std::vector<Point> nodes = {}, Eigen::MatrixXd node_values = {});

    FaceId face() const { return face_; }
    int degree() const { return monomials_.degree(); }
    std::size_t dimension() const { return static_cast<std::size_t>(coeffs_.rows()); }
    std::size_t spanning_size() const { return 1 + 2 * monomials_.size(); }
    const std::vector<DroppedFunction>& dropped() const { return dropped_; }
    const Eigen::MatrixXd& coeffs() const { return coeffs_; }

    /// Spanning-set values at x with face normal n.
    Eigen::VectorXd spanning_values(const Point& x, const Vector& normal) const;
    /// Basis values through the spanning-set coefficients. On short curved
    /// faces these coefficients are large and the result loses digits; use
    /// `tabulate` on the construction rule where possible.
    Eigen::VectorXd values(const Point& x, const Vector& normal) const;
    /// Basis values at the rule nodes (rows), using the rule's normals. On
    /// the rule the space was built with, the stored orthonormal node values
    /// are returned.
    Eigen::MatrixXd tabulate(const EdgeRule& rule) const;

private:
    FaceId face_ = 0;
    ScaledMonomials monomials_;
    Eigen::MatrixXd coeffs_; ///< dimension x spanning_size
    std::vector<DroppedFunction> dropped_;
    std::vector<Point> nodes_;     ///< construction rule nodes
    Eigen::MatrixXd node_values_;  ///< basis at nodes_, orthonormal under the rule
};

/// Builds the curved-face space of degree k on `face`. `threshold` is the
/// relative pivot threshold of the rank-revealing factorization.
FaceSpace build_face_space(const Face& face, FaceId id, int k, const EdgeRule& rule, double threshold = 1e-15);

/// Coefficients of the L2 projection on an orthonormal cell basis.
Eigen::VectorXd l2_project_cell(const ScalarField& f, const CellBasis& basis, const ElemRule& rule);

/// Coefficients of the L2 projection on an orthonormal face space.
Eigen::VectorXd l2_project_face(const ScalarField& f, const FaceSpace& space, const EdgeRule& rule);

/// Oblique elliptic projection on `basis` (degree k + 1): K-weighted energy
/// orthogonality closed by matching the mean value, solved as one bordered
/// system.
Eigen::VectorXd elliptic_project(const ScalarField& f, const VectorField& grad_f, const CellBasis& basis,
                                 const Eigen::Matrix2d& K, const ElemRule& rule);

/// Text report: one line per face with D_F, spanning size and dropped pivots.
void write_face_space_report(std::ostream& os, const std::vector<FaceSpace>& spaces);

} // namespace curvedhho
