#include "curvedhho/spaces.hpp"

#include "curvedhho/errors.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace curvedhho {

namespace {

// a-th power and its first two derivatives factors: d/dx x^a = a x^(a-1).
double ipow(double x, int a)
{
    double r = 1.0;
    for (int i = 0; i < a; ++i) r *= x;
    return r;
}

double dpow(double x, int a) { return a == 0 ? 0.0 : a * ipow(x, a - 1); }
double ddpow(double x, int a) { return a < 2 ? 0.0 : a * (a - 1) * ipow(x, a - 2); }

double weighted_dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& w)
{
    return (a.array() * b.array() * w.array()).sum();
}

Eigen::VectorXd as_vector(const std::vector<double>& v)
{
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

} // namespace

ScaledMonomials::ScaledMonomials(Point center, double scale, int degree)
    : center_(std::move(center)), scale_(scale), degree_(degree)
{
    if (!(scale > 0.0)) throw DomainError("monomial scale must be positive");
    if (degree < 0) throw DomainError("negative polynomial degree");
    for (int d = 0; d <= degree; ++d) {
        for (int b = 0; b <= d; ++b) exponents_.emplace_back(d - b, b);
    }
}

Eigen::VectorXd ScaledMonomials::values(const Point& x) const
{
    const Vector s = (x - center_) / scale_;
    Eigen::VectorXd out(size());
    for (std::size_t j = 0; j < size(); ++j) {
        const auto [a, b] = exponents_[j];
        out(static_cast<Eigen::Index>(j)) = ipow(s.x(), a) * ipow(s.y(), b);
    }
    return out;
}

Eigen::Matrix<double, 2, Eigen::Dynamic> ScaledMonomials::gradients(const Point& x) const
{
    const Vector s = (x - center_) / scale_;
    Eigen::Matrix<double, 2, Eigen::Dynamic> out(2, size());
    for (std::size_t j = 0; j < size(); ++j) {
        const auto [a, b] = exponents_[j];
        const auto c = static_cast<Eigen::Index>(j);
        out(0, c) = dpow(s.x(), a) * ipow(s.y(), b) / scale_;
        out(1, c) = ipow(s.x(), a) * dpow(s.y(), b) / scale_;
    }
    return out;
}

Eigen::Matrix<double, 3, Eigen::Dynamic> ScaledMonomials::hessians(const Point& x) const
{
    const Vector s = (x - center_) / scale_;
    const double s2 = scale_ * scale_;
    Eigen::Matrix<double, 3, Eigen::Dynamic> out(3, size());
    for (std::size_t j = 0; j < size(); ++j) {
        const auto [a, b] = exponents_[j];
        const auto c = static_cast<Eigen::Index>(j);
        out(0, c) = ddpow(s.x(), a) * ipow(s.y(), b) / s2;
        out(1, c) = dpow(s.x(), a) * dpow(s.y(), b) / s2;
        out(2, c) = ipow(s.x(), a) * ddpow(s.y(), b) / s2;
    }
    return out;
}

CellBasis::CellBasis(ElementId element, ScaledMonomials monomials, Eigen::MatrixXd coeffs)
    : element_(element), monomials_(std::move(monomials)), coeffs_(std::move(coeffs))
{
}

Eigen::VectorXd CellBasis::values(const Point& x) const { return coeffs_ * monomials_.values(x); }

Eigen::Matrix<double, 2, Eigen::Dynamic> CellBasis::gradients(const Point& x) const
{
    return monomials_.gradients(x) * coeffs_.transpose();
}

BasisTable CellBasis::tabulate(const std::vector<Point>& points, bool with_hessians) const
{
    const auto np = static_cast<Eigen::Index>(points.size());
    const auto nm = static_cast<Eigen::Index>(monomials_.size());
    Eigen::MatrixXd m(np, nm);
    Eigen::MatrixXd mx(np, nm);
    Eigen::MatrixXd my(np, nm);
    Eigen::MatrixXd mxx;
    Eigen::MatrixXd mxy;
    Eigen::MatrixXd myy;
    if (with_hessians) {
        mxx.resize(np, nm);
        mxy.resize(np, nm);
        myy.resize(np, nm);
    }
    const double s = monomials_.scale();
    const auto& ex = monomials_.exponents();
    const int deg = monomials_.degree();
    std::vector<double> px(static_cast<std::size_t>(deg) + 1);
    std::vector<double> py(static_cast<std::size_t>(deg) + 1);
    for (Eigen::Index q = 0; q < np; ++q) {
        const Vector r = (points[static_cast<std::size_t>(q)] - monomials_.center()) / s;
        px[0] = 1.0;
        py[0] = 1.0;
        for (int i = 1; i <= deg; ++i) {
            px[static_cast<std::size_t>(i)] = px[static_cast<std::size_t>(i) - 1] * r.x();
            py[static_cast<std::size_t>(i)] = py[static_cast<std::size_t>(i) - 1] * r.y();
        }
        auto pw = [](const std::vector<double>& p, int a) { return a < 0 ? 0.0 : p[static_cast<std::size_t>(a)]; };
        for (Eigen::Index j = 0; j < nm; ++j) {
            const auto [a, b] = ex[static_cast<std::size_t>(j)];
            m(q, j) = pw(px, a) * pw(py, b);
            mx(q, j) = a * pw(px, a - 1) * pw(py, b) / s;
            my(q, j) = b * pw(px, a) * pw(py, b - 1) / s;
            if (with_hessians) {
                mxx(q, j) = a * (a - 1) * pw(px, a - 2) * pw(py, b) / (s * s);
                mxy(q, j) = a * b * pw(px, a - 1) * pw(py, b - 1) / (s * s);
                myy(q, j) = b * (b - 1) * pw(px, a) * pw(py, b - 2) / (s * s);
            }
        }
    }
    BasisTable t;
    const Eigen::MatrixXd ct = coeffs_.transpose();
    t.values = m * ct;
    t.dx = mx * ct;
    t.dy = my * ct;
    if (with_hessians) {
        t.dxx = mxx * ct;
        t.dxy = mxy * ct;
        t.dyy = myy * ct;
    }
    return t;
}

CellBasis CellBasis::truncated(int degree) const
{
    if (degree > this->degree()) throw DomainError("cannot truncate a basis to a higher degree");
    const auto n = static_cast<Eigen::Index>(poly_dim(degree));
    ScaledMonomials mono(monomials_.center(), monomials_.scale(), degree);
    return CellBasis(element_, std::move(mono), coeffs_.topLeftCorner(n, n));
}

CellBasis build_cell_basis(const Mesh& mesh, ElementId element, int degree, const ElemRule& rule)
{
    const Element& el = mesh.element(element);
    ScaledMonomials mono(el.centroid, el.diameter, degree);
    const auto n = static_cast<Eigen::Index>(mono.size());

    // Monomial values at the rule points; columns are orthogonalized in place
    // while `coeffs` tracks the combination of monomials.
    std::vector<Point> pts = rule.points;
    CellBasis raw(element, mono, Eigen::MatrixXd::Identity(n, n));
    Eigen::MatrixXd v = raw.tabulate(pts).values;
    const Eigen::VectorXd w = as_vector(rule.weights);
    Eigen::MatrixXd coeffs = Eigen::MatrixXd::Identity(n, n);

    for (Eigen::Index j = 0; j < n; ++j) {
        const double norm0 = std::sqrt(std::abs(weighted_dot(v.col(j), v.col(j), w)));
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index i = 0; i < j; ++i) {
                const double c = weighted_dot(v.col(i), v.col(j), w);
                v.col(j) -= c * v.col(i);
                coeffs.row(j) -= c * coeffs.row(i);
            }
        }
        const double sq = weighted_dot(v.col(j), v.col(j), w);
        if (!(sq > 0.0) || !(norm0 > 0.0) || std::sqrt(sq) < 1e-13 * norm0) {
            std::ostringstream msg;
            msg << "cell basis of degree " << degree << " is numerically singular on element " << element
                << " (monomial " << j << ", relative pivot " << (sq > 0.0 && norm0 > 0.0 ? std::sqrt(sq) / norm0 : 0.0)
                << ")";
            throw ConditioningError(msg.str());
        }
        const double nrm = std::sqrt(sq);
        v.col(j) /= nrm;
        coeffs.row(j) /= nrm;
    }
    return CellBasis(element, std::move(mono), std::move(coeffs));
}

FaceSpace::FaceSpace(FaceId face, ScaledMonomials monomials, Eigen::MatrixXd coeffs,
                     std::vector<DroppedFunction> dropped, std::vector<Point> nodes, Eigen::MatrixXd node_values)
    : face_(face),
      monomials_(std::move(monomials)),
      coeffs_(std::move(coeffs)),
      dropped_(std::move(dropped)),
      nodes_(std::move(nodes)),
      node_values_(std::move(node_values))
{
}

Eigen::VectorXd FaceSpace::spanning_values(const Point& x, const Vector& normal) const
{
    const Eigen::VectorXd m = monomials_.values(x);
    const auto nm = m.size();
    Eigen::VectorXd out(1 + 2 * nm);
    out(0) = 1.0;
    out.segment(1, nm) = normal.x() * m;
    out.segment(1 + nm, nm) = normal.y() * m;
    return out;
}

Eigen::VectorXd FaceSpace::values(const Point& x, const Vector& normal) const
{
    return coeffs_ * spanning_values(x, normal);
}

Eigen::MatrixXd FaceSpace::tabulate(const EdgeRule& rule) const
{
    if (!nodes_.empty() && rule.points == nodes_) return node_values_;
    Eigen::MatrixXd span(static_cast<Eigen::Index>(rule.size()), static_cast<Eigen::Index>(spanning_size()));
    for (std::size_t q = 0; q < rule.size(); ++q) {
        span.row(static_cast<Eigen::Index>(q)) = spanning_values(rule.points[q], rule.normals[q]).transpose();
    }
    return span * coeffs_.transpose();
}

FaceSpace build_face_space(const Face& face, FaceId id, int k, const EdgeRule& rule, double threshold)
{
    if (k < 0) throw DomainError("negative face degree");
    if (rule.size() == 0) throw DomainError("empty edge rule for face " + std::to_string(id));
    const Point mid = face.curve.eval(0.5 * (face.curve.t0() + face.curve.t1())).point;
    const double scale = std::max((face.curve.start() - face.curve.end()).norm(),
                                  2.0 * std::max((face.curve.start() - mid).norm(), (face.curve.end() - mid).norm()));
    ScaledMonomials mono(mid, scale, k);
    FaceSpace probe(id, mono, Eigen::MatrixXd::Identity(1, 1), {});
    const auto ns = static_cast<Eigen::Index>(probe.spanning_size());

    Eigen::MatrixXd v(static_cast<Eigen::Index>(rule.size()), ns);
    for (std::size_t q = 0; q < rule.size(); ++q) {
        v.row(static_cast<Eigen::Index>(q)) = probe.spanning_values(rule.points[q], rule.normals[q]).transpose();
    }
    const Eigen::VectorXd w = as_vector(rule.weights);
    const Eigen::MatrixXd gram = v.transpose() * w.asDiagonal() * v;

    std::vector<DroppedFunction> dropped;
    const double dmax = gram.diagonal().maxCoeff();
    std::vector<Eigen::Index> live;
    for (Eigen::Index i = 0; i < ns; ++i) {
        if (gram(i, i) > 1e-28 * dmax) {
            live.push_back(i);
        } else {
            dropped.push_back({static_cast<std::size_t>(i), 0.0});
        }
    }

    // Rank-revealing LU on the unit-diagonal Gram matrix of the survivors,
    // with the constant (always live, index 0) pivoted first: the LU runs on
    // the Schur complement of the constant. Entries are bounded by 1, so the
    // threshold is applied in absolute terms.
    const auto nl = static_cast<Eigen::Index>(live.size());
    Eigen::MatrixXd g(nl, nl);
    for (Eigen::Index a = 0; a < nl; ++a) {
        for (Eigen::Index b = 0; b < nl; ++b) {
            const auto ia = live[static_cast<std::size_t>(a)];
            const auto ib = live[static_cast<std::size_t>(b)];
            g(a, b) = gram(ia, ib) / std::sqrt(gram(ia, ia) * gram(ib, ib));
        }
    }
    const Eigen::Index nr = nl - 1;
    const Eigen::MatrixXd schur =
        g.bottomRightCorner(nr, nr) - g.bottomLeftCorner(nr, 1) * g.topRightCorner(1, nr);
    std::vector<Eigen::Index> keep{0};
    if (nr > 0) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(schur);
        const double smax = schur.cwiseAbs().maxCoeff();
        lu.setThreshold(smax > 0.0 ? std::min(1.0, threshold / smax) : 1.0);
        const Eigen::Index rank = smax > 0.0 ? lu.rank() : 0;
        const Eigen::MatrixXd u = lu.matrixLU().triangularView<Eigen::Upper>();
        for (Eigen::Index r = 0; r < nr; ++r) {
            const Eigen::Index col = lu.permutationQ().indices()(r);
            const auto orig = live[static_cast<std::size_t>(col + 1)];
            if (r < rank) {
                keep.push_back(orig);
            } else {
                dropped.push_back({static_cast<std::size_t>(orig), std::abs(u(r, r))});
            }
        }
    }
    std::sort(keep.begin(), keep.end());

    // Weighted Gram-Schmidt (two passes) over the kept spanning functions.
    const double gs_tol = std::sqrt(threshold);
    std::vector<Eigen::VectorXd> cols;
    std::vector<Eigen::VectorXd> combos;
    for (const Eigen::Index s : keep) {
        Eigen::VectorXd c = v.col(s);
        Eigen::VectorXd a = Eigen::VectorXd::Zero(ns);
        a(s) = 1.0;
        const double n0 = std::sqrt(weighted_dot(c, c, w));
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t i = 0; i < cols.size(); ++i) {
                const double p = weighted_dot(cols[i], c, w);
                c -= p * cols[i];
                a -= p * combos[i];
            }
        }
        const double nrm = std::sqrt(std::max(0.0, weighted_dot(c, c, w)));
        if (!(n0 > 0.0) || nrm <= gs_tol * n0) {
            dropped.push_back({static_cast<std::size_t>(s), n0 > 0.0 ? nrm / n0 : 0.0});
            continue;
        }
        cols.push_back(c / nrm);
        combos.push_back(a / nrm);
    }

    Eigen::MatrixXd coeffs(static_cast<Eigen::Index>(combos.size()), ns);
    Eigen::MatrixXd node_values(v.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < combos.size(); ++i) {
        coeffs.row(static_cast<Eigen::Index>(i)) = combos[i].transpose();
        node_values.col(static_cast<Eigen::Index>(i)) = cols[i];
    }
    std::sort(dropped.begin(), dropped.end(),
              [](const DroppedFunction& a, const DroppedFunction& b) { return a.spanning_index < b.spanning_index; });
    return FaceSpace(id, std::move(mono), std::move(coeffs), std::move(dropped), rule.points, std::move(node_values));
}

Eigen::VectorXd l2_project_cell(const ScalarField& f, const CellBasis& basis, const ElemRule& rule)
{
    Eigen::VectorXd fv(static_cast<Eigen::Index>(rule.size()));
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const double val = f(rule.points[q]);
        if (!std::isfinite(val)) throw EvaluationError("non-finite value in cell projection");
        fv(static_cast<Eigen::Index>(q)) = val * rule.weights[q];
    }
    return basis.tabulate(rule.points).values.transpose() * fv;
}

Eigen::VectorXd l2_project_face(const ScalarField& f, const FaceSpace& space, const EdgeRule& rule)
{
    Eigen::VectorXd fv(static_cast<Eigen::Index>(rule.size()));
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const double val = f(rule.points[q]);
        if (!std::isfinite(val)) throw EvaluationError("non-finite value in face projection");
        fv(static_cast<Eigen::Index>(q)) = val * rule.weights[q];
    }
    return space.tabulate(rule).transpose() * fv;
}

Eigen::VectorXd elliptic_project(const ScalarField& f, const VectorField& grad_f, const CellBasis& basis,
                                 const Eigen::Matrix2d& K, const ElemRule& rule)
{
    const BasisTable t = basis.tabulate(rule.points);
    const auto n = static_cast<Eigen::Index>(basis.size());
    const auto np = static_cast<Eigen::Index>(rule.size());
    const Eigen::VectorXd w = as_vector(rule.weights);

    Eigen::VectorXd fx(np);
    Eigen::VectorXd fy(np);
    Eigen::VectorXd fv(np);
    for (Eigen::Index q = 0; q < np; ++q) {
        const Point& x = rule.points[static_cast<std::size_t>(q)];
        const Vector g = K * grad_f(x);
        fv(q) = f(x);
        fx(q) = g.x();
        fy(q) = g.y();
        if (!std::isfinite(fv(q)) || !g.allFinite()) throw EvaluationError("non-finite value in elliptic projection");
    }
    // K-weighted gradients of the basis.
    const Eigen::MatrixXd kx = K(0, 0) * t.dx + K(0, 1) * t.dy;
    const Eigen::MatrixXd ky = K(1, 0) * t.dx + K(1, 1) * t.dy;

    Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(n + 1, n + 1);
    sys.topLeftCorner(n, n) = t.dx.transpose() * w.asDiagonal() * kx + t.dy.transpose() * w.asDiagonal() * ky;
    const Eigen::VectorXd mean = t.values.transpose() * w;
    sys.block(0, n, n, 1) = mean;
    sys.block(n, 0, 1, n) = mean.transpose();
    Eigen::VectorXd rhs(n + 1);
    rhs.head(n) = t.dx.transpose() * (w.array() * fx.array()).matrix() +
                  t.dy.transpose() * (w.array() * fy.array()).matrix();
    rhs(n) = w.dot(fv);

    Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
    if (lu.rank() < n + 1) {
        throw ConditioningError("elliptic projection system is singular on element " +
                                std::to_string(basis.element()));
    }
    return lu.solve(rhs).head(n);
}

void write_face_space_report(std::ostream& os, const std::vector<FaceSpace>& spaces)
{
    os << "face degree dimension spanning dropped\n";
    for (const FaceSpace& s : spaces) {
        os << s.face() << ' ' << s.degree() << ' ' << s.dimension() << ' ' << s.spanning_size() << ' ';
        if (s.dropped().empty()) os << '-';
        for (std::size_t i = 0; i < s.dropped().size(); ++i) {
            if (i) os << ',';
            os << s.dropped()[i].spanning_index << ':' << std::setprecision(3) << s.dropped()[i].pivot;
        }
        os << '\n';
    }
}

} // namespace curvedhho
