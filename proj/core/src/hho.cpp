#include "curvedhho/hho.hpp"

#include "curvedhho/errors.hpp"
#include "parallel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace curvedhho {

DiffusionTensor::DiffusionTensor(const Eigen::Matrix2d& K) : K_(K)
{
    if (!K.allFinite()) throw DomainError("diffusion tensor has non-finite entries");
    const double scale = K.cwiseAbs().maxCoeff();
    if (std::abs(K(0, 1) - K(1, 0)) > 1e-14 * std::max(scale, 1.0)) {
        throw DomainError("diffusion tensor is not symmetric");
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(K);
    lmin_ = eig.eigenvalues()(0);
    lmax_ = eig.eigenvalues()(1);
    if (!(lmin_ > 0.0)) throw DomainError("diffusion tensor is not positive definite");
}

const DiffusionTensor& Diffusion::at(int region) const
{
    const auto it = regions_.find(region);
    return it == regions_.end() ? fallback_ : it->second;
}

Discretization::Discretization(Mesh mesh, int k, QuadratureOptions options)
    : mesh_(std::move(mesh)), k_(k), options_(options)
{
    if (k < 0) throw DomainError("polynomial degree must be non-negative");
    const Rule1D edge_base = gauss_legendre(options_.edge_points);
    const Rule1D radial = gauss_legendre(options_.radial_points);

    const std::size_t nf = mesh_.num_faces();
    edge_rules_.resize(nf);
    face_spaces_.resize(nf);
    detail::parallel_for(nf, [&](std::size_t f) {
        edge_rules_[f] = curvedhho::edge_rule(mesh_.face(f), f, edge_base);
        face_spaces_[f] = build_face_space(mesh_.face(f), f, k_, edge_rules_[f], options_.rank_threshold);
        if (face_spaces_[f].dimension() == 0) {
            throw StructuralError("empty face space on face " + std::to_string(f));
        }
    });

    const std::size_t ne = mesh_.num_elements();
    elem_rules_.resize(ne);
    cell_bases_.resize(ne);
    detail::parallel_for(ne, [&](std::size_t e) {
        const Element& el = mesh_.element(e);
        std::vector<EdgeRule> loop;
        loop.reserve(el.faces.size());
        for (const FaceUse& use : el.faces) loop.push_back(edge_rules_[use.face]);
        const Point base = mesh_.vertices().at(choose_base_vertex(mesh_, e));
        elem_rules_[e] = curvedhho::element_rule(mesh_, e, loop, radial, base);
        cell_bases_[e] = build_cell_basis(mesh_, e, k_ + 1, elem_rules_[e]);
    });
}

std::size_t Discretization::local_size(ElementId e) const
{
    std::size_t n = cell_dim();
    for (const FaceUse& use : mesh_.element(e).faces) n += face_dim(use.face);
    return n;
}

std::vector<std::size_t> Discretization::local_face_offsets(ElementId e) const
{
    std::vector<std::size_t> out;
    std::size_t off = cell_dim();
    for (const FaceUse& use : mesh_.element(e).faces) {
        out.push_back(off);
        off += face_dim(use.face);
    }
    return out;
}

double Discretization::normal_sign(ElementId e, std::size_t local_face) const
{
    const FaceUse& use = mesh_.element(e).faces.at(local_face);
    return (use.reversed ? -1.0 : 1.0) * static_cast<double>(mesh_.face(use.face).normal_orientation);
}

namespace {

Eigen::VectorXd weights_of(const std::vector<double>& w)
{
    return Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
}

struct FaceTables {
    FaceId face;
    Eigen::Index offset;
    Eigen::Index dim;
    double sign;               // n_T = sign * n_F
    Eigen::VectorXd weights;
    Eigen::VectorXd knn;       // K n . n at each node
    Eigen::MatrixXd chi;       // face basis at nodes
    Eigen::MatrixXd phi;       // cell basis at nodes
    Eigen::MatrixXd flux;      // (K grad phi) . n_T at nodes
};

std::vector<FaceTables> face_tables(const Discretization& disc, ElementId e, const Eigen::Matrix2d& K)
{
    const Element& el = disc.mesh().element(e);
    const CellBasis& basis = disc.cell_basis(e);
    const std::vector<std::size_t> offsets = disc.local_face_offsets(e);
    std::vector<FaceTables> out;
    out.reserve(el.faces.size());
    for (std::size_t l = 0; l < el.faces.size(); ++l) {
        const FaceId f = el.faces[l].face;
        const EdgeRule& rule = disc.edge_rule(f);
        FaceTables t;
        t.face = f;
        t.offset = static_cast<Eigen::Index>(offsets[l]);
        t.dim = static_cast<Eigen::Index>(disc.face_dim(f));
        t.sign = disc.normal_sign(e, l);
        t.weights = weights_of(rule.weights);
        t.chi = disc.face_space(f).tabulate(rule);
        const BasisTable bt = basis.tabulate(rule.points);
        t.phi = bt.values;
        const auto nq = static_cast<Eigen::Index>(rule.size());
        t.knn.resize(nq);
        Eigen::VectorXd ax(nq);
        Eigen::VectorXd ay(nq);
        for (Eigen::Index q = 0; q < nq; ++q) {
            const Vector n = t.sign * rule.normals[static_cast<std::size_t>(q)];
            const Vector kn = K * n;
            t.knn(q) = n.dot(kn);
            ax(q) = kn.x();
            ay(q) = kn.y();
        }
        // (K grad phi).n = grad phi . (K n) for symmetric K.
        t.flux = ax.asDiagonal() * bt.dx + ay.asDiagonal() * bt.dy;
        out.push_back(std::move(t));
    }
    return out;
}

Eigen::MatrixXd gram_from_table(const BasisTable& t, const Eigen::VectorXd& w, const Eigen::Matrix2d& K)
{
    const Eigen::MatrixXd kx = K(0, 0) * t.dx + K(0, 1) * t.dy;
    const Eigen::MatrixXd ky = K(1, 0) * t.dx + K(1, 1) * t.dy;
    Eigen::MatrixXd g = t.dx.transpose() * w.asDiagonal() * kx + t.dy.transpose() * w.asDiagonal() * ky;
    return 0.5 * (g + g.transpose());
}

Eigen::MatrixXd reconstruction_impl(const Discretization& disc, ElementId e, const Eigen::Matrix2d& K,
                                    const BasisTable& cell, const Eigen::MatrixXd& G,
                                    const std::vector<FaceTables>& faces)
{
    const ElemRule& rule = disc.element_rule(e);
    const Eigen::VectorXd w = weights_of(rule.weights);
    const auto nr = static_cast<Eigen::Index>(disc.recon_dim());
    const auto nc = static_cast<Eigen::Index>(disc.cell_dim());
    const auto nl = static_cast<Eigen::Index>(disc.local_size(e));

    // div(K grad phi_i) at the element nodes.
    const Eigen::MatrixXd div = K(0, 0) * cell.dxx + (K(0, 1) + K(1, 0)) * cell.dxy + K(1, 1) * cell.dyy;

    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nr + 1, nl);
    rhs.block(0, 0, nr, nc) = -div.transpose() * w.asDiagonal() * cell.values.leftCols(nc);
    for (const FaceTables& ft : faces) {
        rhs.block(0, ft.offset, nr, ft.dim) += ft.flux.transpose() * ft.weights.asDiagonal() * ft.chi;
    }
    const Eigen::VectorXd mean = cell.values.transpose() * w;
    rhs.block(nr, 0, 1, nc) = mean.head(nc).transpose();

    Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(nr + 1, nr + 1);
    sys.topLeftCorner(nr, nr) = G;
    sys.block(0, nr, nr, 1) = mean;
    sys.block(nr, 0, 1, nr) = mean.transpose();

    Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
    if (lu.rank() < nr + 1) {
        throw ConditioningError("potential reconstruction system is singular on element " + std::to_string(e));
    }
    return lu.solve(rhs).topRows(nr);
}

Eigen::MatrixXd stabilisation_impl(const Discretization& disc, ElementId e, const Eigen::MatrixXd& G,
                                   const Eigen::MatrixXd& P, const std::vector<FaceTables>& faces)
{
    const auto nc = static_cast<Eigen::Index>(disc.cell_dim());
    const double hT = disc.mesh().element(e).diameter;

    // Cell difference: truncation of P v is its L2 projection on P^k.
    Eigen::MatrixXd dT = -P.topRows(nc);
    dT.leftCols(nc) += Eigen::MatrixXd::Identity(nc, nc);
    Eigen::MatrixXd S = dT.transpose() * G.topLeftCorner(nc, nc) * dT;

    for (const FaceTables& ft : faces) {
        const Eigen::MatrixXd proj = ft.chi.transpose() * ft.weights.asDiagonal() * ft.phi; // pi_F on phi
        Eigen::MatrixXd dF = -proj * P;
        dF.block(0, ft.offset, ft.dim, ft.dim) += Eigen::MatrixXd::Identity(ft.dim, ft.dim);
        const Eigen::VectorXd wk = ft.weights.cwiseProduct(ft.knn);
        const Eigen::MatrixXd M = ft.chi.transpose() * wk.asDiagonal() * ft.chi;
        S += (dF.transpose() * M * dF) / hT;
    }
    return 0.5 * (S + S.transpose());
}

} // namespace

LocalDofs interpolate(const Discretization& disc, ElementId e, const ScalarField& v)
{
    const Element& el = disc.mesh().element(e);
    LocalDofs out(static_cast<Eigen::Index>(disc.local_size(e)));
    const auto nc = static_cast<Eigen::Index>(disc.cell_dim());
    out.head(nc) = l2_project_cell(v, disc.cell_basis(e), disc.element_rule(e)).head(nc);
    const std::vector<std::size_t> offsets = disc.local_face_offsets(e);
    for (std::size_t l = 0; l < el.faces.size(); ++l) {
        const FaceId f = el.faces[l].face;
        out.segment(static_cast<Eigen::Index>(offsets[l]), static_cast<Eigen::Index>(disc.face_dim(f))) =
            l2_project_face(v, disc.face_space(f), disc.edge_rule(f));
    }
    return out;
}

Eigen::MatrixXd gradient_gram(const Discretization& disc, ElementId e, const Eigen::Matrix2d& K)
{
    const ElemRule& rule = disc.element_rule(e);
    return gram_from_table(disc.cell_basis(e).tabulate(rule.points), weights_of(rule.weights), K);
}

Eigen::MatrixXd potential_reconstruction(const Discretization& disc, ElementId e, const Eigen::Matrix2d& K)
{
    const ElemRule& rule = disc.element_rule(e);
    const BasisTable cell = disc.cell_basis(e).tabulate(rule.points, true);
    const Eigen::MatrixXd G = gram_from_table(cell, weights_of(rule.weights), K);
    return reconstruction_impl(disc, e, K, cell, G, face_tables(disc, e, K));
}

Eigen::MatrixXd stabilisation(const Discretization& disc, ElementId e, const Eigen::Matrix2d& K,
                              const Eigen::MatrixXd& P)
{
    return stabilisation_impl(disc, e, gradient_gram(disc, e, K), P, face_tables(disc, e, K));
}

LocalOperators local_stiffness(const Discretization& disc, ElementId e, const Eigen::Matrix2d& K)
{
    const ElemRule& rule = disc.element_rule(e);
    const BasisTable cell = disc.cell_basis(e).tabulate(rule.points, true);
    LocalOperators ops;
    ops.gradient_gram = gram_from_table(cell, weights_of(rule.weights), K);
    const std::vector<FaceTables> faces = face_tables(disc, e, K);
    ops.reconstruction = reconstruction_impl(disc, e, K, cell, ops.gradient_gram, faces);
    ops.stabilisation = stabilisation_impl(disc, e, ops.gradient_gram, ops.reconstruction, faces);
    const Eigen::MatrixXd consistent = ops.reconstruction.transpose() * ops.gradient_gram * ops.reconstruction;
    ops.stiffness = 0.5 * (consistent + consistent.transpose()) + ops.stabilisation;
    return ops;
}

std::vector<LocalOperators> build_local_operators(const Discretization& disc, const Diffusion& diffusion)
{
    std::vector<LocalOperators> ops(disc.mesh().num_elements());
    detail::parallel_for(ops.size(), [&](std::size_t e) {
        ops[e] = local_stiffness(disc, e, diffusion.matrix(disc.mesh(), e));
    });
    return ops;
}

double local_seminorm_squared(const Discretization& disc, ElementId e, const LocalDofs& v, const Eigen::Matrix2d& K)
{
    if (v.size() != static_cast<Eigen::Index>(disc.local_size(e))) {
        throw ContractError("local DOF vector has the wrong length for element " + std::to_string(e));
    }
    const auto nc = static_cast<Eigen::Index>(disc.cell_dim());
    const Eigen::MatrixXd G = gradient_gram(disc, e, K);
    const Eigen::VectorXd vT = v.head(nc);
    double value = vT.dot(G.topLeftCorner(nc, nc) * vT);
    const double hT = disc.mesh().element(e).diameter;
    for (const FaceTables& ft : face_tables(disc, e, K)) {
        const Eigen::VectorXd diff = ft.chi * v.segment(ft.offset, ft.dim) - ft.phi.leftCols(nc) * vT;
        value += (ft.weights.cwiseProduct(ft.knn).cwiseProduct(diff).cwiseProduct(diff)).sum() / hT;
    }
    return value;
}

void write_local_operators(std::ostream& os, ElementId e, const LocalOperators& ops)
{
    const Eigen::IOFormat fmt(Eigen::FullPrecision, Eigen::DontAlignCols, " ", "\n");
    os << std::setprecision(17);
    os << "ELEMENT " << e << '\n';
    os << "P " << ops.reconstruction.rows() << ' ' << ops.reconstruction.cols() << '\n'
       << ops.reconstruction.format(fmt) << '\n';
    os << "S " << ops.stabilisation.rows() << ' ' << ops.stabilisation.cols() << '\n'
       << ops.stabilisation.format(fmt) << '\n';
    os << "A " << ops.stiffness.rows() << ' ' << ops.stiffness.cols() << '\n' << ops.stiffness.format(fmt) << '\n';
}

} // namespace curvedhho
