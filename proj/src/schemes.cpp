#include "apfv/schemes.hpp"

#include <map>
#include <tuple>

namespace apfv {

FluxKind flux_from_string(const std::string& s)
{
    if (s == "jlb+upwind" || s == "upwind") return FluxKind::Upwind;
    if (s == "jlb+rusanov" || s == "rusanov") return FluxKind::Rusanov;
    throw Error(Errc::InvalidConfig, "unknown scheme '" + s + "'");
}

BoundaryKind boundary_from_string(const std::string& s)
{
    if (s == "periodic") return BoundaryKind::Periodic;
    if (s == "reflective") return BoundaryKind::Reflective;
    if (s == "vacuum") return BoundaryKind::Vacuum;
    throw Error(Errc::UnsupportedBC, "unknown boundary condition '" + s + "'");
}

std::string to_string(FluxKind f) { return f == FluxKind::Upwind ? "jlb+upwind" : "jlb+rusanov"; }

std::string to_string(BoundaryKind b)
{
    switch (b) {
    case BoundaryKind::Periodic: return "periodic";
    case BoundaryKind::Reflective: return "reflective";
    case BoundaryKind::Vacuum: return "vacuum";
    }
    return "?";
}

namespace {

Mat2 reflection(const Vec2& nu) { return Mat2::Identity() - 2.0 * nu * nu.transpose(); }

void require_bc_fits(const Mesh& mesh, BoundaryKind bc)
{
    if (bc != BoundaryKind::Periodic) return;
    for (const auto& e : mesh.edges())
        if (e.boundary())
            throw Error(Errc::UnsupportedBC, "periodic boundary conditions need a fully periodic mesh");
}

} // namespace

std::vector<Mat2> node_mirrors(const Mesh& mesh, int node)
{
    std::vector<Vec2> normals;
    for (int e : mesh.node_boundary_edges(node)) {
        const Vec2& nu = mesh.edges()[size_t(e)].normal;
        bool seen = false;
        for (const auto& m : normals) seen = seen || (m - nu).norm() < 1e-10;
        if (!seen) normals.push_back(nu);
    }
    if (normals.empty()) return {};
    if (normals.size() == 1) return {reflection(normals[0])};
    if (normals.size() == 2) {
        const Mat2 s1 = reflection(normals[0]), s2 = reflection(normals[1]);
        return {s1, s2, s2 * s1};
    }
    throw Error(Errc::UnsupportedBC, "node " + std::to_string(node) + " touches more than two boundary directions");
}

// ---------------------------------------------------------------------------

JlbOperator::JlbOperator(const Mesh& mesh, double a, double lambda, const Coefficients& coeffs, BoundaryKind bc)
    : mesh_(mesh), a_(a), eps_(coeffs.epsilon)
{
    require_bc_fits(mesh, bc);
    const int nn = mesh.num_nodes();
    m_.assign(size_t(nn), Mat2::Identity());
    a_sum_.assign(size_t(nn), Mat2::Zero());
    w_offset_.assign(size_t(nn) + 1, 0);

    for (int r = 0; r < nn; ++r) {
        const auto cells = mesh.node_cells(r);
        if (cells.empty()) {
            w_offset_[size_t(r) + 1] = int(w_.size());
            continue;
        }
        Mat2 ar = Mat2::Zero(), br = Mat2::Zero();
        double sigma = 0.0;
        for (const auto& nc : cells) {
            const Corner& c = mesh.corners(nc.cell)[size_t(nc.corner)];
            ar += c.ln * c.normal.transpose();
            br += c.ln * c.arm.transpose();
            sigma += coeffs.sigma(nc.cell);
        }
        sigma /= double(cells.size());

        const auto mirrors = node_mirrors(mesh, r);
        Mat2 lift = Mat2::Identity(); // maps real-cell data onto real + image contributions
        {
            const Mat2 a0 = ar, b0 = br;
            for (const auto& t : mirrors) {
                ar += t * a0 * t.transpose();
                br += t * b0 * t.transpose();
                lift += t;
            }
        }
        if (bc == BoundaryKind::Vacuum) lift = Mat2::Identity();

        const Eigen::SelfAdjointEigenSolver<Mat2> es(0.5 * (ar + ar.transpose()));
        const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
        const double lmin = es.eigenvalues().minCoeff();
        if (!(lmin > 0.0) || lmax > 1e12 * lmin)
            throw Error(Errc::SingularNodeMatrix, "A_r singular at node " + std::to_string(r));

        const Mat2 lhs = ar + (sigma * lambda / (a * eps_)) * br;
        const double det = lhs.determinant();
        if (!(std::abs(det) > 1e-24 * lhs.squaredNorm()))
            throw Error(Errc::SingularNodeMatrix, "node matrix singular at node " + std::to_string(r));
        m_[size_t(r)] = lhs.inverse() * ar;
        a_sum_[size_t(r)] = ar;

        const Mat2 ainv_lift = ar.inverse() * lift;
        for (const auto& nc : cells) {
            const Corner& c = mesh.corners(nc.cell)[size_t(nc.corner)];
            Eigen::Matrix<double, 2, 3> w;
            w.col(0) = c.ln;
            w.rightCols<2>() = c.ln * c.normal.transpose();
            w_.push_back({nc.cell, ainv_lift * w});
        }
        w_offset_[size_t(r) + 1] = int(w_.size());
    }

    k_.assign(size_t(mesh.num_cells()), Mat2::Zero());
    for (int j = 0; j < mesh.num_cells(); ++j) {
        const double kappa = a_ / (eps_ * mesh.area(j));
        for (const auto& c : mesh.corners(j))
            k_[size_t(j)] += kappa * (c.ln * c.normal.transpose()) * (Mat2::Identity() - m_[size_t(c.node)]);
    }
}

Vec2 JlbOperator::node_velocity(int r, const Field& v) const
{
    Vec2 u = Vec2::Zero();
    for (int k = w_offset_[size_t(r)]; k < w_offset_[size_t(r) + 1]; ++k) {
        const auto& w = w_[size_t(k)];
        u += w.w * v.col(w.cell).head<3>();
    }
    return u;
}

void JlbOperator::node_velocities(const Field& v, std::vector<Vec2>& mu) const
{
    mu.resize(size_t(mesh_.num_nodes()));
    for (int r = 0; r < mesh_.num_nodes(); ++r) mu[size_t(r)] = m_[size_t(r)] * node_velocity(r, v);
}

void JlbOperator::apply_fluxes(const Field& v, Field& out) const
{
    std::vector<Vec2> mu;
    node_velocities(v, mu);
    for (int j = 0; j < mesh_.num_cells(); ++j) {
        const double kappa = a_ / (eps_ * mesh_.area(j));
        const Vec2 uj = v.col(j).segment<2>(1);
        double dp = 0.0;
        Vec2 du = Vec2::Zero();
        for (const auto& c : mesh_.corners(j)) {
            const Vec2& m = mu[size_t(c.node)];
            const Mat2 alpha = c.ln * c.normal.transpose();
            dp += c.ln.dot(m);
            du += alpha * (m - m_[size_t(c.node)] * uj);
        }
        out(0, j) -= kappa * dp;
        out.col(j).segment<2>(1) += kappa * du;
    }
}

void JlbOperator::apply(const Field& v, Field& out) const
{
    apply_fluxes(v, out);
    for (int j = 0; j < mesh_.num_cells(); ++j)
        out.col(j).segment<2>(1) -= k_[size_t(j)] * v.col(j).segment<2>(1);
}

void JlbOperator::add_triplets(std::vector<Triplet>& t, int n) const
{
    for (int j = 0; j < mesh_.num_cells(); ++j) {
        const double kappa = a_ / (eps_ * mesh_.area(j));
        const int row = j * n;
        Mat2 diag = Mat2::Zero(); // coefficient of u_j in du_j
        for (const auto& c : mesh_.corners(j)) {
            const int r = c.node;
            const Mat2& m = m_[size_t(r)];
            const Mat2 alpha = c.ln * c.normal.transpose();
            diag -= kappa * alpha;
            // rows: dp_j (1) and du_j (2); columns through M_r u_r
            Eigen::Matrix<double, 3, 2> rows;
            rows.row(0) = -kappa * c.ln.transpose() * m;
            rows.bottomRows<2>() = kappa * alpha * m;
            for (int k = w_offset_[size_t(r)]; k < w_offset_[size_t(r) + 1]; ++k) {
                const auto& w = w_[size_t(k)];
                const Eigen::Matrix3d blk = rows * w.w;
                const int col = w.cell * n;
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b)
                        if (blk(a, b) != 0.0) t.emplace_back(row + a, col + b, blk(a, b));
            }
        }
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                if (diag(a, b) != 0.0) t.emplace_back(row + 1 + a, row + 1 + b, diag(a, b));
    }
}

// ---------------------------------------------------------------------------

namespace {

// Pool of per-edge flux matrices keyed by the data they depend on, so meshes
// with few distinct normals store few matrices.
struct FluxPool {
    std::map<std::tuple<double, double, double>, int> index;
    std::vector<Matrix> left, right;
};

} // namespace

EdgeFluxOperator::EdgeFluxOperator(const Mesh& mesh, const Decomposition& dec, const Coefficients& coeffs,
                                   SchemeOptions opt, double c_o)
    : mesh_(mesh), opt_(opt), eps_(coeffs.epsilon), n_(int(dec.A1pp.rows()))
{
    require_bc_fits(mesh, opt.bc);
    trivial_ = dec.A1pp.isZero(0.0) && dec.A2pp.isZero(0.0);
    const auto edges = mesh.edges();
    const int ne = int(edges.size());
    speed_.assign(size_t(ne), 0.0);
    damping_.assign(size_t(ne), 1.0);
    ghost_index_.assign(size_t(ne), -1);
    if (trivial_) return;

    std::map<std::pair<double, double>, int> g_index;
    std::vector<Matrix> g_mat;
    std::vector<double> g_rho;
    std::vector<int> g_of_edge(static_cast<size_t>(ne));
    for (int e = 0; e < ne; ++e) {
        const Vec2& nu = edges[size_t(e)].normal;
        auto [it, fresh] = g_index.emplace(std::make_pair(nu.x(), nu.y()), int(g_mat.size()));
        if (fresh) {
            g_mat.push_back(dec.A1pp * nu.x() + dec.A2pp * nu.y());
            g_rho.push_back(spectral_radius(g_mat.back()));
        }
        g_of_edge[size_t(e)] = it->second;
        speed_[size_t(e)] = g_rho[size_t(it->second)];
    }
    if (opt.speed == SpeedRule::Global) {
        const double s = ne ? *std::max_element(speed_.begin(), speed_.end()) : 0.0;
        std::fill(speed_.begin(), speed_.end(), s);
    }

    Matrix stab = Matrix::Identity(n_, n_);
    stab(0, 0) = 0.0; // block-Rusanov: no viscosity on the kernel component

    FluxPool pool;
    std::vector<int> pair_of_edge(static_cast<size_t>(ne));
    for (int e = 0; e < ne; ++e) {
        const int g = g_of_edge[size_t(e)];
        const double s = opt.flux == FluxKind::Rusanov ? speed_[size_t(e)] : 0.0;
        auto [it, fresh] = pool.index.emplace(std::make_tuple(edges[size_t(e)].normal.x(),
                                                              edges[size_t(e)].normal.y(), s),
                                              int(pool.left.size()));
        if (fresh) {
            const Matrix& gm = g_mat[size_t(g)];
            if (opt.flux == FluxKind::Upwind) {
                auto parts = pos_neg_split(gm);
                pool.left.push_back(std::move(parts.plus));
                pool.right.push_back(std::move(parts.minus));
            } else {
                pool.left.push_back(0.5 * (gm + s * stab));
                pool.right.push_back(0.5 * (gm - s * stab));
            }
        }
        pair_of_edge[size_t(e)] = it->second;
    }

    gp_.resize(size_t(ne));
    gm_.resize(size_t(ne));
    for (int e = 0; e < ne; ++e) {
        gp_[size_t(e)] = pool.left[size_t(pair_of_edge[size_t(e)])];
        gm_[size_t(e)] = pool.right[size_t(pair_of_edge[size_t(e)])];
    }

    for (int e = 0; e < ne; ++e) {
        const Edge& ed = edges[size_t(e)];
        const double sig = ed.boundary() ? coeffs.sigma(ed.cell)
                                         : 0.5 * (coeffs.sigma(ed.cell) + coeffs.sigma(ed.neighbor));
        const double s = speed_[size_t(e)];
        damping_[size_t(e)] = s == 0.0 ? 1.0 : 2 * s * eps_ / (2 * s * eps_ + c_o * sig * ed.center_distance);

        if (!ed.boundary()) continue;
        // Boundary flux collapses to (l/eps) B V_j with V_ghost = T V_j.
        Matrix t = Matrix::Zero(n_, n_);
        if (opt.bc == BoundaryKind::Reflective) {
            t.setIdentity();
            t.block<2, 2>(1, 1) = reflection(ed.normal);
        }
        ghost_index_[size_t(e)] = int(ghost_.size());
        ghost_.push_back(gp_[size_t(e)] + gm_[size_t(e)] * t);
    }
}

void EdgeFluxOperator::apply(const Field& v, Field& out, bool damped) const
{
    if (trivial_) return;
    const auto edges = mesh_.edges();
    Vector f(n_);
    for (int e = 0; e < int(edges.size()); ++e) {
        const Edge& ed = edges[size_t(e)];
        double scale = ed.length / eps_;
        if (damped) scale *= damping_[size_t(e)];
        if (ed.boundary()) {
            f.noalias() = ghost_[size_t(ghost_index_[size_t(e)])] * v.col(ed.cell);
        } else {
            f.noalias() = gp_[size_t(e)] * v.col(ed.cell);
            f.noalias() += gm_[size_t(e)] * v.col(ed.neighbor);
        }
        out.col(ed.cell) -= (scale / mesh_.area(ed.cell)) * f;
        if (!ed.boundary()) out.col(ed.neighbor) += (scale / mesh_.area(ed.neighbor)) * f;
    }
}

void EdgeFluxOperator::add_triplets(std::vector<Triplet>& t, int n, bool damped) const
{
    if (trivial_) return;
    const auto edges = mesh_.edges();
    auto put = [&](int rcell, int ccell, const Matrix& m, double s) {
        for (int a = 0; a < n_; ++a)
            for (int b = 0; b < n_; ++b)
                if (m(a, b) != 0.0) t.emplace_back(rcell * n + a, ccell * n + b, s * m(a, b));
    };
    for (int e = 0; e < int(edges.size()); ++e) {
        const Edge& ed = edges[size_t(e)];
        double scale = ed.length / eps_;
        if (damped) scale *= damping_[size_t(e)];
        const double sj = scale / mesh_.area(ed.cell);
        if (ed.boundary()) {
            put(ed.cell, ed.cell, ghost_[size_t(ghost_index_[size_t(e)])], -sj);
            continue;
        }
        const double sk = scale / mesh_.area(ed.neighbor);
        put(ed.cell, ed.cell, gp_[size_t(e)], -sj);
        put(ed.cell, ed.neighbor, gm_[size_t(e)], -sj);
        put(ed.neighbor, ed.cell, gp_[size_t(e)], sk);
        put(ed.neighbor, ed.neighbor, gm_[size_t(e)], sk);
    }
}

// ---------------------------------------------------------------------------

namespace {
const PreparedSystem& checked(const PreparedSystem& ps)
{
    require_h2(ps.report);
    return ps;
}
} // namespace

SpatialOperator::SpatialOperator(const Mesh& mesh, const PreparedSystem& ps, const Coefficients& coeffs,
                                 SchemeOptions opt)
    : mesh_(mesh), ps_(checked(ps)), coeffs_(coeffs), opt_(opt),
      jlb_(mesh, ps.report.a, ps.report.lambda, (coeffs.check(mesh.num_cells()), coeffs), opt.bc),
      edges_(mesh, ps.dec, coeffs, opt, ps.report.lambda / (ps.report.a * ps.report.a)),
      q_(ps.spec.Q.row(0).transpose()), c_max_(max_wave_speed(ps.sys))
{
}

void SpatialOperator::add_local(const Field& v, Field& out, bool include_relaxation) const
{
    const int n = this->n();
    const double e2 = coeffs_.epsilon * coeffs_.epsilon;
    const bool absorb = coeffs_.sigma_a.size() > 0 && coeffs_.sigma_a.cwiseAbs().maxCoeff() > 0.0;
    for (int j = 0; j < mesh_.num_cells(); ++j) {
        if (include_relaxation)
            for (int i = 3; i < n; ++i) out(i, j) -= coeffs_.sigma(j) / e2 * ps_.dec.Dpp(i, i) * v(i, j);
        if (absorb && coeffs_.sigma_a(j) != 0.0) out.col(j) -= coeffs_.sigma_a(j) * q_.dot(v.col(j)) * q_;
    }
}

Field SpatialOperator::apply_linear(const Field& v) const
{
    if (v.rows() != n() || v.cols() != mesh_.num_cells())
        throw Error(Errc::DimensionMismatch, "field shape does not match operator");
    Field out = Field::Zero(v.rows(), v.cols());
    jlb_.apply(v, out);
    edges_.apply(v, out, false);
    add_local(v, out, true);
    return out;
}

Field SpatialOperator::apply(const Field& v) const { return apply_linear(v) + forcing(); }

Field SpatialOperator::forcing() const
{
    Field b = Field::Zero(n(), mesh_.num_cells());
    if (coeffs_.source.size() == 0) return b;
    for (int j = 0; j < mesh_.num_cells(); ++j)
        if (coeffs_.source(j) != 0.0) b.col(j) = coeffs_.source(j) * q_;
    return b;
}

Field SpatialOperator::apply_semi_explicit(const Field& v) const
{
    if (v.rows() != n() || v.cols() != mesh_.num_cells())
        throw Error(Errc::DimensionMismatch, "field shape does not match operator");
    Field out = forcing();
    jlb_.apply_fluxes(v, out);
    edges_.apply(v, out, true);
    add_local(v, out, false);
    return out;
}

SparseOperator SpatialOperator::assemble() const
{
    const int n = this->n();
    std::vector<Triplet> t;
    t.reserve(size_t(mesh_.num_cells()) * size_t(40 + 5 * n * n));
    jlb_.add_triplets(t, n);
    edges_.add_triplets(t, n, false);
    const double e2 = coeffs_.epsilon * coeffs_.epsilon;
    for (int j = 0; j < mesh_.num_cells(); ++j) {
        for (int i = 3; i < n; ++i) {
            const double d = coeffs_.sigma(j) / e2 * ps_.dec.Dpp(i, i);
            if (d != 0.0) t.emplace_back(j * n + i, j * n + i, -d);
        }
        if (coeffs_.sigma_a.size() > 0 && coeffs_.sigma_a(j) != 0.0)
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) {
                    const double x = coeffs_.sigma_a(j) * q_(a) * q_(b);
                    if (x != 0.0) t.emplace_back(j * n + a, j * n + b, -x);
                }
    }
    SparseOperator l(size(), size());
    l.setFromTriplets(t.begin(), t.end());
    l.makeCompressed();
    return l;
}

double max_wave_speed(const FriedrichsSystem& sys, int samples)
{
    double c = 0.0;
    for (int k = 0; k < samples; ++k) {
        const double th = 2.0 * M_PI * k / samples;
        c = std::max(c, spectral_radius(std::cos(th) * sys.A1 + std::sin(th) * sys.A2));
    }
    return c;
}

} // namespace apfv
