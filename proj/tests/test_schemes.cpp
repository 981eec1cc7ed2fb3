#include <doctest.h>

#include "apfv/models.hpp"
#include "apfv/schemes.hpp"

#include <map>

using namespace apfv;

namespace {

const double s2 = 1.0 / std::sqrt(2.0);

GridOptions periodic(Rect d = {})
{
    GridOptions o;
    o.domain = d;
    o.periodic_x = o.periodic_y = true;
    return o;
}

std::vector<Mesh> periodic_meshes(int n)
{
    std::vector<Mesh> out;
    for (const char* kind : {"cartesian", "random_quad", "smooth", "kershaw", "triangular", "random_triangular"})
        out.push_back(build_mesh(kind, n, n, 7, periodic()));
    return out;
}

std::vector<Mesh> bounded_meshes(int n)
{
    std::vector<Mesh> out;
    for (const char* kind : {"cartesian", "random_quad", "smooth", "kershaw", "triangular", "random_triangular"})
        out.push_back(build_mesh(kind, n, n, 7));
    return out;
}

Field random_field(int n, int cells, std::uint64_t seed)
{
    Rng rng(seed);
    Field f(n, cells);
    for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = rng.uniform(-1, 1);
    return f;
}

Coefficients random_coeffs(int cells, double eps, std::uint64_t seed, bool absorb)
{
    Rng rng(seed);
    Coefficients c = Coefficients::uniform(cells, eps, 1.0);
    for (int j = 0; j < cells; ++j) {
        c.sigma(j) = rng.uniform(0.5, 2.0);
        if (absorb) c.sigma_a(j) = rng.uniform(0.0, 1.0);
    }
    return c;
}

int node_at(const Mesh& m, const Vec2& x)
{
    for (int r = 0; r < m.num_nodes(); ++r)
        if ((m.node(r) - x).norm() < 1e-12) return r;
    FAIL("node not found");
    return -1;
}

// Limit diffusion scheme on coarse grids, written from cell vertex lists only:
// |Omega_j| dp_j/dt = -(a^2/(sigma lambda)) sum_r l n . u_r,  B_r u_r = sum_j l n p_j.
Vector limit_diffusion(const Mesh& m, const Vector& p, double a, double sigma, double lambda)
{
    std::vector<Mat2> b(size_t(m.num_nodes()), Mat2::Zero());
    std::vector<Vec2> rhs(size_t(m.num_nodes()), Vec2::Zero());
    auto for_corners = [&](auto&& f) {
        for (int j = 0; j < m.num_cells(); ++j) {
            const auto v = m.vertices(j);
            const auto ids = m.cell_nodes(j);
            Vec2 xc = Vec2::Zero();
            for (const auto& x : v) xc += x;
            xc /= double(v.size());
            const size_t k = v.size();
            for (size_t i = 0; i < k; ++i) {
                const Vec2 d = v[(i + 1) % k] - v[(i + k - 1) % k];
                f(j, ids[i], Vec2(0.5 * d.y(), -0.5 * d.x()), Vec2(v[i] - xc));
            }
        }
    };
    for_corners([&](int j, int r, const Vec2& ln, const Vec2& arm) {
        b[size_t(r)] += ln * arm.transpose();
        rhs[size_t(r)] += ln * p(j);
    });
    std::vector<Vec2> u(size_t(m.num_nodes()));
    for (size_t r = 0; r < u.size(); ++r) u[r] = b[r].fullPivLu().solve(rhs[r]);
    Vector dp = Vector::Zero(m.num_cells());
    for_corners([&](int j, int r, const Vec2& ln, const Vec2&) {
        dp(j) -= a * a / (sigma * lambda) * ln.dot(u[size_t(r)]) / m.area(j);
    });
    return dp;
}

} // namespace

TEST_CASE("scheme and boundary names")
{
    CHECK(flux_from_string("jlb+upwind") == FluxKind::Upwind);
    CHECK(flux_from_string("jlb+rusanov") == FluxKind::Rusanov);
    CHECK(to_string(FluxKind::Rusanov) == "jlb+rusanov");
    CHECK(boundary_from_string("reflective") == BoundaryKind::Reflective);
    CHECK(to_string(BoundaryKind::Vacuum) == "vacuum");
    CHECK_THROWS_AS(flux_from_string("glace"), Error);
}

TEST_CASE("mirrors")
{
    const Mesh m = build_cartesian(3, 3);
    CHECK(node_mirrors(m, node_at(m, Vec2(1.0 / 3, 1.0 / 3))).empty());
    const auto side = node_mirrors(m, node_at(m, Vec2(1.0 / 3, 0)));
    REQUIRE(side.size() == 1);
    CHECK((side[0] - Mat2(Eigen::Vector2d(1, -1).asDiagonal())).norm() < 1e-15);
    const auto corner = node_mirrors(m, node_at(m, Vec2(0, 0)));
    REQUIRE(corner.size() == 3);
    CHECK((corner[2] + Mat2::Identity()).norm() < 1e-15);
}

TEST_CASE("node velocity")
{
    const Mesh m = build_cartesian(2, 2, {Rect{0, 0, 2, 2}});
    const int r = node_at(m, Vec2(1, 1));
    const JlbOperator op(m, 1.0, 1.0, Coefficients::uniform(4, 1.0, 0.0), BoundaryKind::Vacuum);

    Field v = Field::Zero(3, 4);
    v.row(0).setConstant(2.5);
    CHECK(op.node_velocity(r, v).norm() < 1e-15);

    v.setZero();
    v.row(1).setConstant(0.3);
    v.row(2).setConstant(-0.7);
    CHECK((op.node_velocity(r, v) - Vec2(0.3, -0.7)).norm() < 1e-15);

    // Only the lower-left square carries p = 1. Its corner at (1,1) has
    // l n = (1/2, 1/2); the four corners give A_r = sqrt(2) I.
    const int ll = m.locate(Vec2(0.5, 0.5));
    v.setZero();
    v(0, ll) = 1.0;
    CHECK((op.node_alpha(r) - std::sqrt(2.0) * Mat2::Identity()).norm() < 1e-14);
    const Vec2 expect = Vec2(0.5, 0.5) / std::sqrt(2.0);
    CHECK((op.node_velocity(r, v) - expect).norm() < 1e-15);
}

TEST_CASE("without scattering M_r = I and the relaxation vanishes")
{
    for (const auto& m : bounded_meshes(8)) {
        const JlbOperator op(m, 0.8, 1.0, Coefficients::uniform(m.num_cells(), 1.0, 0.0), BoundaryKind::Reflective);
        for (int r = 0; r < m.num_nodes(); ++r) CHECK((op.node_matrix(r) - Mat2::Identity()).norm() < 1e-14);
        for (int j = 0; j < m.num_cells(); ++j) CHECK(op.cell_relaxation(j).norm() < 1e-13);
    }
}

TEST_CASE("M_r shrinks as eps goes to zero")
{
    const Mesh m = build_cartesian(8, 8, periodic());
    double prev = 1e300;
    for (double eps : {1.0, 1e-2, 1e-4, 1e-6}) {
        const JlbOperator op(m, 1.0, 1.0, Coefficients::uniform(m.num_cells(), eps, 1.0), BoundaryKind::Periodic);
        const double nrm = op.node_matrix(10).norm();
        CHECK(nrm < prev);
        prev = nrm;
    }
    CHECK(prev < 1e-4);
}

TEST_CASE("uniform pressure is a steady state of the nodal scheme")
{
    for (const auto& m : periodic_meshes(8)) {
        const JlbOperator op(m, 1.0, 1.0, random_coeffs(m.num_cells(), 1e-3, 3, false), BoundaryKind::Periodic);
        Field v = Field::Zero(3, m.num_cells());
        v.row(0).setConstant(1.7);
        Field out = Field::Zero(3, m.num_cells());
        op.apply(v, out);
        CHECK(out.cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("pressure update at small eps matches the limit diffusion scheme")
{
    const double eps = 1e-7, sigma = 1.0;
    const auto cart = build_cartesian(50, 50, periodic());
    const auto kersh = build_kershaw(48, 50, periodic());
    for (const Mesh* m : {&cart, &kersh}) {
        const JlbOperator op(*m, 1.0, 1.0, Coefficients::uniform(m->num_cells(), eps, sigma), BoundaryKind::Periodic);
        Field v = Field::Zero(3, m->num_cells());
        for (int j = 0; j < m->num_cells(); ++j) {
            const Vec2 d = m->center(j) - Vec2(0.5, 0.5);
            v(0, j) = std::exp(-d.squaredNorm() / 0.02);
        }
        Field out = Field::Zero(3, m->num_cells());
        op.apply(v, out);
        const Vector oracle = limit_diffusion(*m, v.row(0).transpose(), 1.0, sigma, 1.0);
        const double rel = (out.row(0).transpose() - oracle).norm() / oracle.norm();
        CHECK(rel < 1e-4);
    }
}

TEST_CASE("periodic boundary needs a periodic mesh")
{
    const Mesh m = build_cartesian(4, 4);
    try {
        JlbOperator op(m, 1, 1, Coefficients::uniform(16, 1, 1), BoundaryKind::Periodic);
        FAIL("expected UnsupportedBC");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::UnsupportedBC);
    }
}

TEST_CASE("upwind splitting")
{
    const auto ps = prepare(sn_system(sn_quadrature(8)));
    const Mesh m = build_mesh("random_triangular", 6, 6, 3);
    SchemeOptions opt;
    const EdgeFluxOperator op(m, ps.dec, Coefficients::uniform(m.num_cells(), 1.0, 1.0), opt, 1.0);
    for (int e = 0; e < m.num_edges(); ++e) {
        const Vec2& nu = m.edges()[size_t(e)].normal;
        const Matrix g = ps.dec.A1pp * nu.x() + ps.dec.A2pp * nu.y();
        CHECK((op.g_plus(e) + op.g_minus(e) - g).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(op.g_plus(e).row(0).isZero(0));
        CHECK(op.g_minus(e).col(0).isZero(0));
        CHECK(sym_eigendecompose(op.g_plus(e)).values.minCoeff() > -1e-12);
        CHECK(sym_eigendecompose(op.g_minus(e)).values.maxCoeff() < 1e-12);
    }
}

TEST_CASE("upwind reduces to scalar upwinding on an aligned mesh")
{
    // S_2: A1'' couples components 2 and 4 with speeds +-1/sqrt(2).
    const auto ps = prepare(sn_system(sn_quadrature(4)));
    const int n = 24;
    const double eps = 0.3, h = 1.0 / n;
    const Mesh m = build_cartesian(n, 2, periodic());
    SchemeOptions opt;
    opt.bc = BoundaryKind::Periodic;
    const EdgeFluxOperator op(m, ps.dec, Coefficients::uniform(m.num_cells(), eps, 1.0), opt, 1.0);

    Rng rng(11);
    std::vector<double> w1(n), w2(n);
    for (int i = 0; i < n; ++i) {
        w1[size_t(i)] = rng.uniform(-1, 1);
        w2[size_t(i)] = rng.uniform(-1, 1);
    }
    Field v = Field::Zero(4, m.num_cells());
    for (int j = 0; j < m.num_cells(); ++j) {
        const int i = int(std::floor(m.center(j).x() / h));
        v(1, j) = s2 * (w1[size_t(i)] + w2[size_t(i)]);
        v(3, j) = s2 * (w1[size_t(i)] - w2[size_t(i)]);
    }
    Field out = Field::Zero(4, m.num_cells());
    op.apply(v, out);
    for (int j = 0; j < m.num_cells(); ++j) {
        const int i = int(std::floor(m.center(j).x() / h));
        const int im = (i + n - 1) % n, ip = (i + 1) % n;
        const double d1 = -s2 / (eps * h) * (w1[size_t(i)] - w1[size_t(im)]);
        const double d2 = s2 / (eps * h) * (w2[size_t(ip)] - w2[size_t(i)]);
        CHECK(std::abs(out(0, j)) < 1e-13);
        CHECK(std::abs(out(2, j)) < 1e-13);
        CHECK(std::abs(s2 * (out(1, j) + out(3, j)) - d1) < 1e-12);
        CHECK(std::abs(s2 * (out(1, j) - out(3, j)) - d2) < 1e-12);
    }
}

TEST_CASE("Rusanov fluxes")
{
    const auto ps = prepare(sn_system(sn_quadrature(4)));
    const Mesh m = build_cartesian(4, 4);
    SchemeOptions opt;
    opt.flux = FluxKind::Rusanov;
    const EdgeFluxOperator op(m, ps.dec, Coefficients::uniform(16, 1.0, 1.0), opt, 1.0);
    Matrix p = Matrix::Identity(4, 4);
    p(0, 0) = 0;
    for (int e = 0; e < m.num_edges(); ++e) {
        const Vec2& nu = m.edges()[size_t(e)].normal;
        const Matrix g = ps.dec.A1pp * nu.x() + ps.dec.A2pp * nu.y();
        CHECK(std::abs(op.speed(e) - s2) < 1e-14);
        CHECK((op.g_plus(e) + op.g_minus(e) - g).cwiseAbs().maxCoeff() < 1e-15);
        CHECK((op.g_plus(e) - op.g_minus(e) - op.speed(e) * p).cwiseAbs().maxCoeff() < 1e-15);
    }

    // Global speed bounds every per-edge radius.
    const auto p3 = prepare(pn_system(3));
    const Mesh t = build_mesh("random_triangular", 5, 5, 2);
    opt.speed = SpeedRule::Global;
    const EdgeFluxOperator glob(t, p3.dec, Coefficients::uniform(t.num_cells(), 1.0, 1.0), opt, 3.0);
    double smax = 0;
    for (int e = 0; e < t.num_edges(); ++e) {
        const Vec2& nu = t.edges()[size_t(e)].normal;
        const double rho = spectral_radius(p3.dec.A1pp * nu.x() + p3.dec.A2pp * nu.y());
        CHECK(glob.speed(e) >= rho - 1e-14);
        smax = std::max(smax, rho);
    }
    CHECK(glob.speed(0) == doctest::Approx(smax).epsilon(1e-14));
}

TEST_CASE("P_1 has no edge fluxes")
{
    const auto ps = prepare(pn_system(1));
    const Mesh m = build_cartesian(4, 4);
    const EdgeFluxOperator op(m, ps.dec, Coefficients::uniform(16, 1.0, 1.0), {}, 3.0);
    CHECK(op.trivial());
}

TEST_CASE("damping factor")
{
    const auto s = prepare(sn_system(sn_quadrature(4)));
    const Mesh m = build_cartesian(10, 10);
    const double eps = 1e-3, c_o = 2.0;
    const EdgeFluxOperator op(m, s.dec, Coefficients::uniform(100, eps, 3.0), {}, c_o);
    for (int e = 0; e < m.num_edges(); ++e) {
        const double sp = op.speed(e), d = m.edges()[size_t(e)].center_distance;
        CHECK(std::abs(d - 0.1) < 1e-14);
        CHECK(op.damping(e) == doctest::Approx(2 * sp * eps / (2 * sp * eps + c_o * 3.0 * 0.1)).epsilon(1e-14));
    }
}

TEST_CASE("relaxation acts on the non-diffusive kernel complement only")
{
    const auto ps = prepare(sn_system(sn_quadrature(4)));
    const Mesh m = build_cartesian(5, 5, periodic());
    const double eps = 0.1, sigma = 2.0;
    SchemeOptions opt;
    opt.bc = BoundaryKind::Periodic;
    const SpatialOperator op(m, ps, Coefficients::uniform(25, eps, sigma), opt);
    Field v = Field::Zero(4, 25);
    v.row(3).setConstant(1.0);
    const Field out = op.apply_linear(v);
    for (int j = 0; j < 25; ++j) {
        CHECK(std::abs(out(3, j) + sigma / (eps * eps)) < 1e-10);
        CHECK(out.col(j).head<3>().cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("matrix-free and assembled operators agree")
{
    for (FluxKind f : {FluxKind::Upwind, FluxKind::Rusanov}) {
        for (BoundaryKind bc : {BoundaryKind::Vacuum, BoundaryKind::Reflective}) {
            for (const char* model : {"s2", "pn:3"}) {
                const auto ps = prepare(model_from_string(model));
                const Mesh m = build_random_quad(20, 20, 0.2, 5);
                auto c = random_coeffs(m.num_cells(), 0.05, 9, true);
                SchemeOptions opt{f, SpeedRule::PerEdge, bc};
                const SpatialOperator op(m, ps, c, opt);
                const Field v = random_field(ps.n(), m.num_cells(), 21);
                const Field a = op.apply_linear(v);
                const SparseOperator l = op.assemble();
                const Vector lv = l * Eigen::Map<const Vector>(v.data(), v.size());
                const Field b = Eigen::Map<const Field>(lv.data(), v.rows(), v.cols());
                CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff()));
            }
        }
    }
}

TEST_CASE("equilibrium on every periodic mesh")
{
    for (const char* model : {"s2", "pn:3", "p1"}) {
        const auto ps = prepare(model_from_string(model));
        for (const auto& m : periodic_meshes(8)) {
            for (FluxKind f : {FluxKind::Upwind, FluxKind::Rusanov}) {
                for (double eps : {1.0, 1e-6}) {
                    SchemeOptions opt{f, SpeedRule::PerEdge, BoundaryKind::Periodic};
                    const SpatialOperator op(m, ps, random_coeffs(m.num_cells(), eps, 4, false), opt);
                    Field v = Field::Zero(ps.n(), m.num_cells());
                    v.row(0).setConstant(3.0);
                    CHECK(op.apply(v).cwiseAbs().maxCoeff() < 1e-12);
                }
            }
        }
    }
}

TEST_CASE("reflective walls keep a uniform state, vacuum keeps zero")
{
    for (const char* model : {"s2", "pn:3"}) {
        const auto ps = prepare(model_from_string(model));
        for (const auto& m : bounded_meshes(8)) {
            for (FluxKind f : {FluxKind::Upwind, FluxKind::Rusanov}) {
                SchemeOptions opt{f, SpeedRule::PerEdge, BoundaryKind::Reflective};
                const SpatialOperator refl(m, ps, random_coeffs(m.num_cells(), 1e-2, 4, false), opt);
                Field v = Field::Zero(ps.n(), m.num_cells());
                v.row(0).setConstant(1.0);
                CHECK(refl.apply(v).cwiseAbs().maxCoeff() < 1e-10);

                opt.bc = BoundaryKind::Vacuum;
                const SpatialOperator vac(m, ps, random_coeffs(m.num_cells(), 1e-2, 4, false), opt);
                CHECK(vac.apply(Field::Zero(ps.n(), m.num_cells())).cwiseAbs().maxCoeff() == 0.0);
            }
        }
    }
}

TEST_CASE("kernel mass is conserved with periodic boundaries")
{
    for (const char* model : {"s2", "pn:3"}) {
        const auto ps = prepare(model_from_string(model));
        for (const auto& m : periodic_meshes(8)) {
            SchemeOptions opt{FluxKind::Rusanov, SpeedRule::PerEdge, BoundaryKind::Periodic};
            const SpatialOperator op(m, ps, random_coeffs(m.num_cells(), 1e-2, 4, false), opt);
            const Field v = random_field(ps.n(), m.num_cells(), 8);
            const Field dv = op.apply(v);
            double rate = 0.0, scale = 0.0;
            for (int j = 0; j < m.num_cells(); ++j) {
                rate += m.area(j) * dv(0, j);
                scale += m.area(j) * dv.col(j).cwiseAbs().maxCoeff();
            }
            CHECK(std::abs(rate) < 1e-12 * scale);
        }
    }
}

TEST_CASE("absorption and source")
{
    const auto ps = prepare(pn_system(1));
    const Mesh m = build_cartesian(3, 3, periodic());
    auto c = Coefficients::uniform(9, 1.0, 0.0);
    c.sigma_a(4) = 10.0;
    c.source(4) = 1.0;
    SchemeOptions opt;
    opt.bc = BoundaryKind::Periodic;
    const SpatialOperator op(m, ps, c, opt);
    CHECK(op.forcing()(0, 4) == doctest::Approx(ps.spec.Q(0, 0)));
    Field v = Field::Zero(3, 9);
    v.row(0).setConstant(1.0);
    const Field dv = op.apply(v);
    // Uniform kernel state: only the absorbing, emitting cell changes.
    CHECK(dv(0, 4) == doctest::Approx(-10.0 * ps.spec.Q(0, 0) * ps.spec.Q(0, 0) + ps.spec.Q(0, 0)));
    CHECK(dv.col(0).norm() < 1e-14);
}

TEST_CASE("wave speeds")
{
    CHECK(max_wave_speed(sn_system(sn_quadrature(4))) == doctest::Approx(1.0));
    CHECK(max_wave_speed(pn_system(1)) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
    CHECK(max_wave_speed(pn_system(3)) == doctest::Approx(0.8611363).epsilon(1e-6));
    CHECK(max_wave_speed(heat_p1_system(2, 1)) == doctest::Approx(2.0));
}
