// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "apfv/harness.hpp"
#include "apfv/models.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

using namespace apfv;

namespace {

int failures = 0;

void report(const char* id, bool ok, const std::string& detail, double secs)
{
    std::printf("[%s] %-9s %s (%.1f s)\n", ok ? "PASS" : "FAIL", id, detail.c_str(), secs);
    std::fflush(stdout);
    if (!ok) ++failures;
}

void criterion(const char* id, const std::function<bool(std::string&)>& body)
{
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail += std::string(" threw: ") + e.what();
    }
    report(id, ok, detail, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

std::string f(const char* fmt, double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, x);
    return buf;
}

bool in(double x, double lo, double hi) { return x >= lo && x <= hi; }

double sq(double num, double den) { return std::sqrt(num / den); }

GridOptions periodic(Rect d = {})
{
    GridOptions o;
    o.domain = d;
    o.periodic_x = o.periodic_y = true;
    return o;
}

Field random_field(int n, int cells, std::uint64_t seed)
{
    Rng rng(seed);
    Field v(n, cells);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.uniform(-1, 1);
    return v;
}

// Runs a study and checks the L1 order of each listed pair (indices of the finer level).
bool orders_within(const RunConfig& cfg, const std::vector<size_t>& fine, double lo, double hi, std::string& out)
{
    const RunReport rep = convergence_study(cfg);
    bool ok = true;
    for (size_t i = 1; i < rep.rows.size(); ++i) {
        const auto& r = rep.rows[i];
        const bool gated = std::find(fine.begin(), fine.end(), i) != fine.end();
        out += " " + std::to_string(rep.rows[i - 1].nx) + "-" + std::to_string(r.nx) + ":" +
               (r.order_l1 ? f("%.3f", *r.order_l1) : std::string("n/a")) + (gated ? "" : "(info)");
        if (gated) ok = ok && r.order_l1 && in(*r.order_l1, lo, hi);
    }
    return ok;
}

RunConfig diffusion_config(const std::string& model, const std::string& mesh, const std::string& scheme, TimeMode mode)
{
    RunConfig c;
    c.problem = "diffusion";
    c.model = model;
    c.mesh.type = mesh;
    c.mesh.seed = 1;
    c.epsilon = 1e-6;
    c.scheme = scheme;
    c.mode = mode;
    c.dt_half_h2 = true;
    return c;
}

// Limit diffusion scheme rebuilt from cell vertex lists; see tests/test_schemes.cpp.
Vector limit_diffusion(const Mesh& m, const Vector& p, double sigma)
{
    std::vector<Mat2> b(size_t(m.num_nodes()), Mat2::Zero());
    std::vector<Vec2> rhs(size_t(m.num_nodes()), Vec2::Zero());
    auto for_corners = [&](auto&& fn) {
        for (int j = 0; j < m.num_cells(); ++j) {
            const auto v = m.vertices(j);
            const auto ids = m.cell_nodes(j);
            Vec2 xc = Vec2::Zero();
            for (const auto& x : v) xc += x;
            xc /= double(v.size());
            const size_t k = v.size();
            for (size_t i = 0; i < k; ++i) {
                const Vec2 d = v[(i + 1) % k] - v[(i + k - 1) % k];
                fn(j, ids[i], Vec2(0.5 * d.y(), -0.5 * d.x()), Vec2(v[i] - xc));
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
    for_corners([&](int j, int r, const Vec2& ln, const Vec2&) { dp(j) -= ln.dot(u[size_t(r)]) / (sigma * m.area(j)); });
    return dp;
}

struct Front {
    double bin;    // centre of the peak bin
    double refined; // vertex of the parabola through the peak bin and its neighbours
};

// Outermost local maximum of the azimuthal average of rho around (1, 1), in
// bins of width h, ignoring maxima below 5% of the largest.
Front front_radius(const Mesh& m, const Vector& rho)
{
    const double h = m.h();
    const int nb = int(1.0 / h);
    std::vector<double> s(size_t(nb), 0.0), c(size_t(nb), 0.0);
    for (int j = 0; j < m.num_cells(); ++j) {
        const int b = int((m.center(j) - Vec2(1, 1)).norm() / h);
        if (b < nb) {
            s[size_t(b)] += rho(j);
            c[size_t(b)] += 1;
        }
    }
    double top = 0.0;
    for (int b = 0; b < nb; ++b) {
        if (c[size_t(b)] > 0) s[size_t(b)] /= c[size_t(b)];
        top = std::max(top, s[size_t(b)]);
    }
    for (int b = nb - 2; b >= 1; --b)
        if (s[size_t(b)] > 0.05 * top && s[size_t(b)] > s[size_t(b - 1)] && s[size_t(b)] >= s[size_t(b + 1)]) {
            const double lo = s[size_t(b - 1)], mid = s[size_t(b)], hi = s[size_t(b + 1)];
            const double off = 0.5 * (lo - hi) / (lo - 2 * mid + hi);
            return {(b + 0.5) * h, (b + 0.5 + off) * h};
        }
    return {0.0, 0.0};
}

} // namespace

int main()
{
    criterion("crit-1", [](std::string& d) {
        Matrix a1 = Matrix::Zero(10, 10), a2 = Matrix::Zero(10, 10);
        a1(0, 1) = a1(1, 0) = sq(1, 3);
        a1(1, 2) = a1(2, 1) = sq(4, 15);
        a1(2, 3) = a1(3, 2) = sq(9, 35);
        a1(4, 5) = a1(5, 4) = sq(1, 5);
        a1(5, 6) = a1(6, 5) = sq(8, 35);
        a1(7, 8) = a1(8, 7) = sq(1, 7);
        a2(0, 4) = a2(4, 0) = sq(1, 3);
        a2(1, 5) = a2(5, 1) = sq(1, 5);
        a2(2, 4) = a2(4, 2) = -sq(1, 15);
        a2(2, 6) = a2(6, 2) = sq(6, 35);
        a2(3, 5) = a2(5, 3) = -sq(3, 35);
        a2(4, 7) = a2(7, 4) = -sq(1, 5);
        a2(5, 8) = a2(8, 5) = -sq(1, 7);
        a2(6, 7) = a2(7, 6) = sq(1, 70);
        a2(7, 9) = a2(9, 7) = -sq(3, 14);
        const auto p3 = pn_system(3);
        const double ep = std::max((p3.A1 - a1).cwiseAbs().maxCoeff(), (p3.A2 - a2).cwiseAbs().maxCoeff());

        const auto s = sn_system(sn_quadrature(4));
        Matrix s1 = Matrix::Zero(4, 4), s2m = Matrix::Zero(4, 4), rr(4, 4);
        s1(0, 0) = 1;
        s1(2, 2) = -1;
        s2m(1, 1) = 1;
        s2m(3, 3) = -1;
        rr.setConstant(-0.25);
        rr.diagonal().setConstant(0.75);
        const bool exact = s.A1 == s1 && s.A2 == s2m && s.R == rr;

        const double r2 = 1.0 / std::sqrt(2.0);
        Matrix a1p(4, 4);
        a1p << 0, r2, 0, 0, r2, 0, 0, r2, 0, 0, 0, 0, 0, r2, 0, 0;
        const double ed = (prepare(s).dec.A1p - a1p).cwiseAbs().maxCoeff();
        d = "P3 A1/A2 max dev " + f("%.1e", ep) + ", S2 A1/A2/R exact " + (exact ? "yes" : "no") +
            ", S2 A1' max dev " + f("%.1e", ed);
        return ep < 1e-12 && exact && ed < 1e-12;
    });

    criterion("crit-2", [](std::string& d) {
        bool ok = true;
        double worst = 0.0;
        for (int n : {4, 8, 16}) {
            const double D = prepare(sn_system(sn_quadrature(n))).diffusion_scalar();
            worst = std::max(worst, std::abs(D - 0.5));
        }
        for (int n : {1, 3, 5, 7}) {
            const double D = prepare(pn_system(n)).diffusion_scalar();
            worst = std::max(worst, std::abs(D - 1.0 / 3.0));
        }
        ok = worst < 1e-13;
        d = "S_N (4, 8, 16) D = 1/2, P_N (1, 3, 5, 7) D = 1/3, max dev " + f("%.1e", worst);
        return ok;
    });

    criterion("crit-3", [](std::string& d) {
        RunConfig c = diffusion_config("s2", "cartesian", "jlb+upwind", TimeMode::Implicit);
        c.refinements = {40, 80, 160};
        d = "S2 cartesian";
        bool ok = orders_within(c, {1, 2}, 1.85, 2.15, d);
        c.mesh.type = "kershaw";
        d += "; kershaw";
        ok = orders_within(c, {1, 2}, 1.8, 2.15, d) && ok;
        c.mesh.type = "random_triangular";
        c.refinements = {40, 80};
        d += "; random triangular";
        ok = orders_within(c, {1}, 1.4, 1.9, d) && ok;
        return ok;
    });

    criterion("crit-4", [](std::string& d) {
        RunConfig c = diffusion_config("pn:3", "cartesian", "jlb+rusanov", TimeMode::SemiImplicit);
        c.refinements = {40, 80};
        d = "P3 semi-implicit";
        bool ok = orders_within(c, {1}, 1.85, 2.15, d);
        c.mode = TimeMode::Implicit;
        d += "; implicit";
        ok = orders_within(c, {1}, 1.85, 2.15, d) && ok;
        return ok;
    });

    criterion("crit-5", [](std::string& d) {
        RunConfig c;
        c.problem = "transport1";
        c.mode = TimeMode::Explicit;
        c.cfl_safety = 0.5;
        c.refinements = {40, 80, 160, 320};
        d = "case 1";
        bool ok = orders_within(c, {1, 2, 3}, 0.35, 0.6, d);
        c.problem = "transport2";
        d += "; case 2";
        ok = orders_within(c, {2, 3}, 0.8, 1.2, d) && ok;
        return ok;
    });

    criterion("crit-6", [](std::string& d) {
        const double eps = 1e-7, sigma = 1.0;
        bool ok = true;
        const Mesh cart = build_cartesian(50, 50, periodic());
        const Mesh kersh = build_kershaw(48, 50, periodic());
        for (const Mesh* m : {&cart, &kersh}) {
            const JlbOperator op(*m, 1.0, 1.0, Coefficients::uniform(m->num_cells(), eps, sigma), BoundaryKind::Periodic);
            Field v = Field::Zero(3, m->num_cells());
            for (int j = 0; j < m->num_cells(); ++j)
                v(0, j) = std::exp(-(m->center(j) - Vec2(0.5, 0.5)).squaredNorm() / 0.02);
            Field out = Field::Zero(3, m->num_cells());
            op.apply(v, out);
            const Vector oracle = limit_diffusion(*m, v.row(0).transpose(), sigma);
            const double rel = (out.row(0).transpose() - oracle).norm() / oracle.norm();
            d += m->info().kind + " " + std::to_string(m->info().nx) + "x" + std::to_string(m->info().ny) + " rel " +
                 f("%.2e", rel) + "  ";
            ok = ok && rel < 1e-4;
        }
        return ok;
    });

    criterion("crit-7", [](std::string& d) {
        double l2_growth = -1e300, eq_res = 0.0, mass_err = 0.0, bound = 0.0;
        for (const char* model : {"s2", "pn:3"}) {
            const auto ps = prepare(model_from_string(model));
            for (const char* kind : {"cartesian", "random_quad", "kershaw", "random_triangular"}) {
                const Mesh m = build_mesh(kind, 16, 16, 3, periodic());
                for (FluxKind fl : {FluxKind::Upwind, FluxKind::Rusanov}) {
                    for (double eps : {1.0, 1e-3, 1e-6}) {
                        const SpatialOperator op(m, ps, Coefficients::uniform(m.num_cells(), eps, 1.0),
                                                 {fl, SpeedRule::PerEdge, BoundaryKind::Periodic});
                        const double dt = 0.5 * m.h() * m.h();
                        const ImplicitStepper st(op, dt);
                        Field v = random_field(ps.n(), m.num_cells(), 11);
                        for (int s = 0; s < 3; ++s) {
                            const Field w = st.step(v);
                            l2_growth = std::max(l2_growth, l2_norm(m, w) - l2_norm(m, v));
                            v = w;
                        }
                        Field eq = Field::Zero(ps.n(), m.num_cells());
                        eq.row(0).setConstant(1.5);
                        TimeConfig ex;
                        ex.mode = TimeMode::Explicit;
                        const double dte = cfl_dt(op, ex);
                        // Equilibrium residual of one step in each mode.
                        for (const Field& w : {step_explicit(op, eq, dte), step_semi_implicit(op, eq, dt), st.step(eq)})
                            eq_res = std::max(eq_res, (w - eq).cwiseAbs().maxCoeff());
                        const Field r = random_field(ps.n(), m.num_cells(), 12);
                        const double m0 = kernel_mass(m, r), scale = l2_norm(m, r);
                        for (const Field& w : {step_explicit(op, r, dte), step_semi_implicit(op, r, dt),
                                               step_implicit(op, r, dt, 1e-14)})
                            mass_err = std::max(mass_err, std::abs(kernel_mass(m, w) - m0) / scale);
                    }
                }
            }
            const Mesh m = build_cartesian(40, 40);
            for (double eps : {1e-2, 1e-4, 1e-6}) {
                const SpatialOperator op(m, ps, Coefficients::uniform(m.num_cells(), eps, 1.0), {FluxKind::Rusanov});
                TimeConfig cfg;
                cfg.mode = TimeMode::SemiImplicit;
                cfg.dt = 0.5 * m.h() * m.h();
                cfg.t_final = 200 * *cfg.dt;
                Field v0 = random_field(ps.n(), m.num_cells(), 6);
                for (int j = 0; j < m.num_cells(); ++j)
                    v0(0, j) += std::exp(-(m.center(j) - Vec2(0.5, 0.5)).squaredNorm() / 0.01);
                const auto res = run(op, v0, cfg);
                bound = std::max(bound, res.field.cwiseAbs().maxCoeff() / v0.cwiseAbs().maxCoeff());
            }
        }
        d = "implicit L2 growth " + f("%.1e", l2_growth) + ", equilibrium residual " + f("%.1e", eq_res) +
            ", mass drift " + f("%.1e", mass_err) + ", semi-implicit sup ratio " + f("%.2f", bound);
        return l2_growth <= 1e-10 && eq_res < 1e-12 && mass_err < 1e-12 && bound < 10.0;
    });

    criterion("crit-8", [](std::string& d) {
        double worst = 0.0;
        int meshes = 0;
        for (std::uint64_t seed : {1ull, 2ull, 3ull, 17ull, 12345ull}) {
            for (bool per : {false, true}) {
                GridOptions o = per ? periodic({-1.0, 0.5, 2.0, 2.5}) : GridOptions{};
                for (const char* kind : {"cartesian", "random_quad", "smooth", "kershaw", "triangular", "random_triangular"}) {
                    const Mesh m = build_mesh(kind, 16, 12, seed, o);
                    ++meshes;
                    for (int j = 0; j < m.num_cells(); ++j) {
                        Vec2 s = Vec2::Zero();
                        Mat2 t = Mat2::Zero();
                        const auto v = m.vertices(j);
                        const auto c = m.corners(j);
                        for (size_t k = 0; k < c.size(); ++k) {
                            s += c[k].ln;
                            t += c[k].ln * v[k].transpose();
                        }
                        worst = std::max({worst, s.norm(), (t - m.area(j) * Mat2::Identity()).cwiseAbs().maxCoeff()});
                    }
                }
            }
        }
        d = std::to_string(meshes) + " meshes (6 generators, 5 seeds, bounded and periodic), max residual " +
            f("%.1e", worst);
        return worst < 1e-10;
    });

    criterion("crit-9", [](std::string& d) {
        const Table1Report r = table1_demo(1e-3);
        const auto& ap50 = r.find("ap", 50);
        const auto& ap500 = r.find("ap", 500);
        const auto& up50 = r.find("upwind", 50);
        const auto& up500 = r.find("upwind", 500);
        d = "L1 AP50 " + f("%.2e", ap50.errors.l1) + " AP500 " + f("%.2e", ap500.errors.l1) + " upwind50 " +
            f("%.2e", up50.errors.l1) + " upwind500 " + f("%.2e", up500.errors.l1);
        return ap50.errors.l1 < up500.errors.l1 && ap500.errors.l1 < ap50.errors.l1 && up500.errors.l1 < up50.errors.l1;
    });

    criterion("crit-10", [](std::string& d) {
        bool ok = true;
        for (const char* model : {"p1", "p3"}) {
            RunConfig c;
            c.problem = "fundamental";
            c.model = model;
            c.mesh.nx = c.mesh.ny = 100;
            c.mode = TimeMode::Explicit;
            c.cfl_safety = 0.5;
            const CaseResult r = run_case(c);
            const double h = r.mesh.h();
            const Front fr = front_radius(r.mesh, r.problem.rho(r.run.field));
            const double rad = fr.refined;
            const std::string shown = f("%.4f", rad) + " (bin " + f("%.2f", fr.bin) + ")";
            if (std::string(model) == "p1") {
                const double exact = 1.0 / std::sqrt(3.0);
                ok = ok && std::abs(rad - exact) <= 2 * h;
                d += "P1 front " + shown + " vs " + f("%.4f", exact) + " +- " + f("%.2f", 2 * h) + "; ";
            } else {
                ok = ok && rad <= 0.87 + 2 * h;
                d += "P3 front " + shown + " <= " + f("%.2f", 0.87 + 2 * h);
            }
        }
        return ok;
    });

    criterion("lattice", [](std::string& d) {
        bool ok = true;
        for (const char* model : {"p1", "p3"}) {
            RunConfig c;
            c.problem = "lattice";
            c.model = model;
            c.mesh.nx = c.mesh.ny = 70;
            c.mode = TimeMode::Explicit;
            c.cfl_safety = 0.5;
            const CaseResult r = run_case(c);
            const Vector rho = r.problem.rho(r.run.field);
            int jmax = 0;
            rho.maxCoeff(&jmax);
            Vec2 centroid = Vec2::Zero();
            double mass = 0.0;
            for (int j = 0; j < r.mesh.num_cells(); ++j) {
                const double w = r.mesh.area(j) * std::max(rho(j), 0.0);
                centroid += w * r.mesh.center(j);
                mass += w;
            }
            centroid /= mass;
            const Vec2 peak = r.mesh.center(jmax);
            const bool good = r.run.field.allFinite() && r.run.t == 3.2 && peak.x() > 3 && peak.x() < 4 &&
                              peak.y() > 3 && peak.y() < 4 && (centroid - Vec2(3.5, 3.5)).norm() < 0.5;
            ok = ok && good;
            d += std::string(model) + ": peak (" + f("%.2f", peak.x()) + "," + f("%.2f", peak.y()) + ") centroid (" +
                 f("%.2f", centroid.x()) + "," + f("%.2f", centroid.y()) + ") max " + f("%.3g", rho(jmax)) + "; ";
        }
        return ok;
    });

    std::printf("%d failing\n", failures);
    return failures == 0 ? 0 : 1;
}
