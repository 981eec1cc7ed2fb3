#include "apfv/problems.hpp"

#include "apfv/models.hpp"

#include <cmath>

namespace apfv {

double heat_kernel(double D, double t, const Vec2& x, const Vec2& x0)
{
    if (!(t > 0.0)) throw Error(Errc::BadTime, "heat kernel needs t > 0");
    if (!(D > 0.0)) throw Error(Errc::BadCoefficient, "heat kernel needs D > 0");
    return std::exp(-(x - x0).squaredNorm() / (4 * D * t)) / (4 * M_PI * D * t);
}

Vector Problem::rho(const Field& v) const
{
    const Field u = from_diagonal(v, system.spec.Q);
    if (observable == Observable::First) return u.row(0).transpose();
    return u.colwise().mean().transpose();
}

namespace {

bool is_sn(const PreparedSystem& ps) { return ps.sys.name.rfind("sn:", 0) == 0; }

Problem base(const std::string& name, const FriedrichsSystem& sys, const Mesh& mesh, double eps, double sigma)
{
    Problem p;
    p.name = name;
    p.system = prepare(sys);
    p.coeffs = Coefficients::uniform(mesh.num_cells(), eps, sigma);
    p.initial_u = Field::Zero(sys.n, mesh.num_cells());
    return p;
}

int cell_holding(const Mesh& mesh, const Vec2& x)
{
    // Nudge off the grid lines so the choice does not depend on rounding.
    const int j = mesh.locate(x + Vec2(1e-9, 1e-9));
    if (j < 0) throw Error(Errc::InvalidConfig, "point outside the mesh");
    return j;
}

} // namespace

Problem diffusion_case(const std::string& model, const Mesh& mesh, double epsilon)
{
    Problem p = base("diffusion:" + model, model_from_string(model), mesh, epsilon, 1.0);
    const double D = p.system.diffusion_scalar();
    const double t0 = 0.01;
    const Vec2 c(0.5 * (mesh.info().domain.x0 + mesh.info().domain.x1),
                 0.5 * (mesh.info().domain.y0 + mesh.info().domain.y1));
    const bool sn = is_sn(p.system);
    for (int j = 0; j < mesh.num_cells(); ++j) {
        const double g = heat_kernel(D, t0, mesh.center(j), c);
        if (sn) p.initial_u.col(j).setConstant(g);
        else p.initial_u(0, j) = g;
    }
    p.observable = sn ? Observable::Mean : Observable::First;
    p.exact = [D, t0, c](const Vec2& x, double t) { return heat_kernel(D, t0 + t, x, c); };
    p.t_final = 0.01;
    return p;
}

Problem transport_case_1(const Mesh& mesh)
{
    Problem p = base("transport1", sn_system(sn_quadrature(4)), mesh, 1.0, 0.0);
    auto chi = [](const Vec2& x) { return (x.x() >= 0.4 && x.x() <= 0.6 && x.y() >= 0.4 && x.y() <= 0.6) ? 1.0 : 0.0; };
    for (int j = 0; j < mesh.num_cells(); ++j) p.initial_u(0, j) = chi(mesh.center(j));
    p.exact = [chi](const Vec2& x, double t) { return chi(x - Vec2(t, 0.0)); };
    p.t_final = 0.1;
    return p;
}

Problem transport_case_2(const Mesh& mesh)
{
    Problem p = base("transport2", sn_system(sn_quadrature(4)), mesh, 1.0, 0.0);
    const Rect& d = mesh.info().domain;
    const Vec2 c(0.5 * (d.x0 + d.x1), 0.5 * (d.y0 + d.y1));
    auto g = [c](const Vec2& x) { return std::exp(-(x - c).squaredNorm() / (2 * 0.01)); };
    for (int j = 0; j < mesh.num_cells(); ++j) p.initial_u.col(j).setConstant(g(mesh.center(j)));
    const auto dirs = sn_quadrature(4).directions;
    p.observable = Observable::Mean;
    p.exact = [g, dirs](const Vec2& x, double t) {
        double s = 0.0;
        for (const auto& w : dirs) s += g(x - t * w);
        return s / double(dirs.size());
    };
    p.t_final = 0.2;
    return p;
}

Problem transport_case_3(const Mesh& mesh)
{
    Problem p = base("transport3", sn_system(sn_quadrature(4)), mesh, 1.0, 1.0);
    const int j = cell_holding(mesh, Vec2(1.0, 1.0));
    p.initial_u.col(j).setConstant(1.0 / mesh.area(j));
    p.observable = Observable::Mean;
    p.t_final = 0.5;
    return p;
}

Problem pn_fundamental(const std::string& model, const Mesh& mesh)
{
    FriedrichsSystem sys;
    if (model == "p1") sys = pn_system(1);
    else if (model == "p3") sys = pn_system(3);
    else throw Error(Errc::UnknownModel, "fundamental solution needs p1 or p3, got '" + model + "'");
    Problem p = base("fundamental:" + model, sys, mesh, 1.0, 0.0);
    const int j = cell_holding(mesh, Vec2(1.0, 1.0));
    p.initial_u(0, j) = 1.0 / mesh.area(j);
    p.t_final = 1.0;
    return p;
}

std::vector<LatticeSquare> lattice_absorbers()
{
    std::vector<LatticeSquare> out;
    for (int x : {1, 3, 5})
        for (int y : {1, 3, 5})
            if (!(x == 3 && (y == 3 || y == 5))) out.push_back({x, y});
    for (int x : {2, 4})
        for (int y : {2, 4}) out.push_back({x, y});
    return out;
}

Problem lattice_problem(const std::string& model, const Mesh& mesh)
{
    FriedrichsSystem sys;
    if (model == "p1") sys = pn_system(1);
    else if (model == "p3") sys = pn_system(3);
    else throw Error(Errc::UnknownModel, "lattice needs p1 or p3, got '" + model + "'");

    std::vector<int> hits(49, 0);
    for (int j = 0; j < mesh.num_cells(); ++j) {
        const Vec2& x = mesh.center(j);
        const int ix = int(std::floor(x.x())), iy = int(std::floor(x.y()));
        if (ix >= 0 && ix < 7 && iy >= 0 && iy < 7) ++hits[size_t(7 * iy + ix)];
    }
    for (int h : hits)
        if (h == 0) throw Error(Errc::MeshTooCoarse, "every unit square of [0,7]^2 needs a cell center");

    Problem p = base("lattice:" + model, sys, mesh, 1.0, 1.0);
    std::vector<char> absorbing(49, 0);
    for (const auto& s : lattice_absorbers()) absorbing[size_t(7 * s.y + s.x)] = 1;
    absorbing[size_t(7 * 3 + 3)] = 1;
    for (int j = 0; j < mesh.num_cells(); ++j) {
        const Vec2& x = mesh.center(j);
        const int ix = std::clamp(int(std::floor(x.x())), 0, 6), iy = std::clamp(int(std::floor(x.y())), 0, 6);
        if (absorbing[size_t(7 * iy + ix)]) {
            p.coeffs.sigma(j) = 0.0;
            p.coeffs.sigma_a(j) = 10.0;
        }
        if (ix == 3 && iy == 3) p.coeffs.source(j) = 1.0;
    }
    p.t_final = 3.2;
    return p;
}

Rect problem_domain(const std::string& spec)
{
    if (spec == "transport1") return {0, 0, 1, 1};
    if (spec.rfind("lattice:", 0) == 0) return {0, 0, 7, 7};
    // D = 1 spreads twice as far as the S_N and P_N limits.
    if (spec == "diffusion:p1") return {0, 0, 4, 4};
    return {0, 0, 2, 2};
}

Problem make_problem(const std::string& spec, const Mesh& mesh, double epsilon)
{
    auto tail = [&](const char* prefix) -> std::optional<std::string> {
        const std::string pre(prefix);
        if (spec.rfind(pre, 0) == 0) return spec.substr(pre.size());
        return std::nullopt;
    };
    if (auto m = tail("diffusion:")) return diffusion_case(*m, mesh, epsilon);
    if (spec == "transport1") return transport_case_1(mesh);
    if (spec == "transport2") return transport_case_2(mesh);
    if (spec == "transport3") return transport_case_3(mesh);
    if (auto m = tail("fundamental:")) return pn_fundamental(*m, mesh);
    if (auto m = tail("lattice:")) return lattice_problem(*m, mesh);
    throw Error(Errc::InvalidConfig, "unknown problem '" + spec + "'");
}

ErrorNorms error_norms(const Mesh& mesh, const Vector& rho, const std::function<double(const Vec2&)>& exact)
{
    if (rho.size() != mesh.num_cells()) throw Error(Errc::DimensionMismatch, "observable size");
    ErrorNorms e;
    for (int j = 0; j < mesh.num_cells(); ++j) {
        const double d = std::abs(rho(j) - exact(mesh.center(j)));
        e.l1 += mesh.area(j) * d;
        e.l2 += mesh.area(j) * d * d;
    }
    e.l2 = std::sqrt(e.l2);
    return e;
}

ErrorNorms error_norms(const Mesh& mesh, const Problem& p, const Field& v, double t)
{
    if (!p.has_analytic()) throw Error(Errc::NoAnalytic, p.name + " has no closed-form solution");
    return error_norms(mesh, p.rho(v), [&](const Vec2& x) { return p.exact(x, t); });
}

} // namespace apfv
