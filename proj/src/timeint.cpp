#include "apfv/timeint.hpp"

#include <cmath>
#include <memory>

namespace apfv {

TimeMode time_mode_from_string(const std::string& s)
{
    if (s == "explicit") return TimeMode::Explicit;
    if (s == "implicit") return TimeMode::Implicit;
    if (s == "semi_implicit" || s == "semi-implicit") return TimeMode::SemiImplicit;
    throw Error(Errc::InvalidConfig, "unknown time mode '" + s + "'");
}

std::string to_string(TimeMode m)
{
    switch (m) {
    case TimeMode::Explicit: return "explicit";
    case TimeMode::Implicit: return "implicit";
    case TimeMode::SemiImplicit: return "semi_implicit";
    }
    return "?";
}

void TimeConfig::check() const
{
    if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw Error(Errc::BadTime, "t_final must be >= 0");
    if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw Error(Errc::InvalidConfig, "cfl_safety must be in (0, 1]");
    if (dt && !(*dt > 0.0 && std::isfinite(*dt))) throw Error(Errc::InvalidConfig, "dt must be positive");
    if (!(tol > 0.0)) throw Error(Errc::InvalidConfig, "solver tolerance must be positive");
    if (max_iter < 0) throw Error(Errc::InvalidConfig, "max_iter must be >= 0");
}

double cfl_dt(const SpatialOperator& op, const TimeConfig& cfg)
{
    double dt = 0.0;
    const Mesh& mesh = op.mesh();
    const double eps = op.coefficients().epsilon;
    const double c = op.max_speed();
    if (cfg.dt) {
        dt = *cfg.dt;
    } else if (cfg.mode == TimeMode::Implicit) {
        dt = 0.5 * mesh.h() * mesh.h();
    } else {
        dt = std::numeric_limits<double>::infinity();
        for (int j = 0; j < mesh.num_cells(); ++j) {
            const double h = std::sqrt(mesh.area(j));
            double local = c > 0.0 ? eps * h / c : std::numeric_limits<double>::infinity();
            if (cfg.mode == TimeMode::SemiImplicit) local += h * h * op.coefficients().sigma(j) * op.c_o();
            dt = std::min(dt, local);
        }
        dt *= cfg.cfl_safety;
    }
    if (!(dt > std::numeric_limits<double>::min()) || !std::isfinite(dt))
        throw Error(Errc::ZeroTimestep, "time step " + std::to_string(dt));
    return dt;
}

double l2_norm(const Mesh& mesh, const Field& v)
{
    double s = 0.0;
    for (int j = 0; j < mesh.num_cells(); ++j) s += mesh.area(j) * v.col(j).squaredNorm();
    return std::sqrt(s);
}

double kernel_mass(const Mesh& mesh, const Field& v)
{
    double s = 0.0, c = 0.0; // Neumaier
    for (int j = 0; j < mesh.num_cells(); ++j) {
        const double x = mesh.area(j) * v(0, j);
        const double t = s + x;
        c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
        s = t;
    }
    return s + c;
}

Field step_explicit(const SpatialOperator& op, const Field& v, double dt) { return v + dt * op.apply(v); }

ImplicitStepper::ImplicitStepper(const SpatialOperator& op, double dt, double tol, int max_iter)
    : op_(op), dt_(dt), tol_(tol), max_iter_(max_iter)
{
    if (!(dt > 0.0)) throw Error(Errc::ZeroTimestep, "implicit step needs dt > 0");
    SparseOperator a = -dt * op.assemble();
    SparseOperator id(a.rows(), a.cols());
    id.setIdentity();
    a += id;
    solver_.compute(a);
    const Field b = op.forcing();
    forcing_ = Eigen::Map<const Vector>(b.data(), b.size());
}

Field ImplicitStepper::step(const Field& v) const
{
    Vector rhs = Eigen::Map<const Vector>(v.data(), v.size()) + dt_ * forcing_;
    const Vector x = solver_.solve(rhs, tol_, max_iter_, &stats_);
    return Eigen::Map<const Field>(x.data(), v.rows(), v.cols());
}

Field step_implicit(const SpatialOperator& op, const Field& v, double dt, double tol)
{
    return ImplicitStepper(op, dt, tol).step(v);
}

Field step_semi_implicit(const SpatialOperator& op, const Field& v, double dt)
{
    Field w = v + dt * op.apply_semi_explicit(v);
    const auto& c = op.coefficients();
    const auto& dpp = op.system().dec.Dpp;
    const double e2 = c.epsilon * c.epsilon;
    for (int j = 0; j < op.mesh().num_cells(); ++j) {
        const Mat2 lhs = Mat2::Identity() + dt * op.jlb().cell_relaxation(j);
        const double det = lhs.determinant();
        if (!(std::abs(det) > 1e-14 * lhs.squaredNorm()))
            throw Error(Errc::SingularLocalSolve, "cell " + std::to_string(j));
        const Vec2 u = w.col(j).segment<2>(1);
        w.col(j).segment<2>(1) = lhs.inverse() * u;
        for (int i = 3; i < op.n(); ++i) w(i, j) /= 1.0 + dt * c.sigma(j) * dpp(i, i) / e2;
    }
    return w;
}

RunResult run(const SpatialOperator& op, const Field& v0, const TimeConfig& cfg, const StepObserver& obs)
{
    cfg.check();
    if (v0.rows() != op.n() || v0.cols() != op.mesh().num_cells())
        throw Error(Errc::DimensionMismatch, "initial field shape");
    RunResult res;
    res.field = v0;
    res.norms.push_back({0.0, l2_norm(op.mesh(), v0)});
    if (cfg.t_final == 0.0) return res;

    const double dt = cfl_dt(op, cfg);
    res.dt = dt;
    double steps_f = std::ceil(cfg.t_final / dt);
    // A remainder within rounding of a full step is not a separate short step.
    if ((steps_f - 1.0) * dt >= cfg.t_final * (1.0 - 1e-12)) steps_f -= 1.0;
    const long nsteps = std::max(1L, long(steps_f));
    const double last = cfg.t_final - double(nsteps - 1) * dt;

    std::unique_ptr<ImplicitStepper> full, tail;
    auto stepper = [&](double h) -> const ImplicitStepper& {
        if (std::abs(h - dt) <= 1e-12 * dt) {
            if (!full) full = std::make_unique<ImplicitStepper>(op, dt, cfg.tol, cfg.max_iter);
            return *full;
        }
        if (!tail) tail = std::make_unique<ImplicitStepper>(op, h, cfg.tol, cfg.max_iter);
        return *tail;
    };

    for (long s = 0; s < nsteps; ++s) {
        const double h = s + 1 == nsteps ? last : dt;
        switch (cfg.mode) {
        case TimeMode::Explicit: res.field = step_explicit(op, res.field, h); break;
        case TimeMode::Implicit: res.field = stepper(h).step(res.field); break;
        case TimeMode::SemiImplicit: res.field = step_semi_implicit(op, res.field, h); break;
        }
        res.t = s + 1 == nsteps ? cfg.t_final : double(s + 1) * dt;
        res.steps = int(s + 1);
        res.norms.push_back({res.t, l2_norm(op.mesh(), res.field)});
        if (!res.field.allFinite()) throw Error(Errc::NoConvergence, "non-finite field at t = " + std::to_string(res.t));
        if (obs) obs(res.steps, res.t, res.field);
    }
    return res;
}

} // namespace apfv
