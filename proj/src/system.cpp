#include "apfv/system.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

namespace apfv {

namespace {

void fix_sign(Eigen::Ref<Vector> v)
{
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > 1e-12) {
            if (v(i) < 0) v = -v;
            return;
        }
    }
}

bool is_eigenvector(const Matrix& r, const Vector& v, double tol)
{
    const double mu = v.dot(r * v);
    return (r * v - mu * v).norm() <= tol;
}

std::string fmt(double x)
{
    std::ostringstream os;
    os.precision(3);
    os << x;
    return os.str();
}

} // namespace

void validate(const FriedrichsSystem& sys, double tol)
{
    const auto n = Eigen::Index(sys.n);
    if (n < 1 || sys.A1.rows() != n || sys.A1.cols() != n || sys.A2.rows() != n || sys.A2.cols() != n ||
        sys.R.rows() != n || sys.R.cols() != n)
        throw Error(Errc::DimensionMismatch, "system matrices must be n x n");
    auto sym = [&](const Matrix& m, const char* name) {
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol)
            throw Error(Errc::NonSymmetric, std::string(name) + " is not symmetric");
    };
    sym(sys.A1, "A1");
    sym(sys.A2, "A2");
    sym(sys.R, "R");
    const auto eig = sym_eigendecompose(sys.R, tol);
    if (eig.values(0) < -tol) throw Error(Errc::NotPSD, "R has eigenvalue " + fmt(eig.values(0)));
    const double rho = eig.values.cwiseAbs().maxCoeff();
    if (rho == 0.0) return; // R = 0: everything is kernel
    if (std::abs(eig.values(0)) >= kernel_threshold * rho)
        throw Error(Errc::TrivialKernel, "R is invertible");
}

SpectralData spectral(const FriedrichsSystem& sys)
{
    validate(sys);
    const auto n = Eigen::Index(sys.n);
    auto eig = sym_eigendecompose(sys.R, 1e-12);
    const double rho = eig.values.cwiseAbs().maxCoeff();

    SpectralData out;
    out.Q = eig.vectors;
    out.lambdas = eig.values;
    out.p = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(eig.values(i)) < kernel_threshold * std::max(rho, 1e-300)) {
            out.lambdas(i) = 0.0;
            ++out.p;
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) fix_sign(out.Q.col(i));

    if (out.p != 1 || n < 3) return out;

    const Vector e1 = out.Q.col(0);
    const Vector w1 = sys.A1 * e1, w2 = sys.A2 * e1;
    const double a1 = w1.norm(), a2 = w2.norm();
    if (a1 <= 1e-12 || a2 <= 1e-12 || std::abs(w1.dot(w2)) > 1e-10 * a1 * a2) return out;
    const Vector E2 = w1 / a1, E3 = w2 / a2;
    if (!is_eigenvector(sys.R, E2, 1e-10) || !is_eigenvector(sys.R, E3, 1e-10)) return out;

    Matrix basis(n, n);
    basis.col(0) = e1;
    basis.col(1) = E2;
    basis.col(2) = E3;
    std::vector<bool> used(size_t(n), false);
    used[0] = true;
    for (Eigen::Index k = 3; k < n; ++k) {
        // Pivoted Gram-Schmidt: take the candidate with the largest residual.
        Eigen::Index best = -1;
        double best_norm = -1.0;
        Vector best_r;
        for (Eigen::Index c = 1; c < n; ++c) {
            if (used[size_t(c)]) continue;
            const auto b = basis.leftCols(k);
            Vector r = out.Q.col(c) - b * (b.transpose() * out.Q.col(c));
            const double nr = r.norm();
            if (nr > best_norm + 1e-12) {
                best = c;
                best_norm = nr;
                best_r = r;
            }
        }
        if (best < 0 || best_norm < 1e-8)
            throw Error(Errc::StructureViolation, "could not complete the eigenbasis");
        used[size_t(best)] = true;
        const auto b = basis.leftCols(k);
        best_r -= b * (b.transpose() * best_r);
        best_r.normalize();
        fix_sign(best_r);
        basis.col(k) = best_r;
    }
    out.Q = basis;
    for (Eigen::Index i = 0; i < n; ++i) out.lambdas(i) = (i == 0) ? 0.0 : out.Q.col(i).dot(sys.R * out.Q.col(i));
    return out;
}

StructureReport check_structure(const FriedrichsSystem& sys, const SpectralData& spec, double tol)
{
    StructureReport rep;
    const int p = spec.p;
    if (p < 1) {
        rep.failure = "R has no kernel";
        return rep;
    }
    const auto n = spec.Q.cols();

    struct Axis {
        bool ok = false;
        Vector gamma;
        int index = -1;
        Vector dir;
        double speed = 0.0;
    };
    auto analyze = [&](const Matrix& a, const char* name) {
        Axis ax;
        ax.gamma = Vector::Zero(p);
        const Matrix w = a * spec.Q.leftCols(p);
        if (w.norm() <= tol) {
            ax.ok = true;
            return ax;
        }
        Eigen::Index big = 0;
        w.colwise().norm().maxCoeff(&big);
        const Vector e = w.col(big).normalized();
        for (int i = 0; i < p; ++i) {
            if ((w.col(i) - e.dot(w.col(i)) * e).norm() > tol) {
                rep.failure = std::string(name) + " E_i are not parallel to one direction";
                return ax;
            }
        }
        const double mu = e.dot(sys.R * e);
        if (!is_eigenvector(sys.R, e, tol) || !(mu > tol)) {
            rep.failure = std::string(name) + " E_1 is not an eigenvector of R with positive eigenvalue";
            return ax;
        }
        for (Eigen::Index k = 0; k < n; ++k)
            if (std::abs(spec.Q.col(k).dot(e)) >= 1.0 - tol) ax.index = int(k);
        const Vector ref = ax.index >= 0 ? Vector(spec.Q.col(ax.index)) : e;
        for (int i = 0; i < p; ++i) ax.gamma(i) = ref.dot(w.col(i));
        ax.dir = ref;
        ax.speed = w.col(0).norm();
        ax.ok = true;
        return ax;
    };

    const Axis x = analyze(sys.A1, "A1");
    if (!x.ok) return rep;
    const Axis y = analyze(sys.A2, "A2");
    if (!y.ok) return rep;
    rep.h1_holds = true;
    rep.gamma1 = x.gamma;
    rep.gamma2 = y.gamma;
    rep.i1 = x.index;
    rep.i2 = y.index;
    rep.a = x.speed;

    if (p != 1) {
        rep.failure = "kernel dimension is not 1";
        return rep;
    }
    if (!(x.speed > tol) || !(y.speed > tol)) {
        rep.failure = "a = 0";
        return rep;
    }
    if (std::abs(x.speed - y.speed) > tol * std::max(1.0, x.speed)) {
        rep.failure = "|A1 E_1| != |A2 E_1|";
        return rep;
    }
    if (x.index < 0 || y.index < 0 || x.index == y.index) {
        rep.failure = "A1 E_1 and A2 E_1 are not distinct basis columns";
        return rep;
    }
    const double l1 = spec.lambdas(x.index), l2 = spec.lambdas(y.index);
    if (std::abs(l1 - l2) > tol * std::max(1.0, std::abs(l1))) {
        rep.failure = "lambda_{i1} != lambda_{i2}";
        return rep;
    }
    if (x.gamma(0) < 0 || y.gamma(0) < 0) {
        rep.failure = "basis orientation: A_k E_1 = -a E_{i_k}";
        return rep;
    }
    rep.h2_holds = true;
    rep.lambda = l1;
    return rep;
}

void require_h2(const StructureReport& report)
{
    if (!report.h2_holds)
        throw Error(Errc::StructureViolation, report.failure.empty() ? "H2 does not hold" : report.failure);
}

DiffusionLimit diffusion_limit(const StructureReport& report, const SpectralData& spec)
{
    if (!report.h1_holds) throw Error(Errc::StructureViolation, report.failure);
    DiffusionLimit out;
    out.K1 = report.gamma1 * report.gamma1.transpose();
    out.K2 = report.gamma2 * report.gamma2.transpose();
    if (report.i1 >= 0) out.lambda1 = spec.lambdas(report.i1);
    if (report.i2 >= 0) out.lambda2 = spec.lambdas(report.i2);
    if (report.h2_holds) out.scalar = report.a * report.a / report.lambda;
    return out;
}

Decomposition decompose(const FriedrichsSystem& sys, const SpectralData& spec, const StructureReport& report)
{
    require_h2(report);
    if (report.i1 != 1 || report.i2 != 2)
        throw Error(Errc::StructureViolation, "E_2, E_3 must be A1 E_1 / a and A2 E_1 / a");
    const auto n = Eigen::Index(sys.n);
    const double a = report.a;
    Decomposition d;

    auto rotate = [&](const Matrix& m, Eigen::Index hot) {
        Matrix r = spec.Q.transpose() * m * spec.Q;
        r = 0.5 * (r + r.transpose()).eval();
        const double scale = std::max(1.0, r.cwiseAbs().maxCoeff());
        for (Eigen::Index k = 0; k < n; ++k) {
            const double want = (k == hot) ? a : 0.0;
            if (std::abs(r(0, k) - want) > 1e-10 * scale)
                throw Error(Errc::StructureViolation, "first row of A' is not (0, a, 0, ...)");
            r(0, k) = r(k, 0) = want;
        }
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index k = 0; k < n; ++k)
                if (std::abs(r(i, k)) < 1e-14 * scale) r(i, k) = 0.0;
        return r;
    };
    d.A1p = rotate(sys.A1, 1);
    d.A2p = rotate(sys.A2, 2);

    d.P1x = Matrix::Zero(n, n);
    d.P1x(0, 1) = d.P1x(1, 0) = a;
    d.P1y = Matrix::Zero(n, n);
    d.P1y(0, 2) = d.P1y(2, 0) = a;
    d.A1pp = d.A1p - d.P1x;
    d.A2pp = d.A2p - d.P1y;

    d.D = spec.lambdas.asDiagonal();
    d.Dp = Matrix::Zero(n, n);
    d.Dp(1, 1) = spec.lambdas(1);
    d.Dp(2, 2) = spec.lambdas(2);
    d.Dpp = d.D - d.Dp;
    return d;
}

PreparedSystem prepare(const FriedrichsSystem& sys)
{
    PreparedSystem ps;
    ps.sys = sys;
    ps.spec = spectral(sys);
    ps.report = check_structure(sys, ps.spec);
    ps.dec = decompose(sys, ps.spec, ps.report);
    return ps;
}

Field to_diagonal(const Field& u, const Matrix& q)
{
    if (u.rows() != q.rows()) throw Error(Errc::DimensionMismatch, "field has wrong component count");
    return q.transpose() * u;
}

Field from_diagonal(const Field& v, const Matrix& q)
{
    if (v.rows() != q.cols()) throw Error(Errc::DimensionMismatch, "field has wrong component count");
    return q * v;
}

Coefficients Coefficients::uniform(int n_cells, double epsilon, double sigma)
{
    Coefficients c;
    c.epsilon = epsilon;
    c.sigma = Vector::Constant(n_cells, sigma);
    c.sigma_a = Vector::Zero(n_cells);
    c.source = Vector::Zero(n_cells);
    return c;
}

void Coefficients::check(int n_cells) const
{
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw Error(Errc::BadCoefficient, "epsilon must be positive");
    if (sigma.size() != n_cells || sigma_a.size() != n_cells || source.size() != n_cells)
        throw Error(Errc::DimensionMismatch, "coefficient fields do not match the mesh");
    if (sigma.size() && (sigma.minCoeff() < 0.0 || sigma_a.minCoeff() < 0.0))
        throw Error(Errc::BadCoefficient, "opacities must be non-negative");
}

bool Coefficients::has_absorption_or_source() const
{
    return (sigma_a.size() && sigma_a.cwiseAbs().maxCoeff() > 0.0) ||
           (source.size() && source.cwiseAbs().maxCoeff() > 0.0);
}

void dump_system(std::ostream& os, const FriedrichsSystem& sys)
{
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << std::scientific;
    os.precision(17);
    os << "n " << sys.n << '\n';
    auto block = [&](const char* name, const Matrix& m) {
        os << name << '\n';
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index k = 0; k < m.cols(); ++k) os << (k ? " " : "") << m(i, k);
            os << '\n';
        }
    };
    block("A1", sys.A1);
    block("A2", sys.A2);
    block("R", sys.R);
    os.flags(flags);
    os.precision(prec);
}

} // namespace apfv
