#include "apfv/numerics.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <string>

namespace apfv {

PosNegParts pos_neg_split(const Matrix& g, double tol)
{
    const auto eig = sym_eigendecompose(g, tol);
    const double rho = eig.values.cwiseAbs().maxCoeff();
    Vector pos = eig.values;
    for (Eigen::Index i = 0; i < pos.size(); ++i) {
        const double l = eig.values(i);
        pos(i) = (l > kernel_threshold * rho) ? l : 0.0;
    }
    PosNegParts out;
    out.plus = eig.vectors * pos.asDiagonal() * eig.vectors.transpose();
    out.plus = 0.5 * (out.plus + out.plus.transpose()).eval();
    // Exact zeros stay exact zeros: keeps block structure of G intact.
    for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index k = 0; k < g.cols(); ++k)
            if (std::abs(out.plus(i, k)) < 1e-15 * std::max(1.0, rho)) out.plus(i, k) = 0.0;
    out.minus = g - out.plus;
    return out;
}

double spectral_radius(const Matrix& g)
{
    if (g.size() == 0) return 0.0;
    return sym_eigendecompose(g).values.cwiseAbs().maxCoeff();
}

void SparseSolver::compute(const SparseOperator& a)
{
    if (a.rows() != a.cols()) throw Error(Errc::DimensionMismatch, "sparse solve needs a square matrix");
    a_ = a;
    a_.makeCompressed();
    lu_.compute(a_);
    lu_ok_ = (lu_.info() == Eigen::Success);
}

Vector SparseSolver::solve(const Vector& b, double tol, int max_iter, SolveStats* stats) const
{
    if (b.size() != a_.rows()) throw Error(Errc::DimensionMismatch, "right-hand side size");
    SolveStats local;
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        if (stats) *stats = local;
        return Vector::Zero(b.size());
    }

    Vector x;
    double res = 0.0;
    if (lu_ok_) {
        x = lu_.solve(b);
        Vector r = b - a_ * x;
        res = r.norm() / bnorm;
        while (res > tol && local.refinements < max_iter && std::isfinite(res)) {
            x += lu_.solve(r);
            r = b - a_ * x;
            res = r.norm() / bnorm;
            ++local.refinements;
        }
    }
    if (!lu_ok_ || !(res <= tol)) {
        Eigen::BiCGSTAB<SparseOperator, Eigen::IncompleteLUT<double>> krylov;
        krylov.setTolerance(tol);
        krylov.setMaxIterations(std::max(1000, 50 * max_iter));
        krylov.compute(a_);
        if (lu_ok_) x = krylov.solveWithGuess(b, x);
        else x = krylov.solve(b);
        res = (b - a_ * x).norm() / bnorm;
        local.used_krylov = true;
    }
    local.relative_residual = res;
    if (stats) *stats = local;
    if (!(res <= tol))
        throw Error(Errc::NoConvergence, "relative residual " + std::to_string(res));
    return x;
}

Vector solve_sparse(const SparseOperator& a, const Vector& b, double tol, int max_iter, SolveStats* stats)
{
    SparseSolver s(a);
    return s.solve(b, tol, max_iter, stats);
}

namespace {
std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}
} // namespace

Rng::Rng(std::uint64_t seed) : state_(splitmix64(seed))
{
    if (state_ == 0) state_ = 0x9E3779B97F4A7C15ull;
}

std::uint64_t Rng::next()
{
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1Dull;
}

double Rng::uniform()
{
    return double(next() >> 11) * 0x1.0p-53;
}

} // namespace apfv
