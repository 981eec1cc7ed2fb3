#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "apfv/error.hpp"

namespace apfv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using SparseOperator = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Eigenvalues |lambda| below this fraction of the spectral radius are zero.
inline constexpr double kernel_threshold = 1e-10;

template <typename Scalar>
struct SymEigen {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;               // ascending
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> vectors; // columns
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
/// Eigenvalues come back in ascending order (stable for ties), so kernel
/// vectors of a PSD matrix are first.
template <typename Derived>
SymEigen<typename Derived::Scalar> sym_eigendecompose(const Eigen::MatrixBase<Derived>& m,
                                                      typename Derived::Scalar tol = 1e-12,
                                                      int max_sweeps = 64)
{
    using Scalar = typename Derived::Scalar;
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using std::abs;

    if (m.rows() != m.cols())
        throw Error(Errc::DimensionMismatch, "eigendecomposition needs a square matrix");
    const Eigen::Index n = m.rows();
    Mat a = m;
    const Scalar scale = std::max<Scalar>(Scalar(1), a.cwiseAbs().maxCoeff());
    const Scalar asym = n ? (a - a.transpose()).cwiseAbs().maxCoeff() : Scalar(0);
    if (asym > tol * scale)
        throw Error(Errc::NonSymmetric, "max|M - M^t| = " + std::to_string(double(asym)));
    a = Scalar(0.5) * (a + a.transpose()).eval();

    Mat v = Mat::Identity(n, n);
    const Scalar frob = a.norm();
    const Scalar target = Scalar(n) * std::numeric_limits<Scalar>::epsilon() * frob;

    auto off_norm = [&] {
        Scalar s = 0;
        for (Eigen::Index q = 0; q < n; ++q)
            for (Eigen::Index p = 0; p < q; ++p) s += a(p, q) * a(p, q);
        return std::sqrt(Scalar(2) * s);
    };

    bool converged = false;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        if (off_norm() <= target) {
            converged = true;
            break;
        }
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (a(p, q) == Scalar(0)) continue;
                Eigen::JacobiRotation<Scalar> j;
                j.makeJacobi(a, p, q);
                a.applyOnTheLeft(p, q, j.adjoint());
                a.applyOnTheRight(p, q, j);
                a(p, q) = a(q, p) = Scalar(0);
                v.applyOnTheRight(p, q, j);
            }
        }
    }
    if (!converged && off_norm() > target)
        throw Error(Errc::NoConvergence, "Jacobi sweeps exhausted");

    std::vector<Eigen::Index> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index(0));
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index x, Eigen::Index y) { return a(x, x) < a(y, y); });

    SymEigen<Scalar> out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values(i) = a(order[size_t(i)], order[size_t(i)]);
        out.vectors.col(i) = v.col(order[size_t(i)]);
    }
    return out;
}

struct PosNegParts {
    Matrix plus;
    Matrix minus;
};

/// G = G+ + G- with G+ PSD and G- NSD.
PosNegParts pos_neg_split(const Matrix& g, double tol = 1e-12);

/// Spectral radius of a symmetric matrix.
double spectral_radius(const Matrix& g);

struct SolveStats {
    int refinements = 0;
    bool used_krylov = false;
    double relative_residual = 0.0;
};

/// Direct sparse LU with iterative refinement; falls back to BiCGSTAB if the
/// factorization fails. The factorization is kept for repeated solves.
class SparseSolver {
public:
    SparseSolver() = default;
    explicit SparseSolver(const SparseOperator& a) { compute(a); }

    void compute(const SparseOperator& a);
    Vector solve(const Vector& b, double tol = 1e-12, int max_iter = 20,
                 SolveStats* stats = nullptr) const;
    Eigen::Index size() const { return a_.rows(); }

private:
    SparseOperator a_;
    Eigen::SparseLU<SparseOperator, Eigen::COLAMDOrdering<int>> lu_;
    bool lu_ok_ = false;
};

Vector solve_sparse(const SparseOperator& a, const Vector& b, double tol = 1e-12, int max_iter = 20,
                    SolveStats* stats = nullptr);

/// xorshift64* (shifts 12, 25, 27; multiplier 0x2545F4914F6CDD1D), seeded
/// through one splitmix64 round so that nearby seeds give unrelated streams.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next();
    double uniform(); // [0, 1), 53 bits
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::uint64_t state_;
};

} // namespace apfv
