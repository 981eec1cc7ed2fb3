#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "apfv/numerics.hpp"

namespace apfv {

/// dU/dt + (1/eps)(A1 dU/dx + A2 dU/dy) = -(sigma/eps^2) R U
struct FriedrichsSystem {
    int n = 0;
    Matrix A1, A2, R;
    std::string name;
};

/// Throws NonSymmetric, NotPSD or TrivialKernel.
void validate(const FriedrichsSystem& sys, double tol = 1e-12);

struct SpectralData {
    Matrix Q;       // columns E_1..E_n, kernel first
    Vector lambdas; // eigenvalue of each column
    int p = 0;      // kernel dimension
};

/// Eigenbasis of R. With a one-dimensional kernel and a nonzero flux, the
/// second and third columns are replaced by A1 E_1 / a and A2 E_1 / a and the
/// rest re-orthogonalized, so the basis does not depend on the eigensolver.
SpectralData spectral(const FriedrichsSystem& sys);

struct StructureReport {
    bool h1_holds = false;
    bool h2_holds = false;
    double a = 0.0;
    double lambda = 0.0;
    Vector gamma1, gamma2;
    int i1 = -1, i2 = -1;
    std::string failure; // first violated relation, empty when h2 holds
};

StructureReport check_structure(const FriedrichsSystem& sys, const SpectralData& spec, double tol = 1e-10);

/// Throws StructureViolation carrying report.failure unless h2 holds.
void require_h2(const StructureReport& report);

struct DiffusionLimit {
    Matrix K1, K2; // gamma^k (x) gamma^k, unscaled
    double lambda1 = 0.0, lambda2 = 0.0;
    std::optional<double> scalar; // a^2 / lambda; D = scalar / sigma
};

DiffusionLimit diffusion_limit(const StructureReport& report, const SpectralData& spec);

struct Decomposition {
    Matrix A1p, A2p;   // Q^t A_k Q
    Matrix P1x, P1y;   // heat blocks
    Matrix A1pp, A2pp; // A_k' - P1
    Matrix Dp, Dpp;    // diag(0, l, l, 0..), diag(0, 0, 0, l4..)
    Matrix D;
};

Decomposition decompose(const FriedrichsSystem& sys, const SpectralData& spec, const StructureReport& report);

/// Everything the schemes need about a model, computed once.
struct PreparedSystem {
    FriedrichsSystem sys;
    SpectralData spec;
    StructureReport report;
    Decomposition dec;

    int n() const { return sys.n; }
    double diffusion_scalar() const { return report.a * report.a / report.lambda; }
};

PreparedSystem prepare(const FriedrichsSystem& sys);

/// Fields are n x n_cells, one column per cell.
using Field = Matrix;

Field to_diagonal(const Field& u, const Matrix& q);
Field from_diagonal(const Field& v, const Matrix& q);

struct Coefficients {
    double epsilon = 1.0;
    Vector sigma;   // scattering, per cell
    Vector sigma_a; // absorption, per cell
    Vector source;  // Q, per cell

    static Coefficients uniform(int n_cells, double epsilon, double sigma);
    void check(int n_cells) const;
    bool has_absorption_or_source() const;
};

void dump_system(std::ostream& os, const FriedrichsSystem& sys);

} // namespace apfv
