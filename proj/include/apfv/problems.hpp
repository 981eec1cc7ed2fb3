#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "apfv/schemes.hpp"

namespace apfv {

/// (1 / (4 pi D t)) exp(-|x - x0|^2 / (4 D t)); throws BadTime for t <= 0.
double heat_kernel(double D, double t, const Vec2& x, const Vec2& x0);

/// Which scalar a run is judged by.
enum class Observable {
    First, // U_1
    Mean,  // average of all U_i
};

struct Problem {
    std::string name;
    PreparedSystem system;
    Coefficients coeffs;
    BoundaryKind bc = BoundaryKind::Vacuum;
    Field initial_u; // original variables, n x cells
    double t_final = 0.0;
    Observable observable = Observable::First;
    std::function<double(const Vec2&, double)> exact; // empty when there is no closed form

    bool has_analytic() const { return bool(exact); }
    /// Initial data in diagonal variables.
    Field initial() const { return to_diagonal(initial_u, system.spec.Q); }
    /// Observable per cell from a diagonal-variable field.
    Vector rho(const Field& v) const;
};

/// Heat-kernel data started at t0 = 0.01 with sigma = 1 and vacuum walls.
/// S_N: every U_i starts at the kernel, observable is their mean.
/// P_N and p1: U_1 starts at the kernel. D is the model's limit coefficient.
Problem diffusion_case(const std::string& model, const Mesh& mesh, double epsilon = 1e-6);

/// S_2, sigma = 0, eps = 1: indicator of [0.4, 0.6]^2 in U_1 moving with (1, 0).
Problem transport_case_1(const Mesh& mesh);
/// S_2, sigma = 0, eps = 1: the same Gaussian in every U_i, moving along the
/// four directions; the observable is their mean.
Problem transport_case_2(const Mesh& mesh);
/// S_2, sigma = 1, eps = 1: unit mass of every U_i in the cell holding (1, 1).
Problem transport_case_3(const Mesh& mesh);
/// P_1 or P_3 (model "p1" or "p3"): unit mass of U_1 in the cell holding (1, 1), T = 1.
Problem pn_fundamental(const std::string& model, const Mesh& mesh);

struct LatticeSquare {
    int x, y; // lower-left corner
};
/// Absorbing squares other than the central source square.
std::vector<LatticeSquare> lattice_absorbers();
/// Checkerboard on [0, 7]^2; throws MeshTooCoarse unless every unit square
/// holds at least one cell center.
Problem lattice_problem(const std::string& model, const Mesh& mesh);

/// Domain the named problem is posed on.
Rect problem_domain(const std::string& spec);
/// diffusion:<model>, transport1, transport2, transport3, fundamental:<p1|p3>, lattice:<p1|p3>
Problem make_problem(const std::string& spec, const Mesh& mesh, double epsilon = 1e-6);

struct ErrorNorms {
    double l1 = 0.0, l2 = 0.0;
};

/// Cell-center comparison with the closed form at time t. Throws NoAnalytic.
ErrorNorms error_norms(const Mesh& mesh, const Problem& p, const Field& v, double t);
ErrorNorms error_norms(const Mesh& mesh, const Vector& rho, const std::function<double(const Vec2&)>& exact);

} // namespace apfv
