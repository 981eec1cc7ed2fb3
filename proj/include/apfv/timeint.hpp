#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "apfv/schemes.hpp"

namespace apfv {

enum class TimeMode { Explicit, Implicit, SemiImplicit };

TimeMode time_mode_from_string(const std::string& s);
std::string to_string(TimeMode m);

struct TimeConfig {
    TimeMode mode = TimeMode::Implicit;
    double cfl_safety = 0.5;
    std::optional<double> dt; // overrides the CFL rule
    double t_final = 0.01;
    double tol = 1e-10;  // implicit solver relative residual
    int max_iter = 20;   // refinement sweeps before the Krylov fallback

    void check() const; // InvalidConfig / BadTime
};

/// Step from the mode's stability rule, or the override. Throws ZeroTimestep.
double cfl_dt(const SpatialOperator& op, const TimeConfig& cfg);

/// Sum_j |Omega_j| |V_j|^2, square-rooted.
double l2_norm(const Mesh& mesh, const Field& v);
/// Sum_j |Omega_j| V_{j,1}.
double kernel_mass(const Mesh& mesh, const Field& v);

/// V + dt (L V + b)
Field step_explicit(const SpatialOperator& op, const Field& v, double dt);

/// Backward Euler with a single factorization of (I - dt L).
class ImplicitStepper {
public:
    ImplicitStepper(const SpatialOperator& op, double dt, double tol = 1e-10, int max_iter = 20);
    Field step(const Field& v) const;
    double dt() const { return dt_; }
    const SolveStats& last_stats() const { return stats_; }

private:
    const SpatialOperator& op_;
    double dt_, tol_;
    int max_iter_;
    SparseSolver solver_;
    Vector forcing_;
    mutable SolveStats stats_;
};

Field step_implicit(const SpatialOperator& op, const Field& v, double dt, double tol = 1e-10);

/// Explicit fluxes (edge fluxes damped per edge) with the stiff local terms
/// implicit: a 2x2 solve per cell for u, scalar divisions for components >= 4.
Field step_semi_implicit(const SpatialOperator& op, const Field& v, double dt);

struct NormSample {
    double t;
    double l2;
};

struct RunResult {
    Field field;
    double t = 0.0;
    double dt = 0.0;
    int steps = 0;
    std::vector<NormSample> norms;
};

using StepObserver = std::function<void(int step, double t, const Field& v)>;

/// Fixed step from 0 to t_final; the last step is shortened to land on t_final.
RunResult run(const SpatialOperator& op, const Field& v0, const TimeConfig& cfg, const StepObserver& obs = {});

} // namespace apfv
