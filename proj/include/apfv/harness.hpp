#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "apfv/problems.hpp"
#include "apfv/timeint.hpp"

namespace apfv {

struct MeshConfig {
    std::string type = "cartesian";
    int nx = 40, ny = 40;
    std::uint64_t seed = 1;
    double amplitude = 0.2; // random perturbations, in units of h
};

struct RunConfig {
    // "diffusion", "fundamental" and "lattice" take their model from `model`
    // unless the problem is already qualified, as in "diffusion:p1".
    std::string problem = "diffusion";
    std::string model = "s2";
    MeshConfig mesh;
    std::optional<double> epsilon; // default: the problem's own value
    std::optional<double> sigma;   // uniform override
    std::string scheme = "jlb+upwind";
    std::optional<std::string> boundary; // default: the problem's (vacuum)

    TimeMode mode = TimeMode::Implicit;
    double cfl_safety = 0.5;
    std::optional<double> dt;
    bool dt_half_h2 = false; // dt = h^2 / 2 whatever the mode
    std::optional<double> t_final;
    double solver_tol = 1e-10;

    std::string output = "out";
    std::vector<int> refinements; // nx per level; ny keeps the base ratio

    /// Problem string handed to make_problem.
    std::string problem_spec() const;
    /// InvalidConfig / UnknownModel / BadResolution on inconsistent values.
    void check() const;
};

/// key = value lines, optional [section] headers, # comments; see README.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

/// One run of the configured problem at the given resolution.
struct CaseResult {
    Mesh mesh;
    Problem problem;
    RunResult run;
    std::optional<ErrorNorms> errors; // when the problem has a closed form
    double seconds = 0.0;
};
CaseResult run_case(const RunConfig& cfg, int nx, int ny);
inline CaseResult run_case(const RunConfig& cfg) { return run_case(cfg, cfg.mesh.nx, cfg.mesh.ny); }

/// log(e_c / e_f) / log(h_c / h_f); empty unless both errors are positive.
std::optional<double> convergence_order(double e_coarse, double e_fine, double h_coarse, double h_fine);

struct StudyRow {
    int nx = 0, ny = 0;
    double h = 0.0; // 1 / nx
    ErrorNorms errors;
    std::optional<double> order_l1, order_l2; // against the previous row
    double seconds = 0.0;
    std::vector<NormSample> norms;
};

struct RunReport {
    std::string problem;
    std::vector<StudyRow> rows;
};

/// Runs every refinement level (concurrently when APFV_THREADS > 1) and
/// computes pairwise orders. Throws NoAnalytic for problems without a closed form.
RunReport convergence_study(const RunConfig& cfg);
void write_study_csv(std::ostream& os, const RunReport& report);

/// cell_id,xc,yc,area,rho,V_1..V_n at 17 significant digits.
void write_field_csv(std::ostream& os, const Mesh& mesh, const Vector& rho, const Field& v);
void emit_field(const std::string& path, const Mesh& mesh, const Vector& rho, const Field& v);

struct Table1Row {
    std::string scheme;
    int cells = 0;
    ErrorNorms errors;
    double seconds = 0.0;
};

struct Table1Report {
    double epsilon = 0.0;
    std::vector<Table1Row> rows; // AP 50, AP 500, upwind 50, upwind 500
    const Table1Row& find(const std::string& scheme, int cells) const;
};

/// Hyperbolic heat equation on a periodic strip at eps = 1e-3: the nodal AP
/// scheme against first-order upwinding of the whole stiff system.
Table1Report table1_demo(double epsilon = 1e-3);
void print_table1(std::ostream& os, const Table1Report& r);

/// Threads for independent runs, from APFV_THREADS (default 1).
int thread_count();

} // namespace apfv
