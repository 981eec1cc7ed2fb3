#pragma once

#include <string>
#include <vector>

#include "apfv/mesh.hpp"
#include "apfv/system.hpp"

namespace apfv {

enum class BoundaryKind { Periodic, Reflective, Vacuum };
enum class FluxKind { Upwind, Rusanov };
// Rusanov speed: exact spectral radius per edge, or the maximum over all edges.
enum class SpeedRule { PerEdge, Global };

struct SchemeOptions {
    FluxKind flux = FluxKind::Upwind;
    SpeedRule speed = SpeedRule::PerEdge;
    BoundaryKind bc = BoundaryKind::Vacuum;
};

/// "jlb+upwind" or "jlb+rusanov".
FluxKind flux_from_string(const std::string& s);
BoundaryKind boundary_from_string(const std::string& s);
std::string to_string(FluxKind f);
std::string to_string(BoundaryKind b);

/// Mirror images used to close the node patch of a boundary node: one
/// reflection on a straight boundary, three images at a corner.
std::vector<Mat2> node_mirrors(const Mesh& mesh, int node);

/// Nodal asymptotic-preserving operator acting on (p, u) = (V_1, V_2, V_3).
class JlbOperator {
public:
    JlbOperator(const Mesh& mesh, double a, double lambda, const Coefficients& coeffs, BoundaryKind bc);

    /// out += P_h v; the full update, relaxation term included.
    void apply(const Field& v, Field& out) const;
    /// out += P_h v - (-K_j u_j): everything except the cell relaxation term.
    void apply_fluxes(const Field& v, Field& out) const;
    void add_triplets(std::vector<Triplet>& t, int n) const;

    Vec2 node_velocity(int r, const Field& v) const;
    const Mat2& node_matrix(int r) const { return m_[size_t(r)]; } // M_r
    const Mat2& node_alpha(int r) const { return a_sum_[size_t(r)]; } // A_r with images
    /// K_j = (a / (eps |Omega_j|)) sum_r alpha_jr (I - M_r)
    const Mat2& cell_relaxation(int j) const { return k_[size_t(j)]; }

private:
    struct Weight {
        int cell;
        Eigen::Matrix<double, 2, 3> w;
    };
    const Mesh& mesh_;
    double a_, eps_;
    std::vector<Mat2> m_, a_sum_;
    std::vector<int> w_offset_;
    std::vector<Weight> w_;
    std::vector<Mat2> k_;

    void node_velocities(const Field& v, std::vector<Vec2>& mu) const; // M_r u_r
};

/// Edge fluxes for the non-diffusive block A''.
class EdgeFluxOperator {
public:
    /// c_o is the reciprocal diffusion coefficient entering the damping
    /// M_jk = 2 S eps / (2 S eps + c_o sigma_jk d_jk).
    EdgeFluxOperator(const Mesh& mesh, const Decomposition& dec, const Coefficients& coeffs, SchemeOptions opt,
                     double c_o);

    /// out += A_h v, fluxes optionally multiplied by the per-edge damping M_jk.
    void apply(const Field& v, Field& out, bool damped = false) const;
    void add_triplets(std::vector<Triplet>& t, int n, bool damped = false) const;

    /// Speed used in the damping factor and Rusanov viscosity of edge e.
    double speed(int e) const { return speed_[size_t(e)]; }
    double damping(int e) const { return damping_[size_t(e)]; }
    const Matrix& g_plus(int e) const { return gp_[size_t(e)]; }
    const Matrix& g_minus(int e) const { return gm_[size_t(e)]; }
    bool trivial() const { return trivial_; }

private:
    const Mesh& mesh_;
    SchemeOptions opt_;
    double eps_;
    int n_;
    bool trivial_;
    std::vector<Matrix> gp_, gm_; // upwind: G+, G-; Rusanov: G, S P
    std::vector<double> speed_, damping_;
    std::vector<Matrix> ghost_; // per boundary edge: V_ghost = ghost * V_j
    std::vector<int> ghost_index_;
};

/// Full semi-discrete operator dV/dt = L V + b in diagonal variables.
/// Keeps a reference to the mesh, which must outlive it.
class SpatialOperator {
public:
    SpatialOperator(const Mesh& mesh, const PreparedSystem& ps, const Coefficients& coeffs, SchemeOptions opt);

    const Mesh& mesh() const { return mesh_; }
    const PreparedSystem& system() const { return ps_; }
    const Coefficients& coefficients() const { return coeffs_; }
    const SchemeOptions& options() const { return opt_; }
    int n() const { return ps_.n(); }
    int size() const { return n() * mesh_.num_cells(); }

    /// L v (no constant source).
    Field apply_linear(const Field& v) const;
    /// L v + b.
    Field apply(const Field& v) const;
    /// Sparse L; the constant source is forcing().
    SparseOperator assemble() const;
    Field forcing() const;

    const JlbOperator& jlb() const { return jlb_; }
    const EdgeFluxOperator& edges() const { return edges_; }

    /// Explicit part of the semi-implicit scheme: JL-(b) fluxes without the
    /// cell relaxation term, damped edge fluxes, absorption and source.
    Field apply_semi_explicit(const Field& v) const;
    /// Reciprocal diffusion coefficient used in the damping factors.
    double c_o() const { return ps_.report.lambda / (ps_.report.a * ps_.report.a); }

    /// Largest characteristic speed over sampled directions.
    double max_speed() const { return c_max_; }

private:
    const Mesh& mesh_;
    PreparedSystem ps_;
    Coefficients coeffs_;
    SchemeOptions opt_;
    JlbOperator jlb_;
    EdgeFluxOperator edges_;
    Vector q_; // Q^t e_1
    double c_max_;

    void add_local(const Field& v, Field& out, bool include_relaxation) const;
};

/// Max spectral radius of A1 cos t + A2 sin t over `samples` angles.
double max_wave_speed(const FriedrichsSystem& sys, int samples = 64);

} // namespace apfv
