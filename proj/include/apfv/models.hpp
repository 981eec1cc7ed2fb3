#pragma once

#include <string>
#include <vector>

#include "apfv/system.hpp"

namespace apfv {

/// Hyperbolic heat equation in (p, u_x, u_y) with wave coefficient a and
/// relaxation eigenvalue lambda.
FriedrichsSystem heat_p1_system(double a, double lambda);

struct PnCoefficients {
    double A, B, C, D, E, F;
};
PnCoefficients pn_coefficients(int l, int m);

struct PnIndex {
    int l, m;
};
/// m-major ordering: (0,0) (1,0) .. (N,0) (1,1) .. (N,1) .. (N,N).
std::vector<PnIndex> pn_indices(int N);

/// Symmetrized 2-D P_N system; N odd.
FriedrichsSystem pn_system(int N);

struct Quadrature {
    std::vector<Vec2> directions;
    std::vector<double> weights;
    double Dc = 0.5;
};

/// n equally weighted directions on the unit circle at angles 2 pi i / n.
Quadrature sn_quadrature(int n);
FriedrichsSystem sn_system(const Quadrature& q);

/// Parses p1, pn:<N>, sn:<n>, s2.
FriedrichsSystem model_from_string(const std::string& name);

/// rho_j = (U_j, E_1).
Vector first_moment(const Field& u, const SpectralData& spec);

} // namespace apfv
