#include "apfv/models.hpp"

#include <charconv>
#include <cmath>

namespace apfv {

FriedrichsSystem heat_p1_system(double a, double lambda)
{
    if (!(a > 0.0) || !(lambda > 0.0)) throw Error(Errc::BadCoefficient, "a and lambda must be positive");
    FriedrichsSystem s;
    s.n = 3;
    s.name = "heat_p1";
    s.A1 = Matrix::Zero(3, 3);
    s.A2 = Matrix::Zero(3, 3);
    s.A1(0, 1) = s.A1(1, 0) = a;
    s.A2(0, 2) = s.A2(2, 0) = a;
    s.R = Vector(Eigen::Vector3d(0.0, lambda, lambda)).asDiagonal();
    return s;
}

namespace {
// sqrt(num / den) with a zero numerator giving exactly 0 whatever the sign of den.
double root_ratio(double num, double den)
{
    if (num == 0.0) return 0.0;
    return std::sqrt(num / den);
}
} // namespace

PnCoefficients pn_coefficients(int l, int m)
{
    if (m < 0 || m > l) throw Error(Errc::BadIndex, "need 0 <= m <= l");
    const double L = l, M = m;
    PnCoefficients c;
    c.A = root_ratio((L - M + 1) * (L + M + 1), (2 * L + 3) * (2 * L + 1));
    c.B = root_ratio((L - M) * (L + M), (2 * L + 1) * (2 * L - 1));
    c.C = root_ratio((L + M + 1) * (L + M + 2), (2 * L + 3) * (2 * L + 1));
    c.D = root_ratio((L - M) * (L - M - 1), (2 * L + 1) * (2 * L - 1));
    c.E = root_ratio((L - M + 1) * (L - M + 2), (2 * L + 3) * (2 * L + 1));
    c.F = root_ratio((L + M) * (L + M - 1), (2 * L + 1) * (2 * L - 1));
    return c;
}

std::vector<PnIndex> pn_indices(int N)
{
    std::vector<PnIndex> out;
    for (int m = 0; m <= N; ++m)
        for (int l = m; l <= N; ++l) out.push_back({l, m});
    return out;
}

FriedrichsSystem pn_system(int N)
{
    if (N < 1 || N % 2 == 0) throw Error(Errc::BadIndex, "P_N needs odd N >= 1");
    const auto idx = pn_indices(N);
    const int n = int(idx.size());
    auto at = [&](int l, int m) {
        if (m < 0 || l < 0 || m > l || l > N) return -1;
        int k = 0;
        for (int mm = 0; mm < m; ++mm) k += N - mm + 1;
        return k + (l - m);
    };

    // Unsymmetrized rows of the moment equations; A1 carries the polar-axis
    // terms, A2 the in-plane terms.
    Matrix a1 = Matrix::Zero(n, n), a2 = Matrix::Zero(n, n);
    auto put = [](Matrix& mat, int row, int col, double v) {
        if (col >= 0) mat(row, col) += v;
    };
    for (int row = 0; row < n; ++row) {
        const int l = idx[size_t(row)].l, m = idx[size_t(row)].m;
        if (l - 1 >= m) put(a1, row, at(l - 1, m), pn_coefficients(l - 1, m).A);
        if (l + 1 <= N) put(a1, row, at(l + 1, m), pn_coefficients(l + 1, m).B);
        if (m >= 1) {
            if (l - 1 >= m - 1 && l >= 1) put(a2, row, at(l - 1, m - 1), -0.5 * pn_coefficients(l - 1, m - 1).C);
            if (l + 1 <= N) put(a2, row, at(l + 1, m - 1), 0.5 * pn_coefficients(l + 1, m - 1).D);
            if (m + 1 <= l - 1) put(a2, row, at(l - 1, m + 1), 0.5 * pn_coefficients(l - 1, m + 1).E);
            if (l + 1 <= N) put(a2, row, at(l + 1, m + 1), -0.5 * pn_coefficients(l + 1, m + 1).F);
        } else {
            if (l - 1 >= 1) put(a2, row, at(l - 1, 1), pn_coefficients(l - 1, 1).E);
            if (l + 1 <= N) put(a2, row, at(l + 1, 1), -pn_coefficients(l + 1, 1).F);
        }
    }

    Vector s(n);
    for (int k = 0; k < n; ++k) s(k) = idx[size_t(k)].m == 0 ? 1.0 : -std::sqrt(2.0);
    const Matrix t1 = s.asDiagonal() * a1 * s.cwiseInverse().asDiagonal();
    const Matrix t2 = s.asDiagonal() * a2 * s.cwiseInverse().asDiagonal();
    const double asym = std::max((t1 - t1.transpose()).cwiseAbs().maxCoeff(),
                                 (t2 - t2.transpose()).cwiseAbs().maxCoeff());
    if (asym > 1e-12) throw Error(Errc::SymmetryFailure, "rescaled P_N matrices are not symmetric");

    FriedrichsSystem sys;
    sys.n = n;
    sys.name = "pn:" + std::to_string(N);
    sys.A1 = 0.5 * (t1 + t1.transpose());
    sys.A2 = 0.5 * (t2 + t2.transpose());
    sys.R = Matrix::Identity(n, n);
    sys.R(0, 0) = 0.0;
    return sys;
}

Quadrature sn_quadrature(int n)
{
    if (n < 4 || n % 4 != 0) throw Error(Errc::BadCount, "S_N needs a multiple of 4 directions");
    auto snap = [](double v) {
        for (double t : {-1.0, 0.0, 1.0})
            if (std::abs(v - t) < 1e-14) return t;
        return v;
    };
    Quadrature q;
    q.Dc = 0.5;
    for (int i = 0; i < n; ++i) {
        const double th = 2.0 * M_PI * i / n;
        q.directions.emplace_back(snap(std::cos(th)), snap(std::sin(th)));
        q.weights.push_back(1.0 / n);
    }
    return q;
}

FriedrichsSystem sn_system(const Quadrature& q)
{
    const int n = int(q.directions.size());
    if (n < 1 || q.weights.size() != size_t(n)) throw Error(Errc::BadCount, "quadrature size mismatch");
    Vector sw(n);
    double wsum = 0.0;
    Vec2 first = Vec2::Zero();
    Mat2 second = Mat2::Zero();
    for (int i = 0; i < n; ++i) {
        const double w = q.weights[size_t(i)];
        if (!(w > 0.0)) throw Error(Errc::BadCoefficient, "quadrature weights must be positive");
        sw(i) = std::sqrt(w);
        wsum += w;
        first += w * q.directions[size_t(i)];
        second += w * q.directions[size_t(i)] * q.directions[size_t(i)].transpose();
    }
    if (std::abs(wsum - 1.0) > 1e-13 || first.norm() > 1e-13 ||
        (second - q.Dc * Mat2::Identity()).cwiseAbs().maxCoeff() > 1e-12)
        throw Error(Errc::BadCoefficient, "quadrature violates the moment conditions");

    FriedrichsSystem sys;
    sys.n = n;
    sys.name = "sn:" + std::to_string(n);
    sys.A1 = Matrix::Zero(n, n);
    sys.A2 = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        sys.A1(i, i) = q.directions[size_t(i)].x();
        sys.A2(i, i) = q.directions[size_t(i)].y();
    }
    sys.R = Matrix::Identity(n, n) - sw * sw.transpose();
    return sys;
}

FriedrichsSystem model_from_string(const std::string& name)
{
    auto number = [&](size_t from) {
        int v = 0;
        const char* b = name.data() + from;
        const char* e = name.data() + name.size();
        auto [ptr, ec] = std::from_chars(b, e, v);
        if (ec != std::errc() || ptr != e || b == e) throw Error(Errc::UnknownModel, "bad model '" + name + "'");
        return v;
    };
    if (name == "p1") return heat_p1_system(1.0, 1.0);
    if (name == "s2") return sn_system(sn_quadrature(4));
    if (name.rfind("pn:", 0) == 0) return pn_system(number(3));
    if (name.rfind("sn:", 0) == 0) return sn_system(sn_quadrature(number(3)));
    throw Error(Errc::UnknownModel, "unknown model '" + name + "'");
}

Vector first_moment(const Field& u, const SpectralData& spec)
{
    if (u.rows() != spec.Q.rows()) throw Error(Errc::DimensionMismatch, "field has wrong component count");
    return (spec.Q.col(0).transpose() * u).transpose();
}

} // namespace apfv
