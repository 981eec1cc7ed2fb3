#include <doctest.h>

#include "apfv/models.hpp"
#include "apfv/system.hpp"

#include <sstream>

using namespace apfv;

namespace {

const double s2 = 1.0 / std::sqrt(2.0);

Errc code_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return Errc::IoError;
}

FriedrichsSystem s2_system() { return sn_system(sn_quadrature(4)); }

} // namespace

TEST_CASE("validation")
{
    CHECK_NOTHROW(validate(s2_system()));
    FriedrichsSystem s = heat_p1_system(1, 1);
    s.R = -Matrix::Identity(3, 3);
    CHECK(code_of([&] { validate(s); }) == Errc::NotPSD);
    s.R = Matrix::Identity(3, 3);
    CHECK(code_of([&] { validate(s); }) == Errc::TrivialKernel);
    s = heat_p1_system(1, 1);
    s.A2(0, 1) = 0.5;
    CHECK(code_of([&] { validate(s); }) == Errc::NonSymmetric);
}

TEST_CASE("S_2 eigenbasis matches the printed orthogonal matrix")
{
    const auto spec = spectral(s2_system());
    Matrix q(4, 4);
    q << 0.5, s2, 0, 0.5,
         0.5, 0, s2, -0.5,
         0.5, -s2, 0, 0.5,
         0.5, 0, -s2, -0.5;
    CHECK(spec.p == 1);
    CHECK((spec.Q - q).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(spec.lambdas(0) == 0.0);
    for (int i = 1; i < 4; ++i) CHECK(std::abs(spec.lambdas(i) - 1) < 1e-14);
    CHECK((spec.Q.transpose() * s2_system().R * spec.Q - Matrix(spec.lambdas.asDiagonal())).cwiseAbs().maxCoeff() <
          1e-10);
}

TEST_CASE("P_3 eigenbasis is a permutation")
{
    const auto spec = spectral(pn_system(3));
    CHECK(spec.p == 1);
    CHECK(spec.lambdas(0) == 0.0);
    for (int i = 1; i < 10; ++i) CHECK(std::abs(spec.lambdas(i) - 1) < 1e-15);
    CHECK((spec.Q.cwiseAbs().colwise().sum() - Eigen::RowVectorXd::Ones(10)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((spec.Q.cwiseAbs().rowwise().sum() - Vector::Ones(10)).cwiseAbs().maxCoeff() < 1e-15);
    // E_2 = e_(1,0), E_3 = e_(1,1)
    CHECK(spec.Q(1, 1) == 1.0);
    CHECK(spec.Q(4, 2) == 1.0);
}

TEST_CASE("structure checks")
{
    auto s = s2_system();
    auto rep = check_structure(s, spectral(s));
    CHECK(rep.h1_holds);
    CHECK(rep.h2_holds);
    CHECK(std::abs(rep.a - s2) < 1e-14);
    CHECK(std::abs(rep.lambda - 1) < 1e-14);
    CHECK(rep.i1 == 1);
    CHECK(rep.i2 == 2);

    auto p3 = pn_system(3);
    rep = check_structure(p3, spectral(p3));
    CHECK(rep.h2_holds);
    CHECK(std::abs(rep.a - 1 / std::sqrt(3.0)) < 1e-14);
    CHECK(std::abs(rep.lambda - 1) < 1e-14);

    auto h = heat_p1_system(2.0, 3.0);
    rep = check_structure(h, spectral(h));
    CHECK(rep.h2_holds);
    CHECK(std::abs(rep.a - 2) < 1e-14);
    CHECK(std::abs(rep.lambda - 3) < 1e-14);

    FriedrichsSystem z = h;
    z.A1.setZero();
    z.A2.setZero();
    rep = check_structure(z, spectral(z));
    CHECK(rep.h1_holds);
    CHECK(!rep.h2_holds);
    CHECK(rep.a == 0.0);
    CHECK(rep.gamma1.isZero(0));
    CHECK(code_of([&] { require_h2(rep); }) == Errc::StructureViolation);
}

TEST_CASE("diffusion coefficients")
{
    auto scalar = [](const FriedrichsSystem& s) {
        const auto spec = spectral(s);
        return *diffusion_limit(check_structure(s, spec), spec).scalar;
    };
    CHECK(std::abs(scalar(s2_system()) - 0.5) < 1e-13);
    CHECK(std::abs(scalar(sn_system(sn_quadrature(16))) - 0.5) < 1e-13);
    CHECK(std::abs(scalar(pn_system(3)) - 1.0 / 3.0) < 1e-13);
    CHECK(std::abs(scalar(pn_system(1)) - 1.0 / 3.0) < 1e-13);
    CHECK(std::abs(scalar(heat_p1_system(1, 1)) - 1.0) < 1e-13);

    const auto s = pn_system(5);
    const auto spec = spectral(s);
    const auto lim = diffusion_limit(check_structure(s, spec), spec);
    Rng rng(1);
    for (int i = 0; i < 10; ++i) {
        Vector x(1);
        x(0) = rng.uniform(-1, 1);
        CHECK(x.dot(lim.K1 * x) >= -1e-14);
        CHECK(x.dot(lim.K2 * x) >= -1e-14);
    }
}

TEST_CASE("S_2 decomposition")
{
    const auto ps = prepare(s2_system());
    const auto& d = ps.dec;
    Matrix a1p(4, 4), a2p(4, 4);
    a1p << 0, s2, 0, 0,
           s2, 0, 0, s2,
           0, 0, 0, 0,
           0, s2, 0, 0;
    a2p << 0, 0, s2, 0,
           0, 0, 0, 0,
           s2, 0, 0, -s2,
           0, 0, -s2, 0;
    CHECK((d.A1p - a1p).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((d.A2p - a2p).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(d.P1x + d.A1pp == d.A1p);
    CHECK(d.P1y + d.A2pp == d.A2p);
    CHECK(d.A1pp.row(0).isZero(0));
    CHECK(d.A1pp.col(0).isZero(0));
    CHECK(d.A2pp.row(0).isZero(0));
    CHECK(d.A2pp.col(0).isZero(0));
    CHECK(d.Dp + d.Dpp == d.D);
    CHECK((d.Dp - Matrix(Vector(Eigen::Vector4d(0, 1, 1, 0)).asDiagonal())).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((d.Dpp - Matrix(Vector(Eigen::Vector4d(0, 0, 0, 1)).asDiagonal())).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(std::abs(spectral_radius(d.A1pp) - s2) < 1e-14);
}

TEST_CASE("decomposition reassembles the original matrices")
{
    for (const auto& sys : {s2_system(), sn_system(sn_quadrature(8)), pn_system(3), pn_system(5), heat_p1_system(0.7, 2)}) {
        const auto ps = prepare(sys);
        CHECK((ps.spec.Q * (ps.dec.P1x + ps.dec.A1pp) * ps.spec.Q.transpose() - sys.A1).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((ps.spec.Q * (ps.dec.P1y + ps.dec.A2pp) * ps.spec.Q.transpose() - sys.A2).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(ps.dec.P1x(0, 1) == ps.report.a);
        CHECK(ps.dec.P1y(0, 2) == ps.report.a);
        CHECK(ps.dec.P1x.cwiseAbs().sum() == 2 * ps.report.a);
    }
}

TEST_CASE("diagonal variables")
{
    const auto ps = prepare(s2_system());
    Field u = Field::Ones(4, 1);
    const Field v = to_diagonal(u, ps.spec.Q);
    CHECK((v.col(0) - Eigen::Vector4d(2, 0, 0, 0)).norm() < 1e-15);
    CHECK(to_diagonal(u, Matrix::Identity(4, 4)) == u);

    Rng rng(4);
    Field w(4, 50);
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.uniform(-1, 1);
    CHECK((from_diagonal(to_diagonal(w, ps.spec.Q), ps.spec.Q) - w).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((first_moment(w, ps.spec) - to_diagonal(w, ps.spec.Q).row(0).transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(code_of([&] { to_diagonal(Field::Ones(3, 2), ps.spec.Q); }) == Errc::DimensionMismatch);
}

TEST_CASE("system dump")
{
    std::ostringstream os;
    dump_system(os, heat_p1_system(1, 1));
    const std::string s = os.str();
    CHECK(s.rfind("n 3\nA1\n", 0) == 0);
    CHECK(s.find("1.00000000000000000e+00") != std::string::npos);
}

TEST_CASE("coefficients")
{
    auto c = Coefficients::uniform(4, 1e-3, 2.0);
    CHECK_NOTHROW(c.check(4));
    CHECK(!c.has_absorption_or_source());
    c.epsilon = 0;
    CHECK(code_of([&] { c.check(4); }) == Errc::BadCoefficient);
    c.epsilon = 1;
    c.sigma(2) = -1;
    CHECK(code_of([&] { c.check(4); }) == Errc::BadCoefficient);
}
