#include <doctest.h>

#include "apfv/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace apfv;

namespace {

Errc code_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an apfv::Error");
    return Errc::IoError;
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream s(line);
    std::string cell;
    while (std::getline(s, cell, ',')) out.push_back(cell);
    return out;
}

} // namespace

TEST_CASE("empty config gives the defaults")
{
    for (const char* text : {"", "\n\n  # nothing here\n"}) {
        const RunConfig c = parse_config(text);
        const RunConfig d;
        CHECK(c.problem == d.problem);
        CHECK(c.model == d.model);
        CHECK(c.mesh.nx == d.mesh.nx);
        CHECK(c.mode == d.mode);
        CHECK(!c.epsilon);
        CHECK(c.refinements.empty());
        CHECK(c.problem_spec() == "diffusion:s2");
    }
}

TEST_CASE("config values, sections and dotted keys")
{
    const RunConfig c = parse_config(R"(
# diffusion study
model = "pn:3"   # trailing comment
scheme = jlb+rusanov
epsilon = 1e-6
[mesh]
type = kershaw
nx = 8
ny = 12
seed = 7
[time]
mode = semi_implicit
dt = half_h2
[study]
refinements = [40, 80, 160]
)");
    CHECK(c.model == "pn:3");
    CHECK(c.scheme == "jlb+rusanov");
    CHECK(*c.epsilon == 1e-6);
    CHECK(c.mesh.type == "kershaw");
    CHECK(c.mesh.ny == 12);
    CHECK(c.mesh.seed == 7);
    CHECK(c.mode == TimeMode::SemiImplicit);
    CHECK(c.dt_half_h2);
    CHECK(c.refinements == std::vector<int>{40, 80, 160});

    const RunConfig d = parse_config("time.mode = explicit\nmesh.nx = 3\n");
    CHECK(d.mode == TimeMode::Explicit);
    CHECK(d.mesh.nx == 3);
}

TEST_CASE("serialize and parse round-trip")
{
    RunConfig c;
    c.model = "s2";
    c.problem = "transport1";
    c.boundary = "periodic";
    c.epsilon = 0.1 + 0.2;
    c.sigma = 1.0 / 3.0;
    c.mesh.type = "random_triangular";
    c.mesh.seed = 123456789;
    c.mode = TimeMode::Explicit;
    c.cfl_safety = 0.45;
    c.dt = 1e-3 / 7;
    c.t_final = 0.125;
    c.output = "dir with \"quotes\"";
    c.refinements = {20, 40};
    const RunConfig r = parse_config(serialize_config(c));
    CHECK(serialize_config(r) == serialize_config(c));
    CHECK(*r.epsilon == *c.epsilon);
    CHECK(*r.dt == *c.dt);
    CHECK(r.output == c.output);
    CHECK(r.mesh.seed == c.mesh.seed);

    const RunConfig m = parse_config("model = \"s2\"\n");
    CHECK(parse_config(serialize_config(m)).model == "s2");
}

TEST_CASE("config errors")
{
    CHECK(code_of([] { parse_config("epsilon = -1\n"); }) == Errc::InvalidConfig);
    CHECK(code_of([] { parse_config("sigma = -0.5\n"); }) == Errc::InvalidConfig);
    CHECK(code_of([] { parse_config("colour = red\n"); }) == Errc::UnknownKey);
    CHECK(code_of([] { parse_config("[mesh]\nshape = 3\n"); }) == Errc::UnknownKey);
    CHECK(code_of([] { parse_config("model = \"s2\"\nmodel = \"p1\"\n"); }) == Errc::ParseError);
    CHECK(code_of([] { parse_config("time.mode = rk4\n"); }) == Errc::InvalidConfig);
    CHECK(code_of([] { parse_config("problem = fundamental\nmodel = s2\n"); }) == Errc::UnknownModel);
    CHECK(code_of([] { parse_config("problem = transport1:s2\n"); }) == Errc::InvalidConfig);
    CHECK(code_of([] { parse_config("scheme = centered\n"); }) == Errc::InvalidConfig);
    CHECK(code_of([] { parse_config("boundary = open\n"); }) == Errc::UnsupportedBC);
    CHECK(code_of([] { parse_config("[mesh]\nnx = 0\n"); }) == Errc::BadResolution);

    try {
        parse_config("model = \"s2\"\n\n[mesh]\nnx = 4x\n");
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ParseError);
        CHECK(std::string(e.what()).find("line 4, column 6") != std::string::npos);
    }
    try {
        parse_config("model \"s2\"\n");
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("line 1, column 7") != std::string::npos);
    }
    CHECK(code_of([] { parse_config("[mesh\n"); }) == Errc::ParseError);
    CHECK(code_of([] { parse_config("model = \"s2\n"); }) == Errc::ParseError);
    CHECK(code_of([] { parse_config("[study]\nrefinements = [40, , 80]\n"); }) == Errc::ParseError);
    CHECK(code_of([] { load_config("/nonexistent/apfv.cfg"); }) == Errc::IoError);
}

TEST_CASE("convergence orders")
{
    // Synthetic e = C h^q.
    for (double q : {0.5, 1.0, 2.0, 2.7}) {
        const double hc = 1.0 / 40, hf = 1.0 / 80;
        CHECK(std::abs(*convergence_order(3.0 * std::pow(hc, q), 3.0 * std::pow(hf, q), hc, hf) - q) < 1e-12);
    }
    CHECK(!convergence_order(0.0, 1e-3, 0.1, 0.05));
    CHECK(!convergence_order(1e-3, 0.0, 0.1, 0.05));
    CHECK(!convergence_order(-1.0, 1e-3, 0.1, 0.05));
}

TEST_CASE("convergence study csv")
{
    RunConfig c = parse_config("problem = transport2\n[mesh]\nnx = 10\nny = 10\n[time]\nmode = explicit\n"
                               "t_final = 0.05\n[study]\nrefinements = 10, 20\n");
    const RunReport rep = convergence_study(c);
    REQUIRE(rep.rows.size() == 2);
    CHECK(rep.rows[0].h == 0.1);
    CHECK(rep.rows[1].nx == 20);
    CHECK(!rep.rows[0].order_l1);
    REQUIRE(rep.rows[1].order_l1);
    CHECK(*rep.rows[1].order_l1 == doctest::Approx(std::log(rep.rows[0].errors.l1 / rep.rows[1].errors.l1) / std::log(2.0)));
    CHECK(rep.rows[1].norms.size() > 1);

    std::ostringstream os;
    write_study_csv(os, rep);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "nx,ny,h,L1,L2,order_L1,order_L2");
    std::getline(is, line);
    CHECK(std::count(line.begin(), line.end(), ',') == 6);
    CHECK(line.substr(line.size() - 2) == ",,"); // first row has no orders
    std::getline(is, line);
    CHECK(split(line).size() == 7);

    // Parallel runs give the same table.
    setenv("APFV_THREADS", "2", 1);
    std::ostringstream par;
    write_study_csv(par, convergence_study(c));
    unsetenv("APFV_THREADS");
    CHECK(par.str() == os.str());

    c.problem = "transport3";
    CHECK(code_of([&] { convergence_study(c); }) == Errc::NoAnalytic);
}

TEST_CASE("field csv")
{
    const Mesh m = build_mesh("random_quad", 6, 5, 3);
    Field v(3, m.num_cells());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = std::sin(1.0 + i) / 3.0 * std::pow(10.0, double(i % 7) - 3);
    const Vector rho = v.row(0).transpose() * M_PI;

    const auto dir = std::filesystem::temp_directory_path() / "apfv_test_field";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "f.csv").string();
    emit_field(path, m, rho, v);

    std::ifstream f(path, std::ios::binary);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    CHECK(text.find('\r') == std::string::npos);
    std::istringstream is(text);
    std::string line;
    std::getline(is, line);
    CHECK(line == "cell_id,xc,yc,area,rho,V_1,V_2,V_3");
    int rows = 0;
    bool exact = true;
    while (std::getline(is, line)) {
        const auto c = split(line);
        REQUIRE(c.size() == 8);
        const int j = std::stoi(c[0]);
        exact = exact && j == rows && std::stod(c[1]) == m.center(j).x() && std::stod(c[3]) == m.area(j) &&
                std::stod(c[4]) == rho(j);
        for (int i = 0; i < 3; ++i) exact = exact && std::stod(c[size_t(5 + i)]) == v(i, j);
        ++rows;
    }
    CHECK(exact);
    CHECK(rows == m.num_cells());

    // Zero field, zero rho column.
    std::ostringstream z;
    write_field_csv(z, m, Vector::Zero(m.num_cells()), Field::Zero(3, m.num_cells()));
    std::istringstream zs(z.str());
    std::getline(zs, line);
    while (std::getline(zs, line)) CHECK(split(line)[4] == "0");

    CHECK(code_of([&] { emit_field((dir / "missing" / "f.csv").string(), m, rho, v); }) == Errc::IoError);
    CHECK(code_of([&] { write_field_csv(z, m, Vector::Zero(3), v); }) == Errc::DimensionMismatch);
    std::filesystem::remove_all(dir);
}

TEST_CASE("runs are reproducible")
{
    const RunConfig c = parse_config("problem = transport3\n[mesh]\ntype = random_triangular\nnx = 12\nny = 12\n"
                                     "seed = 5\n[time]\nmode = explicit\nt_final = 0.05\n");
    const CaseResult a = run_case(c), b = run_case(c);
    std::ostringstream sa, sb;
    write_field_csv(sa, a.mesh, a.problem.rho(a.run.field), a.run.field);
    write_field_csv(sb, b.mesh, b.problem.rho(b.run.field), b.run.field);
    CHECK(sa.str() == sb.str());
    CHECK(!a.errors);
    CHECK(a.run.t == 0.05);
}

TEST_CASE("overrides reach the run")
{
    const RunConfig c = parse_config("problem = diffusion\nmodel = p1\nepsilon = 0.5\nsigma = 2\nboundary = reflective\n"
                                     "[mesh]\nnx = 8\nny = 8\n[time]\nt_final = 0.001\n");
    const CaseResult r = run_case(c);
    CHECK(r.problem.coeffs.epsilon == 0.5);
    CHECK(r.problem.coeffs.sigma.minCoeff() == 2.0);
    CHECK(r.problem.bc == BoundaryKind::Reflective);
    CHECK(r.mesh.info().domain.x1 == 4.0);
    CHECK(r.errors);
}

TEST_CASE("demo-table1 ordering")
{
    const Table1Report r = table1_demo();
    std::ostringstream os;
    print_table1(os, r);
    MESSAGE(os.str());
    REQUIRE(r.rows.size() == 4);
    const auto& ap50 = r.find("ap", 50);
    const auto& ap500 = r.find("ap", 500);
    const auto& up50 = r.find("upwind", 50);
    const auto& up500 = r.find("upwind", 500);
    CHECK(ap50.errors.l1 < up500.errors.l1);
    CHECK(ap50.errors.l2 < up500.errors.l2);
    CHECK(ap500.errors.l1 < ap50.errors.l1);
    CHECK(up500.errors.l1 < up50.errors.l1);
}
