// Command-line front end: run, study, demo-table1, export-mesh.
#include <CLI11.hpp>

#include "apfv/harness.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace apfv;

namespace {

void ensure_dir(const std::string& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(Errc::IoError, "cannot create " + dir + ": " + ec.message());
}

std::ofstream open_out(const std::string& path)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::IoError, "cannot write " + path);
    return f;
}

int cmd_run(const std::string& path)
{
    const RunConfig cfg = load_config(path);
    const CaseResult r = run_case(cfg);
    ensure_dir(cfg.output);
    const std::string dir = cfg.output + "/";
    emit_field(dir + "field.csv", r.mesh, r.problem.rho(r.run.field), r.run.field);
    {
        auto f = open_out(dir + "mesh.txt");
        write_mesh(f, r.mesh);
    }
    {
        auto f = open_out(dir + "norms.csv");
        char buf[64];
        f << "t,L2\n";
        for (const auto& s : r.run.norms) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", s.t, s.l2);
            f << buf;
        }
    }
    std::printf("%s on %s %dx%d: %d steps, dt = %.6g, t = %.6g, %.2f s\n", r.problem.name.c_str(),
                cfg.mesh.type.c_str(), cfg.mesh.nx, cfg.mesh.ny, r.run.steps, r.run.dt, r.run.t, r.seconds);
    if (r.errors) std::printf("L1 = %.6e  L2 = %.6e\n", r.errors->l1, r.errors->l2);
    std::printf("wrote %sfield.csv, %smesh.txt, %snorms.csv\n", dir.c_str(), dir.c_str(), dir.c_str());
    return 0;
}

int cmd_study(const std::string& path)
{
    const RunConfig cfg = load_config(path);
    const RunReport rep = convergence_study(cfg);
    ensure_dir(cfg.output);
    const std::string out = cfg.output + "/convergence.csv";
    {
        auto f = open_out(out);
        write_study_csv(f, rep);
    }
    std::printf("%s\n%6s %6s %12s %12s %8s %8s %8s\n", rep.problem.c_str(), "nx", "ny", "L1", "L2", "ord L1", "ord L2",
                "sec");
    for (const auto& row : rep.rows) {
        std::printf("%6d %6d %12.4e %12.4e ", row.nx, row.ny, row.errors.l1, row.errors.l2);
        if (row.order_l1) std::printf("%8.3f ", *row.order_l1);
        else std::printf("%8s ", "-");
        if (row.order_l2) std::printf("%8.3f ", *row.order_l2);
        else std::printf("%8s ", "-");
        std::printf("%8.2f\n", row.seconds);
    }
    std::printf("wrote %s\n", out.c_str());
    return 0;
}

int cmd_table1()
{
    const Table1Report r = table1_demo();
    print_table1(std::cout, r);
    const bool ok = r.find("ap", 50).errors.l1 < r.find("upwind", 500).errors.l1;
    std::cout << (ok ? "AP at 50 cells beats upwind at 500 cells\n" : "AP at 50 cells does NOT beat upwind at 500 cells\n");
    return 0;
}

int cmd_export(const std::string& type, int nx, int ny, std::uint64_t seed, const std::string& path)
{
    const Mesh m = build_mesh(type, nx, ny, seed);
    auto f = open_out(path);
    write_mesh(f, m);
    f.flush();
    if (!f) throw Error(Errc::IoError, "write failed for " + path);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Asymptotic-preserving finite volumes for linear Friedrichs systems"};
    app.require_subcommand(1);

    std::string config;
    auto* run = app.add_subcommand("run", "run one configured case and write field, mesh and norm files");
    run->add_option("config", config, "config file")->required();
    auto* study = app.add_subcommand("study", "convergence study over study.refinements");
    study->add_option("config", config, "config file")->required();
    auto* demo = app.add_subcommand("demo-table1", "AP scheme against full-system upwinding, eps = 1e-3");

    std::string type, path;
    int nx = 0, ny = 0;
    std::uint64_t seed = 0;
    auto* exp = app.add_subcommand("export-mesh", "write a generated mesh");
    exp->add_option("type", type, "cartesian, random_quad, smooth, kershaw, triangular, random_triangular")->required();
    exp->add_option("nx", nx)->required();
    exp->add_option("ny", ny)->required();
    exp->add_option("seed", seed)->required();
    exp->add_option("path", path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*run) return cmd_run(config);
        if (*study) return cmd_study(config);
        if (*demo) return cmd_table1();
        if (*exp) return cmd_export(type, nx, ny, seed, path);
    } catch (const Error& e) {
        std::cerr << "apfv: " << e.what() << '\n';
        return is_config_error(e.code()) || e.code() == Errc::IoError ? 2 : 3;
    } catch (const std::exception& e) {
        std::cerr << "apfv: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
