#include "apfv/harness.hpp"

#include "apfv/models.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace apfv {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool takes_model(const std::string& p) { return p == "diffusion" || p == "fundamental" || p == "lattice"; }

std::string fmt17(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// ---- config text ----

struct Token {
    std::string text;
    int line, col;
    bool quoted;
};

[[noreturn]] void parse_error(int line, int col, const std::string& msg)
{
    throw Error(Errc::ParseError, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg);
}

bool key_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }

double to_number(const Token& t)
{
    if (t.quoted) parse_error(t.line, t.col, "expected a number, got a string");
    const char* b = t.text.c_str();
    char* end = nullptr;
    const double x = std::strtod(b, &end);
    if (t.text.empty() || end != b + t.text.size()) parse_error(t.line, t.col, "expected a number, got '" + t.text + "'");
    return x;
}

long long to_integer(const Token& t)
{
    const double x = to_number(t);
    if (x != std::floor(x) || std::abs(x) > 9e15) parse_error(t.line, t.col, "expected an integer, got '" + t.text + "'");
    return static_cast<long long>(x);
}

std::vector<Token> split_list(const Token& t)
{
    std::string s = t.text;
    int col = t.col;
    if (!t.quoted && !s.empty() && s.front() == '[') {
        if (s.back() != ']') parse_error(t.line, t.col, "unterminated list");
        s = s.substr(1, s.size() - 2);
        ++col;
    }
    std::vector<Token> out;
    if (s.find_first_not_of(" \t") == std::string::npos) return out;
    size_t start = 0;
    while (start <= s.size()) {
        size_t stop = s.find(',', start);
        if (stop == std::string::npos) stop = s.size();
        size_t a = start, b = stop;
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        if (a == b) parse_error(t.line, col + int(a), "empty list entry");
        out.push_back({s.substr(a, b - a), t.line, col + int(a), false});
        start = stop + 1;
    }
    return out;
}

// Reads one `value` starting at pos; returns the raw token and the column after it.
Token read_value(const std::string& line, size_t pos, int lineno)
{
    const int col = int(pos) + 1;
    if (pos >= line.size()) parse_error(lineno, col, "missing value");
    if (line[pos] == '"') {
        std::string s;
        size_t i = pos + 1;
        for (; i < line.size() && line[i] != '"'; ++i) {
            if (line[i] == '\\') {
                if (++i == line.size()) break;
                if (line[i] != '"' && line[i] != '\\') parse_error(lineno, int(i) + 1, "unknown escape");
            }
            s += line[i];
        }
        if (i >= line.size()) parse_error(lineno, col, "unterminated string");
        size_t j = i + 1;
        while (j < line.size() && std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j < line.size() && line[j] != '#') parse_error(lineno, int(j) + 1, "unexpected text after string");
        return {s, lineno, col, true};
    }
    size_t end = line.find('#', pos);
    if (end == std::string::npos) end = line.size();
    while (end > pos && std::isspace(static_cast<unsigned char>(line[end - 1]))) --end;
    return {line.substr(pos, end - pos), lineno, col, false};
}

std::string quote(const std::string& s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

// ---- strip demo pieces ----

// First-order upwinding of the whole stiff system in original variables.
SparseOperator full_upwind(const Mesh& mesh, const FriedrichsSystem& sys, const Coefficients& c)
{
    const int n = sys.n;
    std::vector<Triplet> t;
    for (const Edge& e : mesh.edges()) {
        if (e.boundary()) throw Error(Errc::UnsupportedBC, "full upwind demo needs a periodic mesh");
        const Matrix g = (sys.A1 * e.normal.x() + sys.A2 * e.normal.y()) / c.epsilon;
        const auto pm = pos_neg_split(g);
        const double wj = e.length / mesh.area(e.cell), wk = e.length / mesh.area(e.neighbor);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                const double p = pm.plus(a, b), m = pm.minus(a, b);
                if (p != 0.0) {
                    t.emplace_back(e.cell * n + a, e.cell * n + b, -wj * p);
                    t.emplace_back(e.neighbor * n + a, e.cell * n + b, wk * p);
                }
                if (m != 0.0) {
                    t.emplace_back(e.cell * n + a, e.neighbor * n + b, -wj * m);
                    t.emplace_back(e.neighbor * n + a, e.neighbor * n + b, wk * m);
                }
            }
    }
    for (int j = 0; j < mesh.num_cells(); ++j)
        for (int a = 0; a < n; ++a)
            if (sys.R(a, a) != 0.0) t.emplace_back(j * n + a, j * n + a, -c.sigma(j) * sys.R(a, a) / (c.epsilon * c.epsilon));
    SparseOperator l(mesh.num_cells() * n, mesh.num_cells() * n);
    l.setFromTriplets(t.begin(), t.end());
    return l;
}

} // namespace

// ---- RunConfig ----

std::string RunConfig::problem_spec() const
{
    if (takes_model(problem)) return problem + ":" + model;
    return problem;
}

void RunConfig::check() const
{
    const auto colon = problem.find(':');
    const std::string head = problem.substr(0, colon);
    if (colon != std::string::npos) {
        if (!takes_model(head)) throw Error(Errc::InvalidConfig, "problem '" + problem + "' takes no model");
    } else if (!takes_model(problem) && problem != "transport1" && problem != "transport2" && problem != "transport3") {
        throw Error(Errc::InvalidConfig, "unknown problem '" + problem + "'");
    }
    const std::string m = colon == std::string::npos ? model : problem.substr(colon + 1);
    if (head == "diffusion") (void)model_from_string(m);
    else if ((head == "fundamental" || head == "lattice") && m != "p1" && m != "p3")
        throw Error(Errc::UnknownModel, head + " needs model p1 or p3, got '" + m + "'");

    (void)flux_from_string(scheme);
    if (boundary) (void)boundary_from_string(*boundary);
    static const char* types[] = {"cartesian", "random_quad", "smooth", "kershaw", "triangular", "random_triangular"};
    if (std::find(std::begin(types), std::end(types), mesh.type) == std::end(types))
        throw Error(Errc::InvalidConfig, "unknown mesh type '" + mesh.type + "'");
    if (mesh.nx < 1 || mesh.ny < 1) throw Error(Errc::BadResolution, "mesh.nx and mesh.ny must be positive");
    if (!(mesh.amplitude >= 0.0 && mesh.amplitude < 0.5)) throw Error(Errc::InvalidConfig, "mesh.amplitude must lie in [0, 0.5)");
    if (epsilon && !(*epsilon > 0.0 && std::isfinite(*epsilon))) throw Error(Errc::InvalidConfig, "epsilon must be positive");
    if (sigma && !(*sigma >= 0.0 && std::isfinite(*sigma))) throw Error(Errc::InvalidConfig, "sigma must be >= 0");
    if (dt && dt_half_h2) throw Error(Errc::InvalidConfig, "time.dt given twice");
    TimeConfig tc;
    tc.mode = mode;
    tc.cfl_safety = cfl_safety;
    tc.dt = dt;
    tc.t_final = t_final.value_or(1.0);
    tc.tol = solver_tol;
    tc.check();
    for (int r : refinements)
        if (r < 1) throw Error(Errc::BadResolution, "refinement levels must be positive");
    if (output.empty()) throw Error(Errc::InvalidConfig, "output directory must not be empty");
}

RunConfig parse_config(const std::string& text)
{
    // Collect raw entries first so duplicate and unknown keys are reported with positions.
    std::map<std::string, Token> entries;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        size_t pos = 0;
        while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
        if (pos == line.size() || line[pos] == '#') continue;
        if (line[pos] == '[') {
            const size_t close = line.find(']', pos);
            if (close == std::string::npos) parse_error(lineno, int(pos) + 1, "missing ']'");
            section = line.substr(pos + 1, close - pos - 1);
            if (section.empty() || !std::all_of(section.begin(), section.end(), key_char))
                parse_error(lineno, int(pos) + 2, "bad section name");
            size_t j = close + 1;
            while (j < line.size() && std::isspace(static_cast<unsigned char>(line[j]))) ++j;
            if (j < line.size() && line[j] != '#') parse_error(lineno, int(j) + 1, "unexpected text after section");
            continue;
        }
        const size_t kstart = pos;
        while (pos < line.size() && key_char(line[pos])) ++pos;
        if (pos == kstart) parse_error(lineno, int(pos) + 1, "expected a key");
        const std::string key = line.substr(kstart, pos - kstart);
        while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
        if (pos >= line.size() || line[pos] != '=') parse_error(lineno, int(pos) + 1, "expected '='");
        ++pos;
        while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
        Token v = read_value(line, pos, lineno);
        const std::string full = section.empty() ? key : section + "." + key;
        if (entries.count(full)) parse_error(lineno, int(kstart) + 1, "duplicate key '" + full + "'");
        entries.emplace(full, std::move(v));
    }

    RunConfig c;
    auto str = [](const Token& t) { return t.text; };
    for (const auto& [key, t] : entries) {
        if (key == "problem") c.problem = str(t);
        else if (key == "model") c.model = str(t);
        else if (key == "scheme") c.scheme = str(t);
        else if (key == "boundary") c.boundary = str(t);
        else if (key == "output") c.output = str(t);
        else if (key == "epsilon") c.epsilon = to_number(t);
        else if (key == "sigma") c.sigma = to_number(t);
        else if (key == "mesh.type") c.mesh.type = str(t);
        else if (key == "mesh.nx") c.mesh.nx = int(to_integer(t));
        else if (key == "mesh.ny") c.mesh.ny = int(to_integer(t));
        else if (key == "mesh.seed") {
            const long long s = to_integer(t);
            if (s < 0) parse_error(t.line, t.col, "seed must be >= 0");
            c.mesh.seed = std::uint64_t(s);
        } else if (key == "mesh.amplitude") c.mesh.amplitude = to_number(t);
        else if (key == "time.mode") c.mode = time_mode_from_string(str(t));
        else if (key == "time.cfl_safety") c.cfl_safety = to_number(t);
        else if (key == "time.dt") {
            if (!t.quoted && t.text == "half_h2") c.dt_half_h2 = true;
            else c.dt = to_number(t);
        } else if (key == "time.t_final") c.t_final = to_number(t);
        else if (key == "time.tol") c.solver_tol = to_number(t);
        else if (key == "study.refinements") {
            for (const Token& r : split_list(t)) c.refinements.push_back(int(to_integer(r)));
        } else {
            throw Error(Errc::UnknownKey, "line " + std::to_string(t.line) + ": '" + key + "'");
        }
    }
    c.check();
    return c;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::IoError, "cannot read " + path);
    std::ostringstream s;
    s << f.rdbuf();
    return parse_config(s.str());
}

std::string serialize_config(const RunConfig& c)
{
    std::ostringstream o;
    o << "problem = " << quote(c.problem) << "\n";
    o << "model = " << quote(c.model) << "\n";
    o << "scheme = " << quote(c.scheme) << "\n";
    if (c.boundary) o << "boundary = " << quote(*c.boundary) << "\n";
    if (c.epsilon) o << "epsilon = " << fmt17(*c.epsilon) << "\n";
    if (c.sigma) o << "sigma = " << fmt17(*c.sigma) << "\n";
    o << "output = " << quote(c.output) << "\n";
    o << "\n[mesh]\n";
    o << "type = " << quote(c.mesh.type) << "\n";
    o << "nx = " << c.mesh.nx << "\nny = " << c.mesh.ny << "\nseed = " << c.mesh.seed << "\n";
    o << "amplitude = " << fmt17(c.mesh.amplitude) << "\n";
    o << "\n[time]\n";
    o << "mode = " << to_string(c.mode) << "\n";
    o << "cfl_safety = " << fmt17(c.cfl_safety) << "\n";
    if (c.dt) o << "dt = " << fmt17(*c.dt) << "\n";
    if (c.dt_half_h2) o << "dt = half_h2\n";
    if (c.t_final) o << "t_final = " << fmt17(*c.t_final) << "\n";
    o << "tol = " << fmt17(c.solver_tol) << "\n";
    if (!c.refinements.empty()) {
        o << "\n[study]\nrefinements = [";
        for (size_t i = 0; i < c.refinements.size(); ++i) o << (i ? ", " : "") << c.refinements[i];
        o << "]\n";
    }
    return o.str();
}

// ---- runs ----

CaseResult run_case(const RunConfig& cfg, int nx, int ny)
{
    cfg.check();
    const std::string spec = cfg.problem_spec();
    const BoundaryKind bc = cfg.boundary ? boundary_from_string(*cfg.boundary) : BoundaryKind::Vacuum;
    GridOptions opt;
    opt.domain = problem_domain(spec);
    opt.periodic_x = opt.periodic_y = bc == BoundaryKind::Periodic;

    const auto t0 = Clock::now();
    Mesh mesh = build_mesh(cfg.mesh.type, nx, ny, cfg.mesh.seed, opt, cfg.mesh.amplitude);
    Problem p = make_problem(spec, mesh, cfg.epsilon.value_or(1e-6));
    if (cfg.epsilon) p.coeffs.epsilon = *cfg.epsilon;
    if (cfg.sigma) p.coeffs.sigma.setConstant(*cfg.sigma);
    p.bc = bc;

    TimeConfig tc;
    tc.mode = cfg.mode;
    tc.cfl_safety = cfg.cfl_safety;
    tc.dt = cfg.dt;
    if (cfg.dt_half_h2) tc.dt = 0.5 * mesh.h() * mesh.h();
    tc.t_final = cfg.t_final.value_or(p.t_final);
    tc.tol = cfg.solver_tol;

    RunResult res;
    {
        const SpatialOperator op(mesh, p.system, p.coeffs, {flux_from_string(cfg.scheme), SpeedRule::PerEdge, bc});
        res = run(op, p.initial(), tc);
    }
    std::optional<ErrorNorms> err;
    if (p.has_analytic()) err = error_norms(mesh, p, res.field, res.t);
    const double secs = seconds_since(t0);
    return CaseResult{std::move(mesh), std::move(p), std::move(res), err, secs};
}

std::optional<double> convergence_order(double e_coarse, double e_fine, double h_coarse, double h_fine)
{
    if (!(e_coarse > 0.0) || !(e_fine > 0.0) || !(h_coarse > 0.0) || !(h_fine > 0.0) || h_coarse == h_fine)
        return std::nullopt;
    return std::log(e_coarse / e_fine) / std::log(h_coarse / h_fine);
}

int thread_count()
{
    const char* s = std::getenv("APFV_THREADS");
    if (!s) return 1;
    char* end = nullptr;
    const long n = std::strtol(s, &end, 10);
    if (end == s || *end != '\0' || n < 1) throw Error(Errc::InvalidConfig, "APFV_THREADS must be a positive integer");
    return int(std::min(n, 64L));
}

RunReport convergence_study(const RunConfig& cfg)
{
    cfg.check();
    std::vector<int> levels = cfg.refinements;
    if (levels.empty()) levels.push_back(cfg.mesh.nx);
    const double ratio = double(cfg.mesh.ny) / double(cfg.mesh.nx);

    RunReport rep;
    rep.problem = cfg.problem_spec();
    rep.rows.resize(levels.size());
    std::vector<std::exception_ptr> errs(levels.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i; (i = next++) < levels.size();) {
            try {
                const int nx = levels[i], ny = std::max(1, int(std::lround(levels[i] * ratio)));
                CaseResult r = run_case(cfg, nx, ny);
                if (!r.errors) throw Error(Errc::NoAnalytic, r.problem.name + " has no closed-form solution");
                StudyRow& row = rep.rows[i];
                row.nx = nx;
                row.ny = ny;
                row.h = 1.0 / nx;
                row.errors = *r.errors;
                row.seconds = r.seconds;
                row.norms = std::move(r.run.norms);
            } catch (...) {
                errs[i] = std::current_exception();
            }
        }
    };
    const int nt = std::min<int>(thread_count(), int(levels.size()));
    if (nt <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < nt; ++k) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);

    for (size_t i = 1; i < rep.rows.size(); ++i) {
        const StudyRow& c = rep.rows[i - 1];
        StudyRow& f = rep.rows[i];
        f.order_l1 = convergence_order(c.errors.l1, f.errors.l1, c.h, f.h);
        f.order_l2 = convergence_order(c.errors.l2, f.errors.l2, c.h, f.h);
    }
    return rep;
}

void write_study_csv(std::ostream& os, const RunReport& report)
{
    auto opt = [](const std::optional<double>& x) { return x ? fmt17(*x) : std::string(); };
    os << "nx,ny,h,L1,L2,order_L1,order_L2\n";
    for (const auto& r : report.rows)
        os << r.nx << ',' << r.ny << ',' << fmt17(r.h) << ',' << fmt17(r.errors.l1) << ',' << fmt17(r.errors.l2) << ','
           << opt(r.order_l1) << ',' << opt(r.order_l2) << '\n';
}

void write_field_csv(std::ostream& os, const Mesh& mesh, const Vector& rho, const Field& v)
{
    if (rho.size() != mesh.num_cells() || v.cols() != mesh.num_cells())
        throw Error(Errc::DimensionMismatch, "field does not match the mesh");
    os << "cell_id,xc,yc,area,rho";
    for (int i = 0; i < v.rows(); ++i) os << ",V_" << i + 1;
    os << '\n';
    for (int j = 0; j < mesh.num_cells(); ++j) {
        os << j << ',' << fmt17(mesh.center(j).x()) << ',' << fmt17(mesh.center(j).y()) << ',' << fmt17(mesh.area(j))
           << ',' << fmt17(rho(j));
        for (int i = 0; i < v.rows(); ++i) os << ',' << fmt17(v(i, j));
        os << '\n';
    }
}

void emit_field(const std::string& path, const Mesh& mesh, const Vector& rho, const Field& v)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::IoError, "cannot write " + path);
    write_field_csv(f, mesh, rho, v);
    f.flush();
    if (!f) throw Error(Errc::IoError, "write failed for " + path);
}

// ---- strip demo ----

const Table1Row& Table1Report::find(const std::string& scheme, int cells) const
{
    for (const auto& r : rows)
        if (r.scheme == scheme && r.cells == cells) return r;
    throw Error(Errc::BadIndex, "no row " + scheme + "/" + std::to_string(cells));
}

Table1Report table1_demo(double epsilon)
{
    // Periodic strip [0, 2] x [0, 2h] (two rows of square cells), sigma = 1,
    // p a heat kernel started at t0, u = 0.
    constexpr double L = 2.0, t0 = 0.02, T = 0.02, sigma = 1.0;
    const PreparedSystem ps = prepare(heat_p1_system(1.0, 1.0));
    const double D = ps.diffusion_scalar() / sigma;
    auto exact = [&](const Vec2& x) {
        double s = 0.0;
        for (int k = -3; k <= 3; ++k) {
            const double d = x.x() - 0.5 * L + k * L;
            s += std::exp(-d * d / (4 * D * (t0 + T))) / std::sqrt(4 * M_PI * D * (t0 + T));
        }
        return s;
    };

    Table1Report rep;
    rep.epsilon = epsilon;
    for (const char* scheme : {"ap", "upwind"}) {
        for (int n : {50, 500}) {
            GridOptions opt;
            opt.domain = {0.0, 0.0, L, 2 * L / n};
            opt.periodic_x = opt.periodic_y = true;
            const Mesh mesh = build_cartesian(n, 2, opt);
            const Coefficients c = Coefficients::uniform(mesh.num_cells(), epsilon, sigma);
            Field u = Field::Zero(3, mesh.num_cells());
            for (int j = 0; j < mesh.num_cells(); ++j) {
                const double d = mesh.center(j).x() - 0.5 * L;
                u(0, j) = std::exp(-d * d / (4 * D * t0)) / std::sqrt(4 * M_PI * D * t0);
            }
            const double h = L / n;
            const auto start = Clock::now();
            Vector rho;
            if (std::string(scheme) == "ap") {
                const SpatialOperator op(mesh, ps, c, {FluxKind::Upwind, SpeedRule::PerEdge, BoundaryKind::Periodic});
                TimeConfig tc;
                tc.mode = TimeMode::SemiImplicit;
                tc.dt = 0.25 * h * h / D; // half the explicit diffusion limit
                tc.t_final = T;
                const auto res = run(op, to_diagonal(u, ps.spec.Q), tc);
                rho = from_diagonal(res.field, ps.spec.Q).row(0).transpose();
            } else {
                const SparseOperator l = full_upwind(mesh, ps.sys, c);
                const double speed = spectral_radius(ps.sys.A1);
                const double dt = 0.5 / (speed / (epsilon * h) + sigma * ps.sys.R.diagonal().maxCoeff() / (epsilon * epsilon));
                Vector x = Eigen::Map<const Vector>(u.data(), u.size());
                const long steps = long(std::ceil(T / dt - 1e-9));
                const double step = T / double(steps);
                for (long s = 0; s < steps; ++s) x += step * (l * x);
                if (!x.allFinite()) throw Error(Errc::NoConvergence, "upwind demo blew up");
                rho = Eigen::Map<const Field>(x.data(), 3, mesh.num_cells()).row(0).transpose();
            }
            Table1Row row;
            row.scheme = scheme;
            row.cells = n;
            row.seconds = seconds_since(start);
            row.errors = error_norms(mesh, rho, exact);
            // One-dimensional norms: divide out the strip height.
            row.errors.l1 /= opt.domain.height();
            row.errors.l2 /= std::sqrt(opt.domain.height());
            rep.rows.push_back(row);
        }
    }
    return rep;
}

void print_table1(std::ostream& os, const Table1Report& r)
{
    char buf[160];
    std::snprintf(buf, sizeof buf, "hyperbolic heat equation, eps = %g\n%-8s %6s %12s %12s %10s\n", r.epsilon, "scheme",
                  "cells", "L1", "L2", "seconds");
    os << buf;
    for (const auto& row : r.rows) {
        std::snprintf(buf, sizeof buf, "%-8s %6d %12.4e %12.4e %10.3f\n", row.scheme.c_str(), row.cells, row.errors.l1,
                      row.errors.l2, row.seconds);
        os << buf;
    }
}

} // namespace apfv
