#include "apfv/mesh.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

namespace apfv {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double polygon_area(std::span<const Vec2> v)
{
    double s = 0.0;
    for (size_t i = 0; i < v.size(); ++i) s += cross(v[i], v[(i + 1) % v.size()]);
    return 0.5 * s;
}

Side classify_side(const Vec2& mid, const Vec2& n, const Rect& d)
{
    const double tol = 1e-9 * std::max(d.width(), d.height());
    if (n.y() < -0.999999 && std::abs(mid.y() - d.y0) < tol) return Side::Bottom;
    if (n.x() > 0.999999 && std::abs(mid.x() - d.x1) < tol) return Side::Right;
    if (n.y() > 0.999999 && std::abs(mid.y() - d.y1) < tol) return Side::Top;
    if (n.x() < -0.999999 && std::abs(mid.x() - d.x0) < tol) return Side::Left;
    return Side::Unknown;
}

} // namespace

Vec2 corner_ln(const Vec2& prev, const Vec2& next)
{
    const Vec2 d = next - prev;
    if (d.norm() <= 1e-14 * std::max({1.0, prev.norm(), next.norm()}))
        throw Error(Errc::DegenerateCorner, "x_{r-1} and x_{r+1} coincide");
    return 0.5 * Vec2(d.y(), -d.x());
}

Mesh::Mesh(Input in) : nodes_(std::move(in.nodes)), info_(in.info)
{
    const size_t nc = in.cells.size();
    if (nc == 0) throw Error(Errc::BadResolution, "mesh has no cells");
    const bool own_coords = !in.cell_coords.empty();
    if (own_coords && in.cell_coords.size() != nc)
        throw Error(Errc::DimensionMismatch, "cell_coords size");
    if (!in.cell_neighbors.empty() && in.cell_neighbors.size() != nc)
        throw Error(Errc::DimensionMismatch, "cell_neighbors size");

    corner_offset_.assign(nc + 1, 0);
    area_.resize(nc);
    center_.resize(nc);
    for (size_t j = 0; j < nc; ++j) {
        const auto& ids = in.cells[j];
        if (ids.size() < 3) throw Error(Errc::DegenerateCorner, "cell with fewer than 3 vertices");
        for (int id : ids)
            if (id < 0 || id >= int(nodes_.size())) throw Error(Errc::BadIndex, "node index out of range");
        const size_t base = vertices_.size();
        for (size_t k = 0; k < ids.size(); ++k) {
            if (own_coords) {
                if (in.cell_coords[j].size() != ids.size())
                    throw Error(Errc::DimensionMismatch, "cell_coords vertex count");
                vertices_.push_back(in.cell_coords[j][k]);
            } else {
                vertices_.push_back(nodes_[size_t(ids[k])]);
            }
        }
        std::span<const Vec2> v(vertices_.data() + base, ids.size());
        const double a = polygon_area(v);
        if (!(a > 0.0))
            throw Error(Errc::Tangled, "cell " + std::to_string(j) + " has area " + std::to_string(a));
        area_[j] = a;
        Vec2 c = Vec2::Zero();
        for (const auto& p : v) c += p;
        center_[j] = c / double(v.size());

        const size_t m = ids.size();
        for (size_t k = 0; k < m; ++k) {
            Corner cr;
            cr.node = ids[k];
            cr.ln = corner_ln(v[(k + m - 1) % m], v[(k + 1) % m]);
            cr.length = cr.ln.norm();
            cr.normal = cr.ln / cr.length;
            cr.arm = v[k] - center_[j];
            corners_.push_back(cr);
        }
        corner_offset_[j + 1] = int(corners_.size());
    }

    // Edge matching. Generators pass neighbors explicitly (periodic seams can
    // make two distinct edges share a node pair); otherwise match directed twins.
    std::vector<std::vector<int>> nbr = std::move(in.cell_neighbors);
    if (nbr.empty()) {
        std::map<std::pair<int, int>, std::pair<int, int>> directed;
        for (size_t j = 0; j < nc; ++j) {
            const auto& ids = in.cells[j];
            for (size_t k = 0; k < ids.size(); ++k) {
                auto key = std::make_pair(ids[k], ids[(k + 1) % ids.size()]);
                if (!directed.emplace(key, std::make_pair(int(j), int(k))).second)
                    throw Error(Errc::Tangled, "edge used twice with the same orientation");
            }
        }
        nbr.resize(nc);
        for (size_t j = 0; j < nc; ++j) {
            const auto& ids = in.cells[j];
            nbr[j].assign(ids.size(), -1);
            for (size_t k = 0; k < ids.size(); ++k) {
                auto it = directed.find({ids[(k + 1) % ids.size()], ids[k]});
                if (it != directed.end()) nbr[j][k] = it->second.first;
            }
        }
    }

    for (size_t j = 0; j < nc; ++j) {
        const auto& ids = in.cells[j];
        const size_t m = ids.size();
        auto vj = vertices(int(j));
        for (size_t k = 0; k < m; ++k) {
            const int other = nbr[j][k];
            if (other >= 0 && other < int(j)) continue;
            Edge e;
            e.cell = int(j);
            e.neighbor = other;
            e.node_a = ids[k];
            e.node_b = ids[(k + 1) % m];
            const Vec2 A = vj[k], B = vj[(k + 1) % m];
            const Vec2 t = B - A;
            e.length = t.norm();
            e.normal = Vec2(t.y(), -t.x()) / e.length;
            const Vec2 mid = 0.5 * (A + B);
            if (other < 0) {
                e.center_distance = 2.0 * std::abs((mid - center_[j]).dot(e.normal));
                e.side = info_.logically_cartesian ? classify_side(mid, e.normal, info_.domain) : Side::Unknown;
            } else {
                const auto& kid = in.cells[size_t(other)];
                const size_t mk = kid.size();
                auto vk = vertices(other);
                int match = -1;
                for (size_t q = 0; q < mk; ++q) {
                    if (nbr[size_t(other)][q] == int(j) && kid[q] == e.node_b && kid[(q + 1) % mk] == e.node_a) {
                        match = int(q);
                        break;
                    }
                }
                if (match < 0) throw Error(Errc::Tangled, "neighbor does not share the edge");
                const Vec2 midk = 0.5 * (vk[size_t(match)] + vk[(size_t(match) + 1) % mk]);
                const Vec2 xk = center_[size_t(other)] + (mid - midk);
                e.center_distance = (xk - center_[j]).norm();
            }
            edges_.push_back(e);
        }
    }

    const size_t nn = nodes_.size();
    node_cell_offset_.assign(nn + 1, 0);
    for (const auto& c : corners_) ++node_cell_offset_[size_t(c.node) + 1];
    for (size_t r = 0; r < nn; ++r) node_cell_offset_[r + 1] += node_cell_offset_[r];
    node_cells_.resize(corners_.size());
    {
        std::vector<int> fill(node_cell_offset_.begin(), node_cell_offset_.end() - 1);
        for (size_t j = 0; j < nc; ++j)
            for (int c = corner_offset_[j]; c < corner_offset_[j + 1]; ++c)
                node_cells_[size_t(fill[size_t(corners_[size_t(c)].node)]++)] =
                    NodeCell{int(j), c - corner_offset_[j]};
    }

    node_bedge_offset_.assign(nn + 1, 0);
    for (const auto& e : edges_)
        if (e.boundary()) {
            ++node_bedge_offset_[size_t(e.node_a) + 1];
            ++node_bedge_offset_[size_t(e.node_b) + 1];
        }
    for (size_t r = 0; r < nn; ++r) node_bedge_offset_[r + 1] += node_bedge_offset_[r];
    node_bedges_.resize(size_t(node_bedge_offset_[nn]));
    {
        std::vector<int> fill(node_bedge_offset_.begin(), node_bedge_offset_.end() - 1);
        for (size_t i = 0; i < edges_.size(); ++i)
            if (edges_[i].boundary()) {
                node_bedges_[size_t(fill[size_t(edges_[i].node_a)]++)] = int(i);
                node_bedges_[size_t(fill[size_t(edges_[i].node_b)]++)] = int(i);
            }
    }
}

std::span<const Corner> Mesh::corners(int j) const
{
    const int b = corner_offset_[size_t(j)], e = corner_offset_[size_t(j) + 1];
    return {corners_.data() + b, size_t(e - b)};
}

std::span<const Vec2> Mesh::vertices(int j) const
{
    const int b = corner_offset_[size_t(j)], e = corner_offset_[size_t(j) + 1];
    return {vertices_.data() + b, size_t(e - b)};
}

std::vector<int> Mesh::cell_nodes(int j) const
{
    std::vector<int> out;
    for (const auto& c : corners(j)) out.push_back(c.node);
    return out;
}

std::span<const NodeCell> Mesh::node_cells(int r) const
{
    const int b = node_cell_offset_[size_t(r)], e = node_cell_offset_[size_t(r) + 1];
    return {node_cells_.data() + b, size_t(e - b)};
}

std::span<const int> Mesh::node_boundary_edges(int r) const
{
    const int b = node_bedge_offset_[size_t(r)], e = node_bedge_offset_[size_t(r) + 1];
    return {node_bedges_.data() + b, size_t(e - b)};
}

double Mesh::total_area() const
{
    // Neumaier summation; naive accumulation drifts by ~1e-14 at 50x50.
    double s = 0.0, c = 0.0;
    for (double a : area_) {
        const double t = s + a;
        c += (std::abs(s) >= std::abs(a)) ? (s - t) + a : (a - t) + s;
        s = t;
    }
    return s + c;
}

double Mesh::h() const
{
    if (info_.nx > 0 && info_.ny > 0)
        return std::max(info_.domain.width() / info_.nx, info_.domain.height() / info_.ny);
    return std::sqrt(total_area() / num_cells());
}

double Mesh::aspect_ratio(int j) const
{
    auto v = vertices(j);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (size_t k = 0; k < v.size(); ++k) {
        const double l = (v[(k + 1) % v.size()] - v[k]).norm();
        lo = std::min(lo, l);
        hi = std::max(hi, l);
    }
    return lo / hi;
}

double Mesh::min_aspect_ratio() const
{
    double m = 1.0;
    for (int j = 0; j < num_cells(); ++j) m = std::min(m, aspect_ratio(j));
    return m;
}

int Mesh::locate(const Vec2& p) const
{
    for (int j = 0; j < num_cells(); ++j) {
        auto v = vertices(j);
        bool inside = true;
        // Cells are star-shaped about their vertex mean for all generators; use
        // the half-plane test, which also accepts points on the boundary.
        for (size_t k = 0; k < v.size() && inside; ++k)
            inside = cross(v[(k + 1) % v.size()] - v[k], p - v[k]) >= -1e-14;
        if (inside) return j;
    }
    return -1;
}

CornerGeometry corner_geometry(const Mesh& mesh, int cell, int node)
{
    if (cell < 0 || cell >= mesh.num_cells()) throw Error(Errc::BadIndex, "cell index");
    auto v = mesh.vertices(cell);
    auto c = mesh.corners(cell);
    for (size_t k = 0; k < c.size(); ++k) {
        if (c[k].node != node) continue;
        const Vec2 ln = corner_ln(v[(k + v.size() - 1) % v.size()], v[(k + 1) % v.size()]);
        return {ln.norm(), ln / ln.norm()};
    }
    throw Error(Errc::NotAVertex, "node " + std::to_string(node) + " is not a vertex of cell " +
                                      std::to_string(cell));
}

namespace {

using PositionFn = std::function<Vec2(int, int)>;

// Builds a logically Cartesian mesh whose node (i, j), 0 <= i <= nx,
// 0 <= j <= ny, sits at pos(i, j). Quads, or each quad split in two triangles
// along alternating diagonals.
Mesh grid_mesh(int nx, int ny, const GridOptions& opt, const PositionFn& pos, const std::string& kind,
               bool triangles)
{
    const int ncol = opt.periodic_x ? nx : nx + 1;
    const int nrow = opt.periodic_y ? ny : ny + 1;
    auto node_id = [&](int i, int j) { return (j % nrow) * ncol + (i % ncol); };
    // periodic node ids wrap at nx/ny only
    auto wrap_id = [&](int i, int j) {
        const int ii = opt.periodic_x ? i % nx : i;
        const int jj = opt.periodic_y ? j % ny : j;
        return node_id(ii, jj);
    };

    Mesh::Input in;
    in.info.kind = kind;
    in.info.nx = nx;
    in.info.ny = ny;
    in.info.domain = opt.domain;
    in.info.periodic_x = opt.periodic_x;
    in.info.periodic_y = opt.periodic_y;
    in.info.logically_cartesian = true;
    in.nodes.resize(size_t(ncol * nrow));
    for (int j = 0; j < nrow; ++j)
        for (int i = 0; i < ncol; ++i) in.nodes[size_t(node_id(i, j))] = pos(i, j);

    using Logical = std::array<int, 2>;
    std::vector<std::vector<Logical>> logical;
    auto add = [&](std::initializer_list<Logical> verts) {
        std::vector<int> ids;
        std::vector<Vec2> coords;
        for (const auto& l : verts) {
            ids.push_back(wrap_id(l[0], l[1]));
            coords.push_back(pos(l[0], l[1]));
        }
        in.cells.push_back(std::move(ids));
        in.cell_coords.push_back(std::move(coords));
        logical.emplace_back(verts);
    };
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const Logical A{i, j}, B{i + 1, j}, C{i + 1, j + 1}, D{i, j + 1};
            if (!triangles) {
                add({A, B, C, D});
            } else if ((i + j) % 2 == 0) {
                add({A, B, C});
                add({A, C, D});
            } else {
                add({A, B, D});
                add({B, C, D});
            }
        }
    }

    // Twin edges: reversed node pair with opposite logical displacement.
    using Key = std::tuple<int, int, int, int>;
    std::map<Key, int> owner;
    for (size_t c = 0; c < in.cells.size(); ++c) {
        const auto& l = logical[c];
        for (size_t k = 0; k < l.size(); ++k) {
            const auto& a = l[k];
            const auto& b = l[(k + 1) % l.size()];
            owner[Key{in.cells[c][k], in.cells[c][(k + 1) % l.size()], b[0] - a[0], b[1] - a[1]}] = int(c);
        }
    }
    in.cell_neighbors.resize(in.cells.size());
    for (size_t c = 0; c < in.cells.size(); ++c) {
        const auto& l = logical[c];
        in.cell_neighbors[c].assign(l.size(), -1);
        for (size_t k = 0; k < l.size(); ++k) {
            const auto& a = l[k];
            const auto& b = l[(k + 1) % l.size()];
            auto it = owner.find(Key{in.cells[c][(k + 1) % l.size()], in.cells[c][k], a[0] - b[0], a[1] - b[1]});
            if (it != owner.end()) in.cell_neighbors[c][k] = it->second;
        }
    }
    return Mesh(std::move(in));
}

Vec2 lattice_point(const Rect& d, int nx, int ny, int i, int j)
{
    return {d.x0 + d.width() * double(i) / nx, d.y0 + d.height() * double(j) / ny};
}

void check_resolution(int nx, int ny, int min)
{
    if (nx < min || ny < min)
        throw Error(Errc::BadResolution, "need at least " + std::to_string(min) + " cells per direction");
}

// Interior-node perturbation table, drawn in row-major node order.
std::vector<Vec2> perturbations(int nx, int ny, double amplitude, std::uint64_t seed, const Rect& d)
{
    if (!(amplitude >= 0.0 && amplitude < 0.5))
        throw Error(Errc::BadCoefficient, "perturbation amplitude must lie in [0, 0.5)");
    Rng rng(seed);
    const double ax = amplitude * d.width() / nx, ay = amplitude * d.height() / ny;
    std::vector<Vec2> out(size_t((nx + 1) * (ny + 1)), Vec2::Zero());
    for (int j = 1; j < ny; ++j)
        for (int i = 1; i < nx; ++i) {
            const double dx = rng.uniform(-ax, ax);
            const double dy = rng.uniform(-ay, ay);
            out[size_t(j * (nx + 1) + i)] = Vec2(dx, dy);
        }
    return out;
}

} // namespace

Mesh build_cartesian(int nx, int ny, const GridOptions& opt)
{
    check_resolution(nx, ny, 2);
    return grid_mesh(nx, ny, opt, [&](int i, int j) { return lattice_point(opt.domain, nx, ny, i, j); },
                     "cartesian", false);
}

Mesh build_random_quad(int nx, int ny, double amplitude, std::uint64_t seed, const GridOptions& opt)
{
    check_resolution(nx, ny, 2);
    const auto delta = perturbations(nx, ny, amplitude, seed, opt.domain);
    return grid_mesh(
        nx, ny, opt,
        [&](int i, int j) { return Vec2(lattice_point(opt.domain, nx, ny, i, j) + delta[size_t(j * (nx + 1) + i)]); },
        "random_quad", false);
}

Mesh build_smooth(int nx, int ny, const GridOptions& opt, double alpha)
{
    check_resolution(nx, ny, 4);
    const Rect& d = opt.domain;
    return grid_mesh(
        nx, ny, opt,
        [&](int i, int j) {
            const double xi = double(i) / nx, eta = double(j) / ny;
            const double s = alpha * std::sin(2.0 * M_PI * xi) * std::sin(2.0 * M_PI * eta);
            return Vec2(d.x0 + d.width() * (xi + s), d.y0 + d.height() * (eta + s));
        },
        "smooth", false);
}

Mesh build_kershaw(int nx, int ny, const GridOptions& opt)
{
    check_resolution(nx, ny, 2);
    if (nx % 4 != 0) throw Error(Errc::BadResolution, "Kershaw mesh needs nx divisible by 4");
    if (ny % 2 != 0) throw Error(Errc::BadResolution, "Kershaw mesh needs ny even");
    const Rect& d = opt.domain;
    // Zig-zag profile through +1,-1,+1,-1,+1 at xi = 0, 1/4, 1/2, 3/4, 1.
    auto zigzag = [](double xi) {
        const double t = 4.0 * xi;
        const int k = std::min(3, int(std::floor(t)));
        const double f = t - k;
        const double a = (k % 2 == 0) ? 1.0 : -1.0;
        return a + (-2.0 * a) * f;
    };
    return grid_mesh(
        nx, ny, opt,
        [&](int i, int j) {
            const double xi = double(i) / nx, eta = double(j) / ny;
            const double mid = 0.5 * (1.0 - 0.8 * zigzag(xi));
            const double y = (2 * j <= ny) ? 2.0 * eta * mid : mid + (2.0 * eta - 1.0) * (1.0 - mid);
            return Vec2(d.x0 + d.width() * xi, d.y0 + d.height() * y);
        },
        "kershaw", false);
}

Mesh build_triangular(int nx, int ny, bool randomize, std::uint64_t seed, const GridOptions& opt, double amplitude)
{
    check_resolution(nx, ny, 2);
    const auto delta = perturbations(nx, ny, randomize ? amplitude : 0.0, seed, opt.domain);
    return grid_mesh(
        nx, ny, opt,
        [&](int i, int j) { return Vec2(lattice_point(opt.domain, nx, ny, i, j) + delta[size_t(j * (nx + 1) + i)]); },
        randomize ? "random_triangular" : "triangular", true);
}

Mesh build_mesh(const std::string& type, int nx, int ny, std::uint64_t seed, const GridOptions& opt,
                double amplitude)
{
    if (type == "cartesian") return build_cartesian(nx, ny, opt);
    if (type == "random_quad") return build_random_quad(nx, ny, amplitude, seed, opt);
    if (type == "smooth") return build_smooth(nx, ny, opt);
    if (type == "kershaw") return build_kershaw(nx, ny, opt);
    if (type == "triangular") return build_triangular(nx, ny, false, seed, opt, amplitude);
    if (type == "random_triangular") return build_triangular(nx, ny, true, seed, opt, amplitude);
    throw Error(Errc::InvalidConfig, "unknown mesh type '" + type + "'");
}

void write_mesh(std::ostream& os, const Mesh& mesh)
{
    os.precision(17);
    os << "nodes " << mesh.num_nodes() << " cells " << mesh.num_cells() << '\n';
    for (const auto& p : mesh.nodes()) os << p.x() << ' ' << p.y() << '\n';
    for (int j = 0; j < mesh.num_cells(); ++j) {
        const auto ids = mesh.cell_nodes(j);
        os << ids.size();
        for (int id : ids) os << ' ' << id;
        os << '\n';
    }
    if (!os) throw Error(Errc::IoError, "mesh write failed");
}

Mesh read_mesh(std::istream& is)
{
    std::string w1, w2;
    long long n = -1, m = -1;
    if (!(is >> w1 >> n >> w2 >> m) || w1 != "nodes" || w2 != "cells" || n < 0 || m < 0)
        throw Error(Errc::ParseError, "expected header 'nodes N cells M'");
    Mesh::Input in;
    in.nodes.resize(size_t(n));
    for (auto& p : in.nodes)
        if (!(is >> p.x() >> p.y())) throw Error(Errc::ParseError, "truncated node list");
    in.cells.resize(size_t(m));
    for (auto& c : in.cells) {
        int k = 0;
        if (!(is >> k) || k < 3) throw Error(Errc::ParseError, "bad cell vertex count");
        c.resize(size_t(k));
        for (auto& id : c)
            if (!(is >> id)) throw Error(Errc::ParseError, "truncated cell list");
    }
    return Mesh(std::move(in));
}

} // namespace apfv
