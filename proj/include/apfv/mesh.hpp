#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "apfv/numerics.hpp"

namespace apfv {

struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }
    bool contains(const Vec2& p) const { return p.x() >= x0 && p.x() <= x1 && p.y() >= y0 && p.y() <= y1; }
};

// Boundary side of a generated rectangle; imported meshes use Side::Unknown.
enum class Side : int { Interior = -2, Unknown = -1, Bottom = 0, Right = 1, Top = 2, Left = 3 };

struct Corner {
    int node = -1;
    double length = 0.0; // l_jr
    Vec2 normal;         // n_jr, unit
    Vec2 ln;             // l_jr n_jr
    Vec2 arm;            // x_r - x_j
};

struct Edge {
    int cell = -1;
    int neighbor = -1; // -1 on the boundary
    int node_a = -1, node_b = -1; // counter-clockwise in `cell`
    double length = 0.0;
    Vec2 normal;                 // unit, outward from `cell`
    double center_distance = 0.0; // |x_k - x_j|; twice the center-to-edge distance on the boundary
    Side side = Side::Interior;
    bool boundary() const { return neighbor < 0; }
};

struct NodeCell {
    int cell;
    int corner; // index into the cell's corner list
};

struct MeshInfo {
    std::string kind = "imported";
    int nx = 0, ny = 0;
    Rect domain;
    bool periodic_x = false, periodic_y = false;
    bool logically_cartesian = false;
};

/// Immutable polygonal mesh with precomputed corner and edge geometry.
///
/// Every cell stores its own copy of its vertex coordinates. On periodic
/// meshes those are the unwrapped positions, so cell geometry never sees the
/// jump across the seam while node ids still identify wrapped nodes.
class Mesh {
public:
    struct Input {
        std::vector<Vec2> nodes;
        std::vector<std::vector<int>> cells;             // CCW node ids
        std::vector<std::vector<Vec2>> cell_coords;      // optional unwrapped vertices
        std::vector<std::vector<int>> cell_neighbors;    // optional, per local edge i -> i+1
        MeshInfo info;
    };

    explicit Mesh(Input in);

    int num_cells() const { return int(area_.size()); }
    int num_nodes() const { return int(nodes_.size()); }
    int num_edges() const { return int(edges_.size()); }

    const Vec2& node(int r) const { return nodes_[size_t(r)]; }
    std::span<const Vec2> nodes() const { return nodes_; }
    std::span<const Corner> corners(int j) const;
    std::span<const Vec2> vertices(int j) const;
    std::vector<int> cell_nodes(int j) const;
    double area(int j) const { return area_[size_t(j)]; }
    const Vec2& center(int j) const { return center_[size_t(j)]; }
    std::span<const Edge> edges() const { return edges_; }
    std::span<const NodeCell> node_cells(int r) const;
    std::span<const int> node_boundary_edges(int r) const;
    bool is_boundary_node(int r) const { return !node_boundary_edges(r).empty(); }
    const MeshInfo& info() const { return info_; }

    double total_area() const;
    // Characteristic size max(Lx/nx, Ly/ny) for generated meshes, sqrt(mean area) otherwise.
    double h() const;
    // Shortest over longest edge of cell j.
    double aspect_ratio(int j) const;
    double min_aspect_ratio() const;
    // Index of the cell whose polygon contains p, or -1.
    int locate(const Vec2& p) const;

private:
    std::vector<Vec2> nodes_;
    std::vector<int> corner_offset_;
    std::vector<Corner> corners_;
    std::vector<Vec2> vertices_;
    std::vector<double> area_;
    std::vector<Vec2> center_;
    std::vector<Edge> edges_;
    std::vector<int> node_cell_offset_;
    std::vector<NodeCell> node_cells_;
    std::vector<int> node_bedge_offset_;
    std::vector<int> node_bedges_;
    MeshInfo info_;
};

/// l_jr n_jr from the previous and next vertices of a corner.
Vec2 corner_ln(const Vec2& prev, const Vec2& next);

struct CornerGeometry {
    double length;
    Vec2 normal;
};
CornerGeometry corner_geometry(const Mesh& mesh, int cell, int node);

struct GridOptions {
    Rect domain;
    bool periodic_x = false;
    bool periodic_y = false;
};

Mesh build_cartesian(int nx, int ny, const GridOptions& opt = {});
Mesh build_random_quad(int nx, int ny, double amplitude, std::uint64_t seed, const GridOptions& opt = {});
Mesh build_smooth(int nx, int ny, const GridOptions& opt = {}, double alpha = 0.1);
Mesh build_kershaw(int nx, int ny, const GridOptions& opt = {});
Mesh build_triangular(int nx, int ny, bool randomize, std::uint64_t seed, const GridOptions& opt = {},
                      double amplitude = 0.2);

/// Dispatch by name: cartesian, random_quad, smooth, kershaw, triangular, random_triangular.
Mesh build_mesh(const std::string& type, int nx, int ny, std::uint64_t seed, const GridOptions& opt = {},
                double amplitude = 0.2);

void write_mesh(std::ostream& os, const Mesh& mesh);
Mesh read_mesh(std::istream& is);

} // namespace apfv
