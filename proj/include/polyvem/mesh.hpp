#pragma once

// Polygonal meshes: topology and admissibility checks, fan sub-triangulation
// and point location.

#include "polyvem/common.hpp"
#include "polyvem/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace polyvem {

struct Edge {
    std::array<int, 2> v{};           // v[0] < v[1]
    std::array<int, 2> cells{-1, -1};  // cells[1] == -1 on the boundary
    bool boundary() const { return cells[1] < 0; }
};

class PolygonalMesh {
  public:
    PolygonalMesh() = default;

    PolygonalMesh(std::vector<Point> vertices, std::vector<std::vector<int>> cells)
        : vertices_(std::move(vertices)), cells_(std::move(cells)) {
        build();
    }

    int num_vertices() const { return static_cast<int>(vertices_.size()); }
    int num_cells() const { return static_cast<int>(cells_.size()); }
    int num_edges() const { return static_cast<int>(edges_.size()); }
    int num_boundary_edges() const { return n_boundary_edges_; }
    int num_interior_edges() const { return num_edges() - n_boundary_edges_; }

    const std::vector<Point>& vertices() const { return vertices_; }
    const Point& vertex(int i) const { return vertices_[i]; }
    const std::vector<std::vector<int>>& cells() const { return cells_; }
    const std::vector<int>& cell(int c) const { return cells_[c]; }
    int cell_size(int c) const { return static_cast<int>(cells_[c].size()); }
    const std::vector<Edge>& edges() const { return edges_; }
    const Edge& edge(int e) const { return edges_[e]; }

    /// Global edge id of the local edge from cell(c)[j] to cell(c)[j+1].
    int cell_edge(int c, int j) const { return cell_edges_[c][j]; }
    const std::vector<int>& cell_edges(int c) const { return cell_edges_[c]; }

    bool boundary_vertex(int i) const { return boundary_vertex_[i] != 0; }
    const std::vector<char>& boundary_vertex_flags() const { return boundary_vertex_; }

    double area(int c) const { return area_[c]; }
    double diameter(int c) const { return diameter_[c]; }
    const std::vector<double>& per_cell_diameter() const { return diameter_; }
    const Point& centroid(int c) const { return centroid_[c]; }
    double h_max() const { return h_max_; }

    std::vector<Point> polygon(int c) const {
        std::vector<Point> out;
        out.reserve(cells_[c].size());
        for (int v : cells_[c]) out.push_back(vertices_[v]);
        return out;
    }

    double total_area() const {
        double a = 0.0;
        for (double x : area_) a += x;
        return a;
    }

  private:
    void build() {
        const int nv = num_vertices();
        std::map<std::pair<int, int>, int> edge_index;
        std::vector<std::array<int, 2>> edge_dirs;  // orientation seen from each adjacent cell
        std::vector<char> used(nv, 0);
        cell_edges_.assign(cells_.size(), {});
        area_.resize(cells_.size());
        diameter_.resize(cells_.size());
        centroid_.resize(cells_.size());
        h_max_ = 0.0;

        for (int c = 0; c < num_cells(); ++c) {
            const auto& cyc = cells_[c];
            const int n = static_cast<int>(cyc.size());
            if (n < 3) throw Error(ErrorCode::OpenCell, "cell " + std::to_string(c) + " has fewer than 3 vertices");
            for (int j = 0; j < n; ++j) {
                if (cyc[j] < 0 || cyc[j] >= nv)
                    throw Error(ErrorCode::OpenCell, "cell " + std::to_string(c) + " references a missing vertex");
                used[cyc[j]] = 1;
            }
            auto sorted = cyc;
            std::sort(sorted.begin(), sorted.end());
            if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
                throw Error(ErrorCode::OpenCell, "cell " + std::to_string(c) + " repeats a vertex");

            const auto poly = polygon(c);
            area_[c] = geometry::signed_area(poly);
            diameter_[c] = geometry::diameter(poly);
            if (!(diameter_[c] > 0.0) || !(area_[c] > 1e-14 * diameter_[c] * diameter_[c]))
                throw Error(ErrorCode::Degenerate,
                            "cell " + std::to_string(c) + " has non-positive area (not counter-clockwise?)");
            centroid_[c] = geometry::centroid(poly);
            h_max_ = std::max(h_max_, diameter_[c]);

            cell_edges_[c].resize(n);
            for (int j = 0; j < n; ++j) {
                const int a = cyc[j];
                const int b = cyc[(j + 1) % n];
                if (!((vertices_[a] - vertices_[b]).norm() > 0.0))
                    throw Error(ErrorCode::Degenerate, "zero-length edge in cell " + std::to_string(c));
                const auto key = std::minmax(a, b);
                const int dir = a < b ? 0 : 1;
                auto [it, inserted] = edge_index.try_emplace({key.first, key.second}, num_edges());
                if (inserted) {
                    Edge e;
                    e.v = {key.first, key.second};
                    e.cells = {c, -1};
                    edges_.push_back(e);
                    edge_dirs.push_back({dir, -1});
                } else {
                    Edge& e = edges_[it->second];
                    if (e.cells[1] >= 0)
                        throw Error(ErrorCode::NonManifoldEdge,
                                    "edge (" + std::to_string(a) + "," + std::to_string(b) + ") has more than two cells");
                    if (e.cells[0] == c || edge_dirs[it->second][0] == dir)
                        throw Error(ErrorCode::NonManifoldEdge,
                                    "edge (" + std::to_string(a) + "," + std::to_string(b) + ") is traversed twice in the same direction");
                    e.cells[1] = c;
                    edge_dirs[it->second][1] = dir;
                }
                cell_edges_[c][j] = it->second;
            }
        }
        for (int i = 0; i < nv; ++i)
            if (!used[i]) throw Error(ErrorCode::BadParams, "vertex " + std::to_string(i) + " belongs to no cell");

        boundary_vertex_.assign(nv, 0);
        n_boundary_edges_ = 0;
        for (const auto& e : edges_) {
            if (!e.boundary()) continue;
            ++n_boundary_edges_;
            boundary_vertex_[e.v[0]] = 1;
            boundary_vertex_[e.v[1]] = 1;
        }
    }

    std::vector<Point> vertices_;
    std::vector<std::vector<int>> cells_;
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> cell_edges_;
    std::vector<char> boundary_vertex_;
    std::vector<double> area_, diameter_;
    std::vector<Point> centroid_;
    double h_max_ = 0.0;
    int n_boundary_edges_ = 0;
};

struct SubTriangulationOptions {
    double min_angle_deg = 1.0;
    bool kernel_fallback = true;
};

/// Fan triangles (z0, z_j, z_{j+1}) of every cell. Triangle j of cell c uses the
/// local vertices j and j+1, so no per-triangle index storage is needed.
struct SubTriangulation {
    std::vector<Point> centers;
    std::vector<int> offset;  // first flat triangle index of each cell
    std::vector<double> triangle_area;
    std::vector<double> triangle_min_angle;  // radians

    int num_triangles() const { return static_cast<int>(triangle_area.size()); }
    int index(int c, int j) const { return offset[c] + j; }

    std::array<Point, 3> triangle(const PolygonalMesh& mesh, int c, int j) const {
        const auto& cyc = mesh.cell(c);
        const int n = static_cast<int>(cyc.size());
        return {centers[c], mesh.vertex(cyc[j]), mesh.vertex(cyc[(j + 1) % n])};
    }
};

namespace detail {

/// Checks that the fan from z0 has positive triangles above the angle floor.
inline bool fan_ok(std::span<const Point> poly, const Point& z0, double min_angle_rad) {
    const std::size_t n = poly.size();
    const double d = geometry::diameter(poly);
    for (std::size_t j = 0; j < n; ++j) {
        const Point& a = poly[j];
        const Point& b = poly[(j + 1) % n];
        if (!(orient(z0, a, b) > 1e-14 * d * d)) return false;
        if (geometry::min_angle(z0, a, b) < min_angle_rad) return false;
    }
    return true;
}

inline std::optional<Point> kernel_point(std::span<const Point> poly) {
    const auto ker = geometry::kernel(poly);
    if (ker.size() < 3) return std::nullopt;
    const double d = geometry::diameter(poly);
    if (!(geometry::signed_area(ker) > 1e-14 * d * d)) return std::nullopt;
    return geometry::centroid(ker);
}

}  // namespace detail

/// Star center of a cell: the centroid when its fan is valid, else the
/// centroid of the kernel. Returns nullopt when neither works.
inline std::optional<Point> star_center(const PolygonalMesh& mesh, int c, const SubTriangulationOptions& opt = {}) {
    const auto poly = mesh.polygon(c);
    const double floor = opt.min_angle_deg * std::numbers::pi / 180.0;
    if (detail::fan_ok(poly, mesh.centroid(c), floor)) return mesh.centroid(c);
    if (!opt.kernel_fallback) return std::nullopt;
    const auto k = detail::kernel_point(poly);
    if (k && detail::fan_ok(poly, *k, floor)) return k;
    return std::nullopt;
}

inline SubTriangulation sub_triangulate(const PolygonalMesh& mesh, const SubTriangulationOptions& opt = {}) {
    SubTriangulation st;
    st.centers.resize(mesh.num_cells());
    st.offset.resize(mesh.num_cells() + 1);
    int count = 0;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        st.offset[c] = count;
        count += mesh.cell_size(c);
    }
    st.offset[mesh.num_cells()] = count;
    st.triangle_area.resize(count);
    st.triangle_min_angle.resize(count);
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const auto z0 = star_center(mesh, c, opt);
        if (!z0) throw Error(ErrorCode::NotStarShaped, "no valid fan center for cell " + std::to_string(c));
        st.centers[c] = *z0;
        for (int j = 0; j < mesh.cell_size(c); ++j) {
            const auto t = st.triangle(mesh, c, j);
            st.triangle_area[st.offset[c] + j] = 0.5 * orient(t[0], t[1], t[2]);
            st.triangle_min_angle[st.offset[c] + j] = geometry::min_angle(t[0], t[1], t[2]);
        }
    }
    return st;
}

struct MeshQualityReport {
    std::vector<double> rho_estimate;
    std::vector<double> min_edge_ratio;
    std::vector<char> star_shaped_ok;

    bool all_star_shaped() const {
        return std::all_of(star_shaped_ok.begin(), star_shaped_ok.end(), [](char b) { return b != 0; });
    }
    double min_rho() const {
        return rho_estimate.empty() ? 0.0 : *std::min_element(rho_estimate.begin(), rho_estimate.end());
    }
};

/// Quality diagnostics. Topological violations are rejected when the mesh is
/// constructed, so this only reports.
inline MeshQualityReport validate(const PolygonalMesh& mesh, const SubTriangulationOptions& opt = {}) {
    MeshQualityReport r;
    const int nc = mesh.num_cells();
    r.rho_estimate.resize(nc);
    r.min_edge_ratio.resize(nc);
    r.star_shaped_ok.resize(nc);
    for (int c = 0; c < nc; ++c) {
        const auto poly = mesh.polygon(c);
        const auto z0 = star_center(mesh, c, opt);
        r.star_shaped_ok[c] = z0.has_value();
        const Point center = z0.value_or(mesh.centroid(c));
        const int n = static_cast<int>(poly.size());
        double inradius = std::numeric_limits<double>::infinity();
        double min_edge = std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) {
            const Point& a = poly[j];
            const Point& b = poly[(j + 1) % n];
            inradius = std::min(inradius, geometry::point_segment_distance(center, a, b));
            min_edge = std::min(min_edge, (b - a).norm());
        }
        r.rho_estimate[c] = z0 ? inradius / mesh.diameter(c) : 0.0;
        r.min_edge_ratio[c] = min_edge / mesh.diameter(c);
    }
    return r;
}

struct Location {
    int cell = -1;
    int triangle = -1;             // local fan triangle index
    Eigen::Vector3d bary;          // with respect to (z0, z_j, z_{j+1})
};

/// Bucket grid over fan triangles. Ties on shared boundaries resolve to the
/// lowest cell index, then the lowest triangle index.
class PointLocator {
  public:
    static constexpr double kTol = 1e-12;

    PointLocator(const PolygonalMesh& mesh, const SubTriangulation& st) : mesh_(&mesh), st_(&st) {
        lo_ = mesh.vertex(0);
        hi_ = mesh.vertex(0);
        for (const auto& p : mesh.vertices()) {
            lo_ = lo_.cwiseMin(p);
            hi_ = hi_.cwiseMax(p);
        }
        const double ext = std::max((hi_ - lo_).maxCoeff(), 1e-300);
        pad_ = 1e-10 * ext;
        const int nt = st.num_triangles();
        nx_ = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(nt)) * (hi_.x() - lo_.x()) / ext));
        ny_ = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(nt)) * (hi_.y() - lo_.y()) / ext));
        buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
        for (int c = 0; c < mesh.num_cells(); ++c) {
            for (int j = 0; j < mesh.cell_size(c); ++j) {
                const auto t = st.triangle(mesh, c, j);
                Point a = t[0].cwiseMin(t[1]).cwiseMin(t[2]);
                Point b = t[0].cwiseMax(t[1]).cwiseMax(t[2]);
                const auto [i0, j0] = bucket(a - Point(pad_, pad_));
                const auto [i1, j1] = bucket(b + Point(pad_, pad_));
                for (int bj = j0; bj <= j1; ++bj)
                    for (int bi = i0; bi <= i1; ++bi) buckets_[bj * nx_ + bi].push_back({c, j});
            }
        }
    }

    std::optional<Location> try_locate(const Point& p) const {
        if (p.x() < lo_.x() - pad_ || p.y() < lo_.y() - pad_ || p.x() > hi_.x() + pad_ || p.y() > hi_.y() + pad_)
            return std::nullopt;
        const auto [bi, bj] = bucket(p);
        // bucket lists are filled in (cell, triangle) order, so the first hit wins
        for (const auto& [c, j] : buckets_[bj * nx_ + bi]) {
            const auto t = st_->triangle(*mesh_, c, j);
            const auto l = geometry::barycentric(p, t[0], t[1], t[2]);
            if (l.minCoeff() >= -kTol) return Location{c, j, l};
        }
        return std::nullopt;
    }

    Location locate(const Point& p) const {
        auto loc = try_locate(p);
        if (!loc)
            throw Error(ErrorCode::OutsideDomain,
                        "point (" + std::to_string(p.x()) + ", " + std::to_string(p.y()) + ") is outside the mesh");
        return *loc;
    }

    /// Fan triangles whose bounding boxes may meet the box [lo, hi], sorted by (cell, triangle).
    std::vector<std::pair<int, int>> candidates(const Point& lo, const Point& hi) const {
        const auto [i0, j0] = bucket(lo - Point(pad_, pad_));
        const auto [i1, j1] = bucket(hi + Point(pad_, pad_));
        std::vector<std::pair<int, int>> out;
        for (int bj = j0; bj <= j1; ++bj)
            for (int bi = i0; bi <= i1; ++bi) {
                const auto& b = buckets_[bj * nx_ + bi];
                out.insert(out.end(), b.begin(), b.end());
            }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    const PolygonalMesh& mesh() const { return *mesh_; }
    const SubTriangulation& sub_triangulation() const { return *st_; }

  private:
    std::pair<int, int> bucket(const Point& p) const {
        const double fx = (p.x() - lo_.x()) / std::max(hi_.x() - lo_.x(), 1e-300);
        const double fy = (p.y() - lo_.y()) / std::max(hi_.y() - lo_.y(), 1e-300);
        const int i = std::clamp(static_cast<int>(fx * nx_), 0, nx_ - 1);
        const int j = std::clamp(static_cast<int>(fy * ny_), 0, ny_ - 1);
        return {i, j};
    }

    const PolygonalMesh* mesh_;
    const SubTriangulation* st_;
    Point lo_, hi_;
    double pad_ = 0.0;
    int nx_ = 1, ny_ = 1;
    std::vector<std::vector<std::pair<int, int>>> buckets_;
};

}  // namespace polyvem
