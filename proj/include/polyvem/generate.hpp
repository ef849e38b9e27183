#pragma once

// Mesh generators on the unit square.

#include "polyvem/common.hpp"
#include "polyvem/geometry.hpp"
#include "polyvem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace polyvem {

enum class MeshKind { UniformSquare, DistortedSquare, RedRefinedQuad, VoronoiLloyd, NonconvexPattern };

inline std::optional<MeshKind> parse_mesh_kind(std::string_view s) {
    if (s == "uniform_square") return MeshKind::UniformSquare;
    if (s == "distorted_square") return MeshKind::DistortedSquare;
    if (s == "red_refined_quad") return MeshKind::RedRefinedQuad;
    if (s == "voronoi_lloyd") return MeshKind::VoronoiLloyd;
    if (s == "nonconvex_pattern") return MeshKind::NonconvexPattern;
    return std::nullopt;
}

inline std::string_view to_string(MeshKind k) {
    switch (k) {
        case MeshKind::UniformSquare: return "uniform_square";
        case MeshKind::DistortedSquare: return "distorted_square";
        case MeshKind::RedRefinedQuad: return "red_refined_quad";
        case MeshKind::VoronoiLloyd: return "voronoi_lloyd";
        case MeshKind::NonconvexPattern: return "nonconvex_pattern";
    }
    return "unknown";
}

/// n: squares per side (grid kinds) or number of sites (voronoi_lloyd).
struct GenerateParams {
    int n = 4;
    std::uint64_t seed = 1;
    int refinements = 0;          // red_refined_quad only
    int lloyd_iterations = 100;
    double distortion = 0.2;      // max vertex shift as a fraction of the grid spacing
    std::optional<Point> pin;     // distorted_square: move the nearest interior vertex here
    double zigzag = 1.0 / 16.0;   // nonconvex_pattern: diagonal kink as a fraction of the spacing
};

inline PolygonalMesh uniform_square(int n) {
    if (n < 1) throw Error(ErrorCode::BadParams, "uniform_square needs n >= 1");
    std::vector<Point> v;
    v.reserve((n + 1) * (n + 1));
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) v.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
    std::vector<std::vector<int>> cells;
    cells.reserve(n * n);
    auto id = [n](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
    return PolygonalMesh(std::move(v), std::move(cells));
}

inline PolygonalMesh distorted_square(int n, std::uint64_t seed, double amplitude, std::optional<Point> pin = {}) {
    if (n < 1 || !(amplitude >= 0.0) || amplitude >= 0.5)
        throw Error(ErrorCode::BadParams, "distorted_square needs n >= 1 and 0 <= amplitude < 0.5");
    const PolygonalMesh base = uniform_square(n);
    std::vector<Point> v = base.vertices();
    const double s = 1.0 / n;
    SplitMix64 rng(seed);
    for (int i = 0; i < base.num_vertices(); ++i) {
        const double dx = rng.uniform(-1.0, 1.0);
        const double dy = rng.uniform(-1.0, 1.0);
        if (!base.boundary_vertex(i)) v[i] += amplitude * s * Point(dx, dy);
    }
    if (pin) {
        int best = -1;
        for (int i = 0; i < base.num_vertices(); ++i) {
            if (base.boundary_vertex(i)) continue;
            if (best < 0 || (v[i] - *pin).norm() < (v[best] - *pin).norm()) best = i;
        }
        if (best < 0) throw Error(ErrorCode::BadParams, "no interior vertex to pin");
        v[best] = *pin;
    }
    return PolygonalMesh(std::move(v), base.cells());
}

struct RefinedMesh {
    PolygonalMesh mesh;
    std::vector<int> parent;  // coarse cell of every fine cell
};

/// Splits every cell with N vertices into N quadrilaterals (vertex, next edge
/// midpoint, centroid, previous edge midpoint). Fine vertices are the coarse
/// vertices, then edge midpoints by edge id, then cell centroids.
inline RefinedMesh red_refine(const PolygonalMesh& mesh) {
    const int nv = mesh.num_vertices();
    const int ne = mesh.num_edges();
    std::vector<Point> v = mesh.vertices();
    v.reserve(nv + ne + mesh.num_cells());
    for (const auto& e : mesh.edges()) v.push_back(0.5 * (mesh.vertex(e.v[0]) + mesh.vertex(e.v[1])));
    for (int c = 0; c < mesh.num_cells(); ++c) v.push_back(mesh.centroid(c));
    RefinedMesh out;
    std::vector<std::vector<int>> cells;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const auto& cyc = mesh.cell(c);
        const int n = static_cast<int>(cyc.size());
        const int center = nv + ne + c;
        for (int j = 0; j < n; ++j) {
            const int next_mid = nv + mesh.cell_edge(c, j);
            const int prev_mid = nv + mesh.cell_edge(c, (j + n - 1) % n);
            cells.push_back({cyc[j], next_mid, center, prev_mid});
            out.parent.push_back(c);
        }
    }
    out.mesh = PolygonalMesh(std::move(v), std::move(cells));
    return out;
}

/// Each grid square is split along a kinked diagonal into two interlocking
/// nonconvex hexagons.
inline PolygonalMesh nonconvex_pattern(int n, double zigzag) {
    if (n < 1 || !(zigzag > 0.0) || zigzag >= 0.2)
        throw Error(ErrorCode::BadParams, "nonconvex_pattern needs n >= 1 and 0 < zigzag < 0.2");
    const double s = 1.0 / n;
    const double d = zigzag * s;
    std::vector<Point> v;
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) v.emplace_back(i * s, j * s);
    auto id = [n](int i, int j) { return j * (n + 1) + i; };
    std::vector<std::vector<int>> cells;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const Point o(i * s, j * s);
            const int p1 = static_cast<int>(v.size());
            v.push_back(o + Point(0.25 * s + d, 0.25 * s - d));
            v.push_back(o + Point(0.5 * s - d, 0.5 * s + d));
            v.push_back(o + Point(0.75 * s + d, 0.75 * s - d));
            const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), e = id(i, j + 1);
            cells.push_back({a, b, c, p1 + 2, p1 + 1, p1});
            cells.push_back({a, p1, p1 + 1, p1 + 2, c, e});
        }
    }
    return PolygonalMesh(std::move(v), std::move(cells));
}

namespace detail {

/// Voronoi cells of the sites clipped to the unit square.
inline std::vector<std::vector<Point>> voronoi_cells(const std::vector<Point>& sites) {
    const int n = static_cast<int>(sites.size());
    const int g = std::max(1, static_cast<int>(std::sqrt(n / 2.0)));
    const double w = 1.0 / g;
    auto bucket_of = [&](const Point& p) {
        const int i = std::clamp(static_cast<int>(p.x() * g), 0, g - 1);
        const int j = std::clamp(static_cast<int>(p.y() * g), 0, g - 1);
        return std::pair{i, j};
    };
    std::vector<std::vector<int>> buckets(g * g);
    for (int s = 0; s < n; ++s) {
        const auto [i, j] = bucket_of(sites[s]);
        buckets[j * g + i].push_back(s);
    }
    const std::vector<Point> box{{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
    std::vector<std::vector<Point>> out(n);
    for (int s = 0; s < n; ++s) {
        const Point& x = sites[s];
        std::vector<Point> poly = box;
        auto radius = [&]() {
            double r = 0.0;
            for (const auto& p : poly) r = std::max(r, (p - x).norm());
            return r;
        };
        double R = radius();
        const auto [bi, bj] = bucket_of(x);
        for (int ring = 0; ring <= g; ++ring) {
            for (int j = bj - ring; j <= bj + ring; ++j) {
                for (int i = bi - ring; i <= bi + ring; ++i) {
                    if (i < 0 || j < 0 || i >= g || j >= g) continue;
                    if (std::max(std::abs(i - bi), std::abs(j - bj)) != ring) continue;
                    for (int t : buckets[j * g + i]) {
                        if (t == s) continue;
                        const Point& y = sites[t];
                        const Point dlt = y - x;
                        if (0.5 * dlt.norm() >= R) continue;
                        poly = geometry::clip_halfplane(poly, dlt, 0.5 * (y.squaredNorm() - x.squaredNorm()));
                        R = radius();
                    }
                }
            }
            if (ring * w >= 2.0 * R) break;
        }
        out[s] = std::move(poly);
    }
    return out;
}

/// Turns independently clipped cell polygons into a conforming mesh: merges
/// coincident vertices, collapses edges shorter than collapse_ratio * cell
/// diameter and keeps boundary/corner vertices on the unit-square boundary.
inline PolygonalMesh assemble_polygons(const std::vector<std::vector<Point>>& polys, double collapse_ratio) {
    constexpr double kSnap = 1e-12;
    constexpr double kMerge = 1e-9;
    std::vector<Point> pts;
    std::vector<std::vector<int>> cells(polys.size());
    std::unordered_map<std::int64_t, std::vector<int>> hash;
    auto key = [](std::int64_t i, std::int64_t j) { return i * 4000000007LL + j; };
    const double q = 1e-8;
    for (std::size_t c = 0; c < polys.size(); ++c) {
        for (Point p : polys[c]) {
            for (int d = 0; d < 2; ++d) {
                if (std::abs(p[d]) < kSnap) p[d] = 0.0;
                if (std::abs(p[d] - 1.0) < kSnap) p[d] = 1.0;
            }
            const auto ix = static_cast<std::int64_t>(std::floor(p.x() / q));
            const auto iy = static_cast<std::int64_t>(std::floor(p.y() / q));
            int found = -1;
            for (std::int64_t a = ix - 1; a <= ix + 1 && found < 0; ++a)
                for (std::int64_t b = iy - 1; b <= iy + 1 && found < 0; ++b) {
                    auto it = hash.find(key(a, b));
                    if (it == hash.end()) continue;
                    for (int k : it->second)
                        if ((pts[k] - p).norm() < kMerge) {
                            found = k;
                            break;
                        }
                }
            if (found < 0) {
                found = static_cast<int>(pts.size());
                pts.push_back(p);
                hash[key(ix, iy)].push_back(found);
            }
            if (cells[c].empty() || cells[c].back() != found) cells[c].push_back(found);
        }
        while (cells[c].size() > 1 && cells[c].front() == cells[c].back()) cells[c].pop_back();
    }

    auto on_boundary = [](const Point& p) {
        return p.x() == 0.0 || p.x() == 1.0 || p.y() == 0.0 || p.y() == 1.0;
    };
    auto is_corner = [](const Point& p) {
        return (p.x() == 0.0 || p.x() == 1.0) && (p.y() == 0.0 || p.y() == 1.0);
    };

    for (int pass = 0; pass < 8; ++pass) {
        std::vector<int> parent(pts.size());
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](int a) {
            while (parent[a] != a) a = parent[a] = parent[parent[a]];
            return a;
        };
        bool any = false;
        for (const auto& cyc : cells) {
            std::vector<Point> poly;
            for (int k : cyc) poly.push_back(pts[k]);
            const double lim = collapse_ratio * geometry::diameter(poly);
            for (std::size_t j = 0; j < cyc.size(); ++j) {
                const int a = cyc[j];
                const int b = cyc[(j + 1) % cyc.size()];
                if ((pts[a] - pts[b]).norm() >= lim) continue;
                // two corners never merge; neither do boundary points on different sides
                if (is_corner(pts[a]) && is_corner(pts[b])) continue;
                const int ra = find(a), rb = find(b);
                if (ra != rb) {
                    parent[std::max(ra, rb)] = std::min(ra, rb);
                    any = true;
                }
            }
        }
        if (!any) break;
        std::vector<std::vector<int>> groups(pts.size());
        for (int k = 0; k < static_cast<int>(pts.size()); ++k) groups[find(k)].push_back(k);
        std::vector<Point> moved = pts;
        for (int r = 0; r < static_cast<int>(pts.size()); ++r) {
            const auto& grp = groups[r];
            if (grp.size() < 2) continue;
            std::optional<Point> pos;
            for (int k : grp)
                if (is_corner(pts[k])) pos = pts[k];
            if (!pos) {
                Point sum = Point::Zero();
                int cnt = 0;
                for (int k : grp)
                    if (on_boundary(pts[k])) {
                        sum += pts[k];
                        ++cnt;
                    }
                if (cnt > 0) {
                    pos = sum / cnt;
                    // averaging boundary points on one side stays on that side
                    for (int d = 0; d < 2; ++d)
                        for (int k : grp)
                            if (on_boundary(pts[k]) && (pts[k][d] == 0.0 || pts[k][d] == 1.0) && std::abs((*pos)[d] - pts[k][d]) < 1e-9)
                                (*pos)[d] = pts[k][d];
                }
            }
            if (!pos) {
                Point sum = Point::Zero();
                for (int k : grp) sum += pts[k];
                pos = sum / static_cast<double>(grp.size());
            }
            for (int k : grp) moved[k] = *pos;
        }
        pts = std::move(moved);
        for (auto& cyc : cells) {
            std::vector<int> out;
            for (int k : cyc) {
                const int r = find(k);
                if (out.empty() || out.back() != r) out.push_back(r);
            }
            while (out.size() > 1 && out.front() == out.back()) out.pop_back();
            cyc = std::move(out);
        }
    }

    // compact vertex numbering in order of first use
    std::vector<int> remap(pts.size(), -1);
    std::vector<Point> used;
    for (auto& cyc : cells) {
        if (cyc.size() < 3) throw Error(ErrorCode::Degenerate, "polygon collapsed below three vertices");
        for (int& k : cyc) {
            if (remap[k] < 0) {
                remap[k] = static_cast<int>(used.size());
                used.push_back(pts[k]);
            }
            k = remap[k];
        }
    }
    PolygonalMesh mesh(std::move(used), std::move(cells));
    for (const auto& e : mesh.edges()) {
        if (!e.boundary()) continue;
        const Point& a = mesh.vertex(e.v[0]);
        const Point& b = mesh.vertex(e.v[1]);
        const bool same_side = (a.x() == 0.0 && b.x() == 0.0) || (a.x() == 1.0 && b.x() == 1.0) ||
                               (a.y() == 0.0 && b.y() == 0.0) || (a.y() == 1.0 && b.y() == 1.0);
        if (!same_side) throw Error(ErrorCode::Degenerate, "non-conforming interior edge in assembled polygons");
    }
    return mesh;
}

}  // namespace detail

/// Lloyd-relaxed Voronoi mesh of n seeded uniform sites in the unit square.
inline PolygonalMesh voronoi_lloyd(int n, std::uint64_t seed, int iterations = 100) {
    if (n < 2 || iterations < 0) throw Error(ErrorCode::BadParams, "voronoi_lloyd needs n >= 2 sites");
    SplitMix64 rng(seed);
    std::vector<Point> sites(n);
    for (auto& s : sites) {
        const double x = rng.uniform();
        const double y = rng.uniform();
        s = Point(x, y);
    }
    auto polys = detail::voronoi_cells(sites);
    for (int it = 0; it < iterations; ++it) {
        for (int s = 0; s < n; ++s) sites[s] = geometry::centroid(polys[s]);
        polys = detail::voronoi_cells(sites);
    }
    return detail::assemble_polygons(polys, 0.05);
}

inline PolygonalMesh generate(MeshKind kind, const GenerateParams& p) {
    switch (kind) {
        case MeshKind::UniformSquare: return uniform_square(p.n);
        case MeshKind::DistortedSquare: return distorted_square(p.n, p.seed, p.distortion, p.pin);
        case MeshKind::RedRefinedQuad: {
            if (p.refinements < 0) throw Error(ErrorCode::BadParams, "negative refinement count");
            PolygonalMesh m = uniform_square(p.n);
            for (int r = 0; r < p.refinements; ++r) m = red_refine(m).mesh;
            return m;
        }
        case MeshKind::VoronoiLloyd: return voronoi_lloyd(p.n, p.seed, p.lloyd_iterations);
        case MeshKind::NonconvexPattern: return nonconvex_pattern(p.n, p.zigzag);
    }
    throw Error(ErrorCode::BadParams, "unknown mesh kind");
}

}  // namespace polyvem
