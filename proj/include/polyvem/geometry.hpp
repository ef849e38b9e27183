#pragma once

// Small polygon helpers shared by the mesh, generators and error integration.

#include "polyvem/common.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace polyvem::geometry {

// Shoelace sums are taken relative to the first vertex; small cells far from
// the origin otherwise lose digits to cancellation.

inline double signed_area(std::span<const Point> poly) {
    double a = 0.0;
    const std::size_t n = poly.size();
    if (n == 0) return 0.0;
    const Point o = poly[0];
    for (std::size_t i = 0; i < n; ++i) a += cross(poly[i] - o, poly[(i + 1) % n] - o);
    return 0.5 * a;
}

/// Area centroid; falls back to the vertex average for (near) zero area.
inline Point centroid(std::span<const Point> poly) {
    const std::size_t n = poly.size();
    if (n == 0) return Point::Zero();
    double a = 0.0;
    Point c = Point::Zero();
    const Point o = poly[0];
    for (std::size_t i = 0; i < n; ++i) {
        const Point p = poly[i] - o;
        const Point q = poly[(i + 1) % n] - o;
        const double w = cross(p, q);
        a += w;
        c += w * (p + q);
    }
    if (std::abs(a) < 1e-300) {
        Point m = Point::Zero();
        for (const auto& p : poly) m += p;
        return m / static_cast<double>(n);
    }
    return o + c / (3.0 * a);
}

inline double diameter(std::span<const Point> poly) {
    double d = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i)
        for (std::size_t j = i + 1; j < poly.size(); ++j) d = std::max(d, (poly[i] - poly[j]).norm());
    return d;
}

inline double point_segment_distance(const Point& p, const Point& a, const Point& b) {
    const Point ab = b - a;
    const double len2 = ab.squaredNorm();
    double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

/// Keeps the part of a convex polygon where n.x <= c (Sutherland-Hodgman step).
inline std::vector<Point> clip_halfplane(std::span<const Point> poly, const Point& n, double c) {
    std::vector<Point> out;
    const std::size_t m = poly.size();
    if (m == 0) return out;
    out.reserve(m + 1);
    for (std::size_t i = 0; i < m; ++i) {
        const Point& p = poly[i];
        const Point& q = poly[(i + 1) % m];
        const double sp = n.dot(p) - c;
        const double sq = n.dot(q) - c;
        if (sp <= 0.0) out.push_back(p);
        if ((sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0)) {
            const double t = sp / (sp - sq);
            out.push_back(p + t * (q - p));
        }
    }
    return out;
}

/// Intersection of two convex CCW polygons.
inline std::vector<Point> clip_convex(std::span<const Point> subject, std::span<const Point> clipper) {
    std::vector<Point> out(subject.begin(), subject.end());
    const std::size_t m = clipper.size();
    for (std::size_t i = 0; i < m && !out.empty(); ++i) {
        const Point& a = clipper[i];
        const Point& b = clipper[(i + 1) % m];
        const Point d = b - a;
        // interior lies to the left of a->b, i.e. (-d.y, d.x).(x - a) >= 0
        const Point n(d.y(), -d.x());
        out = clip_halfplane(out, n, n.dot(a));
    }
    return out;
}

/// Kernel (set of points that see the whole polygon) of a CCW polygon.
inline std::vector<Point> kernel(std::span<const Point> poly) {
    Point lo = poly[0], hi = poly[0];
    for (const auto& p : poly) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    std::vector<Point> box{lo, {hi.x(), lo.y()}, hi, {lo.x(), hi.y()}};
    return clip_convex(box, poly);
}

/// Even-odd point-in-polygon test with a boundary tolerance; boundary counts as inside.
inline bool contains(std::span<const Point> poly, const Point& p, double tol) {
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i)
        if (point_segment_distance(p, poly[i], poly[(i + 1) % n]) <= tol) return true;
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point& a = poly[i];
        const Point& b = poly[j];
        if ((a.y() > p.y()) != (b.y() > p.y())) {
            const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
            if (p.x() < x) inside = !inside;
        }
    }
    return inside;
}

/// Smallest interior angle (radians) of triangle a, b, c.
inline double min_angle(const Point& a, const Point& b, const Point& c) {
    auto angle = [](const Point& p, const Point& q, const Point& r) {
        const Point u = q - p;
        const Point v = r - p;
        return std::atan2(std::abs(cross(u, v)), u.dot(v));
    };
    return std::min({angle(a, b, c), angle(b, c, a), angle(c, a, b)});
}

/// Barycentric coordinates of p with respect to triangle (a, b, c).
inline Eigen::Vector3d barycentric(const Point& p, const Point& a, const Point& b, const Point& c) {
    const double area2 = orient(a, b, c);
    Eigen::Vector3d l;
    l[0] = orient(p, b, c) / area2;
    l[1] = orient(a, p, c) / area2;
    l[2] = 1.0 - l[0] - l[1];
    return l;
}

}  // namespace polyvem::geometry
