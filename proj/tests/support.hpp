#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library's quadrature or projector code.

#include "polyvem/common.hpp"
#include "polyvem/mesh.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

using polyvem::Matrix;
using polyvem::Point;
using polyvem::Vector;

/// Gauss-Legendre nodes and weights on [-1, 1] via the Jacobi matrix eigenproblem.
inline std::pair<Vector, Vector> gauss(int n) {
    Matrix J = Matrix::Zero(n, n);
    for (int i = 1; i < n; ++i) {
        const double b = i / std::sqrt(4.0 * i * i - 1.0);
        J(i, i - 1) = J(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(J);
    Vector w = 2.0 * es.eigenvectors().row(0).transpose().array().square();
    return {es.eigenvalues(), w};
}

/// Collapsed-coordinate tensor rule; signed by the orientation of (a, b, c).
inline double integrate_triangle(const std::function<double(const Point&)>& f, const Point& a, const Point& b,
                                 const Point& c, int n = 14) {
    const auto [x, w] = gauss(n);
    const double jac = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = 0.5 * (x[i] + 1.0);
        for (int j = 0; j < n; ++j) {
            const double v = 0.5 * (x[j] + 1.0) * (1.0 - u);
            s += 0.25 * w[i] * w[j] * (1.0 - u) * f(a + u * (b - a) + v * (c - a));
        }
    }
    return s * jac;
}

/// Signed fan from vertex 0; valid for any simple polygon and smooth f.
inline double integrate_polygon(const std::function<double(const Point&)>& f, const std::vector<Point>& poly,
                                int n = 14) {
    double s = 0.0;
    for (std::size_t i = 1; i + 1 < poly.size(); ++i) s += integrate_triangle(f, poly[0], poly[i], poly[i + 1], n);
    return s;
}

/// Same with each fan triangle split into 4^depth pieces.
inline double integrate_polygon_refined(const std::function<double(const Point&)>& f, const std::vector<Point>& poly,
                                        int depth, int n = 10) {
    std::function<double(const Point&, const Point&, const Point&, int)> rec = [&](const Point& a, const Point& b,
                                                                                   const Point& c, int d) -> double {
        if (d == 0) return integrate_triangle(f, a, b, c, n);
        const Point ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
        return rec(a, ab, ca, d - 1) + rec(ab, b, bc, d - 1) + rec(ca, bc, c, d - 1) + rec(ab, bc, ca, d - 1);
    };
    double s = 0.0;
    for (std::size_t i = 1; i + 1 < poly.size(); ++i) s += rec(poly[0], poly[i], poly[i + 1], depth);
    return s;
}

/// int_P x^a y^b by the divergence theorem on the boundary.
inline double polygon_moment(const std::vector<Point>& poly, int a, int b) {
    const auto [x, w] = gauss(16);
    double s = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point p = poly[i], q = poly[(i + 1) % poly.size()];
        const Point d = q - p;
        for (int g = 0; g < x.size(); ++g) {
            const Point z = p + 0.5 * (x[g] + 1.0) * d;
            s += 0.5 * w[g] * std::pow(z.x(), a + 1) / (a + 1) * std::pow(z.y(), b) * d.y();
        }
    }
    return s;
}

inline double area(const std::vector<Point>& poly) { return polygon_moment(poly, 0, 0); }

/// First moments taken about vertex 0 to keep small, far-off cells accurate.
inline Point centroid(const std::vector<Point>& poly) {
    std::vector<Point> local;
    for (const auto& p : poly) local.push_back(p - poly[0]);
    const double a = area(local);
    return poly[0] + Point(polygon_moment(local, 1, 0), polygon_moment(local, 0, 1)) / a;
}

/// k = 1 elliptic projection of the nodal basis, written as
/// Pi phi_i(x) = 1/N + g_i . (x - vertex average).
struct K1Projection {
    std::vector<Point> g;
    Point vbar;
    double area = 0.0;

    explicit K1Projection(const std::vector<Point>& poly) {
        const int N = static_cast<int>(poly.size());
        area = oracle::area(poly);
        vbar = Point::Zero();
        for (const auto& p : poly) vbar += p / N;
        g.assign(N, Point::Zero());
        // grad Pi phi_i = (1/|P|) * boundary integral of phi_i n; phi_i is a hat on the two adjacent edges.
        for (int i = 0; i < N; ++i) {
            const Point prev = poly[(i + N - 1) % N], cur = poly[i], next = poly[(i + 1) % N];
            const Point e1 = cur - prev, e2 = next - cur;
            const Point n1(e1.y(), -e1.x()), n2(e2.y(), -e2.x());  // outward normals times edge length
            g[i] = 0.5 * (n1 + n2) / area;
        }
    }

    int size() const { return static_cast<int>(g.size()); }
    double value(int i, const Point& x) const { return 1.0 / size() + g[i].dot(x - vbar); }
};

inline Matrix k1_stiffness(const std::vector<Point>& poly) {
    const K1Projection P(poly);
    const int N = P.size();
    Matrix K(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) K(i, j) = P.area * P.g[i].dot(P.g[j]);
    Matrix R(N, N);  // R(r, i) = delta_ri - Pi phi_i(v_r)
    for (int r = 0; r < N; ++r)
        for (int i = 0; i < N; ++i) R(r, i) = (r == i ? 1.0 : 0.0) - P.value(i, poly[r]);
    return K + R.transpose() * R;
}

inline Matrix k1_mass(const std::vector<Point>& poly) {
    const K1Projection P(poly);
    const int N = P.size();
    Matrix M(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            M(i, j) = integrate_polygon([&](const Point& x) { return P.value(i, x) * P.value(j, x); }, poly);
    return M;
}

/// (A grad u, grad v) + (u b, grad v) + (gamma u, v) on projections, plus the stabilization.
inline Matrix k1_general(const std::vector<Point>& poly, const std::function<Eigen::Matrix2d(const Point&)>& A,
                         const std::function<Point(const Point&)>& b, const std::function<double(const Point&)>& gamma) {
    const K1Projection P(poly);
    const int N = P.size();
    Matrix S = k1_stiffness(poly);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) S(i, j) -= P.area * P.g[i].dot(P.g[j]);
    Matrix out = S;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            out(i, j) += integrate_polygon(
                [&](const Point& x) {
                    return P.g[i].dot(A(x) * P.g[j]) + b(x).dot(P.g[i]) * P.value(j, x) + gamma(x) * P.value(j, x) * P.value(i, x);
                },
                poly);
    return out;
}

/// Star-shaped polygon about its generating center with well-separated angles.
inline std::vector<Point> random_polygon(polyvem::SplitMix64& rng, int nmin = 3, int nmax = 9) {
    const int N = nmin + static_cast<int>(rng.next() % static_cast<std::uint64_t>(nmax - nmin + 1));
    const double two_pi = 2.0 * std::numbers::pi;
    std::vector<double> gaps(N);
    double total = 0.0;
    for (auto& g : gaps) total += (g = rng.uniform(0.6, 1.0));
    const double scale = std::pow(10.0, rng.uniform(-2.0, 0.5));
    const Point shift(rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0));
    const double start = rng.uniform(0.0, two_pi);
    std::vector<Point> poly;
    double t = start;
    for (int i = 0; i < N; ++i) {
        const double r = rng.uniform(0.55, 1.0);
        poly.push_back(shift + scale * r * Point(std::cos(t), std::sin(t)));
        t += two_pi * gaps[i] / total;
    }
    return poly;
}

inline polyvem::PolygonalMesh single_cell(const std::vector<Point>& poly) {
    std::vector<int> cell(poly.size());
    for (std::size_t i = 0; i < poly.size(); ++i) cell[i] = static_cast<int>(i);
    return polyvem::PolygonalMesh(poly, {cell});
}

inline std::vector<Point> unit_square() { return {{0, 0}, {1, 0}, {1, 1}, {0, 1}}; }

inline std::vector<Point> regular_polygon(int n, double r = 1.0, Point c = Point::Zero()) {
    std::vector<Point> p;
    for (int i = 0; i < n; ++i) {
        const double t = 2.0 * std::numbers::pi * i / n;
        p.push_back(c + r * Point(std::cos(t), std::sin(t)));
    }
    return p;
}

}  // namespace oracle
