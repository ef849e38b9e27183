#pragma once

// Scaled monomial bases and Gauss-type quadrature on segments, triangles and
// fan-triangulated polygons.

#include "polyvem/common.hpp"

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

namespace polyvem {

inline constexpr int kMaxExactness = 10;

inline int monomial_count(int degree) { return degree < 0 ? 0 : (degree + 1) * (degree + 2) / 2; }

/// Exponent pairs in graded-lex order: (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...
inline std::vector<std::array<int, 2>> graded_exponents(int degree) {
    std::vector<std::array<int, 2>> out;
    out.reserve(monomial_count(degree));
    for (int d = 0; d <= degree; ++d)
        for (int j = 0; j <= d; ++j) out.push_back({d - j, j});
    return out;
}

/// ((x - center) / scale)^beta for |beta| <= degree.
class ScaledMonomialBasis {
  public:
    ScaledMonomialBasis(int degree, Point center, double scale)
        : degree_(degree), center_(std::move(center)), scale_(scale), exponents_(graded_exponents(degree)) {
        if (degree < 0) throw Error(ErrorCode::UnsupportedDegree, "negative monomial degree");
        if (!(scale > 0.0)) throw Error(ErrorCode::BadParams, "monomial scale must be positive");
    }

    int degree() const { return degree_; }
    int size() const { return static_cast<int>(exponents_.size()); }
    const Point& center() const { return center_; }
    double scale() const { return scale_; }
    const std::vector<std::array<int, 2>>& exponents() const { return exponents_; }

    Vector values(const Point& x) const {
        const auto [px, py] = powers(x);
        Vector out(size());
        for (int a = 0; a < size(); ++a) out[a] = px[exponents_[a][0]] * py[exponents_[a][1]];
        return out;
    }

    /// Row a holds the gradient of monomial a.
    Eigen::Matrix<double, Eigen::Dynamic, 2> gradients(const Point& x) const {
        const auto [px, py] = powers(x);
        Eigen::Matrix<double, Eigen::Dynamic, 2> g(size(), 2);
        for (int a = 0; a < size(); ++a) {
            const int i = exponents_[a][0];
            const int j = exponents_[a][1];
            g(a, 0) = i > 0 ? i * px[i - 1] * py[j] / scale_ : 0.0;
            g(a, 1) = j > 0 ? j * px[i] * py[j - 1] / scale_ : 0.0;
        }
        return g;
    }

    Vector laplacians(const Point& x) const {
        const auto [px, py] = powers(x);
        const double s2 = scale_ * scale_;
        Vector out = Vector::Zero(size());
        for (int a = 0; a < size(); ++a) {
            const int i = exponents_[a][0];
            const int j = exponents_[a][1];
            if (i > 1) out[a] += i * (i - 1) * px[i - 2] * py[j] / s2;
            if (j > 1) out[a] += j * (j - 1) * px[i] * py[j - 2] / s2;
        }
        return out;
    }

  private:
    std::pair<std::vector<double>, std::vector<double>> powers(const Point& x) const {
        const double tx = (x.x() - center_.x()) / scale_;
        const double ty = (x.y() - center_.y()) / scale_;
        std::vector<double> px(degree_ + 1, 1.0), py(degree_ + 1, 1.0);
        for (int d = 1; d <= degree_; ++d) {
            px[d] = px[d - 1] * tx;
            py[d] = py[d - 1] * ty;
        }
        return {std::move(px), std::move(py)};
    }

    int degree_;
    Point center_;
    double scale_;
    std::vector<std::array<int, 2>> exponents_;
};

struct QuadratureRule {
    std::vector<Point> points;
    std::vector<double> weights;
    int exactness = 0;

    std::size_t size() const { return points.size(); }

    double weight_sum() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }

    void append(const QuadratureRule& other) {
        points.insert(points.end(), other.points.begin(), other.points.end());
        weights.insert(weights.end(), other.weights.begin(), other.weights.end());
    }
};

namespace detail {

/// Legendre P_n and its derivative at x.
inline std::pair<double, double> legendre(int n, double x) {
    double p0 = 1.0, p1 = x;
    if (n == 0) return {1.0, 0.0};
    for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    const double dp = std::abs(x) < 1.0 ? n * (p0 - x * p1) / (1.0 - x * x) : 0.5 * n * (n + 1) * std::pow(x, n + 1);
    return {p1, dp};
}

}  // namespace detail

/// n-point Gauss-Legendre nodes and weights on [-1, 1], ascending.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
    if (n < 1) throw Error(ErrorCode::UnsupportedDegree, "Gauss-Legendre needs at least one point");
    std::vector<double> x(n), w(n);
    for (int i = 0; i < n; ++i) {
        double r = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            const auto [p, dp] = detail::legendre(n, r);
            const double dr = p / dp;
            r -= dr;
            if (std::abs(dr) < 1e-16) break;
        }
        const auto [p, dp] = detail::legendre(n, r);
        x[n - 1 - i] = r;
        w[n - 1 - i] = 2.0 / ((1.0 - r * r) * dp * dp);
    }
    return {x, w};
}

/// n-point Gauss-Lobatto nodes and weights on [-1, 1] (n >= 2), ascending.
/// Interior nodes are the roots of P'_{n-1}.
inline std::pair<std::vector<double>, std::vector<double>> gauss_lobatto(int n) {
    if (n < 2) throw Error(ErrorCode::UnsupportedDegree, "Gauss-Lobatto needs at least two points");
    const int m = n - 1;
    std::vector<double> x(n), w(n);
    x[0] = -1.0;
    x[m] = 1.0;
    for (int i = 1; i < m; ++i) {
        double r = -std::cos(std::numbers::pi * i / m);
        for (int it = 0; it < 100; ++it) {
            const auto [p, dp] = detail::legendre(m, r);
            const double d2p = (2.0 * r * dp - m * (m + 1.0) * p) / (1.0 - r * r);
            const double dr = dp / d2p;
            r -= dr;
            if (std::abs(dr) < 1e-16) break;
        }
        x[i] = r;
    }
    for (int i = 0; i < n; ++i) {
        const double p = detail::legendre(m, x[i]).first;
        w[i] = 2.0 / (m * (m + 1.0) * p * p);
    }
    return {x, w};
}

/// Reference rule on the triangle (0,0), (1,0), (0,1) built from the collapsed
/// (Duffy) tensor product of Gauss-Legendre rules. Weights sum to 1/2.
inline const QuadratureRule& reference_triangle_rule(int exactness) {
    if (exactness < 0 || exactness > kMaxExactness)
        throw Error(ErrorCode::UnsupportedDegree, "triangle rule exactness " + std::to_string(exactness));
    static std::mutex mutex;
    static std::map<int, QuadratureRule> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(exactness);
    if (it != cache.end()) return it->second;

    // u carries the (1 - u) Jacobian, so it needs one extra degree.
    const int n = (exactness + 2 + 1) / 2;
    const auto [gx, gw] = gauss_legendre(n);
    QuadratureRule rule;
    rule.exactness = exactness;
    for (int i = 0; i < n; ++i) {
        const double u = 0.5 * (gx[i] + 1.0);
        for (int j = 0; j < n; ++j) {
            const double v = 0.5 * (gx[j] + 1.0);
            rule.points.emplace_back(u, (1.0 - u) * v);
            rule.weights.push_back(0.25 * gw[i] * gw[j] * (1.0 - u));
        }
    }
    return cache.emplace(exactness, std::move(rule)).first->second;
}

inline QuadratureRule triangle_quadrature(const Point& a, const Point& b, const Point& c, int exactness) {
    const QuadratureRule& ref = reference_triangle_rule(exactness);
    const double jac = std::abs(orient(a, b, c));
    QuadratureRule rule;
    rule.exactness = exactness;
    rule.points.reserve(ref.size());
    rule.weights.reserve(ref.size());
    for (std::size_t q = 0; q < ref.size(); ++q) {
        const Point& r = ref.points[q];
        rule.points.push_back(a + r.x() * (b - a) + r.y() * (c - a));
        rule.weights.push_back(ref.weights[q] * jac);
    }
    return rule;
}

/// Gauss-Legendre rule on the segment [a, b], exact up to the given degree.
inline QuadratureRule edge_quadrature(const Point& a, const Point& b, int exactness) {
    if (exactness < 0 || exactness > 2 * kMaxExactness)
        throw Error(ErrorCode::UnsupportedDegree, "edge rule exactness " + std::to_string(exactness));
    const int n = exactness / 2 + 1;
    const auto [gx, gw] = gauss_legendre(n);
    const double len = (b - a).norm();
    QuadratureRule rule;
    rule.exactness = 2 * n - 1;
    for (int i = 0; i < n; ++i) {
        const double t = 0.5 * (gx[i] + 1.0);
        rule.points.push_back((1.0 - t) * a + t * b);
        rule.weights.push_back(0.5 * gw[i] * len);
    }
    return rule;
}

/// k+1 Gauss-Lobatto points from a to b (both endpoints included).
inline std::vector<Point> gauss_lobatto_points(const Point& a, const Point& b, int k) {
    if (k < 1) throw Error(ErrorCode::UnsupportedDegree, "Gauss-Lobatto points need k >= 1");
    const auto nodes = gauss_lobatto(k + 1).first;
    std::vector<Point> out;
    out.reserve(nodes.size());
    for (double r : nodes) {
        const double t = 0.5 * (r + 1.0);
        out.push_back((1.0 - t) * a + t * b);
    }
    return out;
}

/// Gauss-Lobatto rule with k+1 nodes on [a, b]; exact for degree 2k - 1.
inline QuadratureRule gauss_lobatto_edge_rule(const Point& a, const Point& b, int k) {
    const auto [nodes, weights] = gauss_lobatto(k + 1);
    const double len = (b - a).norm();
    QuadratureRule rule;
    rule.exactness = 2 * k - 1;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double t = 0.5 * (nodes[i] + 1.0);
        rule.points.push_back((1.0 - t) * a + t * b);
        rule.weights.push_back(0.5 * weights[i] * len);
    }
    return rule;
}

}  // namespace polyvem
