#pragma once

// Property checks of the companion shared by the unit tests and the acceptance run.

#include "polyvem/companion.hpp"
#include "polyvem/geometry.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>

namespace checks {

using namespace polyvem;

struct CompanionDefects {
    double trace = 0.0;
    double l2 = 0.0;
    double gradient = 0.0;
};

inline Vector random_dofs(const VemSpace& V, std::uint64_t seed) {
    SplitMix64 rng(seed);
    Vector v(V.num_dofs());
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

/// Integral over fan triangle j of cell c of f(x, barycentrics).
template <class F>
double fan_integral(const VemSpace& V, int c, int j, F&& f, int n = 8) {
    const auto t = V.sub_triangulation().triangle(V.mesh(), c, j);
    return oracle::integrate_triangle([&](const Point& x) { return f(x, geometry::barycentric(x, t[0], t[1], t[2])); },
                                      t[0], t[1], t[2], n);
}

/// Edge trace of v on local edge j of cell c at parameter s in [0, 1].
inline double edge_trace(const VemSpace& V, int c, int j, const Vector& vl, double s) {
    const int N = V.mesh().cell_size(c);
    const double a = vl[j], b = vl[(j + 1) % N];
    if (V.degree() == 1) return (1 - s) * a + s * b;
    const double m = vl[N + j];
    return a * (1 - s) * (1 - 2 * s) + m * 4 * s * (1 - s) + b * s * (2 * s - 1);
}

/// Largest defects of the trace, L2 orthogonality and gradient orthogonality,
/// relative to the largest DOF magnitude.
inline CompanionDefects companion_defects(const Companion& J, const Vector& v) {
    const auto& V = J.space();
    const auto& mesh = V.mesh();
    const auto Jv = J.apply(v);
    CompanionDefects d;
    const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const Vector vl = V.local_dofs(c, v);
        const auto& P = V.projectors(c);
        const auto mk = V.basis(c), mk1 = V.basis(c, V.degree() - 1);
        for (int j = 0; j < mesh.cell_size(c); ++j)
            for (double s : {0.0, 0.1, 0.37, 0.5, 0.81, 1.0})
                d.trace = std::max(d.trace, std::abs(Jv.value(c, j, Eigen::Vector3d(0.0, 1.0 - s, s)) - edge_trace(V, c, j, vl, s)));
        Vector mom = Vector::Zero(mk.size());
        Matrix gmom = Matrix::Zero(mk1.size(), 2);
        for (int j = 0; j < mesh.cell_size(c); ++j) {
            for (int a = 0; a < mk.size(); ++a)
                mom[a] += fan_integral(V, c, j, [&](const Point& x, const Eigen::Vector3d& l) { return Jv.value(c, j, l) * mk.values(x)[a]; });
            for (int a = 0; a < mk1.size(); ++a)
                for (int e = 0; e < 2; ++e)
                    gmom(a, e) += fan_integral(V, c, j, [&](const Point& x, const Eigen::Vector3d& l) {
                        return Jv.gradient(c, j, l)[e] * mk1.values(x)[a];
                    });
        }
        const double area = mesh.area(c);
        d.l2 = std::max(d.l2, (mom - P.C * vl).cwiseAbs().maxCoeff() / area);
        for (int e = 0; e < 2; ++e) d.gradient = std::max(d.gradient, (gmom.col(e) - P.E[e] * vl).cwiseAbs().maxCoeff() / area);
    }
    d.trace /= scale;
    d.l2 /= scale;
    d.gradient /= scale;
    return d;
}

/// |J v - v| at random points for v interpolating a polynomial of degree k.
inline double fixed_point_defect(const Companion& J, const std::function<double(const Point&)>& p) {
    const auto& V = J.space();
    const auto Jv = J.apply(V.interpolate(p));
    SplitMix64 rng(17);
    double worst = 0.0;
    for (int c = 0; c < V.mesh().num_cells(); ++c) {
        for (int j = 0; j < V.mesh().cell_size(c); ++j) {
            for (int t = 0; t < 4; ++t) {
                double a = rng.uniform(), b = rng.uniform();
                if (a + b > 1) a = 1 - a, b = 1 - b;
                const Eigen::Vector3d l(1 - a - b, a, b);
                worst = std::max(worst, std::abs(Jv.value(c, j, l) - p(J.point(c, j, l))));
            }
        }
    }
    return worst;
}

/// |Pi^nabla v - J v|_{1,pw} over the stabilization seminorm of (1 - Pi^nabla) v.
inline double boundedness_ratio(const Companion& J, const Vector& v) {
    const auto& V = J.space();
    const auto& mesh = V.mesh();
    const auto Jv = J.apply(v);
    double num = 0.0, den = 0.0;
    const Coefficients poisson = Coefficients::poisson();
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const Vector vl = V.local_dofs(c, v);
        const Vector a = V.projectors(c).pinabla * vl;
        const auto mk = V.basis(c);
        for (int j = 0; j < mesh.cell_size(c); ++j)
            num += fan_integral(V, c, j, [&](const Point& x, const Eigen::Vector3d& l) {
                const Point g = Jv.gradient(c, j, l) - Point(mk.gradients(x).transpose() * a);
                return g.squaredNorm();
            });
        den += vl.dot(V.local_matrices(c, poisson).stabilization * vl);
    }
    return std::sqrt(num / den);
}

}  // namespace checks
