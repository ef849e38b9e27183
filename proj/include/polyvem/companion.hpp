#pragma once

// Conforming companion J: V_h -> H^1_0. On every cell, J v = J1 v + b_P v_P where
// J1 v is the continuous degree-k Lagrange interpolant on the fan triangles
// (boundary nodes take the values of v, interior nodes the values of the
// elliptic projection) and the bubble correction restores the moments of v
// against P_k.
//
// Lagrange nodes of a cell with N vertices: 0 = fan center, 1..N = vertices,
// and for k = 2 additionally 1+N+j = midpoint of edge j and 1+2N+j = midpoint
// of the spoke from the center to vertex j.

#include "polyvem/common.hpp"
#include "polyvem/mesh.hpp"
#include "polyvem/parallel.hpp"
#include "polyvem/poly.hpp"
#include "polyvem/vem_space.hpp"

#include <array>
#include <functional>
#include <vector>

namespace polyvem {

/// Bubble weight (20/9) * 27 so that the per-cell bubble has unit mean.
inline constexpr double kBubbleScale = 60.0;

/// A right-hand side in the dual space: a weighted sum of densities and point loads.
struct SourceFunctional {
    enum class Kind { Density, PointLoad };
    struct Term {
        Kind kind = Kind::Density;
        std::function<double(const Point&)> density;
        Point location = Point::Zero();
        double weight = 1.0;
    };
    std::vector<Term> terms;

    static SourceFunctional zero() { return {}; }
    static SourceFunctional density(std::function<double(const Point&)> f, double weight = 1.0) {
        return {{Term{Kind::Density, std::move(f), Point::Zero(), weight}}};
    }
    static SourceFunctional point_load(const Point& c, double weight = 1.0) {
        return {{Term{Kind::PointLoad, {}, c, weight}}};
    }
    SourceFunctional operator+(const SourceFunctional& o) const {
        SourceFunctional s = *this;
        s.terms.insert(s.terms.end(), o.terms.begin(), o.terms.end());
        return s;
    }
    bool has_point_load() const {
        for (const auto& t : terms)
            if (t.kind == Kind::PointLoad) return true;
        return false;
    }
};

struct LocalCompanion {
    Matrix L1;  // nodes x ndof
    Matrix W;   // weighted mass (b_P m_a, m_b)
    Matrix Vp;  // n_k x ndof bubble coefficients
};

/// Values and gradients of the degree-k Lagrange basis on a triangle, local
/// order: vertices 0, 1, 2 then for k = 2 the edges (0,1), (1,2), (0,2).
struct TriangleLagrange {
    static int size(int k) { return k == 1 ? 3 : 6; }

    static Vector values(int k, const Eigen::Vector3d& l) {
        Vector v(size(k));
        if (k == 1) {
            v << l[0], l[1], l[2];
        } else {
            v << l[0] * (2 * l[0] - 1), l[1] * (2 * l[1] - 1), l[2] * (2 * l[2] - 1), 4 * l[0] * l[1], 4 * l[1] * l[2],
                4 * l[0] * l[2];
        }
        return v;
    }

    /// Row i is the gradient of basis function i; dl holds the gradients of the barycentrics.
    static Eigen::Matrix<double, Eigen::Dynamic, 2> gradients(int k, const Eigen::Vector3d& l,
                                                             const std::array<Point, 3>& dl) {
        Eigen::Matrix<double, Eigen::Dynamic, 2> g(size(k), 2);
        if (k == 1) {
            for (int a = 0; a < 3; ++a) g.row(a) = dl[a].transpose();
        } else {
            for (int a = 0; a < 3; ++a) g.row(a) = ((4 * l[a] - 1) * dl[a]).transpose();
            g.row(3) = (4 * (l[0] * dl[1] + l[1] * dl[0])).transpose();
            g.row(4) = (4 * (l[1] * dl[2] + l[2] * dl[1])).transpose();
            g.row(5) = (4 * (l[0] * dl[2] + l[2] * dl[0])).transpose();
        }
        return g;
    }
};

inline std::array<Point, 3> barycentric_gradients(const std::array<Point, 3>& t) {
    const double a2 = orient(t[0], t[1], t[2]);
    return {Point(t[1].y() - t[2].y(), t[2].x() - t[1].x()) / a2, Point(t[2].y() - t[0].y(), t[0].x() - t[2].x()) / a2,
            Point(t[0].y() - t[1].y(), t[1].x() - t[0].x()) / a2};
}

class CompanionFunction;

class Companion {
  public:
    explicit Companion(const VemSpace& space) : space_(&space) {
        local_.resize(space.mesh().num_cells());
        parallel_for(space.mesh().num_cells(), [this](int c) { local_[c] = build(c); });
    }

    const VemSpace& space() const { return *space_; }
    const LocalCompanion& local(int c) const { return local_[c]; }
    int quadrature_degree() const { return 2 * space_->degree() + 3; }

    int num_nodes(int c) const {
        const int N = space_->mesh().cell_size(c);
        return space_->degree() == 1 ? 1 + N : 1 + 3 * N;
    }

    /// Cell node indices of the Lagrange basis on fan triangle j.
    std::array<int, 6> triangle_nodes(int c, int j) const {
        const int N = space_->mesh().cell_size(c);
        const int j1 = (j + 1) % N;
        return {0, 1 + j, 1 + j1, 1 + 2 * N + j, 1 + N + j, 1 + 2 * N + j1};
    }

    /// Row r with (J v)(x) = r . v_local for x in fan triangle j of cell c.
    Eigen::RowVectorXd value_row(int c, int j, const Eigen::Vector3d& l) const {
        const int k = space_->degree();
        const auto nodes = triangle_nodes(c, j);
        const Vector psi = TriangleLagrange::values(k, l);
        const auto& L = local_[c];
        Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(L.L1.cols());
        for (int a = 0; a < psi.size(); ++a) r += psi[a] * L.L1.row(nodes[a]);
        const Point x = point(c, j, l);
        const double b = kBubbleScale * l[0] * l[1] * l[2];
        if (b != 0.0) r += b * (space_->basis(c).values(x).transpose() * L.Vp);
        return r;
    }

    /// Rows of d/dx and d/dy of J v in terms of v_local.
    Matrix gradient_rows(int c, int j, const Eigen::Vector3d& l) const {
        const int k = space_->degree();
        const auto t = space_->sub_triangulation().triangle(space_->mesh(), c, j);
        const auto dl = barycentric_gradients(t);
        const auto nodes = triangle_nodes(c, j);
        const auto g = TriangleLagrange::gradients(k, l, dl);
        const auto& L = local_[c];
        Matrix r = Matrix::Zero(2, L.L1.cols());
        for (int a = 0; a < g.rows(); ++a) r += g.row(a).transpose() * L.L1.row(nodes[a]);
        const Point x = point(c, j, l);
        const auto mk = space_->basis(c);
        const double b = kBubbleScale * l[0] * l[1] * l[2];
        const Point db = kBubbleScale * (l[1] * l[2] * dl[0] + l[0] * l[2] * dl[1] + l[0] * l[1] * dl[2]);
        const Eigen::RowVectorXd p = mk.values(x).transpose() * L.Vp;
        const Matrix dp = mk.gradients(x).transpose() * L.Vp;
        r += db * p + b * dp;
        return r;
    }

    Point point(int c, int j, const Eigen::Vector3d& l) const {
        const auto t = space_->sub_triangulation().triangle(space_->mesh(), c, j);
        return l[0] * t[0] + l[1] * t[1] + l[2] * t[2];
    }

    /// Local load vector (f(J phi_i))_i on cell c for the density part of f.
    Vector local_density_load(int c, const std::function<double(const Point&)>& f) const {
        const auto& mesh = space_->mesh();
        const auto& L = local_[c];
        Vector out = Vector::Zero(L.L1.cols());
        const auto& ref = reference_triangle_rule(quadrature_degree());
        for (int j = 0; j < mesh.cell_size(c); ++j) {
            const double jac = 2.0 * space_->sub_triangulation().triangle_area[space_->sub_triangulation().index(c, j)];
            for (std::size_t q = 0; q < ref.size(); ++q) {
                const Eigen::Vector3d l(1.0 - ref.points[q].x() - ref.points[q].y(), ref.points[q].x(), ref.points[q].y());
                const double fx = f(point(c, j, l));
                if (fx == 0.0) continue;
                out += (ref.weights[q] * jac * fx) * value_row(c, j, l).transpose();
            }
        }
        return out;
    }

    CompanionFunction apply(const Vector& dofs) const;

  private:
    LocalCompanion build(int c) const {
        const auto& V = *space_;
        const auto& mesh = V.mesh();
        const auto& st = V.sub_triangulation();
        const auto& P = V.projectors(c);
        const int k = V.degree();
        const int N = mesh.cell_size(c);
        const int n = P.ndof;
        const int nk = monomial_count(k);
        const auto mk = V.basis(c);
        const Point z0 = st.centers[c];

        LocalCompanion L;
        L.L1 = Matrix::Zero(num_nodes(c), n);
        L.L1.row(0) = mk.values(z0).transpose() * P.pinabla;
        for (int j = 0; j < N; ++j) L.L1(1 + j, j) = 1.0;
        if (k == 2) {
            for (int j = 0; j < N; ++j) {
                L.L1(1 + N + j, N + j) = 1.0;
                const Point spoke = 0.5 * (z0 + mesh.vertex(mesh.cell(c)[j]));
                L.L1.row(1 + 2 * N + j) = mk.values(spoke).transpose() * P.pinabla;
            }
        }

        // Q(b, node) = (psi_node, m_b) and W = (b_P m_a, m_b)
        Matrix Q = Matrix::Zero(nk, num_nodes(c));
        L.W = Matrix::Zero(nk, nk);
        const auto& ref = reference_triangle_rule(quadrature_degree());
        for (int j = 0; j < N; ++j) {
            const auto t = st.triangle(mesh, c, j);
            const double jac = std::abs(orient(t[0], t[1], t[2]));
            const auto nodes = triangle_nodes(c, j);
            for (std::size_t q = 0; q < ref.size(); ++q) {
                const Eigen::Vector3d l(1.0 - ref.points[q].x() - ref.points[q].y(), ref.points[q].x(), ref.points[q].y());
                const Point x = l[0] * t[0] + l[1] * t[1] + l[2] * t[2];
                const double w = ref.weights[q] * jac;
                const Vector m = mk.values(x);
                const Vector psi = TriangleLagrange::values(k, l);
                for (int a = 0; a < psi.size(); ++a) Q.col(nodes[a]) += (w * psi[a]) * m;
                L.W.noalias() += (w * kBubbleScale * l[0] * l[1] * l[2]) * m * m.transpose();
            }
        }
        const Eigen::LDLT<Matrix> ldlt(L.W);
        if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0))
            throw Error(ErrorCode::SingularWeightedMass, "bubble mass on cell " + std::to_string(c));
        L.Vp = ldlt.solve(P.C - Q * L.L1);
        return L;
    }

    const VemSpace* space_;
    std::vector<LocalCompanion> local_;
};

/// J applied to one DOF vector; evaluable at arbitrary points.
class CompanionFunction {
  public:
    CompanionFunction(const Companion& J, const Vector& dofs) : J_(&J) {
        const auto& V = J.space();
        local_.resize(V.mesh().num_cells());
        for (int c = 0; c < V.mesh().num_cells(); ++c) local_[c] = V.local_dofs(c, dofs);
    }

    double value(int c, int j, const Eigen::Vector3d& l) const { return J_->value_row(c, j, l).dot(local_[c]); }
    Point gradient(int c, int j, const Eigen::Vector3d& l) const { return J_->gradient_rows(c, j, l) * local_[c]; }

    double value(const PointLocator& loc, const Point& x) const {
        const auto at = loc.locate(x);
        return value(at.cell, at.triangle, at.bary);
    }
    Point gradient(const PointLocator& loc, const Point& x) const {
        const auto at = loc.locate(x);
        return gradient(at.cell, at.triangle, at.bary);
    }

    /// Nodal values of J1 v and bubble coefficients v_P on cell c.
    Vector node_values(int c) const { return J_->local(c).L1 * local_[c]; }
    Vector bubble_coefficients(int c) const { return J_->local(c).Vp * local_[c]; }
    const Vector& local_dofs(int c) const { return local_[c]; }
    const Companion& companion() const { return *J_; }

  private:
    const Companion* J_;
    std::vector<Vector> local_;
};

inline CompanionFunction Companion::apply(const Vector& dofs) const { return CompanionFunction(*this, dofs); }

/// f(J v): densities by quadrature on the fan triangles, point loads by evaluation.
inline double apply_functional(const SourceFunctional& f, const CompanionFunction& Jv, const PointLocator& loc) {
    const auto& J = Jv.companion();
    double s = 0.0;
    for (const auto& term : f.terms) {
        if (term.kind == SourceFunctional::Kind::PointLoad) {
            s += term.weight * Jv.value(loc, term.location);
            continue;
        }
        const auto& mesh = J.space().mesh();
        for (int c = 0; c < mesh.num_cells(); ++c) s += term.weight * J.local_density_load(c, term.density).dot(Jv.local_dofs(c));
    }
    return s;
}

}  // namespace polyvem
