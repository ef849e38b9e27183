#pragma once

// Enhanced conforming virtual element space of degree 1 or 2.
//
// Local DOF layout on a cell with N vertices: vertex values (0..N-1), for k=2
// the value at each edge midpoint (N..2N-1, edge j runs from vertex j to j+1)
// and the cell average (2N). Projector matrices act on local DOF vectors and
// return coefficients in the scaled monomial basis centred at the centroid
// with the cell diameter as scale.

#include "polyvem/common.hpp"
#include "polyvem/mesh.hpp"
#include "polyvem/parallel.hpp"
#include "polyvem/poly.hpp"

#include <functional>
#include <vector>

namespace polyvem {

struct LocalProjectors {
    int ndof = 0;
    Matrix D;                 // ndof x n_k: DOFs of the monomials
    Matrix B;                 // n_k x ndof: right side of the elliptic projection
    Matrix G;                 // n_k x n_k: B * D
    Matrix pinabla;           // n_k x ndof: elliptic projection
    Matrix pi;                // n_k x ndof: L2 projection onto P_k
    Matrix pigrad[2];         // n_{k-1} x ndof: L2 projection of d/dx, d/dy onto P_{k-1}
    Matrix H;                 // n_k x n_k: monomial mass matrix
    Matrix C;                 // n_k x ndof: moments (v, m_a) from the DOFs
    Matrix E[2];              // n_{k-1} x ndof: moments (d_d v, m_a) from the DOFs
};

struct Coefficients {
    std::function<Eigen::Matrix2d(const Point&)> A;
    std::function<Point(const Point&)> b;
    std::function<double(const Point&)> gamma;

    static Coefficients poisson() {
        return {[](const Point&) { return Eigen::Matrix2d::Identity().eval(); },
                [](const Point&) { return Point::Zero().eval(); }, [](const Point&) { return 0.0; }};
    }

    /// Non-symmetric indefinite test problem: A = [[y^2+1, -xy], [-xy, x^2+1]], b = (x, y), gamma = x^2 + y^3.
    static Coefficients academic() {
        return {[](const Point& p) {
                    Eigen::Matrix2d a;
                    a << p.y() * p.y() + 1.0, -p.x() * p.y(), -p.x() * p.y(), p.x() * p.x() + 1.0;
                    return a;
                },
                [](const Point& p) { return p; }, [](const Point& p) { return p.x() * p.x() + p.y() * p.y() * p.y(); }};
    }
};

struct LocalMatrices {
    Matrix consistency;     // a_pw(Pi^nabla v, Pi^nabla w)
    Matrix stabilization;   // dofi-dofi on (1 - Pi^nabla)
    Matrix mass;            // (Pi_k v, Pi_k w)
    Matrix general;         // diffusion, stabilization, convection and reaction with the given coefficients
};

class VemSpace {
  public:
    VemSpace(const PolygonalMesh& mesh, const SubTriangulation& st, int k) : mesh_(&mesh), st_(&st), k_(k) {
        if (k != 1 && k != 2) throw Error(ErrorCode::UnsupportedDegree, "VEM degree must be 1 or 2");
        number_dofs();
        proj_.resize(mesh.num_cells());
        parallel_for(mesh.num_cells(), [this](int c) { proj_[c] = build_projectors(c); });
    }

    const PolygonalMesh& mesh() const { return *mesh_; }
    const SubTriangulation& sub_triangulation() const { return *st_; }
    int degree() const { return k_; }
    int quadrature_degree() const { return 2 * k_ + 2; }
    /// Exact for the general form with cubic coefficients.
    int coefficient_quadrature_degree() const { return 2 * k_ + 4; }

    int num_dofs() const { return ndof_; }
    int num_free() const { return nfree_; }
    int local_size(int c) const { return k_ * mesh_->cell_size(c) + k_ * (k_ - 1) / 2; }
    const std::vector<int>& local_to_global(int c) const { return l2g_[c]; }
    bool is_boundary_dof(int g) const { return boundary_[g] != 0; }
    int free_index(int g) const { return free_[g]; }
    const std::vector<int>& free_indices() const { return free_; }

    /// Location of a point-value DOF (vertex or edge midpoint); NaN for moments.
    Point dof_point(int g) const {
        const int nv = mesh_->num_vertices();
        if (g < nv) return mesh_->vertex(g);
        if (k_ == 2 && g < nv + mesh_->num_edges()) {
            const auto& e = mesh_->edge(g - nv);
            return 0.5 * (mesh_->vertex(e.v[0]) + mesh_->vertex(e.v[1]));
        }
        return Point::Constant(std::numeric_limits<double>::quiet_NaN());
    }

    const LocalProjectors& projectors(int c) const { return proj_[c]; }

    ScaledMonomialBasis basis(int c, int degree) const {
        return ScaledMonomialBasis(degree, mesh_->centroid(c), mesh_->diameter(c));
    }
    ScaledMonomialBasis basis(int c) const { return basis(c, k_); }

    QuadratureRule cell_quadrature(int c, int exactness) const {
        QuadratureRule rule;
        rule.exactness = exactness;
        for (int j = 0; j < mesh_->cell_size(c); ++j) {
            const auto t = st_->triangle(*mesh_, c, j);
            rule.append(triangle_quadrature(t[0], t[1], t[2], exactness));
        }
        return rule;
    }

    LocalMatrices local_matrices(int c, const Coefficients& coeffs) const {
        const auto& P = proj_[c];
        const int n = P.ndof;
        LocalMatrices out;
        Matrix Gt = P.G;
        Gt.row(0).setZero();
        out.consistency = P.pinabla.transpose() * Gt * P.pinabla;
        const Matrix I_minus = Matrix::Identity(n, n) - P.D * P.pinabla;
        out.stabilization = I_minus.transpose() * I_minus;
        out.mass = P.pi.transpose() * P.H * P.pi;

        const auto mk = basis(c, k_);
        const auto mk1 = basis(c, k_ - 1);
        const auto rule = cell_quadrature(c, coefficient_quadrature_degree());
        out.general = out.stabilization;
        Matrix PG(2, n);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const Point& x = rule.points[q];
            const double w = rule.weights[q];
            const Vector m1 = mk1.values(x);
            PG.row(0) = m1.transpose() * P.pigrad[0];
            PG.row(1) = m1.transpose() * P.pigrad[1];
            const Eigen::RowVectorXd p = mk.values(x).transpose() * P.pi;
            const Eigen::Matrix2d A = coeffs.A(x);
            const Point b = coeffs.b(x);
            const double g = coeffs.gamma(x);
            out.general.noalias() += w * (PG.transpose() * A * PG);
            out.general.noalias() += w * ((PG.transpose() * b) * p);
            out.general.noalias() += (w * g) * (p.transpose() * p);
        }
        return out;
    }

    /// DOF vector of a smooth function: point values and cell averages.
    Vector interpolate(const std::function<double(const Point&)>& f) const {
        Vector v = Vector::Zero(ndof_);
        const int nv = mesh_->num_vertices();
        for (int i = 0; i < nv; ++i) v[i] = f(mesh_->vertex(i));
        if (k_ == 2) {
            for (int e = 0; e < mesh_->num_edges(); ++e) v[nv + e] = f(dof_point(nv + e));
            for (int c = 0; c < mesh_->num_cells(); ++c) {
                const auto rule = cell_quadrature(c, quadrature_degree());
                double s = 0.0;
                for (std::size_t q = 0; q < rule.size(); ++q) s += rule.weights[q] * f(rule.points[q]);
                v[nv + mesh_->num_edges() + c] = s / mesh_->area(c);
            }
        }
        return v;
    }

    Vector local_dofs(int c, const Vector& global) const {
        const auto& map = l2g_[c];
        Vector out(map.size());
        for (std::size_t i = 0; i < map.size(); ++i) out[i] = global[map[i]];
        return out;
    }

    /// Scatters a reduced (free DOF) vector into a full DOF vector with zero boundary values.
    Vector expand(const Vector& reduced) const {
        Vector out = Vector::Zero(ndof_);
        for (int g = 0; g < ndof_; ++g)
            if (free_[g] >= 0) out[g] = reduced[free_[g]];
        return out;
    }

    Vector restrict_to_free(const Vector& full) const {
        Vector out(nfree_);
        for (int g = 0; g < ndof_; ++g)
            if (free_[g] >= 0) out[free_[g]] = full[g];
        return out;
    }

    /// L2 projection of a density onto P_k on cell c, by quadrature.
    Vector project_density(int c, const std::function<double(const Point&)>& f) const {
        const auto mk = basis(c, k_);
        const auto rule = cell_quadrature(c, quadrature_degree());
        Vector rhs = Vector::Zero(mk.size());
        for (std::size_t q = 0; q < rule.size(); ++q) rhs += rule.weights[q] * f(rule.points[q]) * mk.values(rule.points[q]);
        return proj_[c].H.ldlt().solve(rhs);
    }

    /// (sum_P h_P^2 ||f - Pi_k f||^2_P)^(1/2).
    double oscillation(const std::function<double(const Point&)>& f) const {
        double total = 0.0;
        for (int c = 0; c < mesh_->num_cells(); ++c) {
            const Vector a = project_density(c, f);
            const auto mk = basis(c, k_);
            const auto rule = cell_quadrature(c, quadrature_degree());
            double s = 0.0;
            for (std::size_t q = 0; q < rule.size(); ++q) {
                const double r = f(rule.points[q]) - mk.values(rule.points[q]).dot(a);
                s += rule.weights[q] * r * r;
            }
            total += mesh_->diameter(c) * mesh_->diameter(c) * s;
        }
        return std::sqrt(total);
    }

  private:
    void number_dofs() {
        const auto& m = *mesh_;
        const int nv = m.num_vertices();
        const int ne = m.num_edges();
        ndof_ = k_ == 1 ? nv : nv + ne + m.num_cells();
        boundary_.assign(ndof_, 0);
        for (int i = 0; i < nv; ++i) boundary_[i] = m.boundary_vertex(i);
        if (k_ == 2)
            for (int e = 0; e < ne; ++e) boundary_[nv + e] = m.edge(e).boundary();
        free_.assign(ndof_, -1);
        nfree_ = 0;
        for (int g = 0; g < ndof_; ++g)
            if (!boundary_[g]) free_[g] = nfree_++;
        l2g_.resize(m.num_cells());
        for (int c = 0; c < m.num_cells(); ++c) {
            auto& map = l2g_[c];
            map = m.cell(c);
            if (k_ == 2) {
                for (int j = 0; j < m.cell_size(c); ++j) map.push_back(nv + m.cell_edge(c, j));
                map.push_back(nv + ne + c);
            }
        }
    }

    LocalProjectors build_projectors(int c) const {
        const auto& m = *mesh_;
        const int N = m.cell_size(c);
        const int nk = monomial_count(k_);
        const int nk1 = monomial_count(k_ - 1);
        const int n = local_size(c);
        const double area = m.area(c);
        const auto mk = basis(c, k_);
        const auto mk1 = basis(c, k_ - 1);
        const int mom = 2 * N;  // k = 2 cell-average DOF

        LocalProjectors P;
        P.ndof = n;
        const auto rule = cell_quadrature(c, quadrature_degree());
        P.H = Matrix::Zero(nk, nk);
        Vector avg = Vector::Zero(nk);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const Vector v = mk.values(rule.points[q]);
            P.H.noalias() += rule.weights[q] * v * v.transpose();
            avg += rule.weights[q] * v;
        }
        avg /= area;

        P.D = Matrix::Zero(n, nk);
        for (int j = 0; j < N; ++j) P.D.row(j) = mk.values(m.vertex(m.cell(c)[j])).transpose();
        if (k_ == 2) {
            for (int j = 0; j < N; ++j) {
                const Point mid = 0.5 * (m.vertex(m.cell(c)[j]) + m.vertex(m.cell(c)[(j + 1) % N]));
                P.D.row(N + j) = mk.values(mid).transpose();
            }
            P.D.row(mom) = avg.transpose();
        }

        // Boundary terms: on edge j the trace is the degree-k interpolant of the
        // Gauss-Lobatto DOFs, so a (k+1)-point Lobatto rule is exact.
        P.B = Matrix::Zero(nk, n);
        P.E[0] = Matrix::Zero(nk1, n);
        P.E[1] = Matrix::Zero(nk1, n);
        for (int j = 0; j < N; ++j) {
            const Point& a = m.vertex(m.cell(c)[j]);
            const Point& b = m.vertex(m.cell(c)[(j + 1) % N]);
            const Point t = b - a;
            const Point normal = Point(t.y(), -t.x()) / t.norm();
            const auto gl = gauss_lobatto_edge_rule(a, b, k_);
            for (int q = 0; q <= k_; ++q) {
                const int local = q == 0 ? j : (q == k_ ? (j + 1) % N : N + j);
                const Point& x = gl.points[q];
                const double w = gl.weights[q];
                P.B.col(local) += w * (mk.gradients(x) * normal);
                const Vector v1 = mk1.values(x);
                P.E[0].col(local) += w * normal.x() * v1;
                P.E[1].col(local) += w * normal.y() * v1;
            }
        }
        if (k_ == 2) {
            const Vector lap = mk.laplacians(m.centroid(c));  // constant for degree 2
            P.B.col(mom) -= area * lap;
            // -(v, d_d m_a) with d_d m_a constant for the linear monomials
            const auto g1 = mk1.gradients(m.centroid(c));
            for (int d = 0; d < 2; ++d) P.E[d].col(mom) -= area * g1.col(d);
        }
        P.B.row(0).setZero();
        if (k_ == 1)
            P.B.row(0).head(N).setConstant(1.0 / N);
        else
            P.B(0, mom) = 1.0;

        P.G = P.B * P.D;
        Eigen::FullPivLU<Matrix> lu(P.G);
        if (lu.rank() < nk) throw Error(ErrorCode::SingularLocalSystem, "elliptic projection on cell " + std::to_string(c));
        P.pinabla = lu.solve(P.B);

        // Moments against P_k: cell average for degree <= k-2, the enhancement
        // identity (v - Pi^nabla v, m) = 0 for the rest.
        P.C = P.H * P.pinabla;
        if (k_ == 2) {
            P.C.row(0).setZero();
            P.C(0, mom) = area;
        }
        const Eigen::LDLT<Matrix> hk(P.H);
        if (hk.info() != Eigen::Success) throw Error(ErrorCode::SingularLocalSystem, "mass matrix on cell " + std::to_string(c));
        P.pi = hk.solve(P.C);
        const Eigen::LDLT<Matrix> hk1(P.H.topLeftCorner(nk1, nk1));
        P.pigrad[0] = hk1.solve(P.E[0]);
        P.pigrad[1] = hk1.solve(P.E[1]);
        return P;
    }

    const PolygonalMesh* mesh_;
    const SubTriangulation* st_;
    int k_;
    int ndof_ = 0, nfree_ = 0;
    std::vector<char> boundary_;
    std::vector<int> free_;
    std::vector<std::vector<int>> l2g_;
    std::vector<LocalProjectors> proj_;
};

}  // namespace polyvem
