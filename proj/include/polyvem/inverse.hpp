#pragma once

// Tikhonov-regularized Poisson inverse source problem with finitely many
// measurements. The unknown source lives in the degree-1 space with zero
// boundary values; the regularization form is the discrete stiffness a_h.
//
// Notation on the free DOFs (n of them) and N measurements:
//   A  stiffness a_h, M consistency mass (Pi_k phi_j, Pi_k phi_i),
//   U  = A^-1 M (forward solutions with the basis functions as sources),
//   S  (N x n) with S_ir = h_i(Q phi_r), W = S U,
//   xi = A^-1 S^T, eta = A^-1 M xi = A^-1 W^T, L = eta^T A eta = W A^-1 W^T.
// The regularized normal equations (W^T W + alpha A) F = W^T m are solved in the
// equivalent form F = eta (L + alpha I)^-1 m, which only needs N solves.

#include "polyvem/common.hpp"
#include "polyvem/companion.hpp"
#include "polyvem/forward.hpp"
#include "polyvem/mesh.hpp"
#include "polyvem/vem_space.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace polyvem {

struct MeasurementFunctional {
    enum class Kind { SubdomainAverage, PointValue };
    Kind kind = Kind::PointValue;
    std::vector<int> cells;  // SubdomainAverage: cells of the current mesh
    Point point = Point::Zero();

    static MeasurementFunctional average(std::vector<int> cells) {
        return {Kind::SubdomainAverage, std::move(cells), Point::Zero()};
    }
    static MeasurementFunctional point_value(const Point& p) { return {Kind::PointValue, {}, p}; }
};

/// Cells whose centroid lies in the box [x0, x1] x [y0, y1].
inline std::vector<int> cells_in_box(const PolygonalMesh& mesh, const Point& lo, const Point& hi) {
    std::vector<int> out;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const Point& z = mesh.centroid(c);
        if (z.x() >= lo.x() && z.x() <= hi.x() && z.y() >= lo.y() && z.y() <= hi.y()) out.push_back(c);
    }
    return out;
}

namespace detail {

inline void check_measurements(const PolygonalMesh& mesh, const std::vector<MeasurementFunctional>& H) {
    if (H.empty()) throw Error(ErrorCode::BadParams, "no measurements");
    for (const auto& h : H) {
        if (h.kind == MeasurementFunctional::Kind::SubdomainAverage) {
            if (h.cells.empty()) throw Error(ErrorCode::BadParams, "empty measurement subdomain");
            for (int c : h.cells)
                if (c < 0 || c >= mesh.num_cells()) throw Error(ErrorCode::BadParams, "measurement cell out of range");
        }
    }
}

}  // namespace detail

/// h_i of a smooth function: subdomain averages by quadrature, point values directly.
inline Vector exact_measurements(const PolygonalMesh& mesh, const SubTriangulation& st,
                                 const std::vector<MeasurementFunctional>& H,
                                 const std::function<double(const Point&)>& u) {
    detail::check_measurements(mesh, H);
    Vector m(H.size());
    for (std::size_t i = 0; i < H.size(); ++i) {
        if (H[i].kind == MeasurementFunctional::Kind::PointValue) {
            m[i] = u(H[i].point);
            continue;
        }
        double s = 0.0, a = 0.0;
        for (int c : H[i].cells) {
            for (int j = 0; j < mesh.cell_size(c); ++j) {
                const auto t = st.triangle(mesh, c, j);
                const auto rule = triangle_quadrature(t[0], t[1], t[2], kMaxExactness);
                for (std::size_t q = 0; q < rule.size(); ++q) s += rule.weights[q] * u(rule.points[q]);
            }
            a += mesh.area(c);
        }
        m[i] = s / a;
    }
    return m;
}

/// S with S_ir = h_i(Q phi_r) on the free DOFs: averages of Pi_k phi_r, values of J phi_r.
inline Matrix measurement_matrix(const VemSpace& V, const std::vector<MeasurementFunctional>& H, const Companion* J,
                                 const PointLocator* loc) {
    const auto& mesh = V.mesh();
    detail::check_measurements(mesh, H);
    Matrix S = Matrix::Zero(static_cast<Eigen::Index>(H.size()), V.num_free());
    for (std::size_t i = 0; i < H.size(); ++i) {
        if (H[i].kind == MeasurementFunctional::Kind::PointValue) {
            if (!J || !loc) throw Error(ErrorCode::BadParams, "point measurements need the companion");
            const auto at = loc->try_locate(H[i].point);
            if (!at) throw Error(ErrorCode::PointOutside, "measurement point outside the domain");
            const Eigen::RowVectorXd r = J->value_row(at->cell, at->triangle, at->bary);
            const auto& map = V.local_to_global(at->cell);
            for (std::size_t a = 0; a < map.size(); ++a)
                if (V.free_index(map[a]) >= 0) S(i, V.free_index(map[a])) += r[a];
            continue;
        }
        double area = 0.0;
        for (int c : H[i].cells) area += mesh.area(c);
        for (int c : H[i].cells) {
            // integral of Pi_k phi against the constant monomial
            const Eigen::RowVectorXd r = V.projectors(c).C.row(0) / area;
            const auto& map = V.local_to_global(c);
            for (std::size_t a = 0; a < map.size(); ++a)
                if (V.free_index(map[a]) >= 0) S(i, V.free_index(map[a])) += r[a];
        }
    }
    return S;
}

/// h_i(Q v_h) for a full DOF vector.
inline Vector apply_measurements(const VemSpace& V, const std::vector<MeasurementFunctional>& H, const Vector& dofs,
                                 const Companion* J, const PointLocator* loc) {
    return measurement_matrix(V, H, J, loc) * V.restrict_to_free(dofs);
}

class InverseSystem {
  public:
    InverseSystem(const VemSpace& V, const std::vector<MeasurementFunctional>& H, const Companion* J = nullptr,
                  const PointLocator* loc = nullptr)
        : V_(&V) {
        if (V.degree() != 1) throw Error(ErrorCode::UnsupportedDegree, "the inverse problem uses degree 1");
        A_ = assemble_poisson(V);
        M_ = assemble_mass(V);
        S_ = measurement_matrix(V, H, J, loc);
        solver_ = std::make_shared<LinearSolver>(A_, true);
        xi_ = solver_->solve(Matrix(S_.transpose()));
        W_ = (M_ * xi_).transpose();
        eta_ = solver_->solve(Matrix(W_.transpose()));
        L_ = W_ * eta_;
        L_ = 0.5 * (L_ + L_.transpose()).eval();
    }

    const VemSpace& space() const { return *V_; }
    int num_measurements() const { return static_cast<int>(S_.rows()); }
    const SparseMatrix& stiffness() const { return A_; }
    const SparseMatrix& mass() const { return M_; }
    const Matrix& S() const { return S_; }
    const Matrix& SU() const { return W_; }
    const Matrix& xi() const { return xi_; }
    const Matrix& eta() const { return eta_; }
    const Matrix& L() const { return L_; }
    const LinearSolver& solver() const { return *solver_; }

    /// Explicit U = A^-1 M. Dense n x n, only for small meshes.
    Matrix forward_operator() const { return solver_->solve(Matrix(M_)); }

  private:
    const VemSpace* V_;
    SparseMatrix A_, M_;
    Matrix S_, xi_, W_, eta_, L_;
    std::shared_ptr<LinearSolver> solver_;
};

inline constexpr double kAlphaMin = 1e-12;

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power iteration.
inline double power_iteration(const Matrix& L, double tol = 1e-10, int max_iter = 100000) {
    const Eigen::Index n = L.rows();
    if (n == 0) return 0.0;
    Vector x = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
    double lambda = x.dot(L * x);
    for (int it = 0; it < max_iter; ++it) {
        Vector y = L * x;
        const double ny = y.norm();
        if (!(ny > 0.0)) return 0.0;
        x = y / ny;
        const double next = x.dot(L * x);
        if (std::abs(next - lambda) <= tol * std::abs(next)) return next;
        lambda = next;
    }
    return lambda;
}

/// Minimizer of alpha * c1 + c2 / sqrt(alpha) with c1 = ||f_true|| / lambda_max(L)
/// and c2 = ||n|| / 2, floored at alpha_min (also returned for zero noise).
inline double select_alpha(double lambda_max, double f_true_norm, double noise_norm, double alpha_min = kAlphaMin) {
    if (!(noise_norm > 0.0)) return alpha_min;
    if (!(lambda_max > 0.0) || !(f_true_norm > 0.0)) throw Error(ErrorCode::BadParams, "alpha selection needs positive norms");
    const double c1 = f_true_norm / lambda_max;
    const double c2 = noise_norm / 2.0;
    return std::max(alpha_min, std::pow(c2 / (2.0 * c1), 2.0 / 3.0));
}

inline double select_alpha(const Matrix& L, double f_true_norm, double noise_norm, double alpha_min = kAlphaMin) {
    if (!(noise_norm > 0.0)) return alpha_min;
    return select_alpha(power_iteration(L), f_true_norm, noise_norm, alpha_min);
}

struct Reconstruction {
    Vector dofs;            // full DOF vector of f_h
    double alpha = 0.0;
    double residual = 0.0;  // ||m - S U F||
    double normal_residual = 0.0;  // relative residual of the normal equations
};

/// Solves ((SU)^T (SU) + alpha B) F = (SU)^T m. With more unknowns than
/// measurements this goes through the N x N system; otherwise L is singular and
/// the n x n system is solved directly.
inline Reconstruction reconstruct(const InverseSystem& sys, const Vector& m, double alpha) {
    if (!(alpha > 0.0)) throw Error(ErrorCode::BadParams, "alpha must be positive");
    if (m.size() != sys.num_measurements()) throw Error(ErrorCode::BadParams, "measurement vector size mismatch");
    const Eigen::Index N = sys.num_measurements();
    const Eigen::Index n = sys.space().num_free();
    Vector F;
    if (n > N) {
        const Eigen::LLT<Matrix> llt(sys.L() + alpha * Matrix::Identity(N, N));
        if (llt.info() != Eigen::Success) throw Error(ErrorCode::NotSPD, "regularized system is not positive definite");
        F = sys.eta() * llt.solve(m);
    } else {
        const Eigen::LLT<Matrix> llt(sys.SU().transpose() * sys.SU() + alpha * Matrix(sys.stiffness()));
        if (llt.info() != Eigen::Success) throw Error(ErrorCode::NotSPD, "regularized system is not positive definite");
        F = llt.solve(sys.SU().transpose() * m);
    }
    Reconstruction r;
    r.alpha = alpha;
    const Vector fit = sys.SU() * F;
    r.residual = (m - fit).norm();
    const Vector rhs = sys.SU().transpose() * m;
    const Vector lhs = sys.SU().transpose() * fit + alpha * (sys.stiffness() * F);
    r.normal_residual = safe_ratio((lhs - rhs).norm(), rhs.norm());
    if (!(r.normal_residual <= 1e-10)) throw Error(ErrorCode::NotSPD, "normal equations residual check failed");
    r.dofs = sys.space().expand(F);
    return r;
}

/// Same system assembled densely with the explicit U and solved by Cholesky.
inline Reconstruction reconstruct_dense(const InverseSystem& sys, const Vector& m, double alpha) {
    if (!(alpha > 0.0)) throw Error(ErrorCode::BadParams, "alpha must be positive");
    const Matrix SU = sys.S() * sys.forward_operator();
    const Matrix K = SU.transpose() * SU + alpha * Matrix(sys.stiffness());
    const Eigen::LLT<Matrix> llt(K);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::NotSPD, "regularized system is not positive definite");
    const Vector rhs = SU.transpose() * m;
    const Vector F = llt.solve(rhs);
    Reconstruction r;
    r.alpha = alpha;
    r.residual = (m - SU * F).norm();
    r.normal_residual = safe_ratio((K * F - rhs).norm(), rhs.norm());
    r.dofs = sys.space().expand(F);
    return r;
}

/// Seeded Gaussian noise scaled to ||n|| = rel * ||m||.
inline Vector measurement_noise(const Vector& m, double rel, std::uint64_t seed) {
    Vector n(m.size());
    if (!(rel > 0.0) || m.size() == 0) return Vector::Zero(m.size());
    SplitMix64 rng(seed);
    for (Eigen::Index i = 0; i < n.size(); ++i) n[i] = rng.normal();
    return n * (rel * m.norm() / n.norm());
}

/// Full (not semi) relative norms of Pi_k f_h against a smooth f.
struct InverseErrors {
    double err1 = 0.0;
    double err0 = 0.0;
};

inline InverseErrors full_norm_errors(const ErrorNorms& e) {
    const double num1 = std::hypot(e.err1 * e.ref1, e.err0 * e.ref0);
    const double den1 = std::hypot(e.ref1, e.ref0);
    return {safe_ratio(num1, den1), e.err0};
}

}  // namespace polyvem
