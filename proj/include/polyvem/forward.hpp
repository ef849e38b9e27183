#pragma once

// Assembly and solution of the forward problems with homogeneous Dirichlet
// data, and error norms of the projected discrete solution.
//
// Global systems are assembled on the free (interior) DOFs only.

#include "polyvem/common.hpp"
#include "polyvem/companion.hpp"
#include "polyvem/geometry.hpp"
#include "polyvem/mesh.hpp"
#include "polyvem/parallel.hpp"
#include "polyvem/vem_space.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

namespace polyvem {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class QMode { PiK, J };

inline std::optional<QMode> parse_q_mode(std::string_view s) {
    if (s == "pik") return QMode::PiK;
    if (s == "j") return QMode::J;
    return std::nullopt;
}

inline std::string_view to_string(QMode q) { return q == QMode::PiK ? "pik" : "j"; }

namespace detail {

inline SparseMatrix scatter(const VemSpace& V, const std::vector<Matrix>& local) {
    std::vector<Eigen::Triplet<double>> trip;
    for (int c = 0; c < V.mesh().num_cells(); ++c) {
        const auto& map = V.local_to_global(c);
        const Matrix& K = local[c];
        for (std::size_t i = 0; i < map.size(); ++i) {
            const int gi = V.free_index(map[i]);
            if (gi < 0) continue;
            for (std::size_t j = 0; j < map.size(); ++j) {
                const int gj = V.free_index(map[j]);
                if (gj < 0) continue;
                trip.emplace_back(gi, gj, K(i, j));
            }
        }
    }
    SparseMatrix A(V.num_free(), V.num_free());
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

inline void scatter_vector(const VemSpace& V, int c, const Vector& local, Vector& out) {
    const auto& map = V.local_to_global(c);
    for (std::size_t i = 0; i < map.size(); ++i) {
        const int g = V.free_index(map[i]);
        if (g >= 0) out[g] += local[i];
    }
}

}  // namespace detail

/// a_h: consistency plus dofi-dofi stabilization.
inline SparseMatrix assemble_poisson(const VemSpace& V) {
    std::vector<Matrix> local(V.mesh().num_cells());
    const auto coeffs = Coefficients::poisson();
    parallel_for(V.mesh().num_cells(), [&](int c) {
        auto L = V.local_matrices(c, coeffs);
        local[c] = L.consistency + L.stabilization;
    });
    return detail::scatter(V, local);
}

/// B_h with diffusion through the projected gradients, convection and reaction
/// through Pi_k. Row i tests with phi_i.
inline SparseMatrix assemble_general(const VemSpace& V, const Coefficients& coeffs) {
    std::vector<Matrix> local(V.mesh().num_cells());
    parallel_for(V.mesh().num_cells(), [&](int c) { local[c] = V.local_matrices(c, coeffs).general; });
    return detail::scatter(V, local);
}

/// (Pi_k phi_j, Pi_k phi_i) on the free DOFs.
inline SparseMatrix assemble_mass(const VemSpace& V) {
    std::vector<Matrix> local(V.mesh().num_cells());
    parallel_for(V.mesh().num_cells(), [&](int c) {
        const auto& P = V.projectors(c);
        local[c] = P.pi.transpose() * P.H * P.pi;
    });
    return detail::scatter(V, local);
}

/// Right-hand side f(Q phi_i) on the free DOFs. Q = J needs the companion and a
/// locator (for point loads).
inline Vector assemble_rhs(const VemSpace& V, const SourceFunctional& f, QMode q, const Companion* J = nullptr,
                           const PointLocator* loc = nullptr) {
    const int nc = V.mesh().num_cells();
    Vector out = Vector::Zero(V.num_free());
    if (q == QMode::PiK && f.has_point_load())
        throw Error(ErrorCode::IncompatibleQ, "a point load needs the companion operator");
    if (q == QMode::J && (!J || !loc)) throw Error(ErrorCode::BadParams, "Q = J needs a companion and a locator");
    for (const auto& term : f.terms) {
        if (term.kind == SourceFunctional::Kind::PointLoad) {
            const auto at = loc->locate(term.location);
            const Vector r = term.weight * J->value_row(at.cell, at.triangle, at.bary).transpose();
            detail::scatter_vector(V, at.cell, r, out);
            continue;
        }
        std::vector<Vector> local(nc);
        parallel_for(nc, [&](int c) {
            if (q == QMode::J) {
                local[c] = J->local_density_load(c, term.density);
                return;
            }
            const auto& P = V.projectors(c);
            const auto mk = V.basis(c);
            const auto rule = V.cell_quadrature(c, V.quadrature_degree());
            Vector m = Vector::Zero(mk.size());
            for (std::size_t k = 0; k < rule.size(); ++k)
                m += rule.weights[k] * term.density(rule.points[k]) * mk.values(rule.points[k]);
            local[c] = P.pi.transpose() * m;
        });
        for (int c = 0; c < nc; ++c) detail::scatter_vector(V, c, term.weight * local[c], out);
    }
    return out;
}

/// Sparse direct solver: Cholesky for symmetric positive definite systems,
/// LU otherwise.
class LinearSolver {
  public:
    LinearSolver(const SparseMatrix& A, bool spd) : A_(A), spd_(spd) {
        if (A.rows() == 0) return;
        if (spd) {
            llt_ = std::make_unique<Eigen::SimplicialLLT<SparseMatrix>>(A);
            if (llt_->info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "Cholesky factorization failed");
        } else {
            lu_ = std::make_unique<Eigen::SparseLU<SparseMatrix>>();
            lu_->analyzePattern(A);
            lu_->factorize(A);
            if (lu_->info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "LU factorization failed");
        }
    }

    Vector solve(const Vector& b) const {
        if (A_.rows() == 0) return Vector::Zero(0);
        Vector x = spd_ ? Vector(llt_->solve(b)) : Vector(lu_->solve(b));
        const double nb = b.norm();
        if (!x.allFinite() || (nb > 0.0 && (A_ * x - b).norm() > 1e-10 * nb))
            throw Error(ErrorCode::SingularSystem, "residual check failed");
        return x;
    }

    Matrix solve(const Matrix& B) const {
        Matrix X(B.rows(), B.cols());
        for (Eigen::Index j = 0; j < B.cols(); ++j) X.col(j) = solve(Vector(B.col(j)));
        return X;
    }

  private:
    SparseMatrix A_;
    bool spd_;
    std::unique_ptr<Eigen::SimplicialLLT<SparseMatrix>> llt_;
    std::unique_ptr<Eigen::SparseLU<SparseMatrix>> lu_;
};

/// Full DOF vector (zero boundary values) and the per-cell Pi_k coefficients.
class DiscreteSolution {
  public:
    DiscreteSolution(const VemSpace& V, Vector dofs, QMode q = QMode::PiK) : V_(&V), u_(std::move(dofs)), q_(q) {
        proj_.resize(V.mesh().num_cells());
        for (int c = 0; c < V.mesh().num_cells(); ++c) proj_[c] = V.projectors(c).pi * V.local_dofs(c, u_);
    }

    const VemSpace& space() const { return *V_; }
    const Vector& dofs() const { return u_; }
    QMode q_mode() const { return q_; }
    const Vector& projection(int c) const { return proj_[c]; }

    double projected_value(int c, const Point& x) const { return V_->basis(c).values(x).dot(proj_[c]); }
    Point projected_gradient(int c, const Point& x) const { return V_->basis(c).gradients(x).transpose() * proj_[c]; }

  private:
    const VemSpace* V_;
    Vector u_;
    QMode q_;
    std::vector<Vector> proj_;
};

inline DiscreteSolution solve(const VemSpace& V, const SparseMatrix& A, const Vector& rhs, bool spd, QMode q = QMode::PiK) {
    if (rhs.size() != A.rows()) throw Error(ErrorCode::BadParams, "right-hand side size mismatch");
    LinearSolver solver(A, spd);
    return DiscreteSolution(V, V.expand(solver.solve(rhs)), q);
}

struct ExactSolution {
    std::function<double(const Point&)> value;
    std::function<Point(const Point&)> gradient;
};

struct ErrorNorms {
    double err1 = 0.0;  // relative piecewise H1 seminorm
    double err0 = 0.0;  // relative L2 norm
    double ref1 = 0.0;  // seminorms of the reference
    double ref0 = 0.0;
};

inline constexpr int kErrorQuadrature = 8;

inline double safe_ratio(double num, double den) { return den > 0.0 ? num / den : (num > 0.0 ? num : 0.0); }

/// Errors of Pi_k u_h against a smooth exact solution.
inline ErrorNorms error_norms(const DiscreteSolution& uh, const ExactSolution& u) {
    const auto& V = uh.space();
    const int nc = V.mesh().num_cells();
    std::vector<std::array<double, 4>> part(nc);
    parallel_for(nc, [&](int c) {
        const auto rule = V.cell_quadrature(c, kErrorQuadrature);
        std::array<double, 4> s{};
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const Point& x = rule.points[q];
            const double w = rule.weights[q];
            const double v = u.value(x);
            const Point g = u.gradient(x);
            s[0] += w * (g - uh.projected_gradient(c, x)).squaredNorm();
            s[1] += w * std::pow(v - uh.projected_value(c, x), 2);
            s[2] += w * g.squaredNorm();
            s[3] += w * v * v;
        }
        part[c] = s;
    });
    std::array<double, 4> t{};
    for (const auto& s : part)
        for (int i = 0; i < 4; ++i) t[i] += s[i];
    return {safe_ratio(std::sqrt(t[0]), std::sqrt(t[2])), safe_ratio(std::sqrt(t[1]), std::sqrt(t[3])), std::sqrt(t[2]),
            std::sqrt(t[3])};
}

/// True when every cell of fine lies inside one cell of coarse.
inline bool is_nested(const PolygonalMesh& coarse, const PointLocator& coarse_loc, const PolygonalMesh& fine) {
    for (int c = 0; c < fine.num_cells(); ++c) {
        const auto owner = coarse_loc.try_locate(fine.centroid(c));
        if (!owner) return false;
        const auto poly = coarse.polygon(owner->cell);
        const double tol = 1e-10 * coarse.diameter(owner->cell);
        for (int v : fine.cell(c))
            if (!geometry::contains(poly, fine.vertex(v), tol)) return false;
    }
    return true;
}

/// Errors of Pi_k u_h against the projection of a solution on another mesh.
/// Both piecewise polynomials are integrated exactly on the overlay of the
/// two fan triangulations, so the meshes need not be nested unless
/// require_nested is set.
inline ErrorNorms error_norms(const DiscreteSolution& uh, const DiscreteSolution& ref, bool require_nested = false) {
    const auto& Vc = uh.space();
    const auto& Vf = ref.space();
    const auto& coarse = Vc.mesh();
    const auto& fine = Vf.mesh();
    const PointLocator loc(coarse, Vc.sub_triangulation());
    if (require_nested && !is_nested(coarse, loc, fine))
        throw Error(ErrorCode::NotNested, "reference mesh is not a refinement");
    const int exact = std::min(kMaxExactness, 2 * std::max(Vc.degree(), Vf.degree()));
    const int nc = fine.num_cells();
    std::vector<std::array<double, 4>> part(nc);
    parallel_for(nc, [&](int cf) {
        std::array<double, 4> s{};
        for (int j = 0; j < fine.cell_size(cf); ++j) {
            const auto tf = Vf.sub_triangulation().triangle(fine, cf, j);
            const Point lo = tf[0].cwiseMin(tf[1]).cwiseMin(tf[2]);
            const Point hi = tf[0].cwiseMax(tf[1]).cwiseMax(tf[2]);
            for (const auto& [cc, jc] : loc.candidates(lo, hi)) {
                const auto tc = Vc.sub_triangulation().triangle(coarse, cc, jc);
                const auto piece = geometry::clip_convex(tf, tc);
                if (piece.size() < 3) continue;
                for (std::size_t p = 1; p + 1 < piece.size(); ++p) {
                    if (!(orient(piece[0], piece[p], piece[p + 1]) > 0.0)) continue;
                    const auto rule = triangle_quadrature(piece[0], piece[p], piece[p + 1], exact);
                    for (std::size_t q = 0; q < rule.size(); ++q) {
                        const Point& x = rule.points[q];
                        const double w = rule.weights[q];
                        const double vf = ref.projected_value(cf, x);
                        const Point gf = ref.projected_gradient(cf, x);
                        s[0] += w * (gf - uh.projected_gradient(cc, x)).squaredNorm();
                        s[1] += w * std::pow(vf - uh.projected_value(cc, x), 2);
                        s[2] += w * gf.squaredNorm();
                        s[3] += w * vf * vf;
                    }
                }
            }
        }
        part[cf] = s;
    });
    std::array<double, 4> t{};
    for (const auto& s : part)
        for (int i = 0; i < 4; ++i) t[i] += s[i];
    return {safe_ratio(std::sqrt(t[0]), std::sqrt(t[2])), safe_ratio(std::sqrt(t[1]), std::sqrt(t[3])), std::sqrt(t[2]),
            std::sqrt(t[3])};
}

/// sin(pi x) sin(pi y) and the matching right-hand sides.
struct SinSin {
    static double u(const Point& p) { return std::sin(std::numbers::pi * p.x()) * std::sin(std::numbers::pi * p.y()); }
    static Point grad(const Point& p) {
        const double pi = std::numbers::pi;
        return {pi * std::cos(pi * p.x()) * std::sin(pi * p.y()), pi * std::sin(pi * p.x()) * std::cos(pi * p.y())};
    }
    static ExactSolution exact() { return {u, grad}; }

    /// -Laplace u.
    static double poisson_source(const Point& p) { return 2.0 * std::numbers::pi * std::numbers::pi * u(p); }

    /// -div(A grad u + b u) + gamma u with the academic coefficients.
    static double academic_source(const Point& p) {
        const double pi = std::numbers::pi;
        const double x = p.x(), y = p.y();
        const double s = u(p);
        return pi * pi * (x * x + y * y + 2.0) * s + 2.0 * x * y * pi * pi * std::cos(pi * x) * std::cos(pi * y) - 2.0 * s +
               (x * x + y * y * y) * s;
    }
};

}  // namespace polyvem
