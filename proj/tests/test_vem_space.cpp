#include "polyvem/forward.hpp"
#include "polyvem/generate.hpp"
#include "polyvem/vem_space.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace polyvem;

namespace {

struct Cell {
    PolygonalMesh mesh;
    SubTriangulation st;
    std::unique_ptr<VemSpace> V;
    Cell(const std::vector<Point>& poly, int k) : mesh(oracle::single_cell(poly)), st(sub_triangulate(mesh)) {
        V = std::make_unique<VemSpace>(mesh, st, k);
    }
};

double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

/// Coefficients of d/dx and d/dy of each P_k monomial in the P_{k-1} basis.
Matrix gradient_coefficients(const ScaledMonomialBasis& mk, const ScaledMonomialBasis& mk1, int d) {
    const auto& e = mk.exponents();
    const auto& e1 = mk1.exponents();
    Matrix out = Matrix::Zero(mk1.size(), mk.size());
    for (int a = 0; a < mk.size(); ++a) {
        auto ex = e[a];
        if (ex[d] == 0) continue;
        const double f = ex[d] / mk.scale();
        ex[d] -= 1;
        for (int b = 0; b < mk1.size(); ++b)
            if (e1[b] == ex) out(b, a) = f;
    }
    return out;
}

}  // namespace

TEST(VemSpace, FourSquareDofs) {
    const auto mesh = uniform_square(2);
    const auto st = sub_triangulate(mesh);
    const VemSpace V(mesh, st, 1);
    EXPECT_EQ(V.num_dofs(), 9);
    EXPECT_EQ(V.num_free(), 1);
    int boundary = 0;
    for (int g = 0; g < 9; ++g) boundary += V.is_boundary_dof(g);
    EXPECT_EQ(boundary, 8);
}

TEST(VemSpace, LocalDofCounts) {
    EXPECT_EQ(Cell(oracle::unit_square(), 2).V->local_size(0), 9);
    EXPECT_EQ(Cell(oracle::regular_polygon(5), 2).V->local_size(0), 11);
    EXPECT_EQ(Cell(oracle::regular_polygon(5), 1).V->local_size(0), 5);
}

TEST(VemSpace, UnsupportedDegree) {
    const auto mesh = uniform_square(1);
    const auto st = sub_triangulate(mesh);
    EXPECT_THROW(VemSpace(mesh, st, 3), Error);
}

TEST(VemSpace, SharedEdgeDofsAreGlobal) {
    const auto mesh = uniform_square(2);
    const auto st = sub_triangulate(mesh);
    const VemSpace V(mesh, st, 2);
    // cells 0 and 1 share the edge between (0.5, 0) and (0.5, 0.5)
    std::set<int> a(V.local_to_global(0).begin(), V.local_to_global(0).end());
    int shared = 0;
    for (int g : V.local_to_global(1)) shared += a.count(g);
    EXPECT_EQ(shared, 3);
}

TEST(Projectors, ReproducePolynomials) {
    SplitMix64 rng(3);
    for (int t = 0; t < 20; ++t) {
        const auto poly = oracle::random_polygon(rng);
        for (int k : {1, 2}) {
            const Cell cell(poly, k);
            const auto& P = cell.V->projectors(0);
            const Matrix I = Matrix::Identity(P.D.cols(), P.D.cols());
            EXPECT_LT(max_abs(P.pinabla * P.D - I), 1e-11);
            EXPECT_LT(max_abs(P.pi * P.D - I), 1e-11);
            const auto mk = cell.V->basis(0), mk1 = cell.V->basis(0, k - 1);
            for (int d = 0; d < 2; ++d) {
                const Matrix want = gradient_coefficients(mk, mk1, d);
                EXPECT_LT(max_abs(P.pigrad[d] * P.D - want), 1e-11 * std::max(1.0, max_abs(want)));
            }
            EXPECT_LT(max_abs(P.H * P.pi - P.C), 1e-11 * std::max(1.0, max_abs(P.C)));
        }
    }
}

TEST(Projectors, EllipticEqualsL2ForLinear) {
    SplitMix64 rng(4);
    for (int t = 0; t < 10; ++t) {
        const Cell cell(oracle::random_polygon(rng), 1);
        const auto& P = cell.V->projectors(0);
        EXPECT_LT(max_abs(P.pinabla - P.pi), 1e-12);
    }
}

TEST(Projectors, SquareProjectionOfXSquared) {
    const Cell cell(oracle::unit_square(), 1);
    const Vector v = (Vector(4) << 0, 1, 1, 0).finished();
    const Vector c = cell.V->projectors(0).pinabla * v;
    const auto mk = cell.V->basis(0);
    // the projection is p(x, y) = x
    for (const Point& x : {Point(0.3, 0.9), Point(0.0, 0.0), Point(0.7, 0.1)}) EXPECT_NEAR(mk.values(x).dot(c), x.x(), 1e-14);
}

TEST(Projectors, MatchOracleOnRandomCells) {
    SplitMix64 rng(8);
    for (int t = 0; t < 10; ++t) {
        const auto poly = oracle::random_polygon(rng);
        const Cell cell(poly, 1);
        const oracle::K1Projection O(poly);
        const auto mk = cell.V->basis(0);
        const Matrix& pn = cell.V->projectors(0).pinabla;
        for (int i = 0; i < O.size(); ++i) {
            const Point x = poly[0] + 0.3 * (poly[1] - poly[0]) + 0.2 * (poly[2] - poly[0]);
            EXPECT_NEAR(mk.values(x).dot(pn.col(i)), O.value(i, x), 1e-12);
        }
    }
}

TEST(LocalMatrices, ConstantsAreInTheKernel) {
    SplitMix64 rng(5);
    for (int t = 0; t < 10; ++t) {
        for (int k : {1, 2}) {
            const Cell cell(oracle::random_polygon(rng), k);
            const auto lm = cell.V->local_matrices(0, Coefficients::poisson());
            const Matrix K = lm.consistency + lm.stabilization;
            const Vector ones = Vector::Ones(K.cols());
            EXPECT_LT((K * ones).cwiseAbs().maxCoeff(), 1e-12 * max_abs(K));
        }
    }
}

TEST(LocalMatrices, StabilizationVanishesOnPolynomials) {
    SplitMix64 rng(6);
    for (int t = 0; t < 10; ++t) {
        for (int k : {1, 2}) {
            const Cell cell(oracle::random_polygon(rng), k);
            const auto& P = cell.V->projectors(0);
            const auto lm = cell.V->local_matrices(0, Coefficients::poisson());
            EXPECT_LT(max_abs(lm.stabilization * P.D), 1e-12);
        }
    }
}

TEST(LocalMatrices, UnitSquareStiffnessMatchesOracle) {
    const Cell cell(oracle::unit_square(), 1);
    const auto lm = cell.V->local_matrices(0, Coefficients::poisson());
    const Matrix K = lm.consistency + lm.stabilization;
    EXPECT_LT(max_abs(K - oracle::k1_stiffness(oracle::unit_square())), 1e-12);
    // diagonal: |P| |g|^2 = 1/2 plus stabilization 4 * (1/4)^2 = 1/4
    EXPECT_NEAR(K(0, 0), 0.75, 1e-14);
}

TEST(LocalMatrices, PolynomialConsistency) {
    SplitMix64 rng(12);
    for (int t = 0; t < 10; ++t) {
        for (int k : {1, 2}) {
            const Cell cell(oracle::random_polygon(rng), k);
            const auto& P = cell.V->projectors(0);
            const auto lm = cell.V->local_matrices(0, Coefficients::poisson());
            Matrix Bt = P.B;
            Bt.row(0).setZero();
            EXPECT_LT(max_abs((lm.consistency + lm.stabilization) * P.D - Bt.transpose()), 1e-11 * std::max(1.0, max_abs(Bt)));
        }
    }
}

TEST(Interpolate, PolynomialsAreReproduced) {
    const auto mesh = voronoi_lloyd(20, 4);
    const auto st = sub_triangulate(mesh);
    for (int k : {1, 2}) {
        const VemSpace V(mesh, st, k);
        auto p = [k](const Point& x) { return 0.3 - x.x() + 2 * x.y() + (k == 2 ? x.x() * x.y() - 0.5 * x.y() * x.y() : 0.0); };
        const Vector v = V.interpolate(p);
        for (int c = 0; c < mesh.num_cells(); ++c) {
            const Vector a = V.projectors(c).pinabla * V.local_dofs(c, v);
            EXPECT_NEAR(V.basis(c).values(mesh.centroid(c)).dot(a), p(mesh.centroid(c)), 1e-12);
        }
    }
}

TEST(Interpolate, BoundaryOfSinSinIsZero) {
    const auto mesh = uniform_square(4);
    const auto st = sub_triangulate(mesh);
    const VemSpace V(mesh, st, 2);
    const Vector v = V.interpolate(SinSin::u);
    for (int g = 0; g < V.num_dofs(); ++g) {
        if (V.is_boundary_dof(g)) {
            EXPECT_NEAR(v[g], 0.0, 1e-15);
        }
    }
}

TEST(Interpolate, CellAveragesOfXY) {
    const auto mesh = uniform_square(2);
    const auto st = sub_triangulate(mesh);
    const VemSpace V(mesh, st, 2);
    const Vector v = V.interpolate([](const Point& x) { return x.x() * x.y(); });
    const int base = mesh.num_vertices() + mesh.num_edges();
    for (int c = 0; c < 4; ++c) {
        const double want = oracle::integrate_polygon([](const Point& x) { return x.x() * x.y(); }, mesh.polygon(c)) / 0.25;
        EXPECT_NEAR(v[base + c], want, 1e-13);
    }
    EXPECT_NEAR(v[base + 0], 0.0625, 1e-15);
    EXPECT_NEAR(v[base + 3], 0.5625, 1e-15);
}

TEST(Oscillation, PolynomialsAndConstants) {
    const auto mesh = voronoi_lloyd(15, 2);
    const auto st = sub_triangulate(mesh);
    for (int k : {1, 2}) {
        const VemSpace V(mesh, st, k);
        EXPECT_NEAR(V.oscillation([](const Point&) { return 3.0; }), 0.0, 1e-12);
        EXPECT_NEAR(V.oscillation([k](const Point& x) { return k == 1 ? 1 + x.x() : x.x() * x.y(); }), 0.0, 1e-12);
    }
}

TEST(Oscillation, QuadraticOnUnitCell) {
    const Cell cell(oracle::unit_square(), 1);
    auto f = [](const Point& x) { return x.x() * x.x(); };
    // the L2 projection of x^2 onto P1 over the unit square is x - 1/6
    const double res = oracle::integrate_polygon([](const Point& x) { return std::pow(x.x() * x.x() - x.x() + 1.0 / 6.0, 2); },
                                                 oracle::unit_square());
    EXPECT_NEAR(res, 1.0 / 180.0, 1e-15);
    EXPECT_NEAR(cell.V->oscillation(f), std::sqrt(2.0 * res), 1e-13);
    EXPECT_NEAR(cell.V->oscillation(f), std::sqrt(1.0 / 90.0), 1e-13);
}

TEST(GlobalStiffness, SymmetricPositiveDefinite) {
    const auto mesh = voronoi_lloyd(60, 7);
    const auto st = sub_triangulate(mesh);
    for (int k : {1, 2}) {
        const VemSpace V(mesh, st, k);
        const SparseMatrix A = assemble_poisson(V);
        const Matrix D(A);
        EXPECT_LT(max_abs(D - D.transpose()), 1e-13 * max_abs(D));
        EXPECT_NO_THROW(LinearSolver(A, true));
    }
}
