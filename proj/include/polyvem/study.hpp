#pragma once

// Convergence studies over mesh families: forward error tables and inverse
// reconstruction tables, plus the preset configurations used by the CLI.

#include "polyvem/common.hpp"
#include "polyvem/companion.hpp"
#include "polyvem/forward.hpp"
#include "polyvem/generate.hpp"
#include "polyvem/inverse.hpp"
#include "polyvem/mesh.hpp"
#include "polyvem/vem_space.hpp"

#include <cmath>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace polyvem {

/// Level l of a family: grid kinds use n * 2^l squares per side, voronoi_lloyd
/// uses n * 4^l sites, distorted_square and red_refined_quad red-refine level 0.
/// A non-empty `sizes` replaces n * 2^l (or n * 4^l) level by level.
struct FamilySpec {
    MeshKind kind = MeshKind::UniformSquare;
    int levels = 1;
    GenerateParams params;
    std::vector<int> sizes;
};

/// Mesh with its sub-triangulation, space, companion and locator. Held by
/// pointer because the space refers back to the mesh.
struct Level {
    PolygonalMesh mesh;
    SubTriangulation st;
    std::unique_ptr<VemSpace> space;
    std::unique_ptr<Companion> companion;
    std::unique_ptr<PointLocator> locator;

    Level(PolygonalMesh m, int k) : mesh(std::move(m)), st(sub_triangulate(mesh)) {
        space = std::make_unique<VemSpace>(mesh, st, k);
        companion = std::make_unique<Companion>(*space);
        locator = std::make_unique<PointLocator>(mesh, st);
    }
};

inline std::vector<PolygonalMesh> build_family(const FamilySpec& spec) {
    if (spec.levels < 1) throw Error(ErrorCode::BadParams, "at least one level is needed");
    std::vector<PolygonalMesh> out;
    if (!spec.sizes.empty() && static_cast<int>(spec.sizes.size()) < spec.levels)
        throw Error(ErrorCode::BadParams, "fewer sizes than levels");
    const auto& p = spec.params;
    for (int l = 0; l < spec.levels; ++l) {
        const auto size = [&](int grow) { return spec.sizes.empty() ? p.n << (grow * l) : spec.sizes[l]; };
        switch (spec.kind) {
            case MeshKind::UniformSquare: out.push_back(uniform_square(size(1))); break;
            case MeshKind::NonconvexPattern: out.push_back(nonconvex_pattern(size(1), p.zigzag)); break;
            case MeshKind::VoronoiLloyd: out.push_back(voronoi_lloyd(size(2), p.seed, p.lloyd_iterations)); break;
            case MeshKind::DistortedSquare:
            case MeshKind::RedRefinedQuad:
                if (l == 0)
                    out.push_back(spec.kind == MeshKind::DistortedSquare ? distorted_square(p.n, p.seed, p.distortion, p.pin)
                                                                         : uniform_square(p.n));
                else
                    out.push_back(red_refine(out.back()).mesh);
                break;
        }
    }
    return out;
}

/// log(e_i / e_{i+1}) / log(h_i / h_{i+1}); nullopt when not computable.
inline std::optional<double> rate(double e0, double e1, double h0, double h1) {
    if (!(e0 > 0.0) || !(e1 > 0.0) || !(h0 > 0.0) || !(h1 > 0.0) || h0 == h1) return std::nullopt;
    const double r = std::log(e0 / e1) / std::log(h0 / h1);
    if (!std::isfinite(r)) return std::nullopt;
    return r;
}

inline std::string format_double(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

inline std::string format_rate(const std::optional<double>& r) { return r ? format_double("%.4f", *r) : "-"; }

// ---------------------------------------------------------------- forward

enum class CoefficientPreset { Poisson, Academic };
enum class SourcePreset { SinSin, Zero, Delta };

struct ForwardSpec {
    FamilySpec family;
    int k = 1;
    CoefficientPreset coeffs = CoefficientPreset::Poisson;
    SourcePreset source = SourcePreset::SinSin;
    Point delta = Point(0.5, 0.5);
    QMode q = QMode::PiK;
};

struct ForwardRow {
    int level = 0;
    double h = 0.0;
    int ndof = 0;
    double err1 = 0.0, err0 = 0.0;
    std::optional<double> rate1, rate0;
};

inline void fill_rates(std::vector<ForwardRow>& rows) {
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        rows[i].rate1 = rate(rows[i].err1, rows[i + 1].err1, rows[i].h, rows[i + 1].h);
        rows[i].rate0 = rate(rows[i].err0, rows[i + 1].err0, rows[i].h, rows[i + 1].h);
    }
}

/// Smooth sources are compared with the exact solution; point loads with the
/// finest level (whose own row is zero).
inline std::vector<ForwardRow> run_forward(const ForwardSpec& spec) {
    const auto meshes = build_family(spec.family);
    const Coefficients coeffs =
        spec.coeffs == CoefficientPreset::Poisson ? Coefficients::poisson() : Coefficients::academic();
    const bool spd = spec.coeffs == CoefficientPreset::Poisson;
    SourceFunctional f;
    std::optional<ExactSolution> exact;
    switch (spec.source) {
        case SourcePreset::SinSin:
            f = SourceFunctional::density(spec.coeffs == CoefficientPreset::Poisson ? SinSin::poisson_source
                                                                                    : SinSin::academic_source);
            exact = SinSin::exact();
            break;
        case SourcePreset::Zero:
            f = SourceFunctional::zero();
            exact = ExactSolution{[](const Point&) { return 0.0; }, [](const Point&) { return Point(Point::Zero()); }};
            break;
        case SourcePreset::Delta: f = SourceFunctional::point_load(spec.delta); break;
    }

    std::vector<std::unique_ptr<Level>> levels;
    std::vector<DiscreteSolution> sol;
    for (const auto& m : meshes) {
        levels.push_back(std::make_unique<Level>(m, spec.k));
        const auto& L = *levels.back();
        const SparseMatrix A = spd ? assemble_poisson(*L.space) : assemble_general(*L.space, coeffs);
        const Vector b = assemble_rhs(*L.space, f, spec.q, L.companion.get(), L.locator.get());
        sol.push_back(solve(*L.space, A, b, spd, spec.q));
    }
    std::vector<ForwardRow> rows;
    for (std::size_t l = 0; l < levels.size(); ++l) {
        ForwardRow r;
        r.level = static_cast<int>(l);
        r.h = levels[l]->mesh.h_max();
        r.ndof = levels[l]->space->num_free();
        if (exact || l + 1 < levels.size()) {
            const ErrorNorms e = exact ? error_norms(sol[l], *exact) : error_norms(sol[l], sol.back());
            r.err1 = e.err1;
            r.err0 = e.err0;
        }
        rows.push_back(r);
    }
    fill_rates(rows);
    return rows;
}

inline std::string forward_csv(const std::vector<ForwardRow>& rows) {
    std::string s = "level,h,ndof,err1,rate1,err0,rate0\n";
    for (const auto& r : rows) {
        s += std::to_string(r.level) + "," + format_double("%.5f", r.h) + "," + std::to_string(r.ndof) + "," +
             format_double("%.6e", r.err1) + "," + format_rate(r.rate1) + "," + format_double("%.6e", r.err0) + "," +
             format_rate(r.rate0) + "\n";
    }
    return s;
}

/// Both Q variants side by side; the J columns carry a _j suffix.
inline std::string forward_csv(const std::vector<ForwardRow>& pik, const std::vector<ForwardRow>& j) {
    if (pik.size() != j.size()) throw Error(ErrorCode::BadParams, "tables differ in length");
    std::string s = "level,h,ndof,err1,rate1,err0,rate0,err1_j,rate1_j,err0_j,rate0_j\n";
    for (std::size_t i = 0; i < pik.size(); ++i) {
        const auto& r = pik[i];
        const auto& q = j[i];
        s += std::to_string(r.level) + "," + format_double("%.5f", r.h) + "," + std::to_string(r.ndof) + "," +
             format_double("%.6e", r.err1) + "," + format_rate(r.rate1) + "," + format_double("%.6e", r.err0) + "," +
             format_rate(r.rate0) + "," + format_double("%.6e", q.err1) + "," + format_rate(q.rate1) + "," +
             format_double("%.6e", q.err0) + "," + format_rate(q.rate0) + "\n";
    }
    return s;
}

// ---------------------------------------------------------------- inverse

/// A measurement defined independently of the level: a box (cells whose
/// centroid lies inside), cells of level 0 (with all their descendants), or a point.
struct MeasurementSpec {
    enum class Kind { AverageBox, AverageCells, Point };
    Kind kind = Kind::Point;
    Point lo = Point::Zero(), hi = Point::Zero();
    std::vector<int> cells;
    Point point = Point::Zero();

    static MeasurementSpec box(const Point& lo, const Point& hi) { return {Kind::AverageBox, lo, hi, {}, Point::Zero()}; }
    static MeasurementSpec at(const Point& p) { return {Kind::Point, Point::Zero(), Point::Zero(), {}, p}; }
};

inline std::vector<MeasurementFunctional> resolve_measurements(const std::vector<MeasurementSpec>& specs,
                                                               const Level& level, const Level& base) {
    std::vector<MeasurementFunctional> out;
    for (const auto& s : specs) {
        switch (s.kind) {
            case MeasurementSpec::Kind::Point: out.push_back(MeasurementFunctional::point_value(s.point)); break;
            case MeasurementSpec::Kind::AverageBox:
                out.push_back(MeasurementFunctional::average(cells_in_box(level.mesh, s.lo, s.hi)));
                break;
            case MeasurementSpec::Kind::AverageCells: {
                std::vector<char> wanted(base.mesh.num_cells(), 0);
                for (int c : s.cells) {
                    if (c < 0 || c >= base.mesh.num_cells()) throw Error(ErrorCode::BadParams, "measurement cell out of range");
                    wanted[c] = 1;
                }
                std::vector<int> cells;
                for (int c = 0; c < level.mesh.num_cells(); ++c)
                    if (wanted[base.locator->locate(level.mesh.centroid(c)).cell]) cells.push_back(c);
                out.push_back(MeasurementFunctional::average(std::move(cells)));
                break;
            }
        }
    }
    return out;
}

struct InverseSpec {
    FamilySpec family;
    std::vector<MeasurementSpec> measurements;
    double noise = 0.0;                // ||n|| / ||m||
    std::uint64_t noise_seed = 1;
    std::optional<double> alpha;       // nullopt: select at the finest level
    Point probe = Point(0.5, 0.5);
};

struct InverseRow {
    int level = 0;
    double h = 0.0;
    int ndof = 0;
    double errm = 0.0;
    double err1f = 0.0, err0f = 0.0;
    double err1fh = 0.0, err0fh = 0.0;
    std::optional<double> ratem, rate1fh, rate0fh;
    double alpha = 0.0;
    double probe = 0.0;
};

/// The true source 2 pi^2 sin(pi x) sin(pi y) of u = sin(pi x) sin(pi y).
struct TrueSource {
    static double f(const Point& p) { return 2.0 * std::numbers::pi * std::numbers::pi * SinSin::u(p); }
    static Point grad(const Point& p) { return 2.0 * std::numbers::pi * std::numbers::pi * SinSin::grad(p); }
    /// Full H1 norm on the unit square.
    static double h1_norm() {
        const double pi = std::numbers::pi;
        const double l2 = pi * pi;  // ||2 pi^2 sin sin||_0 = 2 pi^2 / 2
        return l2 * std::sqrt(1.0 + 2.0 * pi * pi);
    }
};

/// The reconstruction on the finest level.
struct InverseDump {
    PolygonalMesh mesh;
    Vector dofs;
    double alpha = 0.0;
};

inline std::vector<InverseRow> run_inverse(const InverseSpec& spec, std::optional<InverseDump>* dump = nullptr) {
    if (spec.measurements.empty()) throw Error(ErrorCode::BadParams, "no measurements");
    const auto meshes = build_family(spec.family);
    std::vector<std::unique_ptr<Level>> levels;
    for (const auto& m : meshes) levels.push_back(std::make_unique<Level>(m, 1));
    const int nl = static_cast<int>(levels.size());

    std::vector<std::unique_ptr<InverseSystem>> sys;
    std::vector<Vector> m_exact, m_h;
    for (const auto& L : levels) {
        const auto H = resolve_measurements(spec.measurements, *L, *levels.front());
        sys.push_back(std::make_unique<InverseSystem>(*L->space, H, L->companion.get(), L->locator.get()));
        m_exact.push_back(exact_measurements(L->mesh, L->st, H, SinSin::u));
        const auto u = solve(*L->space, sys.back()->stiffness(),
                             assemble_rhs(*L->space, SourceFunctional::density(TrueSource::f), QMode::PiK), true);
        m_h.push_back(sys.back()->S() * L->space->restrict_to_free(u.dofs()));
    }
    const Vector noise = measurement_noise(m_exact.front(), spec.noise, spec.noise_seed);
    const double alpha =
        spec.alpha ? *spec.alpha : select_alpha(sys.back()->L(), TrueSource::h1_norm(), noise.norm());

    std::vector<DiscreteSolution> fh;
    for (int l = 0; l < nl; ++l) {
        const auto r = reconstruct(*sys[l], m_exact[l] + noise, alpha);
        fh.emplace_back(*levels[l]->space, r.dofs);
    }
    std::vector<InverseRow> rows;
    for (int l = 0; l < nl; ++l) {
        InverseRow r;
        r.level = l;
        r.h = levels[l]->mesh.h_max();
        r.ndof = levels[l]->space->num_free();
        r.errm = safe_ratio((m_exact[l] - m_h[l]).norm(), m_exact[l].norm());
        const auto ef = full_norm_errors(error_norms(fh[l], ExactSolution{TrueSource::f, TrueSource::grad}));
        r.err1f = ef.err1;
        r.err0f = ef.err0;
        if (l + 1 < nl) {
            const auto eh = full_norm_errors(error_norms(fh[l], fh.back(), true));
            r.err1fh = eh.err1;
            r.err0fh = eh.err0;
        }
        r.alpha = alpha;
        const auto at = levels[l]->locator->locate(spec.probe);
        r.probe = fh[l].projected_value(at.cell, spec.probe);
        rows.push_back(r);
    }
    if (dump) *dump = InverseDump{levels.back()->mesh, fh.back().dofs(), alpha};
    for (int l = 0; l + 1 < nl; ++l) {
        rows[l].ratem = rate(rows[l].errm, rows[l + 1].errm, rows[l].h, rows[l + 1].h);
        rows[l].rate1fh = rate(rows[l].err1fh, rows[l + 1].err1fh, rows[l].h, rows[l + 1].h);
        rows[l].rate0fh = rate(rows[l].err0fh, rows[l + 1].err0fh, rows[l].h, rows[l + 1].h);
    }
    return rows;
}

inline std::string inverse_csv(const std::vector<InverseRow>& rows) {
    std::string s = "level,h,ndof,errm,ratem,err1f,err0f,err1fh,rate1fh,err0fh,rate0fh,alpha,probe\n";
    for (const auto& r : rows) {
        s += std::to_string(r.level) + "," + format_double("%.5f", r.h) + "," + std::to_string(r.ndof) + "," +
             format_double("%.6e", r.errm) + "," + format_rate(r.ratem) + "," + format_double("%.6e", r.err1f) + "," +
             format_double("%.6e", r.err0f) + "," + format_double("%.6e", r.err1fh) + "," + format_rate(r.rate1fh) + "," +
             format_double("%.6e", r.err0fh) + "," + format_rate(r.rate0fh) + "," + format_double("%.6e", r.alpha) + "," +
             format_double("%.6f", r.probe) + "\n";
    }
    return s;
}

/// Probe table: one row per level, one column per measurement count.
struct ProbeTable {
    std::vector<double> h;
    std::vector<int> counts;
    std::vector<std::vector<double>> values;  // values[level][count index]
};

inline ProbeTable run_probe_sweep(InverseSpec spec, const std::vector<int>& counts) {
    ProbeTable t;
    t.counts = counts;
    const auto all = spec.measurements;
    for (std::size_t j = 0; j < counts.size(); ++j) {
        if (counts[j] < 1 || counts[j] > static_cast<int>(all.size()))
            throw Error(ErrorCode::BadParams, "measurement count out of range");
        spec.measurements.assign(all.begin(), all.begin() + counts[j]);
        const auto rows = run_inverse(spec);
        if (t.values.empty()) t.values.assign(rows.size(), std::vector<double>(counts.size()));
        for (std::size_t l = 0; l < rows.size(); ++l) {
            t.values[l][j] = rows[l].probe;
            if (j == 0) t.h.push_back(rows[l].h);
        }
    }
    return t;
}

inline std::string probe_csv(const ProbeTable& t) {
    std::string s = "h";
    for (int n : t.counts) s += ",N" + std::to_string(n);
    s += "\n";
    for (std::size_t l = 0; l < t.h.size(); ++l) {
        s += format_double("%.5f", t.h[l]);
        for (double v : t.values[l]) s += "," + format_double("%.6f", v);
        s += "\n";
    }
    return s;
}

// ---------------------------------------------------------------- presets

namespace presets {

inline ForwardSpec academic(QMode q) {
    ForwardSpec s;
    s.family = {MeshKind::NonconvexPattern, 5, {}, {}};
    s.family.params.n = 4;
    s.coeffs = CoefficientPreset::Academic;
    s.source = SourcePreset::SinSin;
    s.q = q;
    return s;
}

inline ForwardSpec pointload_voronoi() {
    ForwardSpec s;
    s.family = {MeshKind::VoronoiLloyd, 6, {}, {5, 25, 100, 400, 1600, 6400}};
    s.family.params.seed = 1;
    s.coeffs = CoefficientPreset::Poisson;
    s.source = SourcePreset::Delta;
    s.delta = Point(0.1, 0.1);
    s.q = QMode::J;
    return s;
}

inline ForwardSpec pointload_distorted() {
    ForwardSpec s;
    const Point c(0.431260, 0.438584);
    s.family = {MeshKind::DistortedSquare, 6, {}, {}};
    s.family.params.n = 5;
    s.family.params.seed = 7;
    s.family.params.pin = c;
    s.coeffs = CoefficientPreset::Academic;
    s.source = SourcePreset::Delta;
    s.delta = c;
    s.q = QMode::J;
    return s;
}

inline InverseSpec inverse_pockets() {
    InverseSpec s;
    s.family = {MeshKind::RedRefinedQuad, 6, {}, {}};
    s.family.params.n = 5;
    s.measurements = {MeasurementSpec::box({0.2, 0.6}, {0.4, 0.8}), MeasurementSpec::box({0.6, 0.2}, {0.8, 0.4})};
    s.noise = 0.02;
    s.noise_seed = 1;
    return s;
}

inline InverseSpec inverse_window() {
    InverseSpec s;
    s.family = {MeshKind::UniformSquare, 5, {}, {}};
    s.family.params.n = 8;
    s.measurements = {MeasurementSpec::box({0.25, 0.25}, {0.75, 0.75})};
    s.noise = 0.02;
    s.noise_seed = 1;
    return s;
}

inline std::vector<Point> probe_points() {
    return {{0.5, 0.5}, {0.75, 0.25}, {0.25, 0.75}, {0.25, 0.25}, {0.75, 0.75}, {0.125, 0.375}, {0.375, 0.375}};
}

inline InverseSpec inverse_points(int count = 7) {
    InverseSpec s;
    s.family = {MeshKind::UniformSquare, 6, {}, {}};
    s.family.params.n = 2;
    const auto pts = probe_points();
    for (int i = 0; i < count && i < static_cast<int>(pts.size()); ++i) s.measurements.push_back(MeasurementSpec::at(pts[i]));
    s.noise = 0.0;
    return s;
}

}  // namespace presets

}  // namespace polyvem
