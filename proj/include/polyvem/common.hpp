#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace polyvem {

using Point = Eigen::Vector2d;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ErrorCode {
    NonManifoldEdge,
    OpenCell,
    Degenerate,
    NotStarShaped,
    BadParams,
    OutsideDomain,
    UnsupportedDegree,
    SingularLocalSystem,
    SingularWeightedMass,
    IncompatibleQ,
    SingularSystem,
    NotNested,
    PointOutside,
    NotSPD,
    Parse,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NonManifoldEdge: return "NonManifoldEdge";
        case ErrorCode::OpenCell: return "OpenCell";
        case ErrorCode::Degenerate: return "Degenerate";
        case ErrorCode::NotStarShaped: return "NotStarShaped";
        case ErrorCode::BadParams: return "BadParams";
        case ErrorCode::OutsideDomain: return "OutsideDomain";
        case ErrorCode::UnsupportedDegree: return "UnsupportedDegree";
        case ErrorCode::SingularLocalSystem: return "SingularLocalSystem";
        case ErrorCode::SingularWeightedMass: return "SingularWeightedMass";
        case ErrorCode::IncompatibleQ: return "IncompatibleQ";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::NotNested: return "NotNested";
        case ErrorCode::PointOutside: return "PointOutside";
        case ErrorCode::NotSPD: return "NotSPD";
        case ErrorCode::Parse: return "Parse";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can branch on the kind rather than on message text.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

inline double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Twice the signed area of (a, b, c); positive for counter-clockwise order.
inline double orient(const Point& a, const Point& b, const Point& c) { return cross(b - a, c - a); }

/// Deterministic 64-bit generator (splitmix64) so seeded meshes and noise are
/// reproducible across standard library implementations.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

  private:
    std::uint64_t state_;
};

}  // namespace polyvem

