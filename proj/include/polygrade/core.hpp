#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace polygrade {

/// Points are always stored in 3D; planar problems use z = 0.
using Vec3 = std::array<double, 3>;

inline constexpr double pi = std::numbers::pi;

/// Malformed input or a violated geometric/combinatorial invariant.
class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A numerical procedure failed (no convergence, degenerate geometry).
class NumericalError : public std::runtime_error {
  public:
    NumericalError(const std::string &what, double residual = 0.0)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

  private:
    double residual_;
};

inline Vec3 operator+(const Vec3 &a, const Vec3 &b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3 &a, const Vec3 &b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3 &a) { return {s * a[0], s * a[1], s * a[2]}; }
inline Vec3 operator*(const Vec3 &a, double s) { return s * a; }

inline double dot(const Vec3 &a, const Vec3 &b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3 &a, const Vec3 &b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const Vec3 &a) { return std::sqrt(dot(a, a)); }
inline double distance(const Vec3 &a, const Vec3 &b) { return norm(a - b); }
inline Vec3 normalized(const Vec3 &a) {
    const double n = norm(a);
    return n > 0.0 ? (1.0 / n) * a : a;
}

/// Point on segment AB at fraction t from A.
inline Vec3 lerp(const Vec3 &a, const Vec3 &b, double t) { return a + t * (b - a); }

inline double point_segment_distance(const Vec3 &x, const Vec3 &a, const Vec3 &b) {
    const Vec3 ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 == 0.0) return distance(x, a);
    const double t = std::clamp(dot(x - a, ab) / len2, 0.0, 1.0);
    return distance(x, a + t * ab);
}

/// Signed area of a planar triangle (xy-plane).
inline double signed_area(const Vec3 &a, const Vec3 &b, const Vec3 &c) {
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
}

inline double signed_volume(const Vec3 &a, const Vec3 &b, const Vec3 &c, const Vec3 &d) {
    return dot(b - a, cross(c - a, d - a)) / 6.0;
}

/// Lexicographic order on coordinates with an absolute tolerance per component.
inline bool lex_less(const Vec3 &a, const Vec3 &b, double tol = 1e-12) {
    for (int k = 0; k < 3; ++k) {
        if (a[k] < b[k] - tol) return true;
        if (a[k] > b[k] + tol) return false;
    }
    return false;
}

/// Singularity class of a point; V > E > S.
enum class VertexType : std::uint8_t { S = 0, E = 1, V = 2 };

inline char to_char(VertexType t) {
    switch (t) {
    case VertexType::V: return 'V';
    case VertexType::E: return 'E';
    default: return 'S';
    }
}

inline VertexType vertex_type_from_char(char c) {
    switch (c) {
    case 'V': case 'v': return VertexType::V;
    case 'E': case 'e': return VertexType::E;
    case 'S': case 's': return VertexType::S;
    default: throw ValidationError(std::string("unknown vertex type '") + c + "'");
    }
}

/// Upper bound on worker threads, from POLYGRADE_THREADS (0 or unset: library default).
inline int thread_cap() {
    const char *env = std::getenv("POLYGRADE_THREADS");
    if (env == nullptr) return 0;
    const int n = std::atoi(env);
    return n > 0 ? n : 0;
}

} // namespace polygrade
