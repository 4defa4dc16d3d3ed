#pragma once

#include <cmath>
#include <type_traits>

namespace deform {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
  friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

// Particle buffers are reinterpreted as flat double arrays by the SIMD kernels.
static_assert(std::is_standard_layout_v<Vec3> && sizeof(Vec3) == 3 * sizeof(double));

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double norm_xy(const Vec3& a) { return std::hypot(a.x, a.y); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }
inline bool is_finite(const Vec3& a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

/// Continuous image coordinates; integer values are pixel centers.
struct Pixel {
  double u = 0.0;  // column
  double v = 0.0;  // row
  friend constexpr bool operator==(const Pixel&, const Pixel&) = default;
};

inline double pixel_distance(const Pixel& a, const Pixel& b) { return std::hypot(a.u - b.u, a.v - b.v); }

struct PixelIndex {
  int col = 0;
  int row = 0;
  friend constexpr bool operator==(const PixelIndex&, const PixelIndex&) = default;
};

inline Pixel to_pixel(const PixelIndex& p) { return {static_cast<double>(p.col), static_cast<double>(p.row)}; }

constexpr double kPi = 3.14159265358979323846;

}  // namespace deform
