#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>

namespace orchard {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double &operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr Vec3 operator+(const Vec3 &o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3 &o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  constexpr Vec3 &operator+=(const Vec3 &o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr bool operator==(const Vec3 &) const = default;
};

constexpr Vec3 operator*(double s, const Vec3 &v) { return v * s; }
constexpr double dot(const Vec3 &a, const Vec3 &b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3 &a, const Vec3 &b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double length(const Vec3 &v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalize(const Vec3 &v) { return v / length(v); }
constexpr Vec3 min(const Vec3 &a, const Vec3 &b) {
  return {a.x < b.x ? a.x : b.x, a.y < b.y ? a.y : b.y, a.z < b.z ? a.z : b.z};
}
constexpr Vec3 max(const Vec3 &a, const Vec3 &b) {
  return {a.x > b.x ? a.x : b.x, a.y > b.y ? a.y : b.y, a.z > b.z ? a.z : b.z};
}

// Any unit vector orthogonal to n (n must be unit length).
Vec3 any_orthonormal(const Vec3 &n);

/// Half-open query segment along a unit direction. Hits are accepted for
/// t strictly inside (t_min, t_max).
struct Ray {
  Vec3 origin;
  Vec3 direction;
  double t_min = 0.0;
  double t_max = std::numeric_limits<double>::infinity();

  Vec3 at(double t) const { return origin + direction * t; }
};

enum class ClassId : std::uint8_t { background = 0, bark = 1, leaf = 2, walnut = 3, ground = 4 };

const char *class_name(ClassId c);

struct Primitive {
  std::array<Vec3, 3> vertices;
  std::uint32_t material_id = 0;
  std::uint32_t instance_id = 0;  // 0 for everything that is not a walnut
  ClassId class_id = ClassId::background;

  double area() const;
  Vec3 geometric_normal() const;  // unit, right-handed in vertex order
};

inline constexpr double kMinTriangleArea = 1e-12;

struct TriangleHit {
  double t;
  double u;  // weight of vertices[1]
  double v;  // weight of vertices[2]
};

struct HitRecord {
  double t = 0;
  Vec3 point;
  Vec3 geometric_normal;
  std::uint32_t primitive_index = 0;
  double u = 0, v = 0;

  bool operator==(const HitRecord &) const = default;
};

/// Per-ray constants for the watertight ray/triangle test: the ray is
/// transformed so that it points down +z from the origin, which makes
/// the edge functions exact for shared edges.
struct RayShear {
  int kx, ky, kz;
  double sx, sy, sz;

  explicit RayShear(const Vec3 &direction);
};

std::optional<TriangleHit> ray_triangle(const Ray &ray, const RayShear &shear,
                                        const std::array<Vec3, 3> &tri);

std::optional<TriangleHit> ray_triangle(const Ray &ray, const Primitive &tri);

}  // namespace orchard
