#include "orchardsynth/geometry.hpp"

#include <cmath>

namespace orchard {

Vec3 any_orthonormal(const Vec3 &n) {
  // Branchless basis construction (Duff et al.), stable for all unit n.
  const double sign = std::copysign(1.0, n.z);
  const double a = -1.0 / (sign + n.z);
  const double b = n.x * n.y * a;
  return {1.0 + sign * n.x * n.x * a, sign * b, -sign * n.x};
}

const char *class_name(ClassId c) {
  switch (c) {
    case ClassId::background: return "background";
    case ClassId::bark: return "bark";
    case ClassId::leaf: return "leaf";
    case ClassId::walnut: return "walnut";
    case ClassId::ground: return "ground";
  }
  return "unknown";
}

double Primitive::area() const {
  return 0.5 * length(cross(vertices[1] - vertices[0], vertices[2] - vertices[0]));
}

Vec3 Primitive::geometric_normal() const {
  return normalize(cross(vertices[1] - vertices[0], vertices[2] - vertices[0]));
}

RayShear::RayShear(const Vec3 &d) {
  const double ax = std::abs(d.x), ay = std::abs(d.y), az = std::abs(d.z);
  kz = (ax > ay) ? (ax > az ? 0 : 2) : (ay > az ? 1 : 2);
  kx = (kz + 1) % 3;
  ky = (kx + 1) % 3;
  sx = -d[kx] / d[kz];
  sy = -d[ky] / d[kz];
  sz = 1.0 / d[kz];
}

std::optional<TriangleHit> ray_triangle(const Ray &ray, const RayShear &s,
                                        const std::array<Vec3, 3> &tri) {
  const Vec3 a = tri[0] - ray.origin;
  const Vec3 b = tri[1] - ray.origin;
  const Vec3 c = tri[2] - ray.origin;

  const double az = a[s.kz], bz = b[s.kz], cz = c[s.kz];
  const double ax = a[s.kx] + s.sx * az, ay = a[s.ky] + s.sy * az;
  const double bx = b[s.kx] + s.sx * bz, by = b[s.ky] + s.sy * bz;
  const double cx = c[s.kx] + s.sx * cz, cy = c[s.ky] + s.sy * cz;

  // Plain products (no fused multiply-add) so that an edge evaluated from
  // either adjacent triangle yields exactly negated values.
  const double e0 = bx * cy - by * cx;
  const double e1 = cx * ay - cy * ax;
  const double e2 = ax * by - ay * bx;

  if ((e0 < 0 || e1 < 0 || e2 < 0) && (e0 > 0 || e1 > 0 || e2 > 0)) return std::nullopt;
  const double det = e0 + e1 + e2;
  if (det == 0) return std::nullopt;

  const double t_scaled = e0 * (az * s.sz) + e1 * (bz * s.sz) + e2 * (cz * s.sz);
  const double inv_det = 1.0 / det;
  const double t = t_scaled * inv_det;
  if (!(t > ray.t_min && t < ray.t_max)) return std::nullopt;
  return TriangleHit{t, e1 * inv_det, e2 * inv_det};
}

std::optional<TriangleHit> ray_triangle(const Ray &ray, const Primitive &tri) {
  return ray_triangle(ray, RayShear(ray.direction), tri.vertices);
}

}  // namespace orchard
