#pragma once

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <optional>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "orchardsynth/canopy.hpp"
#include "orchardsynth/geometry.hpp"
#include "orchardsynth/scene.hpp"
#include "orchardsynth/spectral.hpp"

namespace testing {

using namespace orchard;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string &tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("orchardsynth-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;
  const std::filesystem::path &path() const { return path_; }
  std::filesystem::path operator/(const std::string &s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline Vec3 random_point(std::mt19937_64 &g, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return {u(g), u(g), u(g)};
}

// Small random triangles scattered in a cube, unlabeled bark.
inline std::vector<Primitive> random_triangles(std::mt19937_64 &g, int n, double extent, double size) {
  std::vector<Primitive> out;
  while (static_cast<int>(out.size()) < n) {
    const Vec3 c = random_point(g, -extent, extent);
    Primitive p;
    p.vertices = {c + random_point(g, -size, size), c + random_point(g, -size, size),
                  c + random_point(g, -size, size)};
    if (p.area() <= kMinTriangleArea) continue;
    p.class_id = ClassId::bark;
    out.push_back(p);
  }
  return out;
}

inline Ray random_ray(std::mt19937_64 &g, double extent) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 d{n(g), n(g), n(g)};
  return {random_point(g, -extent, extent), normalize(d)};
}

inline Material gray_material(double rho, double tau = 0.0, std::size_t bands = 4) {
  return {"gray", std::vector<double>(bands, rho), std::vector<double>(bands, tau)};
}

// Möller-Trumbore, written independently of the library kernel.
inline std::optional<double> moller_trumbore(const Ray &r, const Primitive &p) {
  const Vec3 e1 = p.vertices[1] - p.vertices[0];
  const Vec3 e2 = p.vertices[2] - p.vertices[0];
  const Vec3 h = cross(r.direction, e2);
  const double a = dot(e1, h);
  if (std::abs(a) < 1e-14) return std::nullopt;
  const double f = 1.0 / a;
  const Vec3 s = r.origin - p.vertices[0];
  const double u = f * dot(s, h);
  if (u < 0 || u > 1) return std::nullopt;
  const Vec3 q = cross(s, e1);
  const double v = f * dot(r.direction, q);
  if (v < 0 || u + v > 1) return std::nullopt;
  const double t = f * dot(e2, q);
  if (t <= r.t_min || t >= r.t_max) return std::nullopt;
  return t;
}

// A small orchard suitable for quick renders: few trees, coarse tessellation.
inline OrchardParams small_orchard(std::uint64_t seed) {
  OrchardParams o;
  o.rows = 1;
  o.cols = 2;
  o.tree.seed = seed;
  o.tree.branch_levels = 2;
  o.tree.leaves_per_branch = 25;
  o.tree.nut_clusters = 6;
  return o;
}

// Camera looking at the canopy of the tree rooted at the origin.
inline Camera canopy_camera(int w, int h, int spp = 1) {
  Camera c;
  c.position = {0.4, -2.6, 2.6};
  c.look_at = {0.0, 0.0, 2.9};
  c.width = w;
  c.height = h;
  c.samples_per_pixel = spp;
  return c;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace testing
