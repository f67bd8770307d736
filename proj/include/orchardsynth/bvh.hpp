#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "orchardsynth/geometry.hpp"

namespace orchard {

struct Bounds3 {
  Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity()};
  Vec3 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
          -std::numeric_limits<double>::infinity()};

  void extend(const Vec3 &p) {
    lo = min(lo, p);
    hi = max(hi, p);
  }
  void extend(const Bounds3 &b) {
    lo = min(lo, b.lo);
    hi = max(hi, b.hi);
  }
  bool empty() const { return lo.x > hi.x; }
  Vec3 centroid() const { return (lo + hi) * 0.5; }
  double surface_area() const;
};

/// Bounding-volume hierarchy over triangles, built with binned SAH splits.
/// Immutable after construction; queries are safe from many threads.
///
/// Closest-hit semantics: the reported primitive is the one with the
/// lowest index among all hits whose t lies within kTieEpsilon of the
/// global minimum t. This is independent of traversal order, so the
/// result is identical to a linear scan.
class Bvh {
 public:
  static constexpr double kTieEpsilon = 1e-12;

  Bvh() = default;
  explicit Bvh(std::span<const Primitive> primitives);

  struct Hit {
    TriangleHit tri;
    std::uint32_t primitive_index;
  };

  std::optional<Hit> closest(const Ray &ray) const;
  bool any(const Ray &ray) const;

  std::size_t node_count() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  Bounds3 bounds() const { return nodes_.empty() ? Bounds3{} : nodes_[0].bounds; }

 private:
  struct Node {
    Bounds3 bounds;
    // Leaf: first index into order_/tris_. Interior: index of second child
    // (the first child immediately follows its parent).
    std::uint32_t offset = 0;
    std::uint16_t count = 0;  // 0 for interior nodes
    std::uint8_t axis = 0;
  };

  std::uint32_t build(std::vector<std::uint32_t> &ids, std::uint32_t begin, std::uint32_t end,
                      std::span<const Bounds3> prim_bounds, std::span<const Vec3> centroids);

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;              // leaf slot -> primitive index
  std::vector<std::array<Vec3, 3>> tris_;         // vertices in leaf order
};

}  // namespace orchard
