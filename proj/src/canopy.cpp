#include "orchardsynth/canopy.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "orchardsynth/error.hpp"
#include "orchardsynth/random.hpp"

namespace orchard {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
// Branches never point flatter than this (z component of the unit axis).
constexpr double kMinBranchRise = 0.15;
constexpr long kMaxBranchSegments = 1'000'000;

void require_positive(double v, const char *field) {
  if (!(v > 0) || !std::isfinite(v)) throw ValidationError(field, fmt::format("must be > 0, got {}", v));
}

struct Segment {
  Vec3 a, b;
  double radius;
};

// Unit vector at `angle` (rad) from `axis`, rotated by `azimuth` (rad)
// around it, using a fixed basis so results are reproducible.
Vec3 tilt(const Vec3 &axis, double angle, double azimuth) {
  const Vec3 u = any_orthonormal(axis);
  const Vec3 w = cross(axis, u);
  return normalize(std::cos(angle) * axis +
                   std::sin(angle) * (std::cos(azimuth) * u + std::sin(azimuth) * w));
}

void append(std::vector<Primitive> &out, std::vector<Primitive> tris, ClassId cls,
            std::uint32_t material, std::uint32_t instance = 0) {
  for (Primitive &p : tris) {
    p.class_id = cls;
    p.material_id = material;
    p.instance_id = instance;
    out.push_back(p);
  }
}

// Lift a freshly generated part so that nothing dips below the ground.
void lift_above_ground(std::vector<Primitive> &tris) {
  double lowest = 0.0;
  for (const Primitive &p : tris)
    for (const Vec3 &v : p.vertices) lowest = std::min(lowest, v.z);
  if (lowest >= 0.0) return;
  for (Primitive &p : tris)
    for (Vec3 &v : p.vertices) v.z -= lowest;
}

class TreeBuilder {
 public:
  TreeBuilder(const CanopyParams &p, const TessellationQuality &q)
      : p_(p), q_(q), branch_rng_(p.seed, "branch"), leaf_rng_(p.seed, "leaf"),
        nut_rng_(p.seed, "nut") {}

  GeneratedTree build() {
    GeneratedTree out;
    const Segment trunk{{0, 0, 0}, {0, 0, p_.trunk_height}, p_.trunk_radius};
    append(out.primitives, tessellate_cylinder(trunk.a, trunk.b, trunk.radius, q_.cylinder_segments),
           ClassId::bark, kBarkMaterial);
    grow(trunk, 0, out);
    out.terminal_branches = static_cast<int>(tips_.size());
    add_leaves(out);
    add_nuts(out);
    return out;
  }

 private:
  void grow(const Segment &parent, int level, GeneratedTree &out) {
    if (level == p_.branch_levels) {
      tips_.push_back(parent);
      return;
    }
    const Vec3 axis = normalize(parent.b - parent.a);
    const double parent_len = length(parent.b - parent.a);
    const int n = p_.branches_per_node;
    const double phase = branch_rng_.uniform(0, 2 * std::numbers::pi) * p_.jitter;
    for (int k = 0; k < n; ++k) {
      const double azimuth = phase + 2 * std::numbers::pi * k / n +
                             p_.jitter * branch_rng_.uniform(-1, 1) * std::numbers::pi / (2 * n);
      const double angle =
          p_.branch_angle * kDegToRad * (1.0 + 0.3 * p_.jitter * branch_rng_.uniform(-1, 1));
      Vec3 dir = tilt(axis, angle, azimuth);
      if (dir.z < kMinBranchRise) {
        dir.z = kMinBranchRise;
        dir = normalize(dir);
      }
      const double len =
          parent_len * p_.branch_length_ratio * (1.0 + 0.2 * p_.jitter * branch_rng_.uniform(-1, 1));
      const Segment child{parent.b, parent.b + dir * len, parent.radius * p_.branch_length_ratio};
      append(out.primitives, tessellate_cylinder(child.a, child.b, child.radius, q_.cylinder_segments),
             ClassId::bark, kBarkMaterial);
      ++out.branch_segments;
      branches_.push_back(child);
      grow(child, level + 1, out);
    }
  }

  void add_leaves(GeneratedTree &out) {
    for (const Segment &tip : branches_) {
      const Vec3 axis = normalize(tip.b - tip.a);
      for (int i = 0; i < p_.leaves_per_branch; ++i) {
        const double s = leaf_rng_.uniform(0.2, 1.0);
        const double angle = leaf_rng_.uniform(30.0, 80.0) * kDegToRad;
        const double azimuth = leaf_rng_.uniform(0, 2 * std::numbers::pi);
        const double scale = 1.0 + 0.2 * p_.jitter * leaf_rng_.uniform(-1, 1);
        Vec3 dir = tilt(axis, angle, azimuth);
        dir.z -= 0.3;  // droop
        dir = normalize(dir);
        const Vec3 anchor = tip.a + (tip.b - tip.a) * s + dir * tip.radius;
        auto card = leaf_card(anchor, dir, p_.leaf_length * scale, p_.leaf_width * scale);
        lift_above_ground(card);
        append(out.primitives, std::move(card), ClassId::leaf, kLeafMaterial);
      }
    }
  }

  void add_nuts(GeneratedTree &out) {
    if (p_.nut_clusters == 0 || tips_.empty()) return;
    // Distinct tips while they last (partial Fisher-Yates), then reuse.
    std::vector<std::size_t> order(tips_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const double r = p_.nut_radius;
    const int per = p_.nuts_per_cluster;
    const double ring = per == 1 ? 0.0 : 1.1 * r / std::sin(std::numbers::pi / per);
    std::uint32_t next_id = 1;
    for (int c = 0; c < p_.nut_clusters; ++c) {
      const std::size_t slot = static_cast<std::size_t>(c) % order.size();
      const std::size_t pick = slot + nut_rng_.below(order.size() - slot);
      std::swap(order[slot], order[pick]);
      const Segment &tip = tips_[order[slot]];

      const double along = nut_rng_.uniform(0.35, 0.85);
      const Vec3 center = tip.a + (tip.b - tip.a) * along + Vec3{0, 0, -(tip.radius + ring + 1.5 * r)};
      const double phase = nut_rng_.uniform(0, 2 * std::numbers::pi);
      for (int j = 0; j < per; ++j) {
        const double az = phase + 2 * std::numbers::pi * j / per;
        const Vec3 wobble{nut_rng_.uniform(-1, 1), nut_rng_.uniform(-1, 1), nut_rng_.uniform(-1, 1)};
        const Vec3 pos = center + Vec3{std::cos(az) * ring, std::sin(az) * ring, 0} +
                         wobble * (0.25 * r * p_.jitter);
        auto sphere = tessellate_sphere(pos, r, q_.sphere_subdivisions);
        lift_above_ground(sphere);
        append(out.primitives, std::move(sphere), ClassId::walnut, kWalnutMaterial, next_id++);
      }
    }
    out.walnut_instances = next_id - 1;
  }

  const CanopyParams &p_;
  const TessellationQuality &q_;
  CounterRng branch_rng_, leaf_rng_, nut_rng_;
  std::vector<Segment> tips_;
  std::vector<Segment> branches_;  // every non-trunk segment, in growth order
};

}  // namespace

void validate(const CanopyParams &p) {
  require_positive(p.trunk_height, "trunk_height");
  require_positive(p.trunk_radius, "trunk_radius");
  require_positive(p.leaf_length, "leaf_length");
  require_positive(p.leaf_width, "leaf_width");
  require_positive(p.nut_radius, "nut_radius");
  if (p.branch_levels < 0) throw ValidationError("branch_levels", "must be >= 0");
  if (p.branches_per_node < 1) throw ValidationError("branches_per_node", "must be >= 1");
  if (!(p.branch_angle >= 0 && p.branch_angle < 180))
    throw ValidationError("branch_angle", fmt::format("must be in [0, 180), got {}", p.branch_angle));
  if (!(p.branch_length_ratio > 0 && p.branch_length_ratio < 1))
    throw ValidationError("branch_length_ratio",
                          fmt::format("must be in (0, 1), got {}", p.branch_length_ratio));
  if (p.leaves_per_branch < 0) throw ValidationError("leaves_per_branch", "must be >= 0");
  if (p.nut_clusters < 0) throw ValidationError("nut_clusters", "must be >= 0");
  if (p.nuts_per_cluster < 1) throw ValidationError("nuts_per_cluster", "must be >= 1");
  if (!(p.jitter >= 0 && p.jitter <= 1))
    throw ValidationError("jitter", fmt::format("must be in [0, 1], got {}", p.jitter));
  long total = 0, level = 1;
  for (int i = 0; i < p.branch_levels; ++i) {
    level *= p.branches_per_node;
    total += level;
    if (total > kMaxBranchSegments)
      throw ValidationError("branch_levels", "branches_per_node^branch_levels is too large");
  }
}

void validate(const OrchardParams &p) {
  if (p.rows < 1) throw ValidationError("rows", "must be >= 1");
  if (p.cols < 1) throw ValidationError("cols", "must be >= 1");
  require_positive(p.row_spacing, "row_spacing");
  require_positive(p.col_spacing, "col_spacing");
  require_positive(p.ground_extent, "ground_extent");
  validate(p.tree);
}

void validate(const TessellationQuality &q) {
  if (q.sphere_subdivisions < 1) throw ValidationError("sphere_subdivisions", "must be >= 1");
  if (q.sphere_subdivisions > 8) throw ValidationError("sphere_subdivisions", "must be <= 8");
  if (q.cylinder_segments < 3) throw ValidationError("cylinder_segments", "must be >= 3");
}

GeneratedTree generate_tree_detailed(const CanopyParams &params, const TessellationQuality &quality) {
  validate(params);
  validate(quality);
  return TreeBuilder(params, quality).build();
}

std::vector<Primitive> generate_tree(const CanopyParams &params, const TessellationQuality &quality) {
  return generate_tree_detailed(params, quality).primitives;
}

std::vector<Primitive> generate_orchard_primitives(const OrchardParams &params,
                                                   const TessellationQuality &quality) {
  validate(params);
  validate(quality);
  std::vector<Primitive> out;
  CounterRng place_rng(params.tree.seed, "orchard");
  std::uint32_t id_offset = 0;
  for (int r = 0; r < params.rows; ++r) {
    for (int c = 0; c < params.cols; ++c) {
      CanopyParams tp = params.tree;
      if (params.per_tree_seeds)
        tp.seed = hash_key({params.tree.seed, static_cast<std::uint64_t>(r),
                            static_cast<std::uint64_t>(c)});
      const double jx = place_rng.uniform(-1, 1) * 0.1 * params.col_spacing * tp.jitter;
      const double jy = place_rng.uniform(-1, 1) * 0.1 * params.row_spacing * tp.jitter;
      const Vec3 origin{c * params.col_spacing + jx, r * params.row_spacing + jy, 0.0};
      GeneratedTree tree = TreeBuilder(tp, quality).build();
      for (Primitive &p : tree.primitives) {
        for (Vec3 &v : p.vertices) v += origin;
        if (p.instance_id != 0) p.instance_id += id_offset;
        out.push_back(p);
      }
      id_offset += tree.walnut_instances;
    }
  }

  const double half = 0.5 * params.ground_extent;
  const Vec3 mid{0.5 * (params.cols - 1) * params.col_spacing,
                 0.5 * (params.rows - 1) * params.row_spacing, 0.0};
  const Vec3 g0 = mid + Vec3{-half, -half, 0}, g1 = mid + Vec3{half, -half, 0};
  const Vec3 g2 = mid + Vec3{half, half, 0}, g3 = mid + Vec3{-half, half, 0};
  out.push_back({{g0, g1, g2}, kGroundMaterial, 0, ClassId::ground});
  out.push_back({{g0, g2, g3}, kGroundMaterial, 0, ClassId::ground});
  return out;
}

Scene generate_orchard(const OrchardParams &params, const TessellationQuality &quality,
                       std::vector<Material> materials) {
  if (materials.size() != kMaterialSlotCount)
    throw ValidationError("materials", fmt::format("expected {} materials (bark, leaf, walnut, "
                                                   "ground), got {}",
                                                   kMaterialSlotCount, materials.size()));
  return Scene(generate_orchard_primitives(params, quality), std::move(materials));
}

std::vector<Primitive> tessellate_sphere(const Vec3 &center, double radius, int subdivisions) {
  require_positive(radius, "radius");
  if (subdivisions < 1) throw ValidationError("subdivisions", "must be >= 1");
  using Tri = std::array<Vec3, 3>;
  const Vec3 px{1, 0, 0}, nx{-1, 0, 0}, py{0, 1, 0}, ny{0, -1, 0}, pz{0, 0, 1}, nz{0, 0, -1};
  // Counter-clockwise seen from outside.
  std::vector<Tri> tris = {{px, py, pz}, {py, nx, pz}, {nx, ny, pz}, {ny, px, pz},
                           {py, px, nz}, {nx, py, nz}, {ny, nx, nz}, {px, ny, nz}};
  for (int s = 0; s < subdivisions; ++s) {
    std::vector<Tri> next;
    next.reserve(tris.size() * 4);
    for (const Tri &t : tris) {
      const Vec3 a = normalize(t[0] + t[1]), b = normalize(t[1] + t[2]), c = normalize(t[2] + t[0]);
      next.push_back({t[0], a, c});
      next.push_back({a, t[1], b});
      next.push_back({c, b, t[2]});
      next.push_back({a, b, c});
    }
    tris = std::move(next);
  }
  std::vector<Primitive> out;
  out.reserve(tris.size());
  for (const Tri &t : tris)
    out.push_back({{center + t[0] * radius, center + t[1] * radius, center + t[2] * radius}});
  return out;
}

std::vector<Primitive> tessellate_cylinder(const Vec3 &a, const Vec3 &b, double radius, int segments) {
  require_positive(radius, "radius");
  if (segments < 3) throw ValidationError("segments", "must be >= 3");
  const double len = length(b - a);
  if (!(len > 0)) throw ValidationError("cylinder", "endpoints coincide");
  const Vec3 axis = (b - a) / len;
  const Vec3 u = any_orthonormal(axis);
  const Vec3 w = cross(axis, u);
  std::vector<Vec3> ring(segments);
  for (int i = 0; i < segments; ++i) {
    const double phi = 2 * std::numbers::pi * i / segments;
    ring[i] = (std::cos(phi) * u + std::sin(phi) * w) * radius;
  }
  std::vector<Primitive> out;
  out.reserve(4 * segments);
  for (int i = 0; i < segments; ++i) {
    const Vec3 &r0 = ring[i];
    const Vec3 &r1 = ring[(i + 1) % segments];
    out.push_back({{a + r0, a + r1, b + r1}});
    out.push_back({{a + r0, b + r1, b + r0}});
  }
  for (int i = 0; i < segments; ++i) {
    const Vec3 &r0 = ring[i];
    const Vec3 &r1 = ring[(i + 1) % segments];
    out.push_back({{a, a + r1, a + r0}});
    out.push_back({{b, b + r0, b + r1}});
  }
  return out;
}

std::vector<Primitive> leaf_card(const Vec3 &anchor, const Vec3 &direction, double length_m,
                                 double width) {
  require_positive(length_m, "length");
  require_positive(width, "width");
  const double dlen = length(direction);
  if (!(dlen > 0)) throw ValidationError("direction", "must be nonzero");
  const Vec3 dir = direction / dlen;
  Vec3 side = cross(dir, Vec3{0, 0, 1});
  if (length(side) < 1e-6) side = cross(dir, Vec3{1, 0, 0});
  side = normalize(side) * (0.5 * width);
  const Vec3 tip = anchor + dir * length_m;
  const Vec3 c0 = anchor - side, c1 = anchor + side, c2 = tip + side, c3 = tip - side;
  return {Primitive{{c0, c1, c2}}, Primitive{{c0, c2, c3}}};
}

}  // namespace orchard
