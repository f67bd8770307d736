#pragma once

#include <cstdint>
#include <vector>

#include "orchardsynth/geometry.hpp"
#include "orchardsynth/scene.hpp"

namespace orchard {

/// Geometric parameters of one walnut-like tree. Lengths in meters,
/// angles in degrees.
struct CanopyParams {
  double trunk_height = 2.0;
  double trunk_radius = 0.15;
  int branch_levels = 3;
  int branches_per_node = 3;
  double branch_angle = 40.0;
  double branch_length_ratio = 0.7;
  int leaves_per_branch = 60;
  double leaf_length = 0.12;
  double leaf_width = 0.06;
  int nut_clusters = 12;
  int nuts_per_cluster = 3;
  double nut_radius = 0.02;
  double jitter = 0.5;
  std::uint64_t seed = 1;
};

struct OrchardParams {
  int rows = 1;
  int cols = 1;
  double row_spacing = 6.0;
  double col_spacing = 5.0;
  double ground_extent = 20.0;
  // Derive a distinct seed for each tree from (tree.seed, row, col); when
  // false every tree uses tree.seed unchanged.
  bool per_tree_seeds = true;
  CanopyParams tree;
};

struct TessellationQuality {
  int sphere_subdivisions = 2;
  int cylinder_segments = 8;
};

/// Material slots used by generated geometry; a scene built by
/// generate_orchard expects its material list in this order.
enum MaterialSlot : std::uint32_t { kBarkMaterial = 0, kLeafMaterial, kWalnutMaterial, kGroundMaterial };
inline constexpr std::size_t kMaterialSlotCount = 4;

void validate(const CanopyParams &p);
void validate(const OrchardParams &p);
void validate(const TessellationQuality &q);

struct GeneratedTree {
  std::vector<Primitive> primitives;
  int branch_segments = 0;    // excluding the trunk
  int terminal_branches = 0;  // segments that carry nuts
  std::uint32_t walnut_instances = 0;
};

GeneratedTree generate_tree_detailed(const CanopyParams &params, const TessellationQuality &quality);

// Walnut instance ids are 1..nut_clusters*nuts_per_cluster.
std::vector<Primitive> generate_tree(const CanopyParams &params, const TessellationQuality &quality);

/// Grid of trees on a ground quad at z = 0. Tree (r, c) is rooted at
/// (c * col_spacing, r * row_spacing) plus a jitter-scaled offset; walnut
/// instance ids are renumbered to be unique and contiguous over the scene.
Scene generate_orchard(const OrchardParams &params, const TessellationQuality &quality,
                       std::vector<Material> materials);

std::vector<Primitive> generate_orchard_primitives(const OrchardParams &params,
                                                   const TessellationQuality &quality);

// Building blocks. Output triangles carry no labels or materials.
std::vector<Primitive> tessellate_sphere(const Vec3 &center, double radius, int subdivisions);
std::vector<Primitive> tessellate_cylinder(const Vec3 &a, const Vec3 &b, double radius, int segments);
std::vector<Primitive> leaf_card(const Vec3 &anchor, const Vec3 &direction, double length,
                                 double width);

}  // namespace orchard
