#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "orchardsynth/bvh.hpp"
#include "orchardsynth/geometry.hpp"

namespace orchard {

/// Lambertian surface optics, one value per band.
struct Material {
  std::string name;
  std::vector<double> reflectance;
  std::vector<double> transmittance;

  double absorptance(std::size_t band) const {
    return 1.0 - reflectance[band] - transmittance[band];
  }
};

// Throws ValidationError unless every band has rho, tau in [0,1] and
// rho + tau <= 1, and both vectors have `bands` entries.
void validate_material(const Material &m, std::size_t bands);

/// Flattened, labeled triangle soup plus its acceleration index.
/// Construction validates the scene invariants and builds the index;
/// afterwards the object is immutable.
class Scene {
 public:
  Scene() = default;
  Scene(std::vector<Primitive> primitives, std::vector<Material> materials);

  std::span<const Primitive> primitives() const { return primitives_; }
  std::span<const Material> materials() const { return materials_; }
  const Primitive &primitive(std::uint32_t i) const { return primitives_[i]; }
  const Material &material_of(std::uint32_t prim) const {
    return materials_[primitives_[prim].material_id];
  }
  std::uint32_t walnut_instance_count() const { return walnut_instances_; }
  const Bvh &index() const { return index_; }

  std::optional<HitRecord> intersect_closest(const Ray &ray) const;
  bool intersect_any(const Ray &ray) const;

  // Reference path without the index: tests every primitive.
  std::optional<HitRecord> intersect_closest_linear(const Ray &ray) const;

 private:
  HitRecord make_record(const Ray &ray, const TriangleHit &h, std::uint32_t prim) const;

  std::vector<Primitive> primitives_;
  std::vector<Material> materials_;
  std::vector<Vec3> normals_;
  std::uint32_t walnut_instances_ = 0;
  Bvh index_;
};

inline std::optional<HitRecord> intersect_closest(const Scene &s, const Ray &r) {
  return s.intersect_closest(r);
}
inline bool intersect_any(const Scene &s, const Ray &r) { return s.intersect_any(r); }

}  // namespace orchard
