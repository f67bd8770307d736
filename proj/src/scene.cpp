#include "orchardsynth/scene.hpp"

#include <fmt/format.h>

#include <algorithm>

#include "orchardsynth/error.hpp"

namespace orchard {

void validate_material(const Material &m, std::size_t bands) {
  const std::string field = "materials." + m.name;
  if (m.reflectance.size() != bands || m.transmittance.size() != bands)
    throw ValidationError(field, fmt::format("expected {} reflectance and transmittance values, "
                                             "got {} and {}",
                                             bands, m.reflectance.size(), m.transmittance.size()));
  for (std::size_t b = 0; b < bands; ++b) {
    const double r = m.reflectance[b], t = m.transmittance[b];
    if (!(r >= 0 && r <= 1) || !(t >= 0 && t <= 1))
      throw ValidationError(field, fmt::format("band {}: reflectance {} / transmittance {} "
                                               "outside [0, 1]",
                                               b, r, t));
    if (r + t > 1.0)
      throw ValidationError(field, fmt::format("band {}: reflectance + transmittance = {} > 1",
                                               b, r + t));
  }
}

Scene::Scene(std::vector<Primitive> primitives, std::vector<Material> materials)
    : primitives_(std::move(primitives)), materials_(std::move(materials)) {
  const std::size_t bands = materials_.empty() ? 0 : materials_.front().reflectance.size();
  for (const Material &m : materials_) validate_material(m, bands);

  std::vector<std::uint8_t> seen;
  normals_.reserve(primitives_.size());
  for (std::size_t i = 0; i < primitives_.size(); ++i) {
    const Primitive &p = primitives_[i];
    const std::string field = fmt::format("primitives[{}]", i);
    if (p.material_id >= materials_.size())
      throw ValidationError(field, fmt::format("material_id {} out of range ({} materials)",
                                               p.material_id, materials_.size()));
    if (!(p.area() > kMinTriangleArea)) throw ValidationError(field, "degenerate triangle");
    if (p.class_id == ClassId::walnut) {
      if (p.instance_id == 0) throw ValidationError(field, "walnut primitive without instance_id");
      if (p.instance_id > seen.size()) seen.resize(p.instance_id, 0);
      seen[p.instance_id - 1] = 1;
    } else if (p.instance_id != 0) {
      throw ValidationError(field, fmt::format("{} primitive carries instance_id {}",
                                               class_name(p.class_id), p.instance_id));
    }
    normals_.push_back(p.geometric_normal());
  }
  if (auto gap = std::find(seen.begin(), seen.end(), 0); gap != seen.end())
    throw ValidationError("primitives", fmt::format("walnut instance ids are not contiguous: "
                                                    "{} missing",
                                                    gap - seen.begin() + 1));
  walnut_instances_ = static_cast<std::uint32_t>(seen.size());
  index_ = Bvh(primitives_);
}

HitRecord Scene::make_record(const Ray &ray, const TriangleHit &h, std::uint32_t prim) const {
  return HitRecord{h.t, ray.at(h.t), normals_[prim], prim, h.u, h.v};
}

std::optional<HitRecord> Scene::intersect_closest(const Ray &ray) const {
  auto h = index_.closest(ray);
  if (!h) return std::nullopt;
  return make_record(ray, h->tri, h->primitive_index);
}

bool Scene::intersect_any(const Ray &ray) const { return index_.any(ray); }

std::optional<HitRecord> Scene::intersect_closest_linear(const Ray &ray) const {
  const RayShear shear(ray.direction);
  std::vector<std::pair<TriangleHit, std::uint32_t>> hits;
  double min_t = std::numeric_limits<double>::infinity();
  for (std::uint32_t i = 0; i < primitives_.size(); ++i) {
    if (auto h = ray_triangle(ray, shear, primitives_[i].vertices)) {
      min_t = std::min(min_t, h->t);
      hits.emplace_back(*h, i);
    }
  }
  if (hits.empty()) return std::nullopt;
  // Hits are in index order: the first one inside the tie window wins.
  for (const auto &[h, i] : hits)
    if (h.t - min_t < Bvh::kTieEpsilon) return make_record(ray, h, i);
  return std::nullopt;
}

}  // namespace orchard
