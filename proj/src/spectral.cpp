#include "orchardsynth/spectral.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <set>
#include <thread>

#include "json.hpp"
#include "orchardsynth/canopy.hpp"
#include "orchardsynth/error.hpp"

namespace orchard {

namespace {

constexpr double kInvPi = 1.0 / std::numbers::pi;
constexpr int kTileSize = 16;

bool any_positive(std::span<const double> v) {
  return std::any_of(v.begin(), v.end(), [](double x) { return x > 0; });
}

void check_band_vector(const std::vector<double> &v, std::size_t bands, const char *field) {
  if (v.size() != bands)
    throw ValidationError(field, fmt::format("expected {} values, got {}", bands, v.size()));
  for (double x : v)
    if (!(x >= 0) || !std::isfinite(x))
      throw ValidationError(field, fmt::format("values must be finite and >= 0, got {}", x));
}

}  // namespace

BandSet BandSet::defaults() { return {{{"B", 450}, {"G", 550}, {"R", 650}, {"NIR", 850}}}; }

int BandSet::index_of(const std::string &name) const {
  for (std::size_t i = 0; i < bands.size(); ++i)
    if (bands[i].name == name) return static_cast<int>(i);
  return -1;
}

void validate(const BandSet &b) {
  if (b.bands.empty()) throw ValidationError("bands", "at least one band is required");
  std::set<std::string> names;
  for (const Band &band : b.bands) {
    if (band.name.empty()) throw ValidationError("bands", "band names must be non-empty");
    if (!names.insert(band.name).second)
      throw ValidationError("bands", fmt::format("duplicate band name '{}'", band.name));
    if (!(band.wavelength_nm > 0))
      throw ValidationError("bands", fmt::format("band '{}' wavelength must be > 0", band.name));
  }
}

std::vector<Material> default_materials() {
  std::vector<Material> m(kMaterialSlotCount);
  m[kBarkMaterial] = {"bark", {0.08, 0.10, 0.12, 0.30}, {0, 0, 0, 0}};
  m[kLeafMaterial] = {"leaf", {0.05, 0.15, 0.08, 0.45}, {0.02, 0.08, 0.04, 0.40}};
  m[kWalnutMaterial] = {"walnut", {0.06, 0.16, 0.10, 0.65}, {0, 0, 0, 0}};
  m[kGroundMaterial] = {"ground", {0.10, 0.15, 0.20, 0.25}, {0, 0, 0, 0}};
  return m;
}

void validate(const Lighting &l, std::size_t bands) {
  if (std::abs(length(l.sun_direction) - 1.0) > 1e-9)
    throw ValidationError("lighting.sun_direction", "must be a unit vector");
  if (!(l.sun_direction.z > 0))
    throw ValidationError("lighting.sun_direction", "sun must be above the horizon (z > 0)");
  check_band_vector(l.sun_irradiance, bands, "lighting.sun_irradiance");
  check_band_vector(l.sky_irradiance, bands, "lighting.sky_irradiance");
  if (l.sky_samples < 0) throw ValidationError("lighting.sky_samples", "must be >= 0");
}

void validate(const Camera &c) {
  if (c.position == c.look_at) throw ValidationError("camera", "position equals look_at");
  if (!(c.vertical_fov > 0 && c.vertical_fov < 180))
    throw ValidationError("camera.vertical_fov", fmt::format("must be in (0, 180), got {}", c.vertical_fov));
  if (c.width < 1 || c.height < 1) throw ValidationError("camera", "width and height must be >= 1");
  if (c.samples_per_pixel < 1) throw ValidationError("camera.samples_per_pixel", "must be >= 1");
  const Vec3 fwd = normalize(c.look_at - c.position);
  if (!(length(c.up) > 0) || length(cross(fwd, normalize(c.up))) < 1e-9)
    throw ValidationError("camera.up", "must be nonzero and not parallel to the view direction");
}

void validate(const ToneMap &t) {
  if (!(t.exposure > 0)) throw ValidationError("tonemap.exposure", "must be > 0");
  if (!(t.gamma > 0)) throw ValidationError("tonemap.gamma", "must be > 0");
}

CameraFrame::CameraFrame(const Camera &c)
    : origin_(c.position), width_(c.width), height_(c.height) {
  forward_ = normalize(c.look_at - c.position);
  right_ = normalize(cross(forward_, c.up));
  up_ = cross(right_, forward_);
  half_h_ = std::tan(0.5 * c.vertical_fov * std::numbers::pi / 180.0);
  half_w_ = half_h_ * static_cast<double>(c.width) / c.height;
}

Ray CameraFrame::ray(double px, double py, double jx, double jy) const {
  // Written so that mirrored pixels produce exactly negated offsets.
  const double sx = (2.0 * (px + jx) - width_) / width_;
  const double sy = (height_ - 2.0 * (py + jy)) / height_;
  const Vec3 d = forward_ + right_ * (sx * half_w_) + up_ * (sy * half_h_);
  return Ray{origin_, normalize(d), 0.0, std::numeric_limits<double>::infinity()};
}

Ray primary_ray(const Camera &camera, int px, int py, double jitter_u, double jitter_v) {
  return CameraFrame(camera).ray(px, py, jitter_u, jitter_v);
}

void shade(const Scene &scene, const Ray &ray, const HitRecord &hit, const Lighting &lighting,
           CounterRng &rng, std::span<double> out, double ray_offset) {
  const Material &m = scene.material_of(hit.primitive_index);
  const std::size_t nb = out.size();
  Vec3 n = hit.geometric_normal;
  if (dot(n, ray.direction) > 0) n = -n;
  const Vec3 &sun = lighting.sun_direction;
  const double cos_sun = dot(n, sun);
  constexpr double kInf = std::numeric_limits<double>::infinity();

  const bool reflective = any_positive(m.reflectance);
  const bool translucent = any_positive(m.transmittance);
  const bool sunlit = any_positive(lighting.sun_irradiance);

  double front = 0.0, back = 0.0;
  if (cos_sun > 0 && reflective && sunlit) {
    if (!scene.intersect_any(Ray{hit.point + n * ray_offset, sun, 0.0, kInf})) front = cos_sun;
  } else if (cos_sun < 0 && translucent && sunlit) {
    if (!scene.intersect_any(Ray{hit.point - n * ray_offset, sun, 0.0, kInf})) back = -cos_sun;
  }

  double sky = 1.0;
  if (lighting.sky_samples > 0 && reflective && any_positive(lighting.sky_irradiance)) {
    const Vec3 t = any_orthonormal(n);
    const Vec3 b = cross(n, t);
    const Vec3 origin = hit.point + n * ray_offset;
    int open = 0;
    for (int k = 0; k < lighting.sky_samples; ++k) {
      const double u1 = rng.uniform(), u2 = rng.uniform();
      const double r = std::sqrt(u1), phi = 2.0 * std::numbers::pi * u2;
      const Vec3 d = normalize(t * (r * std::cos(phi)) + b * (r * std::sin(phi)) + n * std::sqrt(1.0 - u1));
      if (!scene.intersect_any(Ray{origin, d, 0.0, kInf})) ++open;
    }
    sky = static_cast<double>(open) / lighting.sky_samples;
  }

  for (std::size_t k = 0; k < nb; ++k) {
    const double e_sun = lighting.sun_irradiance[k];
    out[k] = m.reflectance[k] * kInvPi * (e_sun * front + lighting.sky_irradiance[k] * sky) +
             m.transmittance[k] * kInvPi * e_sun * back;
  }
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char *env = std::getenv("ORCHARDSYNTH_THREADS")) {
    char *end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(std::min(v, 1024L));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

RenderResult render(const Scene &scene, const Camera &camera, const Lighting &lighting,
                    const BandSet &bands, const RenderOptions &options) {
  validate(camera);
  validate(bands);
  validate(lighting, bands.size());
  for (const Material &m : scene.materials()) validate_material(m, bands.size());

  const int w = camera.width, h = camera.height, nb = static_cast<int>(bands.size());
  RenderResult result{RadianceImage(w, h, nb), LabelImage(w, h), ClassImage(w, h)};
  const CameraFrame frame(camera);
  const int spp = camera.samples_per_pixel;
  const double inv_spp = 1.0 / spp;
  const int tiles_x = (w + kTileSize - 1) / kTileSize;
  const int tiles_y = (h + kTileSize - 1) / kTileSize;
  const int tile_count = tiles_x * tiles_y;

  auto render_pixel = [&](int px, int py, std::vector<double> &acc, std::vector<double> &tmp) {
    std::fill(acc.begin(), acc.end(), 0.0);
    std::optional<HitRecord> center_hit;
    for (int s = 0; s < spp; ++s) {
      CounterRng rng(hash_key({camera.seed, static_cast<std::uint64_t>(px),
                               static_cast<std::uint64_t>(py), static_cast<std::uint64_t>(s)}));
      double jx = 0.5, jy = 0.5;
      if (spp > 1) {
        jx = rng.uniform();
        jy = rng.uniform();
      }
      const Ray ray = frame.ray(px, py, jx, jy);
      const auto hit = scene.intersect_closest(ray);
      if (hit) {
        shade(scene, ray, *hit, lighting, rng, tmp, options.ray_offset);
        for (int b = 0; b < nb; ++b) acc[b] += tmp[b];
      } else {
        for (int b = 0; b < nb; ++b) acc[b] += lighting.sky_irradiance[b] * kInvPi;
      }
      if (spp == 1) center_hit = hit;
    }
    for (int b = 0; b < nb; ++b) result.radiance.at(px, py, b) = acc[b] * inv_spp;
    if (spp > 1) center_hit = scene.intersect_closest(frame.ray(px, py, 0.5, 0.5));
    if (center_hit) {
      const Primitive &p = scene.primitive(center_hit->primitive_index);
      result.labels.at(px, py) = p.instance_id;
      result.classes.at(px, py) = p.class_id;
    }
  };

  std::atomic<int> next_tile{0};
  auto worker = [&] {
    std::vector<double> acc(nb), tmp(nb);
    for (int tile = next_tile++; tile < tile_count; tile = next_tile++) {
      const int x0 = (tile % tiles_x) * kTileSize, y0 = (tile / tiles_x) * kTileSize;
      const int x1 = std::min(x0 + kTileSize, w), y1 = std::min(y0 + kTileSize, h);
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) render_pixel(x, y, acc, tmp);
    }
  };

  const int threads = std::min(resolve_threads(options.threads), tile_count);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  return result;
}

std::uint8_t tonemap_value(double radiance, const ToneMap &tm) {
  double v = tm.exposure * radiance;
  if (!(v > 0)) return 0;
  if (v >= 1) return 255;
  v = std::pow(v, 1.0 / tm.gamma);
  return static_cast<std::uint8_t>(std::min(255.0, std::floor(v * 255.0 + 0.5)));
}

ToneMapped tonemap(const RadianceImage &img, const BandSet &bands, const ToneMap &tm) {
  validate(tm);
  const int r = bands.index_of("R"), g = bands.index_of("G"), b = bands.index_of("B");
  const int nir = bands.index_of("NIR");
  if (r < 0 || g < 0 || b < 0 || nir < 0)
    throw ValidationError("bands", "tonemapping needs bands named R, G, B and NIR");
  ToneMapped out{Image8(img.width, img.height, 3), Image8(img.width, img.height, 1)};
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      out.rgb.at(x, y, 0) = tonemap_value(img.at(x, y, r), tm);
      out.rgb.at(x, y, 1) = tonemap_value(img.at(x, y, g), tm);
      out.rgb.at(x, y, 2) = tonemap_value(img.at(x, y, b), tm);
      out.nir.at(x, y, 0) = tonemap_value(img.at(x, y, nir), tm);
    }
  }
  return out;
}

void write_radiance_raw(const std::filesystem::path &stem, const RadianceImage &img,
                        const BandSet &bands) {
  std::filesystem::path bin = stem, sidecar = stem;
  bin += ".bin";
  sidecar += ".json";
  std::vector<char> bytes;
  bytes.reserve(img.values.size() * 4);
  for (int b = 0; b < img.bands; ++b) {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        const auto u = std::bit_cast<std::uint32_t>(static_cast<float>(img.at(x, y, b)));
        for (int k = 0; k < 4; ++k) bytes.push_back(static_cast<char>((u >> (8 * k)) & 0xFF));
      }
    }
  }
  std::ofstream f(bin, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(bin.string(), "cannot open for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError(bin.string(), "write failed");

  nlohmann::ordered_json meta;
  meta["width"] = img.width;
  meta["height"] = img.height;
  meta["layout"] = "band-major float32 little-endian";
  meta["bands"] = nlohmann::ordered_json::array();
  for (const Band &b : bands.bands) meta["bands"].push_back(b.name);
  std::ofstream j(sidecar, std::ios::trunc);
  if (!j) throw IoError(sidecar.string(), "cannot open for writing");
  j << meta.dump(2) << '\n';
}

}  // namespace orchard
