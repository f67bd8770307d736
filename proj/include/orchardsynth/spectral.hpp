#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "orchardsynth/geometry.hpp"
#include "orchardsynth/image.hpp"
#include "orchardsynth/random.hpp"
#include "orchardsynth/scene.hpp"

namespace orchard {

struct Band {
  std::string name;
  double wavelength_nm = 0;
  bool operator==(const Band &) const = default;
};

/// Ordered delta bands; the default is B 450, G 550, R 650, NIR 850 nm.
struct BandSet {
  std::vector<Band> bands;

  static BandSet defaults();
  std::size_t size() const { return bands.size(); }
  // Index of the band called `name`, or -1.
  int index_of(const std::string &name) const;
};

void validate(const BandSet &b);

/// Default optics in MaterialSlot order: bark, leaf, walnut, ground.
/// Values are for the default BandSet.
std::vector<Material> default_materials();

struct Lighting {
  Vec3 sun_direction = normalize(Vec3{0.35, -0.45, 0.82});  // toward the sun
  std::vector<double> sun_irradiance{160, 170, 160, 110};
  std::vector<double> sky_irradiance{60, 45, 30, 15};
  int sky_samples = 4;
};

void validate(const Lighting &l, std::size_t bands);

struct Camera {
  Vec3 position{0, -3, 1.6};
  Vec3 look_at{0, 0, 1.6};
  Vec3 up{0, 0, 1};
  double vertical_fov = 60.0;  // degrees
  int width = 640;
  int height = 640;
  int samples_per_pixel = 4;
  std::uint64_t seed = 0;
};

void validate(const Camera &c);

/// Orthonormal pinhole frame derived from a Camera.
class CameraFrame {
 public:
  explicit CameraFrame(const Camera &c);
  Ray ray(double px, double py, double jx, double jy) const;

 private:
  Vec3 origin_, forward_, right_, up_;
  double half_w_, half_h_;
  int width_, height_;
};

// Pinhole ray through (px + jitter.u, py + jitter.v) in raster space;
// py = 0 is the top row. Jitter (0.5, 0.5) is the pixel center.
Ray primary_ray(const Camera &camera, int px, int py, double jitter_u, double jitter_v);

/// Per-pixel, per-band radiance (W m^-2 sr^-1 per band), pixel-interleaved.
struct RadianceImage {
  int width = 0;
  int height = 0;
  int bands = 0;
  std::vector<double> values;

  RadianceImage() = default;
  RadianceImage(int w, int h, int b) : width(w), height(h), bands(b), values(std::size_t(w) * h * b, 0) {}

  double &at(int x, int y, int b) { return values[(std::size_t(y) * width + x) * bands + b]; }
  double at(int x, int y, int b) const { return values[(std::size_t(y) * width + x) * bands + b]; }
  bool operator==(const RadianceImage &) const = default;
};

struct RenderOptions {
  double ray_offset = 1e-4;  // secondary-ray origin offset along the normal (m)
  int threads = 0;           // 0: ORCHARDSYNTH_THREADS, else hardware concurrency
};

/// Radiance leaving the hit point toward the ray origin after one
/// scattering event: sun-lit reflection, sky-lit reflection weighted by
/// the unoccluded fraction of cosine-weighted hemisphere samples, and
/// sunlight transmitted through from the far side. Writes one value per
/// band into `out`.
void shade(const Scene &scene, const Ray &ray, const HitRecord &hit, const Lighting &lighting,
           CounterRng &rng, std::span<double> out, double ray_offset = 1e-4);

struct RenderResult {
  RadianceImage radiance;
  LabelImage labels;    // center ray per pixel
  ClassImage classes;   // center ray per pixel
};

/// Average of samples_per_pixel shaded rays per pixel. With one sample
/// the pixel center is used; otherwise sample positions are jittered from
/// a stream keyed on (camera.seed, px, py, sample). Rays that miss
/// everything see the sky background E_sky / pi.
RenderResult render(const Scene &scene, const Camera &camera, const Lighting &lighting,
                    const BandSet &bands, const RenderOptions &options = {});

struct ToneMap {
  double exposure = 0.04;
  double gamma = 2.2;
};

void validate(const ToneMap &t);

// clamp(exposure * L, 0, 1)^(1/gamma), rounded half up to 0..255.
std::uint8_t tonemap_value(double radiance, const ToneMap &tm);

struct ToneMapped {
  Image8 rgb;  // 3 channels from bands R, G, B
  Image8 nir;  // 1 channel from band NIR
};

ToneMapped tonemap(const RadianceImage &img, const BandSet &bands, const ToneMap &tm);

/// Little-endian float32, band-major, plus `<stem>.json` with width,
/// height and band names.
void write_radiance_raw(const std::filesystem::path &stem, const RadianceImage &img,
                        const BandSet &bands);

// Worker count for a requested value (0 = auto).
int resolve_threads(int requested);

}  // namespace orchard
