#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "orchardsynth/canopy.hpp"
#include "orchardsynth/dataset.hpp"
#include "orchardsynth/eval.hpp"
#include "orchardsynth/spectral.hpp"

namespace orchard {

struct SceneConfig {
  OrchardParams orchard;
  TessellationQuality tessellation;
  BandSet bands = BandSet::defaults();
  std::vector<Material> materials = default_materials();  // bark, leaf, walnut, ground
};

struct RenderConfig {
  int width = 640;
  int height = 640;
  double vertical_fov = 60.0;
  int samples_per_pixel = 4;
  double ray_offset = 1e-4;
  Lighting lighting;
  ToneMap tonemap;
  // Fixed poses; when non-empty, image i uses cameras[i % size] instead of
  // a sampled pose.
  std::vector<Camera> cameras;
  bool write_raw = false;
};

struct LabelConfig {
  int min_pixels = 4;
};

/// Synthetic image batch: camera positions on a spherical shell around a
/// canopy region of interest, look-at jittered inside it.
struct GenerationJob {
  int count = 500;
  std::uint64_t seed = 2021;
  Vec3 roi_center{0.0, -0.9, 3.4};
  double roi_radius = 0.5;
  double distance_min = 0.5;  // m
  double distance_max = 2.0;  // m
  double azimuth_min = -120.0, azimuth_max = -60.0;   // deg, around +z from +x
  double elevation_min = -15.0, elevation_max = 25.0;  // deg above the horizontal
  bool vary_scene = true;  // new tree seed per image
  std::string out_dir = "synthetic";
};

struct DatasetConfig {
  // Expected manifest sizes; 0 disables the check.
  int real_count = 0;
  int synthetic_count = 0;
  SplitRatio ratio;
  std::uint64_t seed = 42;
  std::string out_dir = "dataset";
  bool synthetic_train_only = false;
};

struct EvalConfig {
  double iou_threshold = 0.5;
  Interpolation interpolation = Interpolation::continuous;
};

struct RunConfig {
  SceneConfig scene;
  RenderConfig render;
  LabelConfig label;
  GenerationJob generate;
  DatasetConfig dataset;
  EvalConfig eval;
};

// Checks every section; throws ValidationError with a dotted key path.
void validate(const RunConfig &c);

/// Strict JSON reader: every key is optional (defaults above) but unknown
/// keys and wrongly typed values are errors.
RunConfig parse_config(const std::string &json_text);
RunConfig load_config(const std::filesystem::path &path);
std::string config_to_json(const RunConfig &c);

}  // namespace orchard
