#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "orchardsynth/autolabel.hpp"
#include "orchardsynth/config.hpp"
#include "orchardsynth/dataset.hpp"
#include "orchardsynth/spectral.hpp"

namespace orchard {

// Seed for image `index` (1-based) of a batch.
std::uint64_t image_seed(std::uint64_t master_seed, int index);

// Orchard scene for one image; `tree_seed` replaces the configured tree seed.
Scene build_scene(const RunConfig &config, std::uint64_t tree_seed);

// Camera for image `index`: a fixed pose from render.cameras when given,
// otherwise a pose sampled from the generate section.
Camera camera_for_image(const RunConfig &config, int index);

struct SyntheticImage {
  RenderResult render;
  ToneMapped images;
  std::vector<InstanceBox> boxes;
  std::vector<Annotation> annotations;
};

SyntheticImage make_synthetic_image(const RunConfig &config, int index, int threads = 0);

struct GenerateSummary {
  DatasetManifest rgb;
  DatasetManifest nir;
  std::size_t boxes = 0;
};

/// Renders generate.count images into out_dir as img_NNNNN.png (RGB),
/// img_NNNNN_nir.png, img_NNNNN.txt and the two manifests
/// synthetic_rgb.tsv / synthetic_nir.tsv.
GenerateSummary run_generate(const RunConfig &config, const std::filesystem::path &out_dir,
                             int threads = 0, std::ostream *log = nullptr);

/// Command-line entry point. Exit codes: 0 success, 1 validation error,
/// 2 I/O error.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace orchard
