#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "orchardsynth/image.hpp"
#include "orchardsynth/scene.hpp"
#include "orchardsynth/spectral.hpp"

namespace orchard {

inline constexpr int kWalnutClass = 0;  // class index in exported label files
inline constexpr int kDefaultMinPixels = 4;

struct InstanceBox {
  std::uint32_t instance_id = 0;
  int class_id = kWalnutClass;
  int x_min = 0, y_min = 0, x_max = 0, y_max = 0;  // inclusive
  std::size_t visible_pixel_count = 0;
  bool operator==(const InstanceBox &) const = default;
};

/// Normalized center/size box, the usual single-class detection label.
struct Annotation {
  int class_id = kWalnutClass;
  double x_center = 0, y_center = 0, width = 0, height = 0;
};

// Instance id of the closest surface through each pixel center.
LabelImage label_pixels(const Scene &scene, const Camera &camera, int threads = 0);

// One tight box per id with at least min_pixels pixels, sorted by id.
std::vector<InstanceBox> extract_boxes(const LabelImage &labels, int min_pixels = kDefaultMinPixels);

std::vector<Annotation> to_annotations(const std::vector<InstanceBox> &boxes, int width, int height);

// Inverse of to_annotations for boxes on the pixel grid.
InstanceBox annotation_to_pixel_box(const Annotation &a, int width, int height);

// `class x_center y_center width height` with six fractional digits, one
// line per annotation; the empty string for no annotations.
std::string format_annotations(const std::vector<Annotation> &annotations);
void write_annotations(const std::filesystem::path &path, const std::vector<Annotation> &annotations);

// Strict reader for the same format; throws ValidationError naming the
// line on malformed input.
std::vector<Annotation> parse_annotations(const std::string &text, const std::string &source = "<text>");
std::vector<Annotation> read_annotations(const std::filesystem::path &path);

}  // namespace orchard
