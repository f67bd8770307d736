#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "orchardsynth/geometry.hpp"

namespace orchard {

/// 8-bit interleaved image, row-major with row 0 at the top.
struct Image8 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;

  Image8() = default;
  Image8(int w, int h, int c) : width(w), height(h), channels(c), data(std::size_t(w) * h * c, 0) {}

  std::uint8_t &at(int x, int y, int c) { return data[(std::size_t(y) * width + x) * channels + c]; }
  std::uint8_t at(int x, int y, int c) const {
    return data[(std::size_t(y) * width + x) * channels + c];
  }
  bool operator==(const Image8 &) const = default;
};

/// Per-pixel walnut instance ids; 0 is background.
struct LabelImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> ids;

  LabelImage() = default;
  LabelImage(int w, int h) : width(w), height(h), ids(std::size_t(w) * h, 0) {}

  std::uint32_t &at(int x, int y) { return ids[std::size_t(y) * width + x]; }
  std::uint32_t at(int x, int y) const { return ids[std::size_t(y) * width + x]; }
  bool operator==(const LabelImage &) const = default;
};

/// Class of the surface seen through each pixel center.
struct ClassImage {
  int width = 0;
  int height = 0;
  std::vector<ClassId> classes;

  ClassImage() = default;
  ClassImage(int w, int h) : width(w), height(h), classes(std::size_t(w) * h, ClassId::background) {}

  ClassId &at(int x, int y) { return classes[std::size_t(y) * width + x]; }
  ClassId at(int x, int y) const { return classes[std::size_t(y) * width + x]; }
  bool operator==(const ClassImage &) const = default;
};

// PNG codec (1 = gray, 2 = gray+alpha, 3 = RGB, 4 = RGBA). Encoding uses
// fixed settings and writes no timestamps, so equal images give equal bytes.
std::vector<std::uint8_t> encode_png(const Image8 &img);
void write_png(const std::filesystem::path &path, const Image8 &img);
Image8 read_png(const std::filesystem::path &path);

}  // namespace orchard
