#include "orchardsynth/autolabel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "orchardsynth/error.hpp"

namespace orchard {

LabelImage label_pixels(const Scene &scene, const Camera &camera, int threads) {
  validate(camera);
  LabelImage labels(camera.width, camera.height);
  const CameraFrame frame(camera);
  std::atomic<int> next_row{0};
  auto worker = [&] {
    for (int y = next_row++; y < camera.height; y = next_row++) {
      for (int x = 0; x < camera.width; ++x) {
        if (auto hit = scene.intersect_closest(frame.ray(x, y, 0.5, 0.5)))
          labels.at(x, y) = scene.primitive(hit->primitive_index).instance_id;
      }
    }
  };
  const int n = std::min(resolve_threads(threads), camera.height);
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  }
  return labels;
}

std::vector<InstanceBox> extract_boxes(const LabelImage &labels, int min_pixels) {
  if (min_pixels < 1) throw ValidationError("min_pixels", "must be >= 1");
  std::map<std::uint32_t, InstanceBox> boxes;
  for (int y = 0; y < labels.height; ++y) {
    for (int x = 0; x < labels.width; ++x) {
      const std::uint32_t id = labels.at(x, y);
      if (id == 0) continue;
      auto [it, fresh] = boxes.try_emplace(id, InstanceBox{id, kWalnutClass, x, y, x, y, 0});
      InstanceBox &b = it->second;
      b.x_min = std::min(b.x_min, x);
      b.x_max = std::max(b.x_max, x);
      b.y_min = std::min(b.y_min, y);
      b.y_max = std::max(b.y_max, y);
      ++b.visible_pixel_count;
    }
  }
  std::vector<InstanceBox> out;
  for (const auto &[id, b] : boxes)
    if (b.visible_pixel_count >= static_cast<std::size_t>(min_pixels)) out.push_back(b);
  return out;
}

std::vector<Annotation> to_annotations(const std::vector<InstanceBox> &boxes, int width, int height) {
  std::vector<Annotation> out;
  out.reserve(boxes.size());
  for (const InstanceBox &b : boxes) {
    if (b.x_min < 0 || b.y_min < 0 || b.x_max >= width || b.y_max >= height || b.x_min > b.x_max ||
        b.y_min > b.y_max)
      throw ValidationError("boxes", fmt::format("box of instance {} outside {}x{} image",
                                                 b.instance_id, width, height));
    out.push_back({b.class_id, (b.x_min + b.x_max + 1) / 2.0 / width,
                   (b.y_min + b.y_max + 1) / 2.0 / height,
                   static_cast<double>(b.x_max - b.x_min + 1) / width,
                   static_cast<double>(b.y_max - b.y_min + 1) / height});
  }
  return out;
}

InstanceBox annotation_to_pixel_box(const Annotation &a, int width, int height) {
  const auto w = static_cast<int>(std::lround(a.width * width));
  const auto h = static_cast<int>(std::lround(a.height * height));
  const auto x0 = static_cast<int>(std::lround(a.x_center * width - 0.5 * a.width * width));
  const auto y0 = static_cast<int>(std::lround(a.y_center * height - 0.5 * a.height * height));
  return {0, a.class_id, x0, y0, x0 + w - 1, y0 + h - 1, static_cast<std::size_t>(w) * h};
}

std::string format_annotations(const std::vector<Annotation> &annotations) {
  std::string out;
  for (const Annotation &a : annotations)
    out += fmt::format("{} {:.6f} {:.6f} {:.6f} {:.6f}\n", a.class_id, a.x_center, a.y_center,
                       a.width, a.height);
  return out;
}

void write_annotations(const std::filesystem::path &path, const std::vector<Annotation> &annotations) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(path.string(), "cannot open for writing");
  f << format_annotations(annotations);
  if (!f) throw IoError(path.string(), "write failed");
}

std::vector<Annotation> parse_annotations(const std::string &text, const std::string &source) {
  std::vector<Annotation> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream fields(line);
    Annotation a;
    std::string extra;
    if (!(fields >> a.class_id >> a.x_center >> a.y_center >> a.width >> a.height) || (fields >> extra))
      throw ValidationError(fmt::format("{}:{}", source, line_no),
                            "expected 'class x_center y_center width height'");
    constexpr double tol = 1e-6;
    const bool ok = a.class_id >= 0 && a.width > 0 && a.height > 0 && a.width <= 1 + tol &&
                    a.height <= 1 + tol && a.x_center - a.width / 2 >= -tol &&
                    a.x_center + a.width / 2 <= 1 + tol && a.y_center - a.height / 2 >= -tol &&
                    a.y_center + a.height / 2 <= 1 + tol;
    if (!ok)
      throw ValidationError(fmt::format("{}:{}", source, line_no), "box outside the unit square");
    out.push_back(a);
  }
  return out;
}

std::vector<Annotation> read_annotations(const std::filesystem::path &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(path.string(), "cannot open for reading");
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_annotations(buf.str(), path.string());
}

}  // namespace orchard
