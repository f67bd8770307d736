#include "orchardsynth/eval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "orchardsynth/autolabel.hpp"
#include "orchardsynth/error.hpp"

namespace fs = std::filesystem;

namespace orchard {

namespace {

// Indices ordered by descending confidence, ties in input order.
std::vector<std::size_t> confidence_order(const std::vector<double> &conf) {
  std::vector<std::size_t> order(conf.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return conf[a] > conf[b]; });
  return order;
}

std::string slurp(const fs::path &p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw IoError(p.string(), "cannot open for reading");
  std::stringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

}  // namespace

double Box::area() const {
  return std::max(0.0, x_max - x_min) * std::max(0.0, y_max - y_min);
}

double iou(const Box &a, const Box &b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  const double inter = (iw > 0 && ih > 0) ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

std::vector<bool> match(const std::vector<Detection> &dets, const std::vector<GroundTruthBox> &gts,
                        double iou_thresh) {
  if (!(iou_thresh > 0 && iou_thresh < 1))
    throw ValidationError("iou_threshold", fmt::format("must be in (0, 1), got {}", iou_thresh));
  std::vector<double> conf(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) conf[i] = dets[i].confidence;
  std::vector<bool> flags(dets.size(), false);
  std::vector<bool> used(gts.size(), false);
  for (std::size_t d : confidence_order(conf)) {
    std::ptrdiff_t best = -1;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g]) continue;
      const double v = iou(dets[d].box, gts[g].box);
      if (v > best_iou) {
        best_iou = v;
        best = static_cast<std::ptrdiff_t>(g);
      }
    }
    if (best >= 0 && best_iou >= iou_thresh) {
      used[best] = true;
      flags[d] = true;
    }
  }
  return flags;
}

PRCurve pr_curve(const std::vector<bool> &flags, const std::vector<double> &confidences,
                 std::size_t total_gt) {
  if (flags.size() != confidences.size())
    throw ValidationError("pr_curve", "flags and confidences differ in length");
  PRCurve curve;
  curve.total_gt = total_gt;
  curve.points.reserve(flags.size());
  std::size_t tp = 0, fp = 0;
  for (std::size_t i : confidence_order(confidences)) {
    (flags[i] ? tp : fp) += 1;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = total_gt == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(total_gt);
    curve.points.push_back({recall, precision, confidences[i]});
  }
  return curve;
}

const char *to_string(Interpolation i) {
  return i == Interpolation::continuous ? "continuous" : "11point";
}

Interpolation parse_interpolation(const std::string &s) {
  if (s == "continuous" || s == "all-point") return Interpolation::continuous;
  if (s == "11point" || s == "11-point") return Interpolation::eleven_point;
  throw ValidationError("interpolation", fmt::format("expected continuous|11point, got '{}'", s));
}

double average_precision(const PRCurve &curve, Interpolation mode) {
  const auto &pts = curve.points;
  if (pts.empty() || curve.total_gt == 0) return 0.0;
  if (mode == Interpolation::eleven_point) {
    double sum = 0.0;
    for (int t = 0; t <= 10; ++t) {
      const double r = t / 10.0;
      double best = 0.0;
      for (const PRPoint &p : pts)
        if (p.recall >= r - 1e-12) best = std::max(best, p.precision);
      sum += best;
    }
    return sum / 11.0;
  }
  // Precision envelope from the right, then sum over recall increments.
  std::vector<double> env(pts.size());
  double running = 0.0;
  for (std::size_t k = pts.size(); k-- > 0;) {
    running = std::max(running, pts[k].precision);
    env[k] = running;
  }
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    ap += (pts[k].recall - prev_recall) * env[k];
    prev_recall = pts[k].recall;
  }
  return ap;
}

MetricsReport metrics_at_best_f1(const PRCurve &curve, double iou_threshold, Interpolation mode) {
  MetricsReport r;
  r.iou_threshold = iou_threshold;
  r.interpolation = mode;
  r.detections = curve.points.size();
  r.ground_truths = curve.total_gt;
  if (curve.points.empty()) return r;

  const auto &pts = curve.points;
  double best_f1 = -1.0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    // A threshold at this confidence admits every tied detection too.
    if (k + 1 < pts.size() && pts[k + 1].confidence == pts[k].confidence) continue;
    const double p = pts[k].precision, rec = pts[k].recall;
    const double f1 = (p + rec) > 0 ? 2 * p * rec / (p + rec) : 0.0;
    if (f1 > best_f1) {
      best_f1 = f1;
      r.precision = 100.0 * p;
      r.recall = 100.0 * rec;
      r.f1 = 100.0 * f1;
      r.confidence_threshold = pts[k].confidence;
    }
  }
  r.ap = 100.0 * average_precision(curve, mode);
  return r;
}

std::string compare_report(const MetricsReport &original, const MetricsReport &enhanced,
                           const std::string &title) {
  auto row = [](const char *name, const MetricsReport &m) {
    return fmt::format("{:<20}{:>15.2f}{:>12.2f}{:>8.2f}{:>8.2f}\n", name, m.precision, m.recall, m.ap, m.f1);
  };
  std::string out;
  if (!title.empty()) out += title + "\n";
  out += fmt::format("{:<20}{:>15}{:>12}{:>8}{:>8}\n", "Test Set", "Precision (%)", "Recall (%)",
                     "AP (%)", "F1 (%)");
  out += row("Original Image Set", original);
  out += row("Enhanced Image Set", enhanced);
  return out;
}

std::string format_report_text(const MetricsReport &r) {
  return fmt::format(
      "Precision (%)  {:>8.2f}\n"
      "Recall (%)     {:>8.2f}\n"
      "AP (%)         {:>8.2f}\n"
      "F1 (%)         {:>8.2f}\n"
      "confidence threshold {:.6f}\n"
      "IoU threshold        {:.2f}\n"
      "interpolation        {}\n"
      "detections           {}\n"
      "ground truths        {}\n",
      r.precision, r.recall, r.ap, r.f1, r.confidence_threshold, r.iou_threshold,
      to_string(r.interpolation), r.detections, r.ground_truths);
}

std::string report_to_json(const MetricsReport &r) {
  nlohmann::ordered_json j;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["ap"] = r.ap;
  j["f1"] = r.f1;
  j["confidence_threshold"] = r.confidence_threshold;
  j["iou_threshold"] = r.iou_threshold;
  j["interpolation"] = to_string(r.interpolation);
  j["detections"] = r.detections;
  j["ground_truths"] = r.ground_truths;
  return j.dump(2) + "\n";
}

MetricsReport report_from_json(const std::string &text, const std::string &source) {
  MetricsReport r;
  try {
    const auto j = nlohmann::json::parse(text);
    r.precision = j.at("precision").get<double>();
    r.recall = j.at("recall").get<double>();
    r.ap = j.at("ap").get<double>();
    r.f1 = j.at("f1").get<double>();
    r.confidence_threshold = j.value("confidence_threshold", 0.0);
    r.iou_threshold = j.value("iou_threshold", 0.5);
    r.interpolation = parse_interpolation(j.value("interpolation", std::string("continuous")));
    r.detections = j.value("detections", std::size_t{0});
    r.ground_truths = j.value("ground_truths", std::size_t{0});
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(source, fmt::format("bad report: {}", e.what()));
  }
  for (double v : {r.precision, r.recall, r.ap, r.f1})
    if (!(v >= 0 && v <= 100)) throw ValidationError(source, "metrics must lie in [0, 100]");
  return r;
}

std::vector<Detection> parse_detections(const std::string &text, const std::string &source) {
  std::vector<Detection> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream fields(line);
    Detection d;
    double xc, yc, w, h;
    std::string extra;
    const std::string where = fmt::format("{}:{}", source, line_no);
    if (!(fields >> d.class_id >> d.confidence >> xc >> yc >> w >> h) || (fields >> extra))
      throw ValidationError(where, "expected 'class confidence x_center y_center width height'");
    if (!(d.confidence >= 0 && d.confidence <= 1))
      throw ValidationError(where, fmt::format("confidence {} outside [0, 1]", d.confidence));
    d.box = Box::from_center(xc, yc, w, h);
    constexpr double tol = 1e-6;
    if (!(w >= 0 && h >= 0 && d.box.x_min >= -tol && d.box.y_min >= -tol && d.box.x_max <= 1 + tol &&
          d.box.y_max <= 1 + tol))
      throw ValidationError(where, "box outside the unit square");
    out.push_back(d);
  }
  return out;
}

MetricsReport evaluate_directories(const fs::path &gt_dir, const fs::path &pred_dir,
                                   const EvalOptions &options) {
  if (!fs::is_directory(gt_dir)) throw IoError(gt_dir.string(), "not a directory");
  std::map<std::string, fs::path> gt_files, pred_files;
  for (const auto &f : fs::directory_iterator(gt_dir))
    if (f.is_regular_file() && f.path().extension() == ".txt") gt_files[f.path().stem().string()] = f.path();
  if (fs::is_directory(pred_dir))
    for (const auto &f : fs::directory_iterator(pred_dir))
      if (f.is_regular_file() && f.path().extension() == ".txt") pred_files[f.path().stem().string()] = f.path();

  // Every stem seen in either directory is one image; predictions without
  // a ground-truth file are scored against zero objects.
  std::map<std::string, std::pair<fs::path, fs::path>> images;
  for (const auto &[stem, p] : gt_files) images[stem].first = p;
  for (const auto &[stem, p] : pred_files) images[stem].second = p;

  std::vector<bool> flags;
  std::vector<double> conf;
  std::size_t total_gt = 0;
  for (const auto &[stem, files] : images) {
    std::vector<GroundTruthBox> gts;
    if (!files.first.empty())
      for (const Annotation &a : read_annotations(files.first))
        gts.push_back({a.class_id, Box::from_center(a.x_center, a.y_center, a.width, a.height)});
    std::vector<Detection> dets;
    if (!files.second.empty()) dets = parse_detections(slurp(files.second), files.second.string());
    const auto f = match(dets, gts, options.iou_threshold);
    for (std::size_t i = 0; i < dets.size(); ++i) {
      flags.push_back(f[i]);
      conf.push_back(dets[i].confidence);
    }
    total_gt += gts.size();
  }
  return metrics_at_best_f1(pr_curve(flags, conf, total_gt), options.iou_threshold,
                            options.interpolation);
}

}  // namespace orchard
