#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace orchard {

/// Axis-aligned box in corner form (x_min, y_min, x_max, y_max).
struct Box {
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

  static Box from_center(double xc, double yc, double w, double h) {
    return {xc - w / 2, yc - h / 2, xc + w / 2, yc + h / 2};
  }
  double area() const;
};

struct Detection {
  int class_id = 0;
  double confidence = 0;
  Box box;  // normalized
};

struct GroundTruthBox {
  int class_id = 0;
  Box box;  // normalized
};

double iou(const Box &a, const Box &b);

/// Greedy matching in descending confidence (ties keep input order). Each
/// detection takes the unmatched ground truth with the highest IoU (ties to
/// the lowest index) when that IoU >= iou_thresh. Returns one flag per
/// detection in input order; true = true positive.
std::vector<bool> match(const std::vector<Detection> &dets, const std::vector<GroundTruthBox> &gts,
                        double iou_thresh);

struct PRPoint {
  double recall = 0;
  double precision = 0;
  double confidence = 0;
};

struct PRCurve {
  std::vector<PRPoint> points;  // one per detection, descending confidence
  std::size_t total_gt = 0;
};

PRCurve pr_curve(const std::vector<bool> &flags, const std::vector<double> &confidences,
                 std::size_t total_gt);

enum class Interpolation { continuous, eleven_point };

const char *to_string(Interpolation i);
Interpolation parse_interpolation(const std::string &s);

// Area under the precision envelope, in [0, 1].
double average_precision(const PRCurve &curve, Interpolation mode = Interpolation::continuous);

/// Summary in percent. P/R/F1 are taken at the confidence threshold that
/// maximizes F1 (ties go to the higher threshold).
struct MetricsReport {
  double precision = 0;
  double recall = 0;
  double ap = 0;
  double f1 = 0;
  double confidence_threshold = 0;
  double iou_threshold = 0.5;
  Interpolation interpolation = Interpolation::continuous;
  std::size_t detections = 0;
  std::size_t ground_truths = 0;
};

MetricsReport metrics_at_best_f1(const PRCurve &curve, double iou_threshold = 0.5,
                                 Interpolation mode = Interpolation::continuous);

/// Two-row comparison table (original vs enhanced), values in percent
/// with two decimals.
std::string compare_report(const MetricsReport &original, const MetricsReport &enhanced,
                           const std::string &title);

std::string format_report_text(const MetricsReport &r);
std::string report_to_json(const MetricsReport &r);
MetricsReport report_from_json(const std::string &text, const std::string &source = "<json>");

// `class confidence x_center y_center width height` per line.
std::vector<Detection> parse_detections(const std::string &text, const std::string &source = "<text>");

struct EvalOptions {
  double iou_threshold = 0.5;
  Interpolation interpolation = Interpolation::continuous;
};

/// Pools every image under gt_dir (*.txt) with pred_dir/<stem>.txt (missing
/// = no detections) into one PR curve.
MetricsReport evaluate_directories(const std::filesystem::path &gt_dir,
                                   const std::filesystem::path &pred_dir, const EvalOptions &options);

}  // namespace orchard
