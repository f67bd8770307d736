#include <fstream>

#include "doctest.h"
#include "orchardsynth/error.hpp"
#include "orchardsynth/eval.hpp"
#include "support.hpp"

using namespace orchard;
namespace fs = std::filesystem;

namespace {

struct Instance {
  std::vector<Detection> dets;
  std::vector<GroundTruthBox> gts;
};

Box random_box(std::mt19937_64 &g, double min_size, double max_size) {
  std::uniform_real_distribution<double> size(min_size, max_size), u(0.0, 1.0);
  const double w = size(g), h = size(g);
  const double x = u(g) * (1 - w), y = u(g) * (1 - h);
  return {x, y, x + w, y + h};
}

// Detections jittered around ground truths plus some strays; confidences on
// a coarse grid so ties occur.
Instance random_instance(std::mt19937_64 &g, int max_dets = 8, int max_gts = 6) {
  Instance in;
  const int ng = static_cast<int>(g() % (max_gts + 1));
  const int nd = static_cast<int>(g() % (max_dets + 1));
  for (int i = 0; i < ng; ++i) in.gts.push_back({0, random_box(g, 0.05, 0.4)});
  std::normal_distribution<double> jit(0.0, 0.03);
  for (int i = 0; i < nd; ++i) {
    Detection d;
    d.confidence = static_cast<double>(1 + g() % 20) / 20.0;
    if (!in.gts.empty() && g() % 3 != 0) {
      const Box &b = in.gts[g() % in.gts.size()].box;
      d.box = {b.x_min + jit(g), b.y_min + jit(g), b.x_max + jit(g), b.y_max + jit(g)};
      if (d.box.x_max <= d.box.x_min) std::swap(d.box.x_max, d.box.x_min);
      if (d.box.y_max <= d.box.y_min) std::swap(d.box.y_max, d.box.y_min);
    } else {
      d.box = random_box(g, 0.05, 0.4);
    }
    in.dets.push_back(d);
  }
  return in;
}

std::vector<double> confidences(const std::vector<Detection> &dets) {
  std::vector<double> c;
  for (const auto &d : dets) c.push_back(d.confidence);
  return c;
}

// Greedy matching written from the rule, not from the library.
std::vector<bool> greedy_oracle(const Instance &in, double thresh) {
  std::vector<std::size_t> order(in.dets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  // Insertion sort: descending confidence, earlier index first on ties.
  for (std::size_t i = 1; i < order.size(); ++i)
    for (std::size_t j = i; j > 0 && in.dets[order[j]].confidence > in.dets[order[j - 1]].confidence; --j)
      std::swap(order[j], order[j - 1]);
  std::vector<bool> taken(in.gts.size(), false), out(in.dets.size(), false);
  for (std::size_t d : order) {
    int pick = -1;
    for (std::size_t k = 0; k < in.gts.size(); ++k) {
      if (taken[k]) continue;
      if (pick < 0 || iou(in.dets[d].box, in.gts[k].box) > iou(in.dets[d].box, in.gts[pick].box))
        pick = static_cast<int>(k);
    }
    if (pick >= 0 && iou(in.dets[d].box, in.gts[pick].box) >= thresh) {
      taken[pick] = true;
      out[d] = true;
    }
  }
  return out;
}

struct OraclePoint {
  double recall, precision;
};

// Cumulative precision/recall in descending-confidence order (stable).
std::vector<OraclePoint> oracle_points(const std::vector<bool> &flags, const std::vector<double> &conf,
                                       std::size_t total_gt) {
  std::vector<std::pair<double, std::size_t>> keyed;
  for (std::size_t i = 0; i < conf.size(); ++i) keyed.push_back({-conf[i], i});
  std::sort(keyed.begin(), keyed.end());
  std::vector<OraclePoint> pts;
  double tp = 0;
  for (std::size_t k = 0; k < keyed.size(); ++k) {
    tp += flags[keyed[k].second] ? 1 : 0;
    pts.push_back({total_gt ? tp / total_gt : 0.0, tp / static_cast<double>(k + 1)});
  }
  return pts;
}

// Brute-force envelope integration over every distinct recall value.
double brute_force_ap(const std::vector<OraclePoint> &pts, std::size_t total_gt) {
  if (pts.empty() || total_gt == 0) return 0.0;
  std::vector<double> recalls;
  for (const auto &p : pts) recalls.push_back(p.recall);
  std::sort(recalls.begin(), recalls.end());
  recalls.erase(std::unique(recalls.begin(), recalls.end()), recalls.end());
  double ap = 0, prev = 0;
  for (double r : recalls) {
    double env = 0;
    for (const auto &p : pts)
      if (p.recall >= r) env = std::max(env, p.precision);
    ap += (r - prev) * env;
    prev = r;
  }
  return ap;
}

double brute_force_ap11(const std::vector<OraclePoint> &pts, std::size_t total_gt) {
  if (pts.empty() || total_gt == 0) return 0.0;
  double sum = 0;
  for (int t = 0; t <= 10; ++t) {
    double env = 0;
    for (const auto &p : pts)
      if (p.recall >= t / 10.0 - 1e-12) env = std::max(env, p.precision);
    sum += env;
  }
  return sum / 11;
}

void write(const fs::path &p, const std::string &text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("iou: identical, disjoint, and the 1/7 corner case") {
  const Box a{0.1, 0.2, 0.5, 0.6};
  CHECK(iou(a, a) == doctest::Approx(1.0));
  CHECK(iou(a, {0.6, 0.6, 0.9, 0.9}) == 0.0);
  CHECK(iou({0, 0, 2, 2}, {1, 1, 3, 3}) == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
  // Touching edges share no area.
  CHECK(iou({0, 0, 1, 1}, {1, 0, 2, 1}) == 0.0);
  CHECK(iou({0, 0, 0, 0}, {0, 0, 0, 0}) == 0.0);
}

TEST_CASE("iou agrees with a rasterized area count") {
  std::mt19937_64 g(21);
  constexpr int kGrid = 1000;
  for (int trial = 0; trial < 40; ++trial) {
    const Box a = random_box(g, 0.2, 0.8), b = random_box(g, 0.2, 0.8);
    const double x0 = std::min(a.x_min, b.x_min), x1 = std::max(a.x_max, b.x_max);
    const double y0 = std::min(a.y_min, b.y_min), y1 = std::max(a.y_max, b.y_max);
    long inter = 0, uni = 0;
    for (int j = 0; j < kGrid; ++j) {
      const double y = y0 + (j + 0.5) * (y1 - y0) / kGrid;
      for (int i = 0; i < kGrid; ++i) {
        const double x = x0 + (i + 0.5) * (x1 - x0) / kGrid;
        const bool ia = x >= a.x_min && x < a.x_max && y >= a.y_min && y < a.y_max;
        const bool ib = x >= b.x_min && x < b.x_max && y >= b.y_min && y < b.y_max;
        inter += ia && ib;
        uni += ia || ib;
      }
    }
    CHECK(std::abs(iou(a, b) - static_cast<double>(inter) / uni) <= 2e-3);
    CHECK(iou(a, b) == iou(b, a));
  }
}

TEST_CASE("match: one perfect detection; a duplicate is a false positive") {
  const std::vector<GroundTruthBox> gt{{0, {0.1, 0.1, 0.3, 0.3}}};
  CHECK(match({{0, 0.9, {0.1, 0.1, 0.3, 0.3}}}, gt, 0.5) == std::vector<bool>{true});
  // Input order is not confidence order: the 0.9 detection claims the box.
  CHECK(match({{0, 0.8, {0.1, 0.1, 0.3, 0.3}}, {0, 0.9, {0.1, 0.1, 0.3, 0.3}}}, gt, 0.5) ==
        std::vector<bool>{false, true});
  CHECK(match({}, gt, 0.5).empty());
  CHECK(match({{0, 0.9, {0.1, 0.1, 0.3, 0.3}}}, {}, 0.5) == std::vector<bool>{false});
  CHECK_THROWS_AS(match({}, gt, 0.0), ValidationError);
  CHECK_THROWS_AS(match({}, gt, 1.0), ValidationError);
}

TEST_CASE("match equals an independent greedy reimplementation on random instances") {
  std::mt19937_64 g(31);
  for (int trial = 0; trial < 2000; ++trial) {
    const Instance in = random_instance(g);
    for (double t : {0.3, 0.5, 0.75}) CHECK(match(in.dets, in.gts, t) == greedy_oracle(in, t));
  }
}

TEST_CASE("pr_curve: cumulative arithmetic and the empty case") {
  const auto one = pr_curve({true}, {0.9}, 1);
  REQUIRE(one.points.size() == 1);
  CHECK(one.points[0].recall == 1.0);
  CHECK(one.points[0].precision == 1.0);

  const auto two = pr_curve({true, false}, {0.9, 0.8}, 1);
  REQUIRE(two.points.size() == 2);
  CHECK(two.points[1].recall == 1.0);
  CHECK(two.points[1].precision == 0.5);
  CHECK(average_precision(two) == 1.0);

  const auto none = pr_curve({}, {}, 3);
  CHECK(none.points.empty());
  CHECK(average_precision(none) == 0.0);
  CHECK_THROWS_AS(pr_curve({true}, {}, 1), ValidationError);
}

TEST_CASE("average_precision: hand-computed envelope") {
  // TP FP TP FP TP over 4 gts: recall .25 .25 .5 .5 .75, precision 1 .5 .667 .5 .6
  const auto c = pr_curve({true, false, true, false, true}, {0.9, 0.8, 0.7, 0.6, 0.5}, 4);
  CHECK(average_precision(c) == doctest::Approx(0.25 * 1.0 + 0.25 * (2.0 / 3.0) + 0.25 * 0.6).epsilon(1e-14));
  // 11-point: r=0..0.2 -> 1, 0.3..0.5 -> 2/3, 0.6..0.7 -> 0.6, 0.8..1 -> 0
  CHECK(average_precision(c, Interpolation::eleven_point) ==
        doctest::Approx((3 * 1.0 + 3 * (2.0 / 3.0) + 2 * 0.6) / 11.0).epsilon(1e-14));
}

TEST_CASE("average_precision equals brute-force envelope integration on random instances") {
  std::mt19937_64 g(41);
  for (int trial = 0; trial < 500; ++trial) {
    const Instance in = random_instance(g);
    const auto flags = match(in.dets, in.gts, 0.5);
    const auto conf = confidences(in.dets);
    const auto curve = pr_curve(flags, conf, in.gts.size());
    const auto pts = oracle_points(flags, conf, in.gts.size());
    CHECK(std::abs(average_precision(curve) - brute_force_ap(pts, in.gts.size())) <= 1e-9);
    CHECK(std::abs(average_precision(curve, Interpolation::eleven_point) -
                   brute_force_ap11(pts, in.gts.size())) <= 1e-9);
    const double ap = average_precision(curve);
    CHECK(ap >= 0.0);
    CHECK(ap <= 1.0);
  }
}

TEST_CASE("metrics_at_best_f1: perfect, all-false, and exhaustive threshold scan") {
  const auto perfect = metrics_at_best_f1(pr_curve({true}, {0.9}, 1));
  CHECK(perfect.precision == 100.0);
  CHECK(perfect.recall == 100.0);
  CHECK(perfect.f1 == 100.0);
  CHECK(perfect.ap == 100.0);
  CHECK(perfect.confidence_threshold == 0.9);

  const auto bad = metrics_at_best_f1(pr_curve({false, false}, {0.9, 0.4}, 2));
  CHECK(bad.precision == 0.0);
  CHECK(bad.recall == 0.0);
  CHECK(bad.f1 == 0.0);
  CHECK(bad.ap == 0.0);

  std::mt19937_64 g(51);
  for (int trial = 0; trial < 500; ++trial) {
    const Instance in = random_instance(g);
    const auto flags = match(in.dets, in.gts, 0.5);
    const auto conf = confidences(in.dets);
    const auto report = metrics_at_best_f1(pr_curve(flags, conf, in.gts.size()));
    if (in.dets.empty()) {
      CHECK(report.f1 == 0.0);
      continue;
    }
    // Every distinct confidence as a threshold, highest first.
    std::vector<double> thresholds = conf;
    std::sort(thresholds.rbegin(), thresholds.rend());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    double best = -1, best_t = 0, best_p = 0, best_r = 0;
    for (double t : thresholds) {
      double tp = 0, fp = 0;
      for (std::size_t i = 0; i < conf.size(); ++i)
        if (conf[i] >= t) (flags[i] ? tp : fp) += 1;
      const double fn = static_cast<double>(in.gts.size()) - tp;
      const double f1 = tp > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
      if (f1 > best + 1e-12) {
        best = f1;
        best_t = t;
        best_p = tp / (tp + fp);
        best_r = in.gts.empty() ? 0.0 : tp / in.gts.size();
      }
    }
    CHECK(report.f1 == doctest::Approx(100 * best).epsilon(1e-12));
    CHECK(report.confidence_threshold == best_t);
    CHECK(report.precision == doctest::Approx(100 * best_p).epsilon(1e-12));
    CHECK(report.recall == doctest::Approx(100 * best_r).epsilon(1e-12));
  }
}

TEST_CASE("compare_report renders the two-row table with two decimals") {
  MetricsReport a, b;
  a.precision = 80.91;
  a.recall = 64.89;
  a.ap = 73.89;
  a.f1 = 72.31;
  b.precision = 86.73;
  b.recall = 74.94;
  b.ap = 82.68;
  b.f1 = 80.56;
  const std::string table = compare_report(a, b, "RGB");
  CHECK(table ==
        "RGB\n"
        "Test Set              Precision (%)  Recall (%)  AP (%)  F1 (%)\n"
        "Original Image Set            80.91       64.89   73.89   72.31\n"
        "Enhanced Image Set            86.73       74.94   82.68   80.56\n");
  const std::string same = compare_report(a, a, "");
  const auto nl1 = same.find('\n');
  const auto nl2 = same.find('\n', nl1 + 1);
  const auto nl3 = same.find('\n', nl2 + 1);
  CHECK(same.substr(nl1 + 1 + 20, nl2 - nl1 - 21) == same.substr(nl2 + 1 + 20, nl3 - nl2 - 21));
}

TEST_CASE("report JSON round trip and validation") {
  MetricsReport r;
  r.precision = 12.5;
  r.recall = 50;
  r.ap = 33.25;
  r.f1 = 20;
  r.confidence_threshold = 0.35;
  r.detections = 8;
  r.ground_truths = 2;
  r.interpolation = Interpolation::eleven_point;
  const auto back = report_from_json(report_to_json(r));
  CHECK(back.precision == r.precision);
  CHECK(back.ap == r.ap);
  CHECK(back.f1 == r.f1);
  CHECK(back.confidence_threshold == r.confidence_threshold);
  CHECK(back.interpolation == Interpolation::eleven_point);
  CHECK(back.detections == 8);
  CHECK_THROWS_AS(report_from_json("{\"precision\": 1}"), ValidationError);
  CHECK_THROWS_AS(report_from_json("{\"precision\": 101, \"recall\": 0, \"ap\": 0, \"f1\": 0}"),
                  ValidationError);
  CHECK_THROWS_AS(report_from_json("nope"), ValidationError);
}

TEST_CASE("parse_detections is strict") {
  const auto d = parse_detections("0 0.9 0.5 0.5 0.2 0.2\n0 0.1 0.25 0.25 0.1 0.1\n");
  REQUIRE(d.size() == 2);
  CHECK(d[0].confidence == 0.9);
  CHECK(d[1].box.x_min == doctest::Approx(0.2));
  CHECK_THROWS_AS(parse_detections("0 0.9 0.5 0.5 0.2\n"), ValidationError);
  CHECK_THROWS_AS(parse_detections("0 1.5 0.5 0.5 0.2 0.2\n"), ValidationError);
  CHECK_THROWS_AS(parse_detections("0 0.5 0.5 0.5 0.2 0.2 7\n"), ValidationError);
}

TEST_CASE("evaluate_directories: perfect detection, empty predictions, pooling") {
  testing::TempDir dir("evaldirs");
  write(dir / "gt/a.txt", "0 0.500000 0.500000 0.200000 0.200000\n");
  write(dir / "pred/a.txt", "0 0.9 0.5 0.5 0.2 0.2\n");
  const auto perfect = evaluate_directories(dir / "gt", dir / "pred", {});
  CHECK(perfect.precision == 100.0);
  CHECK(perfect.recall == 100.0);
  CHECK(perfect.ap == 100.0);
  CHECK(perfect.f1 == 100.0);

  fs::create_directories(dir / "empty");
  const auto none = evaluate_directories(dir / "gt", dir / "empty", {});
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.ap == 0.0);
  CHECK(none.f1 == 0.0);

  // Second image: one missed object and one false alarm.
  write(dir / "gt/b.txt", "0 0.200000 0.200000 0.100000 0.100000\n");
  write(dir / "pred/b.txt", "0 0.4 0.8 0.8 0.1 0.1\n");
  const auto pooled = evaluate_directories(dir / "gt", dir / "pred", {});
  CHECK(pooled.ground_truths == 2);
  CHECK(pooled.detections == 2);
  CHECK(pooled.ap == doctest::Approx(50.0));
  CHECK(pooled.precision == doctest::Approx(100.0));
  CHECK(pooled.recall == doctest::Approx(50.0));
  CHECK_THROWS_AS(evaluate_directories(dir / "missing", dir / "pred", {}), IoError);
}

TEST_CASE("interpolation names parse both ways") {
  CHECK(parse_interpolation(to_string(Interpolation::continuous)) == Interpolation::continuous);
  CHECK(parse_interpolation(to_string(Interpolation::eleven_point)) == Interpolation::eleven_point);
  CHECK_THROWS_AS(parse_interpolation("voc"), ValidationError);
}
