#include "orchardsynth/pipeline.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>

#include "CLI11.hpp"
#include "orchardsynth/canopy.hpp"
#include "orchardsynth/error.hpp"
#include "orchardsynth/eval.hpp"
#include "orchardsynth/random.hpp"

namespace fs = std::filesystem;

namespace orchard {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

void write_text(const fs::path &p, const std::string &text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(p.string(), "cannot open for writing");
  f << text;
  if (!f) throw IoError(p.string(), "write failed");
}

std::string read_text(const fs::path &p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw IoError(p.string(), "cannot open for reading");
  std::stringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

void ensure_directory(const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError(dir.string(), "cannot create output directory");
  const fs::path probe = dir / ".orchardsynth-write-test";
  {
    std::ofstream f(probe);
    if (!f) throw IoError(dir.string(), "output directory is not writable");
  }
  fs::remove(probe, ec);
}

void check_expected_count(int expected, std::size_t actual, const char *field) {
  if (expected > 0 && static_cast<std::size_t>(expected) != actual)
    throw ValidationError(field, fmt::format("manifest has {} entries, config expects {}", actual, expected));
}

}  // namespace

std::uint64_t image_seed(std::uint64_t master_seed, int index) {
  return hash_key({master_seed, static_cast<std::uint64_t>(index)});
}

Scene build_scene(const RunConfig &config, std::uint64_t tree_seed) {
  OrchardParams params = config.scene.orchard;
  params.tree.seed = tree_seed;
  return generate_orchard(params, config.scene.tessellation, config.scene.materials);
}

Camera camera_for_image(const RunConfig &config, int index) {
  const RenderConfig &r = config.render;
  const GenerationJob &g = config.generate;
  Camera cam;
  cam.width = r.width;
  cam.height = r.height;
  cam.vertical_fov = r.vertical_fov;
  cam.samples_per_pixel = r.samples_per_pixel;
  cam.seed = image_seed(g.seed, index);
  if (!r.cameras.empty()) {
    const Camera &fixed = r.cameras[static_cast<std::size_t>(index - 1) % r.cameras.size()];
    cam.position = fixed.position;
    cam.look_at = fixed.look_at;
    cam.up = fixed.up;
    return cam;
  }
  CounterRng rng(cam.seed, "pose");
  const double dist = rng.uniform(g.distance_min, g.distance_max);
  const double az = rng.uniform(g.azimuth_min, g.azimuth_max) * kDeg;
  const double el = rng.uniform(g.elevation_min, g.elevation_max) * kDeg;
  cam.position = g.roi_center +
                 Vec3{std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)} * dist;
  // Uniform point in the ROI ball.
  const double u = rng.uniform(), v = rng.uniform(), w = rng.uniform();
  const double z = 2 * u - 1, phi = 2 * std::numbers::pi * v;
  const double s = std::sqrt(std::max(0.0, 1 - z * z));
  cam.look_at = g.roi_center + Vec3{s * std::cos(phi), s * std::sin(phi), z} * (g.roi_radius * std::cbrt(w));
  if (cam.look_at == cam.position) cam.look_at = g.roi_center;
  cam.up = {0, 0, 1};
  return cam;
}

SyntheticImage make_synthetic_image(const RunConfig &config, int index, int threads) {
  const std::uint64_t seed = image_seed(config.generate.seed, index);
  const std::uint64_t tree_seed =
      config.generate.vary_scene ? hash_key({seed, hash_tag("scene")}) : config.scene.orchard.tree.seed;
  const Scene scene = build_scene(config, tree_seed);
  const Camera cam = camera_for_image(config, index);
  RenderOptions opts;
  opts.threads = threads;
  opts.ray_offset = config.render.ray_offset;
  SyntheticImage out;
  out.render = render(scene, cam, config.render.lighting, config.scene.bands, opts);
  out.images = tonemap(out.render.radiance, config.scene.bands, config.render.tonemap);
  out.boxes = extract_boxes(out.render.labels, config.label.min_pixels);
  out.annotations = to_annotations(out.boxes, cam.width, cam.height);
  return out;
}

GenerateSummary run_generate(const RunConfig &config, const fs::path &out_dir, int threads,
                             std::ostream *log) {
  validate(config);
  ensure_directory(out_dir);
  GenerateSummary summary;
  summary.rgb = {"synthetic_rgb", BandKind::rgb, config.generate.seed, {}};
  summary.nir = {"synthetic_nir", BandKind::nir, config.generate.seed, {}};
  for (int i = 1; i <= config.generate.count; ++i) {
    const SyntheticImage img = make_synthetic_image(config, i, threads);
    const std::string stem = fmt::format("img_{:05}", i);
    const fs::path rgb = out_dir / (stem + ".png");
    const fs::path nir = out_dir / (stem + "_nir.png");
    const fs::path lbl = out_dir / (stem + ".txt");
    write_png(rgb, img.images.rgb);
    write_png(nir, img.images.nir);
    write_annotations(lbl, img.annotations);
    if (config.render.write_raw)
      write_radiance_raw(out_dir / (stem + "_radiance"), img.render.radiance, config.scene.bands);
    summary.rgb.entries.push_back({rgb, lbl, Source::synthetic, BandKind::rgb, Split::unassigned});
    summary.nir.entries.push_back({nir, lbl, Source::synthetic, BandKind::nir, Split::unassigned});
    summary.boxes += img.boxes.size();
    if (log) *log << fmt::format("{}: {} walnut boxes\n", stem, img.boxes.size());
  }
  write_manifest(out_dir / "synthetic_rgb.tsv", summary.rgb);
  write_manifest(out_dir / "synthetic_nir.tsv", summary.nir);
  return summary;
}

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Synthetic RGB + NIR walnut orchard imagery, auto-labels, dataset assembly and "
               "detector evaluation",
               "orchardsynth"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  std::string config_path, out_path, manifest_path, real_path, synthetic_path, name;
  std::string ratio_text, band_text = "rgb", source_text = "real", interp_text;
  std::string gt_dir, pred_dir, original_path, enhanced_path, title, images_dir, labels_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> count, min_pixels;
  std::optional<double> iou_thresh;
  bool synthetic_train_only = false, keep_nir_single = false;

  auto *generate = app.add_subcommand("generate", "Render synthetic images, labels and manifests");
  generate->add_option("--config", config_path, "Run configuration (JSON)")->required();
  generate->add_option("--out", out_path, "Output directory (default: generate.out_dir)");
  generate->add_option("--seed", seed, "Master seed (overrides generate.seed)");
  generate->add_option("--count", count, "Number of images (overrides generate.count)");
  generate->add_option("--min-pixels", min_pixels, "Smallest visible walnut to label");

  auto *validate_cmd = app.add_subcommand("validate", "Check a configuration file");
  validate_cmd->add_option("--config", config_path, "Run configuration (JSON)")->required();

  auto *split_cmd = app.add_subcommand("split", "Assign train/val splits to a manifest");
  split_cmd->add_option("--manifest", manifest_path, "Input manifest")->required();
  split_cmd->add_option("--out", out_path, "Output manifest")->required();
  split_cmd->add_option("--config", config_path, "Take ratio/seed from the dataset section");
  split_cmd->add_option("--ratio", ratio_text, "train:val ratio (default 4:1)");
  split_cmd->add_option("--seed", seed, "Shuffle seed");
  split_cmd->add_flag("--synthetic-train-only", synthetic_train_only,
                      "Put every synthetic entry in train; split only real entries");

  auto *mix_cmd = app.add_subcommand("mix", "Append a synthetic manifest to a real one");
  mix_cmd->add_option("--real", real_path, "Real-image manifest")->required();
  mix_cmd->add_option("--synthetic", synthetic_path, "Synthetic-image manifest")->required();
  mix_cmd->add_option("--out", out_path, "Output manifest")->required();
  mix_cmd->add_option("--name", name, "Name of the enhanced manifest");
  mix_cmd->add_option("--config", config_path, "Check dataset.real_count / synthetic_count");

  auto *export_cmd = app.add_subcommand("export", "Write a trainer-ready directory tree");
  export_cmd->add_option("--manifest", manifest_path, "Split manifest")->required();
  export_cmd->add_option("--out", out_path, "Output directory")->required();
  export_cmd->add_flag("--keep-nir-single-channel", keep_nir_single,
                       "Copy NIR images as-is instead of replicating into three channels");

  auto *eval_cmd = app.add_subcommand("eval", "Score prediction files against ground truth");
  eval_cmd->add_option("--gt", gt_dir, "Ground-truth label directory")->required();
  eval_cmd->add_option("--pred", pred_dir, "Prediction directory")->required();
  eval_cmd->add_option("--out", out_path, "Report path stem (writes .txt and .json)");
  eval_cmd->add_option("--iou", iou_thresh, "IoU threshold (default 0.5)");
  eval_cmd->add_option("--interp", interp_text, "continuous | 11point");
  eval_cmd->add_option("--config", config_path, "Take defaults from the eval section");

  auto *report_cmd = app.add_subcommand("report", "Original vs enhanced comparison table");
  report_cmd->add_option("--original", original_path, "Report JSON of the original set")->required();
  report_cmd->add_option("--enhanced", enhanced_path, "Report JSON of the enhanced set")->required();
  report_cmd->add_option("--title", title, "Table title");
  report_cmd->add_option("--out", out_path, "Write the table here instead of stdout");

  auto *index_cmd = app.add_subcommand("index", "Build a manifest from an image directory");
  index_cmd->add_option("--images", images_dir, "Image directory")->required();
  index_cmd->add_option("--labels", labels_dir, "Label directory (<stem>.txt)");
  index_cmd->add_option("--band", band_text, "rgb | nir");
  index_cmd->add_option("--source", source_text, "real | synthetic");
  index_cmd->add_option("--name", name, "Manifest name");
  index_cmd->add_option("--out", out_path, "Output manifest")->required();

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*generate) {
      RunConfig cfg = load_config(config_path);
      if (seed) cfg.generate.seed = *seed;
      if (count) cfg.generate.count = *count;
      if (min_pixels) cfg.label.min_pixels = *min_pixels;
      if (!out_path.empty()) cfg.generate.out_dir = out_path;
      validate(cfg);
      const auto summary = run_generate(cfg, cfg.generate.out_dir, 0, &out);
      out << fmt::format("wrote {} RGB + {} NIR images, {} walnut boxes to {}\n", summary.rgb.entries.size(),
                         summary.nir.entries.size(), summary.boxes, cfg.generate.out_dir);
    } else if (*validate_cmd) {
      load_config(config_path);
      out << config_path << ": ok\n";
    } else if (*split_cmd) {
      DatasetConfig ds;
      if (!config_path.empty()) ds = load_config(config_path).dataset;
      if (!ratio_text.empty()) ds.ratio = parse_ratio(ratio_text);
      if (seed) ds.seed = *seed;
      if (synthetic_train_only) ds.synthetic_train_only = true;
      const auto m = split(read_manifest(manifest_path), ds.ratio, ds.seed, ds.synthetic_train_only);
      write_manifest(out_path, m);
      out << fmt::format("{}: {} train / {} val\n", out_path, m.count(Split::train), m.count(Split::val));
    } else if (*mix_cmd) {
      const auto real = read_manifest(real_path);
      const auto syn = read_manifest(synthetic_path);
      if (!config_path.empty()) {
        const auto ds = load_config(config_path).dataset;
        check_expected_count(ds.real_count, real.entries.size(), "dataset.real_count");
        check_expected_count(ds.synthetic_count, syn.entries.size(), "dataset.synthetic_count");
      }
      const auto m = mix(real, syn, name.empty() ? "enhanced" : name);
      write_manifest(out_path, m);
      out << fmt::format("{}: {} entries ({} real, {} synthetic)\n", out_path, m.entries.size(),
                         m.count(Source::real), m.count(Source::synthetic));
    } else if (*export_cmd) {
      const auto m = read_manifest(manifest_path);
      export_dataset(m, out_path, {.nir_three_channel = !keep_nir_single});
      out << fmt::format("{}: {} train / {} val\n", out_path, m.count(Split::train), m.count(Split::val));
    } else if (*eval_cmd) {
      EvalConfig ec;
      if (!config_path.empty()) ec = load_config(config_path).eval;
      if (iou_thresh) ec.iou_threshold = *iou_thresh;
      if (!interp_text.empty()) ec.interpolation = parse_interpolation(interp_text);
      if (!(ec.iou_threshold > 0 && ec.iou_threshold < 1))
        throw ValidationError("iou", "must be in (0, 1)");
      const auto report = evaluate_directories(gt_dir, pred_dir, {ec.iou_threshold, ec.interpolation});
      if (!out_path.empty()) {
        write_text(out_path + ".txt", format_report_text(report));
        write_text(out_path + ".json", report_to_json(report));
      }
      out << format_report_text(report);
    } else if (*report_cmd) {
      const auto a = report_from_json(read_text(original_path), original_path);
      const auto b = report_from_json(read_text(enhanced_path), enhanced_path);
      const std::string table = compare_report(a, b, title);
      if (!out_path.empty()) write_text(out_path, table);
      out << table;
    } else if (*index_cmd) {
      const auto m = index_directory(images_dir, labels_dir, parse_band(band_text), parse_source(source_text),
                                     name.empty() ? fs::path(images_dir).filename().string() : name);
      write_manifest(out_path, m);
      out << fmt::format("{}: {} entries\n", out_path, m.entries.size());
    }
  } catch (const ValidationError &e) {
    err << "orchardsynth: error: " << e.what() << '\n';
    return 1;
  } catch (const IoError &e) {
    err << "orchardsynth: error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error &e) {
    err << "orchardsynth: error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace orchard
