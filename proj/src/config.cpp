#include "orchardsynth/config.hpp"

#include <fmt/format.h>

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "orchardsynth/error.hpp"

namespace orchard {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// Tracks which keys of one JSON object were consumed so that anything
// left over can be reported.
class Section {
 public:
  Section(const json &j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key_path(const char *key) const { return path_.empty() ? key : path_ + "." + key; }

  const json *find(const char *key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void get(const char *key, int &out) {
    if (const json *v = find(key)) {
      if (!v->is_number_integer()) throw ValidationError(key_path(key), "expected an integer");
      out = v->get<int>();
    }
  }
  void get(const char *key, std::uint64_t &out) {
    if (const json *v = find(key)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0))
        throw ValidationError(key_path(key), "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void get(const char *key, double &out) {
    if (const json *v = find(key)) {
      if (!v->is_number()) throw ValidationError(key_path(key), "expected a number");
      out = v->get<double>();
    }
  }
  void get(const char *key, bool &out) {
    if (const json *v = find(key)) {
      if (!v->is_boolean()) throw ValidationError(key_path(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void get(const char *key, std::string &out) {
    if (const json *v = find(key)) {
      if (!v->is_string()) throw ValidationError(key_path(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  void get(const char *key, std::vector<double> &out) {
    if (const json *v = find(key)) {
      if (!v->is_array()) throw ValidationError(key_path(key), "expected an array of numbers");
      out.clear();
      for (const json &x : *v) {
        if (!x.is_number()) throw ValidationError(key_path(key), "expected an array of numbers");
        out.push_back(x.get<double>());
      }
    }
  }
  void get(const char *key, Vec3 &out) {
    if (const json *v = find(key)) {
      if (!v->is_array() || v->size() != 3 || !(*v)[0].is_number() || !(*v)[1].is_number() ||
          !(*v)[2].is_number())
        throw ValidationError(key_path(key), "expected [x, y, z]");
      out = {(*v)[0].get<double>(), (*v)[1].get<double>(), (*v)[2].get<double>()};
    }
  }
  void get_range(const char *key, double &lo, double &hi) {
    if (const json *v = find(key)) {
      if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number())
        throw ValidationError(key_path(key), "expected [min, max]");
      lo = (*v)[0].get<double>();
      hi = (*v)[1].get<double>();
    }
  }

  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ValidationError(key_path(it.key().c_str()), "unknown key");
  }

 private:
  const json &j_;
  std::string path_;
  std::set<std::string> used_;
};

void read_tree(const json &j, const std::string &path, CanopyParams &p) {
  Section s(j, path);
  s.get("trunk_height", p.trunk_height);
  s.get("trunk_radius", p.trunk_radius);
  s.get("branch_levels", p.branch_levels);
  s.get("branches_per_node", p.branches_per_node);
  s.get("branch_angle", p.branch_angle);
  s.get("branch_length_ratio", p.branch_length_ratio);
  s.get("leaves_per_branch", p.leaves_per_branch);
  s.get("leaf_length", p.leaf_length);
  s.get("leaf_width", p.leaf_width);
  s.get("nut_clusters", p.nut_clusters);
  s.get("nuts_per_cluster", p.nuts_per_cluster);
  s.get("nut_radius", p.nut_radius);
  s.get("jitter", p.jitter);
  s.get("seed", p.seed);
  s.done();
}

void read_scene(const json &j, SceneConfig &c) {
  Section s(j, "scene");
  if (const json *o = s.find("orchard")) {
    Section os(*o, "scene.orchard");
    os.get("rows", c.orchard.rows);
    os.get("cols", c.orchard.cols);
    os.get("row_spacing", c.orchard.row_spacing);
    os.get("col_spacing", c.orchard.col_spacing);
    os.get("ground_extent", c.orchard.ground_extent);
    os.get("per_tree_seeds", c.orchard.per_tree_seeds);
    if (const json *t = os.find("tree")) read_tree(*t, "scene.orchard.tree", c.orchard.tree);
    os.done();
  }
  if (const json *t = s.find("tessellation")) {
    Section ts(*t, "scene.tessellation");
    ts.get("sphere_subdivisions", c.tessellation.sphere_subdivisions);
    ts.get("cylinder_segments", c.tessellation.cylinder_segments);
    ts.done();
  }
  if (const json *b = s.find("bands")) {
    if (!b->is_array()) throw ValidationError("scene.bands", "expected an array");
    c.bands.bands.clear();
    for (std::size_t i = 0; i < b->size(); ++i) {
      Section bs((*b)[i], fmt::format("scene.bands[{}]", i));
      Band band;
      bs.get("name", band.name);
      bs.get("wavelength_nm", band.wavelength_nm);
      bs.done();
      c.bands.bands.push_back(band);
    }
  }
  if (const json *m = s.find("materials")) {
    Section ms(*m, "scene.materials");
    for (Material &mat : c.materials) {
      if (const json *e = ms.find(mat.name.c_str())) {
        Section es(*e, "scene.materials." + mat.name);
        es.get("reflectance", mat.reflectance);
        es.get("transmittance", mat.transmittance);
        es.done();
      }
    }
    ms.done();
  }
  s.done();
}

void read_render(const json &j, RenderConfig &c) {
  Section s(j, "render");
  s.get("width", c.width);
  s.get("height", c.height);
  s.get("vertical_fov", c.vertical_fov);
  s.get("samples_per_pixel", c.samples_per_pixel);
  s.get("ray_offset", c.ray_offset);
  s.get("write_raw", c.write_raw);
  if (const json *l = s.find("lighting")) {
    Section ls(*l, "render.lighting");
    ls.get("sun_direction", c.lighting.sun_direction);
    if (length(c.lighting.sun_direction) > 0) c.lighting.sun_direction = normalize(c.lighting.sun_direction);
    ls.get("sun_irradiance", c.lighting.sun_irradiance);
    ls.get("sky_irradiance", c.lighting.sky_irradiance);
    ls.get("sky_samples", c.lighting.sky_samples);
    ls.done();
  }
  if (const json *t = s.find("tonemap")) {
    Section ts(*t, "render.tonemap");
    ts.get("exposure", c.tonemap.exposure);
    ts.get("gamma", c.tonemap.gamma);
    ts.done();
  }
  if (const json *cams = s.find("cameras")) {
    if (!cams->is_array()) throw ValidationError("render.cameras", "expected an array");
    for (std::size_t i = 0; i < cams->size(); ++i) {
      Section cs((*cams)[i], fmt::format("render.cameras[{}]", i));
      Camera cam;
      cs.get("position", cam.position);
      cs.get("look_at", cam.look_at);
      cs.get("up", cam.up);
      cs.done();
      c.cameras.push_back(cam);
    }
  }
  s.done();
}

void read_generate(const json &j, GenerationJob &g) {
  Section s(j, "generate");
  s.get("count", g.count);
  s.get("seed", g.seed);
  s.get("roi_center", g.roi_center);
  s.get("roi_radius", g.roi_radius);
  s.get_range("distance_range", g.distance_min, g.distance_max);
  s.get_range("azimuth_range_deg", g.azimuth_min, g.azimuth_max);
  s.get_range("elevation_range_deg", g.elevation_min, g.elevation_max);
  s.get("vary_scene", g.vary_scene);
  s.get("out_dir", g.out_dir);
  s.done();
}

void read_dataset(const json &j, DatasetConfig &d) {
  Section s(j, "dataset");
  s.get("real_count", d.real_count);
  s.get("synthetic_count", d.synthetic_count);
  if (const json *r = s.find("ratio")) {
    if (!r->is_array() || r->size() != 2 || !(*r)[0].is_number_integer() || !(*r)[1].is_number_integer())
      throw ValidationError("dataset.ratio", "expected [train, val] integers");
    d.ratio = {(*r)[0].get<int>(), (*r)[1].get<int>()};
  }
  s.get("seed", d.seed);
  s.get("out_dir", d.out_dir);
  s.get("synthetic_train_only", d.synthetic_train_only);
  s.done();
}

void read_eval(const json &j, EvalConfig &e) {
  Section s(j, "eval");
  s.get("iou_threshold", e.iou_threshold);
  std::string interp = to_string(e.interpolation);
  s.get("interpolation", interp);
  try {
    e.interpolation = parse_interpolation(interp);
  } catch (const ValidationError &err) {
    throw ValidationError("eval.interpolation", err.message());
  }
  s.done();
}

// Re-throw a module-level validation error under its config section.
template <class F>
void within(const std::string &prefix, F &&f) {
  try {
    f();
  } catch (const ValidationError &e) {
    throw ValidationError(prefix + "." + e.field(), e.message());
  }
}

ojson vec3_json(const Vec3 &v) { return ojson::array({v.x, v.y, v.z}); }

}  // namespace

void validate(const RunConfig &c) {
  within("scene.orchard", [&] { validate(c.scene.orchard); });
  within("scene.tessellation", [&] { validate(c.scene.tessellation); });
  within("scene", [&] { validate(c.scene.bands); });
  for (const Material &m : c.scene.materials) within("scene", [&] { validate_material(m, c.scene.bands.size()); });

  within("render", [&] {
    validate(c.render.lighting, c.scene.bands.size());
    validate(c.render.tonemap);
    Camera probe;
    probe.width = c.render.width;
    probe.height = c.render.height;
    probe.vertical_fov = c.render.vertical_fov;
    probe.samples_per_pixel = c.render.samples_per_pixel;
    validate(probe);
    for (const Camera &cam : c.render.cameras) {
      Camera full = probe;
      full.position = cam.position;
      full.look_at = cam.look_at;
      full.up = cam.up;
      validate(full);
    }
  });
  if (!(c.render.ray_offset > 0)) throw ValidationError("render.ray_offset", "must be > 0");
  if (c.label.min_pixels < 1) throw ValidationError("label.min_pixels", "must be >= 1");

  const GenerationJob &g = c.generate;
  if (g.count < 1) throw ValidationError("generate.count", "must be >= 1");
  if (!(g.distance_min > 0) || !(g.distance_min <= g.distance_max))
    throw ValidationError("generate.distance_range",
                          fmt::format("must be positive and ordered (min <= max), got [{}, {}]",
                                      g.distance_min, g.distance_max));
  if (!(g.azimuth_min <= g.azimuth_max))
    throw ValidationError("generate.azimuth_range_deg", "must be ordered (min <= max)");
  if (!(g.elevation_min <= g.elevation_max) || g.elevation_min < -89 || g.elevation_max > 89)
    throw ValidationError("generate.elevation_range_deg", "must be ordered and within [-89, 89]");
  if (!(g.roi_radius >= 0)) throw ValidationError("generate.roi_radius", "must be >= 0");
  if (g.out_dir.empty()) throw ValidationError("generate.out_dir", "must be non-empty");

  if (c.dataset.real_count < 0) throw ValidationError("dataset.real_count", "must be >= 0");
  if (c.dataset.synthetic_count < 0) throw ValidationError("dataset.synthetic_count", "must be >= 0");
  if (c.dataset.ratio.train < 1 || c.dataset.ratio.val < 1)
    throw ValidationError("dataset.ratio", "both parts must be >= 1");
  if (!(c.eval.iou_threshold > 0 && c.eval.iou_threshold < 1))
    throw ValidationError("eval.iou_threshold", "must be in (0, 1)");
}

RunConfig parse_config(const std::string &json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error &e) {
    throw ValidationError("<config>", fmt::format("invalid JSON: {}", e.what()));
  }
  RunConfig c;
  Section s(root, "");
  if (const json *v = s.find("scene")) read_scene(*v, c.scene);
  if (const json *v = s.find("render")) read_render(*v, c.render);
  if (const json *v = s.find("label")) {
    Section ls(*v, "label");
    ls.get("min_pixels", c.label.min_pixels);
    ls.done();
  }
  if (const json *v = s.find("generate")) read_generate(*v, c.generate);
  if (const json *v = s.find("dataset")) read_dataset(*v, c.dataset);
  if (const json *v = s.find("eval")) read_eval(*v, c.eval);
  s.done();
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(path.string(), "cannot open config");
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const RunConfig &c) {
  ojson root;
  const CanopyParams &t = c.scene.orchard.tree;
  ojson tree;
  tree["trunk_height"] = t.trunk_height;
  tree["trunk_radius"] = t.trunk_radius;
  tree["branch_levels"] = t.branch_levels;
  tree["branches_per_node"] = t.branches_per_node;
  tree["branch_angle"] = t.branch_angle;
  tree["branch_length_ratio"] = t.branch_length_ratio;
  tree["leaves_per_branch"] = t.leaves_per_branch;
  tree["leaf_length"] = t.leaf_length;
  tree["leaf_width"] = t.leaf_width;
  tree["nut_clusters"] = t.nut_clusters;
  tree["nuts_per_cluster"] = t.nuts_per_cluster;
  tree["nut_radius"] = t.nut_radius;
  tree["jitter"] = t.jitter;
  tree["seed"] = t.seed;
  const OrchardParams &o = c.scene.orchard;
  ojson orchard;
  orchard["rows"] = o.rows;
  orchard["cols"] = o.cols;
  orchard["row_spacing"] = o.row_spacing;
  orchard["col_spacing"] = o.col_spacing;
  orchard["ground_extent"] = o.ground_extent;
  orchard["per_tree_seeds"] = o.per_tree_seeds;
  orchard["tree"] = tree;
  ojson scene;
  scene["orchard"] = orchard;
  scene["tessellation"] = {{"sphere_subdivisions", c.scene.tessellation.sphere_subdivisions},
                           {"cylinder_segments", c.scene.tessellation.cylinder_segments}};
  scene["bands"] = ojson::array();
  for (const Band &b : c.scene.bands.bands)
    scene["bands"].push_back({{"name", b.name}, {"wavelength_nm", b.wavelength_nm}});
  ojson materials;
  for (const Material &m : c.scene.materials)
    materials[m.name] = {{"reflectance", m.reflectance}, {"transmittance", m.transmittance}};
  scene["materials"] = materials;
  root["scene"] = scene;

  const RenderConfig &r = c.render;
  ojson render;
  render["width"] = r.width;
  render["height"] = r.height;
  render["vertical_fov"] = r.vertical_fov;
  render["samples_per_pixel"] = r.samples_per_pixel;
  render["ray_offset"] = r.ray_offset;
  render["write_raw"] = r.write_raw;
  render["lighting"] = {{"sun_direction", vec3_json(r.lighting.sun_direction)},
                        {"sun_irradiance", r.lighting.sun_irradiance},
                        {"sky_irradiance", r.lighting.sky_irradiance},
                        {"sky_samples", r.lighting.sky_samples}};
  render["tonemap"] = {{"exposure", r.tonemap.exposure}, {"gamma", r.tonemap.gamma}};
  render["cameras"] = ojson::array();
  for (const Camera &cam : r.cameras)
    render["cameras"].push_back({{"position", vec3_json(cam.position)},
                                 {"look_at", vec3_json(cam.look_at)},
                                 {"up", vec3_json(cam.up)}});
  root["render"] = render;
  root["label"] = {{"min_pixels", c.label.min_pixels}};

  const GenerationJob &g = c.generate;
  ojson gen;
  gen["count"] = g.count;
  gen["seed"] = g.seed;
  gen["roi_center"] = vec3_json(g.roi_center);
  gen["roi_radius"] = g.roi_radius;
  gen["distance_range"] = {g.distance_min, g.distance_max};
  gen["azimuth_range_deg"] = {g.azimuth_min, g.azimuth_max};
  gen["elevation_range_deg"] = {g.elevation_min, g.elevation_max};
  gen["vary_scene"] = g.vary_scene;
  gen["out_dir"] = g.out_dir;
  root["generate"] = gen;

  const DatasetConfig &d = c.dataset;
  ojson ds;
  ds["real_count"] = d.real_count;
  ds["synthetic_count"] = d.synthetic_count;
  ds["ratio"] = {d.ratio.train, d.ratio.val};
  ds["seed"] = d.seed;
  ds["out_dir"] = d.out_dir;
  ds["synthetic_train_only"] = d.synthetic_train_only;
  root["dataset"] = ds;
  root["eval"] = {{"iou_threshold", c.eval.iou_threshold},
                  {"interpolation", to_string(c.eval.interpolation)}};
  return root.dump(2) + "\n";
}

}  // namespace orchard
