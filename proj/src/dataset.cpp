#include "orchardsynth/dataset.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "orchardsynth/autolabel.hpp"
#include "orchardsynth/error.hpp"
#include "orchardsynth/random.hpp"

namespace fs = std::filesystem;

namespace orchard {

namespace {

constexpr const char *kManifestFormat = "orchardsynth-manifest/1";
constexpr std::array<Split, 2> kSplits{Split::train, Split::val};

std::string read_file(const fs::path &p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw IoError(p.string(), "cannot open for reading");
  std::stringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

void write_file(const fs::path &p, const std::string &bytes) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(p.string(), "cannot open for writing");
  f << bytes;
  if (!f) throw IoError(p.string(), "write failed");
}

std::vector<std::string> split_tabs(const std::string &line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

fs::path exported_name(const DatasetEntry &e) {
  return fs::path(fmt::format("{}_{}", e.source == Source::real ? "real" : "syn",
                              e.image.filename().string()));
}

bool is_image_file(const fs::path &p) {
  static const std::set<std::string> exts{".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"};
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return exts.count(ext) > 0;
}

}  // namespace

const char *to_string(Source s) { return s == Source::real ? "real" : "synthetic"; }
const char *to_string(BandKind b) { return b == BandKind::rgb ? "rgb" : "nir"; }
const char *to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    default: return "unassigned";
  }
}

Source parse_source(const std::string &s) {
  if (s == "real") return Source::real;
  if (s == "synthetic") return Source::synthetic;
  throw ValidationError("source", fmt::format("expected real|synthetic, got '{}'", s));
}

BandKind parse_band(const std::string &s) {
  if (s == "rgb") return BandKind::rgb;
  if (s == "nir") return BandKind::nir;
  throw ValidationError("band", fmt::format("expected rgb|nir, got '{}'", s));
}

Split parse_split(const std::string &s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "unassigned") return Split::unassigned;
  throw ValidationError("split", fmt::format("expected train|val|unassigned, got '{}'", s));
}

std::size_t DatasetManifest::count(Split s) const {
  return std::count_if(entries.begin(), entries.end(), [s](const auto &e) { return e.split == s; });
}

std::size_t DatasetManifest::count(Source s) const {
  return std::count_if(entries.begin(), entries.end(), [s](const auto &e) { return e.source == s; });
}

void validate(const DatasetManifest &m) {
  std::set<fs::path> seen;
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    const DatasetEntry &e = m.entries[i];
    if (e.image.empty()) throw ValidationError(fmt::format("entries[{}]", i), "empty image path");
    if (e.band != m.band)
      throw ValidationError(fmt::format("entries[{}]", i),
                            fmt::format("band {} differs from manifest band {}", to_string(e.band),
                                        to_string(m.band)));
    if (!seen.insert(e.image.lexically_normal()).second)
      throw ValidationError(fmt::format("entries[{}]", i),
                            fmt::format("duplicate image path {}", e.image.string()));
  }
}

SplitRatio parse_ratio(const std::string &text) {
  const auto colon = text.find(':');
  SplitRatio r{};
  try {
    if (colon == std::string::npos) throw std::invalid_argument("no colon");
    std::size_t used_a = 0, used_b = 0;
    const std::string a = text.substr(0, colon), b = text.substr(colon + 1);
    r.train = std::stoi(a, &used_a);
    r.val = std::stoi(b, &used_b);
    if (used_a != a.size() || used_b != b.size()) throw std::invalid_argument("trailing characters");
  } catch (const std::exception &) {
    throw ValidationError("ratio", fmt::format("expected 'a:b' with positive integers, got '{}'", text));
  }
  if (r.train < 1 || r.val < 1)
    throw ValidationError("ratio", fmt::format("both parts must be >= 1, got '{}'", text));
  return r;
}

DatasetManifest split(const DatasetManifest &m, SplitRatio ratio, std::uint64_t seed,
                      bool synthetic_train_only) {
  validate(m);
  if (m.entries.empty()) throw ValidationError("manifest", "cannot split an empty manifest");
  if (ratio.train < 1 || ratio.val < 1) throw ValidationError("ratio", "both parts must be >= 1");
  for (const DatasetEntry &e : m.entries)
    if (e.split != Split::unassigned)
      throw ValidationError("manifest", fmt::format("{} already has split {}", e.image.string(),
                                                    to_string(e.split)));

  DatasetManifest out = m;
  out.seed = seed;
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < out.entries.size(); ++i) {
    if (synthetic_train_only && out.entries[i].source == Source::synthetic)
      out.entries[i].split = Split::train;
    else
      pool.push_back(i);
  }
  CounterRng rng(seed, "split");
  for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng.below(i)]);
  const std::size_t n = pool.size();
  const std::size_t n_train = n * static_cast<std::size_t>(ratio.train) /
                              static_cast<std::size_t>(ratio.train + ratio.val);
  for (std::size_t k = 0; k < n; ++k)
    out.entries[pool[k]].split = k < n_train ? Split::train : Split::val;
  return out;
}

DatasetManifest mix(const DatasetManifest &real, const DatasetManifest &synthetic, const std::string &name) {
  if (real.band != synthetic.band)
    throw ValidationError("band", fmt::format("cannot mix a {} manifest with a {} manifest",
                                              to_string(real.band), to_string(synthetic.band)));
  DatasetManifest out;
  out.name = name;
  out.band = real.band;
  out.seed = real.seed;
  out.entries = real.entries;
  out.entries.insert(out.entries.end(), synthetic.entries.begin(), synthetic.entries.end());
  validate(out);
  return out;
}

Image8 nir_to_three_channel(const Image8 &nir) {
  if (nir.channels != 1)
    throw ValidationError("image", fmt::format("expected a single-channel image, got {} channels",
                                               nir.channels));
  Image8 out(nir.width, nir.height, 3);
  for (std::size_t i = 0; i < nir.data.size(); ++i)
    out.data[3 * i] = out.data[3 * i + 1] = out.data[3 * i + 2] = nir.data[i];
  return out;
}

void export_dataset(const DatasetManifest &m, const fs::path &out_dir, const ExportOptions &options) {
  validate(m);
  std::vector<std::string> missing;
  std::set<fs::path> names;
  for (const DatasetEntry &e : m.entries) {
    if (e.split == Split::unassigned)
      throw ValidationError("manifest", fmt::format("{} has no split assigned", e.image.string()));
    if (!fs::is_regular_file(e.image)) missing.push_back(e.image.string());
    if (!e.label.empty() && !fs::is_regular_file(e.label)) missing.push_back(e.label.string());
    if (!names.insert(exported_name(e)).second)
      throw ValidationError("manifest", fmt::format("two entries export to the same name {}",
                                                    exported_name(e).string()));
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto &p : missing) list += (list.empty() ? "" : ", ") + p;
    throw IoError(missing.front(), fmt::format("missing source file(s): {}", list));
  }
  // Label files must parse before anything is written.
  for (const DatasetEntry &e : m.entries)
    if (!e.label.empty()) read_annotations(e.label);

  std::error_code ec;
  for (const char *kind : {"images", "labels"}) {
    for (Split s : kSplits) {
      const fs::path dir = out_dir / kind / to_string(s);
      fs::create_directories(dir, ec);
      if (ec) throw IoError(dir.string(), ec.message());
    }
  }

  std::set<fs::path> expected;
  DatasetManifest exported = m;
  for (DatasetEntry &e : exported.entries) {
    const fs::path name = exported_name(e);
    const fs::path img_dst = out_dir / "images" / to_string(e.split) / name;
    const fs::path lbl_dst = out_dir / "labels" / to_string(e.split) / fs::path(name).replace_extension(".txt");
    const bool to_rgb = options.nir_three_channel && e.band == BandKind::nir &&
                        e.image.extension() == ".png";
    Image8 gray;
    if (to_rgb) gray = read_png(e.image);
    if (to_rgb && gray.channels == 1)
      write_png(img_dst, nir_to_three_channel(gray));
    else
      write_file(img_dst, read_file(e.image));
    write_file(lbl_dst, e.label.empty() ? std::string() : read_file(e.label));
    expected.insert(img_dst);
    expected.insert(lbl_dst);
    e.image = img_dst;
    e.label = lbl_dst;
  }

  for (const char *kind : {"images", "labels"}) {
    for (Split s : kSplits) {
      std::vector<fs::path> stale;
      for (const auto &f : fs::directory_iterator(out_dir / kind / to_string(s)))
        if (!expected.count(f.path())) stale.push_back(f.path());
      for (const auto &p : stale) fs::remove_all(p);
    }
  }

  write_file(out_dir / "data.yaml",
             "# generated by orchardsynth\n"
             "train: images/train\n"
             "val: images/val\n"
             "nc: 1\n"
             "names: ['walnut']\n");
  write_manifest(out_dir / "manifest.tsv", exported);
}

DatasetManifest read_export_tree(const fs::path &dir) {
  const DatasetManifest embedded = read_manifest(dir / "manifest.tsv");
  std::map<fs::path, const DatasetEntry *> by_image;
  for (const DatasetEntry &e : embedded.entries) by_image[e.image.lexically_normal()] = &e;

  DatasetManifest out;
  out.name = embedded.name;
  out.band = embedded.band;
  out.seed = embedded.seed;
  for (Split s : kSplits) {
    const fs::path img_dir = dir / "images" / to_string(s);
    std::vector<fs::path> files;
    for (const auto &f : fs::directory_iterator(img_dir))
      if (f.is_regular_file()) files.push_back(f.path());
    std::sort(files.begin(), files.end());
    for (const fs::path &img : files) {
      DatasetEntry e;
      e.image = img;
      e.label = dir / "labels" / to_string(s) / fs::path(img.filename()).replace_extension(".txt");
      if (!fs::is_regular_file(e.label)) e.label.clear();
      e.band = out.band;
      e.split = s;
      auto it = by_image.find(img.lexically_normal());
      e.source = it != by_image.end() ? it->second->source : Source::real;
      out.entries.push_back(e);
    }
  }
  return out;
}

std::string format_manifest(const DatasetManifest &m, const fs::path &base_dir) {
  nlohmann::ordered_json header;
  header["format"] = kManifestFormat;
  header["name"] = m.name;
  header["band"] = to_string(m.band);
  header["seed"] = m.seed;
  std::string out = header.dump() + "\n";
  auto rel = [&](const fs::path &p) {
    if (p.empty()) return std::string();
    if (p.is_relative() || base_dir.empty()) return p.lexically_normal().generic_string();
    return p.lexically_relative(base_dir).generic_string();
  };
  for (const DatasetEntry &e : m.entries)
    out += fmt::format("{}\t{}\t{}\t{}\t{}\n", rel(e.image), rel(e.label), to_string(e.source),
                       to_string(e.band), to_string(e.split));
  return out;
}

DatasetManifest parse_manifest(const std::string &text, const fs::path &base_dir, const std::string &source) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(source, "empty manifest");
  DatasetManifest m;
  try {
    const auto header = nlohmann::json::parse(line);
    if (header.value("format", "") != kManifestFormat)
      throw ValidationError(source + ":1", "unknown manifest format");
    m.name = header.at("name").get<std::string>();
    m.band = parse_band(header.at("band").get<std::string>());
    m.seed = header.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(source + ":1", fmt::format("bad manifest header: {}", e.what()));
  }
  auto resolve = [&](const std::string &p) {
    if (p.empty()) return fs::path();
    fs::path path(p);
    return path.is_absolute() ? path : (base_dir / path).lexically_normal();
  };
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_tabs(line);
    const std::string where = fmt::format("{}:{}", source, line_no);
    if (f.size() != 5) throw ValidationError(where, fmt::format("expected 5 tab-separated fields, got {}", f.size()));
    try {
      m.entries.push_back({resolve(f[0]), resolve(f[1]), parse_source(f[2]), parse_band(f[3]), parse_split(f[4])});
    } catch (const ValidationError &e) {
      throw ValidationError(where, e.message());
    }
  }
  validate(m);
  return m;
}

void write_manifest(const fs::path &path, const DatasetManifest &m) {
  validate(m);
  write_file(path, format_manifest(m, fs::absolute(path).parent_path()));
}

DatasetManifest read_manifest(const fs::path &path) {
  return parse_manifest(read_file(path), fs::absolute(path).parent_path(), path.string());
}

DatasetManifest index_directory(const fs::path &images_dir, const fs::path &labels_dir, BandKind band,
                                Source source, const std::string &name) {
  if (!fs::is_directory(images_dir)) throw IoError(images_dir.string(), "not a directory");
  std::vector<fs::path> files;
  for (const auto &f : fs::directory_iterator(images_dir))
    if (f.is_regular_file() && is_image_file(f.path())) files.push_back(fs::absolute(f.path()));
  std::sort(files.begin(), files.end());
  DatasetManifest m;
  m.name = name;
  m.band = band;
  for (const fs::path &img : files) {
    DatasetEntry e;
    e.image = img;
    const fs::path lbl = fs::absolute(labels_dir / fs::path(img.filename()).replace_extension(".txt"));
    if (!labels_dir.empty() && fs::is_regular_file(lbl)) e.label = lbl;
    e.source = source;
    e.band = band;
    m.entries.push_back(e);
  }
  validate(m);
  return m;
}

}  // namespace orchard
