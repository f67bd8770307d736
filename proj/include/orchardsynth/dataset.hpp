#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "orchardsynth/image.hpp"

namespace orchard {

enum class Source { real, synthetic };
enum class BandKind { rgb, nir };
enum class Split { unassigned, train, val };

const char *to_string(Source s);
const char *to_string(BandKind b);
const char *to_string(Split s);
Source parse_source(const std::string &s);
BandKind parse_band(const std::string &s);
Split parse_split(const std::string &s);

struct DatasetEntry {
  std::filesystem::path image;
  std::filesystem::path label;  // empty: no objects annotated
  Source source = Source::real;
  BandKind band = BandKind::rgb;
  Split split = Split::unassigned;
  bool operator==(const DatasetEntry &) const = default;
};

struct DatasetManifest {
  std::string name;
  BandKind band = BandKind::rgb;
  std::uint64_t seed = 0;
  std::vector<DatasetEntry> entries;

  std::size_t count(Split s) const;
  std::size_t count(Source s) const;
};

// Unique image paths, non-empty paths, one band throughout.
void validate(const DatasetManifest &m);

struct SplitRatio {
  int train = 4;
  int val = 1;
};

SplitRatio parse_ratio(const std::string &text);  // "a:b"

/// Deterministic shuffle by seed, then the first floor(n*a/(a+b)) shuffled
/// entries become train and the rest val. Entry order is unchanged; only
/// the split fields are assigned. With `synthetic_train_only`, synthetic
/// entries all go to train and only real entries are split by the ratio.
DatasetManifest split(const DatasetManifest &m, SplitRatio ratio, std::uint64_t seed,
                      bool synthetic_train_only = false);

// Concatenation of real then synthetic; bands must match and paths must
// be disjoint.
DatasetManifest mix(const DatasetManifest &real, const DatasetManifest &synthetic,
                    const std::string &name = "enhanced");

struct ExportOptions {
  // Convert single-channel NIR PNGs to three identical channels.
  bool nir_three_channel = true;
};

/// Writes images/{train,val}, labels/{train,val}, data.yaml and
/// manifest.tsv under out_dir. Exported files are named
/// `real_<name>` or `syn_<name>`. Everything is checked before anything
/// is written; stale files in the split directories are removed.
void export_dataset(const DatasetManifest &m, const std::filesystem::path &out_dir,
                    const ExportOptions &options = {});

// Rebuild a manifest by scanning an exported tree (source tags come from
// its manifest.tsv).
DatasetManifest read_export_tree(const std::filesystem::path &dir);

Image8 nir_to_three_channel(const Image8 &nir);

/// Manifest text format: a one-line JSON header with name, band and seed,
/// then one line per entry with tab-separated image, label, source, band,
/// split. Paths are stored relative to the manifest's directory.
std::string format_manifest(const DatasetManifest &m, const std::filesystem::path &base_dir);
DatasetManifest parse_manifest(const std::string &text, const std::filesystem::path &base_dir,
                               const std::string &source = "<manifest>");
void write_manifest(const std::filesystem::path &path, const DatasetManifest &m);
DatasetManifest read_manifest(const std::filesystem::path &path);

/// Manifest over the images in a directory (sorted by file name), with
/// `labels_dir/<stem>.txt` as label when that file exists.
DatasetManifest index_directory(const std::filesystem::path &images_dir,
                                const std::filesystem::path &labels_dir, BandKind band, Source source,
                                const std::string &name);

}  // namespace orchard
