#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "salrgb/taxonomy.hpp"

namespace salrgb {

enum class Split { train, val, test };

std::string_view to_string(Split s);
// Throws DataError for anything other than train/val/test.
Split parse_split(std::string_view s);

struct ImageRecord {
  std::string id;
  std::string source;  // local path or http(s) URL
  Split split = Split::train;
  std::vector<std::string> labels;
  std::optional<int> width;
  std::optional<int> height;
  std::optional<std::string> sha256;  // lowercase hex, verified by fetch_remote

  bool is_remote() const;
  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct DatasetManifest {
  StyleTaxonomy taxonomy;
  std::vector<ImageRecord> records;
};

// Line-delimited JSON, one object per line with keys
// {id, source, split, labels[, width, height, sha256]}. Blank lines are
// skipped but still counted for error reporting.
DatasetManifest parse_manifest(std::string_view text, const StyleTaxonomy& taxonomy);
DatasetManifest load_manifest(const std::filesystem::path& path, const StyleTaxonomy& taxonomy);
std::string serialize_manifest(const DatasetManifest& manifest);

// Records of one split, in manifest order.
std::vector<ImageRecord> split_records(const DatasetManifest& manifest, Split split);

// Taxonomy indices of a record's labels, in listed order.
std::vector<std::size_t> label_indices(const ImageRecord& record, const StyleTaxonomy& taxonomy);

struct ClassHistogram {
  std::vector<std::string> classes;
  std::vector<std::size_t> counts;

  std::size_t operator[](std::string_view cls) const;
  std::size_t total() const;
};

// Multi-label records contribute once per label.
ClassHistogram class_histogram(const DatasetManifest& manifest, Split split);

// When the manifest has no val records, moves a deterministic fraction of the
// train pool (chosen by hash of id) to val. Returns the number moved.
std::size_t assign_validation_split(DatasetManifest& manifest, double fraction);

}  // namespace salrgb
