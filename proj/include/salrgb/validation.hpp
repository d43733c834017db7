#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "salrgb/manifest.hpp"

namespace salrgb {

enum class ProblemKind {
  missing_image,
  undecodable_image,
  image_size_mismatch,
  missing_saliency,
  invalid_saliency,
  saliency_size_mismatch,
};

std::string_view to_string(ProblemKind kind);

struct ValidationProblem {
  std::string record_id;
  ProblemKind kind;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationProblem> problems;  // ordered by record id
  bool empty() const { return problems.empty(); }
};

// Where a record's image lives: URL sources map into the cache directory,
// relative local paths resolve against image_root.
std::filesystem::path resolve_image_path(const ImageRecord& record,
                                         const std::filesystem::path& image_root,
                                         const std::filesystem::path& cache_dir);

// Checks every record for a decodable image and a single-channel saliency map
// whose aspect ratio matches the image. Problems are report entries, never
// exceptions. An empty report means the dataset is trainable.
ValidationReport validate_dataset(const DatasetManifest& manifest,
                                  const std::filesystem::path& image_root,
                                  const std::filesystem::path& saliency_root,
                                  const std::filesystem::path& cache_dir = {}, int jobs = 1);

std::string format_report(const ValidationReport& report);

}  // namespace salrgb
