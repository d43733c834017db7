#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "salrgb/manifest.hpp"
#include "salrgb/metrics.hpp"
#include "salrgb/model.hpp"
#include "salrgb/sample_source.hpp"
#include "salrgb/taxonomy.hpp"

namespace salrgb {

enum class PatchPolicyKind { grid, random, center };

std::string_view to_string(PatchPolicyKind kind);
PatchPolicyKind parse_patch_policy(std::string_view s);

struct PatchPolicy {
  PatchPolicyKind kind = PatchPolicyKind::grid;
  int resize_short = 256;  // 0 = crop the source directly
  int crop_size = kNetworkInputSize;
  SaliencyAlignment alignment = SaliencyAlignment::aligned;
  std::uint64_t seed = 0;  // random policy only
  friend bool operator==(const PatchPolicy&, const PatchPolicy&) = default;
};

// Patch specs for a fitted source of the given size. Random patches are
// seeded per record so evaluation stays reproducible.
std::vector<PatchSpec> make_patches(int height, int width, const PatchPolicy& policy,
                                    std::string_view record_id = {});

// Mean of the per-patch softmax outputs. `map` is required when the
// classifier has a saliency column.
std::vector<double> predict_image(const PatchClassifier& classifier, const ImageGrid& image,
                                  const SaliencyMap* map, const PatchPolicy& policy,
                                  std::string_view record_id = {});

struct PredictionRecord {
  std::string id;
  std::vector<double> probabilities;
  std::vector<std::size_t> truths;  // taxonomy indices; first is the primary label
};

struct EvalReport {
  std::vector<std::string> classes;
  std::vector<std::optional<double>> average_precision;  // nullopt: no positives
  std::optional<double> map;
  std::vector<std::optional<double>> precision;  // argmax PCP; nullopt: never predicted
  ConfusionMatrix confusion;
  std::size_t sample_count = 0;
  nlohmann::json config;
};

// Metrics from aggregated predictions alone. Throws DataError on empty input
// or class-count mismatch.
EvalReport compute_report(std::span<const PredictionRecord> predictions,
                          const StyleTaxonomy& taxonomy, nlohmann::json config = {});

struct Evaluation {
  EvalReport report;
  std::vector<PredictionRecord> predictions;  // sorted by id
};

Evaluation evaluate(const PatchClassifier& classifier, std::span<const ImageRecord> records,
                    const SampleSource& source, const StyleTaxonomy& taxonomy,
                    const PatchPolicy& policy, int jobs = 1, nlohmann::json config = {});

}  // namespace salrgb
