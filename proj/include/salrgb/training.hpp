#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "salrgb/checkpoint.hpp"
#include "salrgb/evaluation.hpp"
#include "salrgb/manifest.hpp"
#include "salrgb/model.hpp"
#include "salrgb/optimizer.hpp"
#include "salrgb/rng.hpp"
#include "salrgb/sample_source.hpp"

namespace salrgb {

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  OptimizerConfig optimizer;
  double lr_decay_factor = 0.1;
  std::size_t lr_decay_period = 10;
  std::uint64_t global_seed = 0;
  bool class_weighting = false;
  AugmentConfig augment;
  std::string checkpoint_dir = "checkpoints";
  std::size_t patience = 0;  // 0 disables early stopping
  bool freeze_backbone = false;
  PatchPolicyKind val_patches = PatchPolicyKind::center;
  int jobs = 0;  // 0 = all available cores

  // Throws ConfigError.
  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

// Step decay: factor^(epoch / period).
double lr_scale(const TrainConfig& config, std::size_t epoch);

struct ClassWeights {
  std::vector<double> weights;             // mean 1 over classes with samples
  std::vector<std::string> empty_classes;  // weight 0
};

// w_c = N / (K * count_c), renormalized to mean 1 over non-empty classes.
// Throws DataError for an all-zero histogram.
ClassWeights class_weights(const ClassHistogram& histogram);

struct EpochMetrics {
  double mean_loss = 0.0;
  double accuracy = 0.0;  // train-mode argmax accuracy over the epoch
  std::vector<double> step_losses;
};

// One pass over `records` in an order drawn from shuffle_rng. Augmentation is
// seeded per (global seed, record id, epoch) and dropout per step.
// Throws TrainingError on a non-finite loss and DataError on missing inputs.
EpochMetrics train_epoch(Model& model, std::span<const ImageRecord> records,
                         const SampleSource& source, const StyleTaxonomy& taxonomy,
                         SgdOptimizer& optimizer, const TrainConfig& config, std::size_t epoch,
                         Rng& shuffle_rng, std::uint64_t& step,
                         std::span<const double> class_weights = {});

// Eval-mode argmax accuracy against each record's first label.
double dataset_accuracy(const PatchClassifier& classifier, std::span<const ImageRecord> records,
                        const SampleSource& source, const StyleTaxonomy& taxonomy,
                        const PatchPolicy& policy, int jobs = 1);

struct EpochLog {
  std::size_t epoch = 0;
  std::uint64_t step = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  double lr = 0.0;
  std::optional<double> val_map;
  double wall_time = 0.0;
};

nlohmann::json to_json(const EpochLog& log);

struct FitRequest {
  ModelConfig model;
  TrainConfig train;
  StyleTaxonomy taxonomy;
  std::vector<ImageRecord> train_records;
  std::vector<ImageRecord> val_records;
  const SampleSource* source = nullptr;
  PatchPolicy val_policy;  // kind comes from train.val_patches
  bool resume = false;
  nlohmann::json echo;
};

struct FitResult {
  std::filesystem::path best_checkpoint;
  std::filesystem::path last_checkpoint;
  std::filesystem::path log_path;
  std::vector<EpochLog> history;  // epochs run by this call
  bool early_stopped = false;
};

inline constexpr const char* kBestCheckpoint = "best.ckpt";
inline constexpr const char* kLastCheckpoint = "last.ckpt";
inline constexpr const char* kTrainLog = "train_log.jsonl";

// Epoch loop with per-epoch validation MAP, best/last checkpoints and a
// JSON-lines log. With resume, continues from <checkpoint_dir>/last.ckpt.
FitResult fit(const FitRequest& request);

}  // namespace salrgb
