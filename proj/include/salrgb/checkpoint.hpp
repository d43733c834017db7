#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "salrgb/model.hpp"
#include "salrgb/optimizer.hpp"
#include "salrgb/taxonomy.hpp"

namespace salrgb {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Everything needed to resume training exactly.
struct TrainState {
  std::uint64_t epoch = 0;  // completed epochs
  std::uint64_t step = 0;
  std::optional<double> best_val_map;
  std::uint64_t stale_epochs = 0;
  std::string shuffle_rng;  // textual std::mt19937_64 state
  std::vector<NamedArray> momentum;
};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  ModelConfig config;
  StyleTaxonomy taxonomy;
  std::uint64_t step = 0;
  std::vector<NamedArray> weights;
  std::optional<TrainState> train_state;
  nlohmann::json echo;  // resolved application config, if any
};

Checkpoint make_checkpoint(const Model& model, const StyleTaxonomy& taxonomy, std::uint64_t step);

// Binary container: magic, version, JSON header, raw little-endian doubles.
// Written to a temporary file and renamed into place; throws Error when the
// write fails (e.g. disk full).
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
// Throws DataError on bad magic, version mismatch or truncation.
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Copies weights into a model built from a compatible config.
// Throws DataError when the config or any array does not match.
void load_weights(Model& model, const Checkpoint& checkpoint);
Model build_model(const Checkpoint& checkpoint);

// Throws DataError unless the checkpoint's taxonomy equals `expected`.
void require_taxonomy(const Checkpoint& checkpoint, const StyleTaxonomy& expected);

// Loads RGB backbone arrays (by column kind, falling back to any RGB column)
// from a checkpoint file into the model.
void load_backbone_weights(Model& model, const std::filesystem::path& path);

}  // namespace salrgb
