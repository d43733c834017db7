#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "salrgb/backbone.hpp"
#include "salrgb/image.hpp"
#include "salrgb/layers.hpp"
#include "salrgb/transforms.hpp"

namespace salrgb {

enum class ColumnKind { saliency, rgb_patch, rgb_warp };

std::string_view to_string(ColumnKind kind);
ColumnKind parse_column_kind(std::string_view s);

inline constexpr int kSaliencyPooledSize = 56;
inline constexpr std::size_t kSaliencyFeatureDim = kSaliencyPooledSize * kSaliencyPooledSize;

struct ModelConfig {
  std::vector<ColumnKind> columns{ColumnKind::rgb_patch, ColumnKind::saliency};
  std::string backbone_id = "toy";
  // Checkpoint to initialise RGB backbones from. Empty means random init, in
  // which case backbone weights train with the new layers.
  std::string backbone_weights;
  // 0 = take whatever the backbone reports; otherwise must match it.
  std::size_t rgb_feature_dim = 0;
  std::size_t fusion_dim = 512;
  std::size_t num_classes = 14;
  double dropout_rate = 0.5;
  // 0 = saliency features enter the fusion layer raw; otherwise a learned
  // linear projection to this width is inserted (ablation hook).
  std::size_t saliency_projection_dim = 0;
  std::uint64_t init_seed = 0;
  std::array<double, 3> input_mean = kImageNetMean;
  std::array<double, 3> input_std = kImageNetStd;

  bool has(ColumnKind kind) const;
  // Throws ConfigError.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
// Strict: unknown keys are rejected with ConfigError.
void from_json(const nlohmann::json& j, ModelConfig& c);

// Network inputs for one sample; only the configured columns are read.
struct SampleInputs {
  std::optional<SaliencyMap> saliency;  // 224 x 224, values in [0,1]
  std::optional<ImageGrid> rgb_patch;   // normalized 3 x 224 x 224
  std::optional<ImageGrid> rgb_warp;    // normalized 3 x 224 x 224
};

// What a classifier needs to turn an image into SampleInputs.
struct InputSpec {
  std::vector<ColumnKind> columns;
  std::array<double, 3> mean = kImageNetMean;
  std::array<double, 3> stddev = kImageNetStd;
  int size = kNetworkInputSize;
};

// Anything that maps per-patch inputs to class probabilities.
class PatchClassifier {
 public:
  virtual ~PatchClassifier() = default;
  virtual std::size_t num_classes() const = 0;
  virtual InputSpec input_spec() const = 0;
  virtual std::vector<std::vector<double>> predict_proba(std::span<const SampleInputs> batch) const = 0;
};

// Parameter-free saliency column: two 2x2 stride-2 max-pools (224 -> 112 -> 56)
// flattened row-major to 3136 values. Throws ShapeError unless 224 x 224.
nn::Vector saliency_column_forward(const SaliencyMap& map);

enum class Mode { train, eval };
enum class ParamGroup { backbone, new_layers };

// Names are qualified by column for backbone arrays ("rgb_patch.conv1.weight").
struct ParameterRef {
  std::string name;
  nn::Matrix* value;
  ParamGroup group;
};

struct ParameterGroups {
  std::vector<std::string> backbone;
  std::vector<std::string> new_layers;
};

// Per-parameter gradients, aligned with Model::parameters().
using Gradients = std::vector<nn::Matrix>;

struct StepResult {
  double loss = 0.0;  // weighted mean cross-entropy over the batch
  nn::Matrix logits;  // batch x classes
};

// Columns -> concatenation -> fusion FC -> ReLU -> dropout -> classifier FC.
// Eval-mode calls are const and safe to run concurrently.
class Model final : public PatchClassifier {
 public:
  explicit Model(ModelConfig config);
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  Model clone() const;

  const ModelConfig& config() const noexcept { return config_; }
  std::size_t num_classes() const override { return config_.num_classes; }
  InputSpec input_spec() const override;

  std::size_t column_dim(std::size_t column) const;
  std::size_t fusion_input_dim() const;

  // Raw per-column features (batch x column_dim) in declared column order.
  std::vector<nn::Matrix> column_features(std::span<const SampleInputs> batch) const;

  // Fusion + classifier on already concatenated features (batch x fusion input).
  nn::Matrix classify_features(const nn::Matrix& features, Mode mode,
                               std::uint64_t dropout_seed = 0) const;

  // Logits, batch x classes. Throws ShapeError on missing column inputs.
  nn::Matrix forward(std::span<const SampleInputs> batch, Mode mode,
                     std::uint64_t dropout_seed = 0) const;
  std::vector<std::vector<double>> predict_proba(std::span<const SampleInputs> batch) const override;

  // Train-mode forward and backward. sample_weights may be empty (all ones).
  // grads is resized to match parameters().
  StepResult compute_gradients(std::span<const SampleInputs> batch, std::span<const std::size_t> labels,
                               std::span<const double> sample_weights, std::uint64_t dropout_seed,
                               Gradients& grads, Mode mode = Mode::train) const;

  std::vector<ParameterRef> parameters();
  // Qualified names aligned with parameters() and parameter_list().
  std::vector<std::string> parameter_names() const;
  std::vector<const Parameter*> parameter_list() const;
  std::size_t num_parameters() const;
  ParameterGroups parameter_groups() const;
  Gradients zero_gradients() const;

  // Backbone of an RGB column, nullptr for the saliency column.
  const Backbone* backbone(std::size_t column) const;

  void set_jobs(int jobs) { jobs_ = jobs < 1 ? 1 : jobs; }

 private:
  struct Tapes;

  nn::Matrix assemble(const std::vector<nn::Matrix>& blocks, nn::Matrix* projected_saliency) const;
  std::vector<nn::Matrix> column_features_impl(std::span<const SampleInputs> batch,
                                               Tapes* tapes) const;
  ParamGroup backbone_group() const;

  ModelConfig config_;
  std::vector<std::unique_ptr<Backbone>> backbones_;  // one slot per column
  std::vector<Parameter> head_;                       // projection?, fusion, classifier
  int jobs_ = 1;
};

}  // namespace salrgb
