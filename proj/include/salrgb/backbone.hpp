#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "salrgb/image.hpp"
#include "salrgb/layers.hpp"

namespace salrgb {

struct Parameter {
  std::string name;
  nn::Matrix value;
};

// Activations a backbone keeps between forward and backward.
class BackboneTape {
 public:
  virtual ~BackboneTape() = default;
};

// RGB feature extractor behind the adapter boundary: an image classifier with
// its final classification layer removed, reporting a fixed feature length.
// Eval-mode forward must be deterministic for fixed weights.
class Backbone {
 public:
  virtual ~Backbone() = default;

  virtual std::string_view id() const = 0;
  virtual std::size_t feature_dim() const = 0;
  virtual int input_size() const { return 224; }

  virtual std::span<Parameter> parameters() = 0;
  virtual std::span<const Parameter> parameters() const = 0;

  // Input: normalized 3 x size x size grid. Throws ShapeError otherwise.
  virtual nn::Vector forward(const ImageGrid& input) const = 0;
  virtual nn::Vector forward(const ImageGrid& input, std::unique_ptr<BackboneTape>& tape) const = 0;
  // param_grads is aligned with parameters(); gradients are accumulated.
  virtual void backward(const BackboneTape& tape, const nn::Vector& grad_features,
                        std::span<nn::Matrix> param_grads) const = 0;

  virtual std::unique_ptr<Backbone> clone() const = 0;
};

// Three [3x3 conv, ReLU, 2x2 max-pool] stages of width 8/16/32 followed by a
// global average pool: a 32-dim feature for CPU-scale experiments.
class ToyBackbone final : public Backbone {
 public:
  static constexpr std::string_view kId = "toy";
  static constexpr int kWidths[3] = {8, 16, 32};

  explicit ToyBackbone(std::uint64_t seed);

  std::string_view id() const override { return kId; }
  std::size_t feature_dim() const override { return kWidths[2]; }
  std::span<Parameter> parameters() override { return params_; }
  std::span<const Parameter> parameters() const override { return params_; }

  nn::Vector forward(const ImageGrid& input) const override;
  nn::Vector forward(const ImageGrid& input, std::unique_ptr<BackboneTape>& tape) const override;
  void backward(const BackboneTape& tape, const nn::Vector& grad_features,
                std::span<nn::Matrix> param_grads) const override;
  std::unique_ptr<Backbone> clone() const override;

 private:
  std::vector<Parameter> params_;  // conv{1,2,3}.{weight,bias}
};

using BackboneFactory = std::function<std::unique_ptr<Backbone>(std::uint64_t seed)>;

// Adapter registry. "toy" is always present; larger pretrained extractors
// register themselves here under their own id.
void register_backbone(std::string id, BackboneFactory factory);
bool has_backbone(std::string_view id);
// Throws ConfigError for unknown ids.
std::unique_ptr<Backbone> make_backbone(std::string_view id, std::uint64_t seed);

}  // namespace salrgb
