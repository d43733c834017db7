#pragma once

#include <span>
#include <string>
#include <vector>

#include "salrgb/layers.hpp"
#include "salrgb/model.hpp"

namespace salrgb {

struct OptimizerConfig {
  double base_lr = 1e-3;  // backbone group
  double head_lr = 1e-2;  // new layers
  double momentum = 0.9;
  double weight_decay = 1e-4;
  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

struct OptimizedParam {
  std::string name;
  nn::Matrix* value;
  ParamGroup group;
};

struct NamedArray {
  std::string name;
  nn::Matrix value;
  friend bool operator==(const NamedArray&, const NamedArray&) = default;
};

// SGD with momentum (v = mu*v + g + wd*w; w -= lr*v) over two learning-rate
// groups. A group whose effective rate is zero is left untouched.
class SgdOptimizer {
 public:
  // Throws ConfigError when there is nothing to optimize.
  SgdOptimizer(std::vector<OptimizedParam> params, OptimizerConfig config);

  // grads aligned with the constructor's params; lr_scale multiplies both
  // group rates (used by the step schedule).
  void step(std::span<const nn::Matrix> grads, double lr_scale = 1.0);

  double lr(ParamGroup group) const;
  const OptimizerConfig& config() const noexcept { return config_; }
  std::size_t size() const noexcept { return params_.size(); }

  std::vector<NamedArray> momentum_state() const;
  // Throws DataError when names or shapes do not match.
  void restore_momentum(std::span<const NamedArray> state);

 private:
  std::vector<OptimizedParam> params_;
  std::vector<nn::Matrix> velocity_;
  OptimizerConfig config_;
};

SgdOptimizer make_optimizer(Model& model, const OptimizerConfig& config);

}  // namespace salrgb
