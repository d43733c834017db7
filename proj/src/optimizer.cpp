#include "salrgb/optimizer.hpp"

#include "salrgb/error.hpp"

namespace salrgb {

SgdOptimizer::SgdOptimizer(std::vector<OptimizedParam> params, OptimizerConfig config)
    : params_(std::move(params)), config_(config) {
  if (params_.empty()) throw ConfigError("optimizer has no parameters");
  if (config_.base_lr < 0.0 || config_.head_lr < 0.0) throw ConfigError("learning rates must be >= 0");
  if (config_.momentum < 0.0 || config_.momentum >= 1.0) throw ConfigError("momentum must lie in [0, 1)");
  if (config_.weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  velocity_.reserve(params_.size());
  for (const auto& p : params_) velocity_.push_back(nn::Matrix::Zero(p.value->rows(), p.value->cols()));
}

double SgdOptimizer::lr(ParamGroup group) const {
  return group == ParamGroup::backbone ? config_.base_lr : config_.head_lr;
}

void SgdOptimizer::step(std::span<const nn::Matrix> grads, double lr_scale) {
  if (grads.size() != params_.size()) throw ShapeError("gradient count does not match parameters");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const double rate = lr(params_[i].group) * lr_scale;
    if (rate == 0.0) continue;
    nn::Matrix& w = *params_[i].value;
    if (grads[i].rows() != w.rows() || grads[i].cols() != w.cols()) {
      throw ShapeError("gradient shape mismatch for '" + params_[i].name + "'");
    }
    nn::Matrix& v = velocity_[i];
    v = config_.momentum * v + grads[i] + config_.weight_decay * w;
    w -= rate * v;
  }
}

std::vector<NamedArray> SgdOptimizer::momentum_state() const {
  std::vector<NamedArray> out;
  out.reserve(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) out.push_back({params_[i].name, velocity_[i]});
  return out;
}

void SgdOptimizer::restore_momentum(std::span<const NamedArray> state) {
  if (state.size() != params_.size()) throw DataError("momentum state has the wrong number of arrays");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (state[i].name != params_[i].name || state[i].value.rows() != velocity_[i].rows() ||
        state[i].value.cols() != velocity_[i].cols()) {
      throw DataError("momentum state does not match parameter '" + params_[i].name + "'");
    }
    velocity_[i] = state[i].value;
  }
}

SgdOptimizer make_optimizer(Model& model, const OptimizerConfig& config) {
  std::vector<OptimizedParam> params;
  for (auto& ref : model.parameters()) params.push_back({ref.name, ref.value, ref.group});
  return SgdOptimizer(std::move(params), config);
}

}  // namespace salrgb
