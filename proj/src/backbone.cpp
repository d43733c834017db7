#include "salrgb/backbone.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <random>

#include "salrgb/error.hpp"
#include "salrgb/rng.hpp"

namespace salrgb {
namespace {

using nn::FeatureMap;
using nn::Matrix;
using nn::Vector;

struct ToyTape final : BackboneTape {
  FeatureMap input;
  FeatureMap activations[3];  // post-ReLU conv outputs
  FeatureMap pooled[3];
  std::vector<std::int32_t> argmax[3];
};

void check_input(const ImageGrid& input, int size) {
  if (input.channels() != 3 || input.height() != size || input.width() != size) {
    throw ShapeError("backbone expects a 3x" + std::to_string(size) + "x" + std::to_string(size) +
                     " input, got " + std::to_string(input.channels()) + "x" +
                     std::to_string(input.height()) + "x" + std::to_string(input.width()));
  }
}

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, BackboneFactory, std::less<>>& registry() {
  static std::map<std::string, BackboneFactory, std::less<>> r{
      {std::string(ToyBackbone::kId),
       [](std::uint64_t seed) -> std::unique_ptr<Backbone> { return std::make_unique<ToyBackbone>(seed); }}};
  return r;
}

}  // namespace

ToyBackbone::ToyBackbone(std::uint64_t seed) {
  Rng rng(seed);
  int in_channels = 3;
  for (int stage = 0; stage < 3; ++stage) {
    const int out_channels = kWidths[stage];
    const int fan_in = in_channels * 9;
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    Matrix w(out_channels, fan_in);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
    const std::string prefix = "conv" + std::to_string(stage + 1);
    params_.push_back({prefix + ".weight", std::move(w)});
    params_.push_back({prefix + ".bias", Matrix::Zero(out_channels, 1)});
    in_channels = out_channels;
  }
}

Vector ToyBackbone::forward(const ImageGrid& input) const {
  check_input(input, input_size());
  FeatureMap x = nn::to_feature_map(input);
  for (int stage = 0; stage < 3; ++stage) {
    FeatureMap z = nn::conv3x3_forward(x, params_[2 * stage].value, params_[2 * stage + 1].value);
    nn::relu_inplace(z.data);
    x = nn::maxpool2x2(z);
  }
  return nn::global_average_pool(x);
}

Vector ToyBackbone::forward(const ImageGrid& input, std::unique_ptr<BackboneTape>& tape) const {
  check_input(input, input_size());
  auto t = std::make_unique<ToyTape>();
  t->input = nn::to_feature_map(input);
  const FeatureMap* x = &t->input;
  for (int stage = 0; stage < 3; ++stage) {
    t->activations[stage] = nn::conv3x3_forward(*x, params_[2 * stage].value, params_[2 * stage + 1].value);
    nn::relu_inplace(t->activations[stage].data);
    auto pooled = nn::maxpool2x2_forward(t->activations[stage]);
    t->pooled[stage] = std::move(pooled.out);
    t->argmax[stage] = std::move(pooled.argmax);
    x = &t->pooled[stage];
  }
  Vector features = nn::global_average_pool(t->pooled[2]);
  tape = std::move(t);
  return features;
}

void ToyBackbone::backward(const BackboneTape& tape, const Vector& grad_features,
                           std::span<Matrix> param_grads) const {
  const auto& t = dynamic_cast<const ToyTape&>(tape);
  if (param_grads.size() != params_.size()) throw ShapeError("toy backbone: gradient count mismatch");
  const FeatureMap& last = t.pooled[2];
  // Global average pool spreads each channel's gradient evenly.
  Matrix grad = grad_features.replicate(1, last.data.cols()) / static_cast<double>(last.data.cols());
  for (int stage = 2; stage >= 0; --stage) {
    const FeatureMap& act = t.activations[stage];
    Matrix grad_act = nn::maxpool2x2_backward(grad, t.argmax[stage], act.channels(),
                                              static_cast<int>(act.data.cols()));
    grad_act = (act.data.array() > 0.0).select(grad_act, 0.0);
    const FeatureMap& in = stage == 0 ? t.input : t.pooled[stage - 1];
    Matrix grad_in;
    nn::conv3x3_backward(in, params_[2 * stage].value, grad_act, param_grads[2 * stage],
                         param_grads[2 * stage + 1], stage == 0 ? nullptr : &grad_in);
    grad = std::move(grad_in);
  }
}

std::unique_ptr<Backbone> ToyBackbone::clone() const { return std::make_unique<ToyBackbone>(*this); }

void register_backbone(std::string id, BackboneFactory factory) {
  std::lock_guard lock(registry_mutex());
  registry()[std::move(id)] = std::move(factory);
}

bool has_backbone(std::string_view id) {
  std::lock_guard lock(registry_mutex());
  return registry().find(id) != registry().end();
}

std::unique_ptr<Backbone> make_backbone(std::string_view id, std::uint64_t seed) {
  BackboneFactory factory;
  {
    std::lock_guard lock(registry_mutex());
    const auto it = registry().find(id);
    if (it == registry().end()) throw ConfigError("unknown backbone '" + std::string(id) + "'");
    factory = it->second;
  }
  return factory(seed);
}

}  // namespace salrgb
