#include "salrgb/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "json_util.hpp"
#include "salrgb/error.hpp"
#include "salrgb/loss.hpp"
#include "salrgb/parallel.hpp"
#include "salrgb/rng.hpp"

namespace salrgb {

using nn::Matrix;
using nn::Vector;
using nlohmann::json;

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::saliency: return "saliency";
    case ColumnKind::rgb_patch: return "rgb_patch";
    case ColumnKind::rgb_warp: return "rgb_warp";
  }
  return "?";
}

ColumnKind parse_column_kind(std::string_view s) {
  if (s == "saliency") return ColumnKind::saliency;
  if (s == "rgb_patch") return ColumnKind::rgb_patch;
  if (s == "rgb_warp") return ColumnKind::rgb_warp;
  throw ConfigError("unknown column kind '" + std::string(s) + "'");
}

bool ModelConfig::has(ColumnKind kind) const {
  return std::find(columns.begin(), columns.end(), kind) != columns.end();
}

void ModelConfig::validate() const {
  if (columns.empty()) throw ConfigError("model needs at least one column");
  for (const auto kind : {ColumnKind::saliency, ColumnKind::rgb_patch, ColumnKind::rgb_warp}) {
    if (std::count(columns.begin(), columns.end(), kind) > 1) {
      throw ConfigError("column '" + std::string(to_string(kind)) + "' declared more than once");
    }
  }
  if (fusion_dim == 0) throw ConfigError("fusion_dim must be positive");
  if (num_classes == 0) throw ConfigError("num_classes must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout_rate must lie in [0, 1)");
  if ((has(ColumnKind::rgb_patch) || has(ColumnKind::rgb_warp)) && !has_backbone(backbone_id)) {
    throw ConfigError("unknown backbone '" + backbone_id + "'");
  }
  for (const double s : input_std) {
    if (!(s > 0.0)) throw ConfigError("input_std entries must be positive");
  }
}

void to_json(json& j, const ModelConfig& c) {
  std::vector<std::string> columns;
  for (const auto k : c.columns) columns.emplace_back(to_string(k));
  j = json{{"columns", columns},
           {"backbone_id", c.backbone_id},
           {"backbone_weights", c.backbone_weights},
           {"rgb_feature_dim", c.rgb_feature_dim},
           {"fusion_dim", c.fusion_dim},
           {"num_classes", c.num_classes},
           {"dropout_rate", c.dropout_rate},
           {"saliency_projection_dim", c.saliency_projection_dim},
           {"saliency_feature_dim", kSaliencyFeatureDim},
           {"init_seed", c.init_seed},
           {"input_mean", c.input_mean},
           {"input_std", c.input_std}};
}

void from_json(const json& j, ModelConfig& c) {
  constexpr std::string_view section = "model";
  detail::require_known_keys(j,
                             {"columns", "backbone_id", "backbone_weights", "rgb_feature_dim",
                              "fusion_dim", "num_classes", "dropout_rate", "saliency_projection_dim",
                              "saliency_feature_dim", "init_seed", "input_mean", "input_std"},
                             section);
  if (j.contains("columns")) {
    std::vector<std::string> names;
    detail::read_optional(j, "columns", names, section);
    c.columns.clear();
    for (const auto& n : names) c.columns.push_back(parse_column_kind(n));
  }
  detail::read_optional(j, "backbone_id", c.backbone_id, section);
  detail::read_optional(j, "backbone_weights", c.backbone_weights, section);
  detail::read_optional(j, "rgb_feature_dim", c.rgb_feature_dim, section);
  detail::read_optional(j, "fusion_dim", c.fusion_dim, section);
  detail::read_optional(j, "num_classes", c.num_classes, section);
  detail::read_optional(j, "dropout_rate", c.dropout_rate, section);
  detail::read_optional(j, "saliency_projection_dim", c.saliency_projection_dim, section);
  detail::read_optional(j, "init_seed", c.init_seed, section);
  detail::read_optional(j, "input_mean", c.input_mean, section);
  detail::read_optional(j, "input_std", c.input_std, section);
  if (j.contains("saliency_feature_dim") && j.at("saliency_feature_dim") != kSaliencyFeatureDim) {
    throw ConfigError("saliency_feature_dim is fixed at 3136");
  }
}

Vector saliency_column_forward(const SaliencyMap& map) {
  if (map.height() != kNetworkInputSize || map.width() != kNetworkInputSize) {
    throw ShapeError("saliency column expects a 224x224 map, got " + std::to_string(map.height()) +
                     "x" + std::to_string(map.width()));
  }
  nn::FeatureMap fm;
  fm.height = map.height();
  fm.width = map.width();
  fm.data = Eigen::Map<const Matrix>(map.values().data(), 1, static_cast<Eigen::Index>(map.size()));
  const nn::FeatureMap pooled = nn::maxpool2x2(nn::maxpool2x2(fm));
  return pooled.data.row(0).transpose();
}

// Per-column, per-item backbone activations kept for backward.
struct Model::Tapes {
  std::vector<std::vector<std::unique_ptr<BackboneTape>>> columns;
};

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::uint64_t seed) {
  Rng rng(seed);
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = keep(rng) ? scale : 0.0;
  return m;
}

const ImageGrid& rgb_input(const SampleInputs& s, ColumnKind kind) {
  const auto& slot = kind == ColumnKind::rgb_patch ? s.rgb_patch : s.rgb_warp;
  if (!slot) throw ShapeError("missing input for column '" + std::string(to_string(kind)) + "'");
  return *slot;
}

}  // namespace

Model::Model(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  backbones_.resize(config_.columns.size());
  std::size_t reported_rgb_dim = 0;
  for (std::size_t c = 0; c < config_.columns.size(); ++c) {
    if (config_.columns[c] == ColumnKind::saliency) continue;
    backbones_[c] = make_backbone(config_.backbone_id, mix_seed(config_.init_seed, c + 1));
    reported_rgb_dim = backbones_[c]->feature_dim();
  }
  if (reported_rgb_dim != 0) {
    if (config_.rgb_feature_dim != 0 && config_.rgb_feature_dim != reported_rgb_dim) {
      throw ConfigError("rgb_feature_dim " + std::to_string(config_.rgb_feature_dim) +
                        " does not match backbone report " + std::to_string(reported_rgb_dim));
    }
    config_.rgb_feature_dim = reported_rgb_dim;
  }

  const auto head_seed = mix_seed(config_.init_seed, 0x4ead);
  if (config_.saliency_projection_dim > 0) {
    const auto d = static_cast<Eigen::Index>(config_.saliency_projection_dim);
    head_.push_back({"saliency_projection.weight",
                     random_matrix(d, kSaliencyFeatureDim, std::sqrt(1.0 / kSaliencyFeatureDim),
                                   mix_seed(head_seed, 1))});
    head_.push_back({"saliency_projection.bias", Matrix::Zero(d, 1)});
  }
  const auto in = static_cast<Eigen::Index>(fusion_input_dim());
  const auto fusion = static_cast<Eigen::Index>(config_.fusion_dim);
  const auto classes = static_cast<Eigen::Index>(config_.num_classes);
  head_.push_back({"fusion.weight", random_matrix(fusion, in, std::sqrt(2.0 / in), mix_seed(head_seed, 2))});
  head_.push_back({"fusion.bias", Matrix::Zero(fusion, 1)});
  head_.push_back({"classifier.weight",
                   random_matrix(classes, fusion, std::sqrt(1.0 / fusion), mix_seed(head_seed, 3))});
  head_.push_back({"classifier.bias", Matrix::Zero(classes, 1)});
}

Model Model::clone() const {
  Model copy(config_);
  for (std::size_t c = 0; c < backbones_.size(); ++c) {
    if (backbones_[c]) copy.backbones_[c] = backbones_[c]->clone();
  }
  copy.head_ = head_;
  copy.jobs_ = jobs_;
  return copy;
}

InputSpec Model::input_spec() const {
  return {config_.columns, config_.input_mean, config_.input_std, kNetworkInputSize};
}

std::size_t Model::column_dim(std::size_t column) const {
  if (config_.columns.at(column) == ColumnKind::saliency) return kSaliencyFeatureDim;
  return backbones_[column]->feature_dim();
}

std::size_t Model::fusion_input_dim() const {
  std::size_t total = 0;
  for (std::size_t c = 0; c < config_.columns.size(); ++c) {
    if (config_.columns[c] == ColumnKind::saliency && config_.saliency_projection_dim > 0) {
      total += config_.saliency_projection_dim;
    } else {
      total += column_dim(c);
    }
  }
  return total;
}

const Backbone* Model::backbone(std::size_t column) const { return backbones_.at(column).get(); }

std::vector<Matrix> Model::column_features_impl(std::span<const SampleInputs> batch, Tapes* tapes) const {
  const auto n = static_cast<Eigen::Index>(batch.size());
  std::vector<Matrix> blocks(config_.columns.size());
  if (tapes) {
    tapes->columns.clear();
    tapes->columns.resize(config_.columns.size());
  }
  for (std::size_t c = 0; c < config_.columns.size(); ++c) {
    const ColumnKind kind = config_.columns[c];
    Matrix& block = blocks[c];
    block.resize(n, static_cast<Eigen::Index>(column_dim(c)));
    if (kind == ColumnKind::saliency) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& map = batch[static_cast<std::size_t>(i)].saliency;
        if (!map) throw ShapeError("missing input for column 'saliency'");
        block.row(i) = saliency_column_forward(*map).transpose();
      }
      continue;
    }
    const Backbone& bb = *backbones_[c];
    if (tapes) tapes->columns[c].resize(batch.size());
    parallel_for(batch.size(), jobs_, [&](std::size_t i) {
      const ImageGrid& input = rgb_input(batch[i], kind);
      block.row(static_cast<Eigen::Index>(i)) =
          (tapes ? bb.forward(input, tapes->columns[c][i]) : bb.forward(input)).transpose();
    });
  }
  return blocks;
}

std::vector<Matrix> Model::column_features(std::span<const SampleInputs> batch) const {
  return column_features_impl(batch, nullptr);
}

Matrix Model::assemble(const std::vector<Matrix>& blocks, Matrix* projected_saliency) const {
  const Eigen::Index n = blocks.empty() ? 0 : blocks[0].rows();
  Matrix x(n, static_cast<Eigen::Index>(fusion_input_dim()));
  Eigen::Index offset = 0;
  for (std::size_t c = 0; c < blocks.size(); ++c) {
    if (config_.columns[c] == ColumnKind::saliency && config_.saliency_projection_dim > 0) {
      Matrix projected = blocks[c] * head_[0].value.transpose();
      projected.rowwise() += head_[1].value.col(0).transpose();
      x.middleCols(offset, projected.cols()) = projected;
      offset += projected.cols();
      if (projected_saliency) *projected_saliency = std::move(projected);
    } else {
      x.middleCols(offset, blocks[c].cols()) = blocks[c];
      offset += blocks[c].cols();
    }
  }
  return x;
}

namespace {

struct HeadPass {
  Matrix pre;     // fusion pre-activation
  Matrix hidden;  // after ReLU and dropout
  Matrix mask;    // empty when dropout is off
  Matrix logits;
};

HeadPass run_head(const Matrix& x, const Matrix& w1, const Matrix& b1, const Matrix& w2,
                  const Matrix& b2, double dropout, Mode mode, std::uint64_t seed) {
  if (x.cols() != w1.cols()) {
    throw ShapeError("fusion input has " + std::to_string(x.cols()) + " features, expected " +
                     std::to_string(w1.cols()));
  }
  HeadPass p;
  p.pre.noalias() = x * w1.transpose();
  p.pre.rowwise() += b1.col(0).transpose();
  p.hidden = p.pre.cwiseMax(0.0);
  if (mode == Mode::train && dropout > 0.0) {
    p.mask = dropout_mask(p.hidden.rows(), p.hidden.cols(), dropout, seed);
    p.hidden = p.hidden.cwiseProduct(p.mask);
  }
  p.logits.noalias() = p.hidden * w2.transpose();
  p.logits.rowwise() += b2.col(0).transpose();
  return p;
}

}  // namespace

Matrix Model::classify_features(const Matrix& features, Mode mode, std::uint64_t dropout_seed) const {
  const std::size_t f = config_.saliency_projection_dim > 0 ? 2 : 0;
  return run_head(features, head_[f].value, head_[f + 1].value, head_[f + 2].value, head_[f + 3].value,
                  config_.dropout_rate, mode, dropout_seed)
      .logits;
}

Matrix Model::forward(std::span<const SampleInputs> batch, Mode mode, std::uint64_t dropout_seed) const {
  return classify_features(assemble(column_features_impl(batch, nullptr), nullptr), mode, dropout_seed);
}

std::vector<std::vector<double>> Model::predict_proba(std::span<const SampleInputs> batch) const {
  const Matrix logits = forward(batch, Mode::eval);
  std::vector<std::vector<double>> out;
  out.reserve(batch.size());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    out.push_back(softmax(std::span<const double>(logits.row(i).data(), static_cast<std::size_t>(logits.cols()))));
  }
  return out;
}

ParamGroup Model::backbone_group() const {
  return config_.backbone_weights.empty() ? ParamGroup::new_layers : ParamGroup::backbone;
}

std::vector<ParameterRef> Model::parameters() {
  std::vector<ParameterRef> refs;
  for (std::size_t c = 0; c < backbones_.size(); ++c) {
    if (!backbones_[c]) continue;
    const std::string prefix = std::string(to_string(config_.columns[c])) + ".";
    for (auto& p : backbones_[c]->parameters()) refs.push_back({prefix + p.name, &p.value, backbone_group()});
  }
  for (auto& p : head_) refs.push_back({p.name, &p.value, ParamGroup::new_layers});
  return refs;
}

std::vector<std::string> Model::parameter_names() const {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < backbones_.size(); ++c) {
    if (!backbones_[c]) continue;
    const std::string prefix = std::string(to_string(config_.columns[c])) + ".";
    for (const auto& p : backbones_[c]->parameters()) names.push_back(prefix + p.name);
  }
  for (const auto& p : head_) names.push_back(p.name);
  return names;
}

std::vector<const Parameter*> Model::parameter_list() const {
  std::vector<const Parameter*> out;
  for (std::size_t c = 0; c < backbones_.size(); ++c) {
    if (!backbones_[c]) continue;
    for (const auto& p : backbones_[c]->parameters()) out.push_back(&p);
  }
  for (const auto& p : head_) out.push_back(&p);
  return out;
}

std::size_t Model::num_parameters() const {
  std::size_t n = 0;
  for (const auto* p : parameter_list()) n += static_cast<std::size_t>(p->value.size());
  return n;
}

ParameterGroups Model::parameter_groups() const {
  ParameterGroups groups;
  const auto names = parameter_names();
  const std::size_t backbone_count = names.size() - head_.size();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const bool in_backbone = i < backbone_count && backbone_group() == ParamGroup::backbone;
    (in_backbone ? groups.backbone : groups.new_layers).push_back(names[i]);
  }
  return groups;
}

Gradients Model::zero_gradients() const {
  Gradients g;
  for (const auto* p : parameter_list()) g.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  return g;
}

StepResult Model::compute_gradients(std::span<const SampleInputs> batch, std::span<const std::size_t> labels,
                                    std::span<const double> sample_weights, std::uint64_t dropout_seed,
                                    Gradients& grads, Mode mode) const {
  if (batch.empty()) throw ShapeError("empty batch");
  if (labels.size() != batch.size()) throw ShapeError("label count does not match batch size");
  if (!sample_weights.empty() && sample_weights.size() != batch.size()) {
    throw ShapeError("sample weight count does not match batch size");
  }
  const auto n = static_cast<Eigen::Index>(batch.size());
  Tapes tapes;
  const std::vector<Matrix> blocks = column_features_impl(batch, &tapes);
  Matrix projected;
  const Matrix x = assemble(blocks, &projected);
  const std::size_t f = config_.saliency_projection_dim > 0 ? 2 : 0;
  const Matrix& w1 = head_[f].value;
  const Matrix& w2 = head_[f + 2].value;
  HeadPass pass = run_head(x, w1, head_[f + 1].value, w2, head_[f + 3].value, config_.dropout_rate, mode,
                           dropout_seed);

  StepResult result;
  Matrix grad_logits(pass.logits.rows(), pass.logits.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::span<const double> row(pass.logits.row(i).data(), static_cast<std::size_t>(pass.logits.cols()));
    const std::size_t label = labels[static_cast<std::size_t>(i)];
    const double w = sample_weights.empty() ? 1.0 : sample_weights[static_cast<std::size_t>(i)];
    loss += w * cross_entropy(row, label);
    const auto p = softmax(row);
    for (Eigen::Index k = 0; k < grad_logits.cols(); ++k) {
      grad_logits(i, k) = w * (p[static_cast<std::size_t>(k)] - (static_cast<std::size_t>(k) == label ? 1.0 : 0.0)) /
                          static_cast<double>(n);
    }
  }
  result.loss = loss / static_cast<double>(n);

  grads = zero_gradients();
  const std::size_t head_offset = grads.size() - head_.size();
  Matrix& gw1 = grads[head_offset + f];
  Matrix& gb1 = grads[head_offset + f + 1];
  Matrix& gw2 = grads[head_offset + f + 2];
  Matrix& gb2 = grads[head_offset + f + 3];

  gw2.noalias() = grad_logits.transpose() * pass.hidden;
  gb2.col(0) = grad_logits.colwise().sum().transpose();
  Matrix grad_hidden = grad_logits * w2;
  if (pass.mask.size() > 0) grad_hidden = grad_hidden.cwiseProduct(pass.mask);
  const Matrix grad_pre = (pass.pre.array() > 0.0).select(grad_hidden, 0.0);
  gw1.noalias() = grad_pre.transpose() * x;
  gb1.col(0) = grad_pre.colwise().sum().transpose();
  const Matrix grad_x = grad_pre * w1;

  Eigen::Index offset = 0;
  std::size_t param_offset = 0;
  for (std::size_t c = 0; c < config_.columns.size(); ++c) {
    if (config_.columns[c] == ColumnKind::saliency) {
      if (config_.saliency_projection_dim > 0) {
        const auto d = static_cast<Eigen::Index>(config_.saliency_projection_dim);
        const Matrix grad_block = grad_x.middleCols(offset, d);
        grads[head_offset].noalias() = grad_block.transpose() * blocks[c];
        grads[head_offset + 1].col(0) = grad_block.colwise().sum().transpose();
        offset += d;
      } else {
        offset += blocks[c].cols();
      }
      continue;
    }
    const Backbone& bb = *backbones_[c];
    const auto dim = blocks[c].cols();
    const std::size_t count = bb.parameters().size();
    // Per-item gradients reduced in item order: identical for any job count.
    std::vector<std::vector<Matrix>> per_item(batch.size());
    parallel_for(batch.size(), jobs_, [&](std::size_t i) {
      auto& g = per_item[i];
      for (const auto& p : bb.parameters()) g.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
      const Vector grad_features = grad_x.row(static_cast<Eigen::Index>(i)).segment(offset, dim).transpose();
      bb.backward(*tapes.columns[c][i], grad_features, g);
      tapes.columns[c][i].reset();
    });
    for (std::size_t i = 0; i < batch.size(); ++i) {
      for (std::size_t k = 0; k < count; ++k) grads[param_offset + k] += per_item[i][k];
    }
    param_offset += count;
    offset += dim;
  }
  result.logits = std::move(pass.logits);
  return result;
}

}  // namespace salrgb
