#include "salrgb/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json_util.hpp"
#include "salrgb/checkpoint.hpp"
#include "salrgb/error.hpp"
#include "salrgb/log.hpp"
#include "salrgb/parallel.hpp"

namespace salrgb {

using nlohmann::json;
namespace fs = std::filesystem;

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(optimizer.head_lr > 0.0)) throw ConfigError("train.head_lr must be > 0");
  // Zero is allowed here and means "do not update the backbone".
  if (!(optimizer.base_lr >= 0.0)) throw ConfigError("train.base_lr must be >= 0");
  if (optimizer.momentum < 0.0 || optimizer.momentum >= 1.0) throw ConfigError("train.momentum must lie in [0, 1)");
  if (optimizer.weight_decay < 0.0) throw ConfigError("train.weight_decay must be >= 0");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0)) throw ConfigError("train.lr_decay_factor must lie in (0, 1]");
  if (lr_decay_period < 1) throw ConfigError("train.lr_decay_period must be >= 1");
  if (augment.crop_size < 1) throw ConfigError("train.crop_size must be >= 1");
  if (augment.resize_short < 0) throw ConfigError("train.resize_short must be >= 0");
  if (jobs < 0) throw ConfigError("train.jobs must be >= 0");
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"epochs", c.epochs},
           {"batch_size", c.batch_size},
           {"base_lr", c.optimizer.base_lr},
           {"head_lr", c.optimizer.head_lr},
           {"momentum", c.optimizer.momentum},
           {"weight_decay", c.optimizer.weight_decay},
           {"lr_decay_factor", c.lr_decay_factor},
           {"lr_decay_period", c.lr_decay_period},
           {"global_seed", c.global_seed},
           {"class_weighting", c.class_weighting ? "on" : "off"},
           {"resize_short", c.augment.resize_short},
           {"crop_size", c.augment.crop_size},
           {"hflip", c.augment.hflip},
           {"checkpoint_dir", c.checkpoint_dir},
           {"patience", c.patience},
           {"freeze_backbone", c.freeze_backbone},
           {"val_patches", to_string(c.val_patches)},
           {"jobs", c.jobs}};
}

void from_json(const json& j, TrainConfig& c) {
  constexpr std::string_view s = "train";
  detail::require_known_keys(j,
                             {"epochs", "batch_size", "base_lr", "head_lr", "momentum", "weight_decay",
                              "lr_decay_factor", "lr_decay_period", "global_seed", "class_weighting",
                              "resize_short", "crop_size", "hflip", "checkpoint_dir", "patience",
                              "freeze_backbone", "val_patches", "jobs"},
                             s);
  detail::read_optional(j, "epochs", c.epochs, s);
  detail::read_optional(j, "batch_size", c.batch_size, s);
  detail::read_optional(j, "base_lr", c.optimizer.base_lr, s);
  detail::read_optional(j, "head_lr", c.optimizer.head_lr, s);
  detail::read_optional(j, "momentum", c.optimizer.momentum, s);
  detail::read_optional(j, "weight_decay", c.optimizer.weight_decay, s);
  detail::read_optional(j, "lr_decay_factor", c.lr_decay_factor, s);
  detail::read_optional(j, "lr_decay_period", c.lr_decay_period, s);
  detail::read_optional(j, "global_seed", c.global_seed, s);
  if (j.contains("class_weighting")) {
    const auto& v = j.at("class_weighting");
    if (v.is_boolean()) {
      c.class_weighting = v.get<bool>();
    } else if (v == "on" || v == "off") {
      c.class_weighting = v == "on";
    } else {
      throw ConfigError("train.class_weighting must be \"on\" or \"off\"");
    }
  }
  detail::read_optional(j, "resize_short", c.augment.resize_short, s);
  detail::read_optional(j, "crop_size", c.augment.crop_size, s);
  detail::read_optional(j, "hflip", c.augment.hflip, s);
  detail::read_optional(j, "checkpoint_dir", c.checkpoint_dir, s);
  detail::read_optional(j, "patience", c.patience, s);
  detail::read_optional(j, "freeze_backbone", c.freeze_backbone, s);
  if (j.contains("val_patches")) {
    std::string kind;
    detail::read_optional(j, "val_patches", kind, s);
    c.val_patches = parse_patch_policy(kind);
  }
  detail::read_optional(j, "jobs", c.jobs, s);
}

double lr_scale(const TrainConfig& config, std::size_t epoch) {
  return std::pow(config.lr_decay_factor, static_cast<double>(epoch / config.lr_decay_period));
}

ClassWeights class_weights(const ClassHistogram& histogram) {
  const std::size_t k = histogram.counts.size();
  const std::size_t n = histogram.total();
  if (n == 0) throw DataError("class histogram is empty");
  ClassWeights out;
  out.weights.assign(k, 0.0);
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (histogram.counts[c] == 0) {
      out.empty_classes.push_back(c < histogram.classes.size() ? histogram.classes[c] : std::to_string(c));
      continue;
    }
    out.weights[c] = static_cast<double>(n) / (static_cast<double>(k) * static_cast<double>(histogram.counts[c]));
    sum += out.weights[c];
    ++present;
  }
  const double mean = sum / static_cast<double>(present);
  for (auto& w : out.weights) w /= mean;
  for (const auto& name : out.empty_classes) log::warn("class '" + name + "' has no training samples; weight 0");
  return out;
}

namespace {

bool needs_saliency(const Model& model) { return model.config().has(ColumnKind::saliency); }

}  // namespace

EpochMetrics train_epoch(Model& model, std::span<const ImageRecord> records, const SampleSource& source,
                         const StyleTaxonomy& taxonomy, SgdOptimizer& optimizer, const TrainConfig& config,
                         std::size_t epoch, Rng& shuffle_rng, std::uint64_t& step,
                         std::span<const double> class_weights) {
  if (records.empty()) throw DataError("no training records");
  if (!class_weights.empty() && class_weights.size() != taxonomy.size()) {
    throw ShapeError("class weight count does not match taxonomy");
  }
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), shuffle_rng);

  const InputSpec spec = model.input_spec();
  const bool with_map = needs_saliency(model);
  const double scale = lr_scale(config, epoch);
  model.set_jobs(config.jobs);

  EpochMetrics metrics;
  std::size_t correct = 0;
  Gradients grads;
  for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
    const std::size_t end = std::min(order.size(), begin + config.batch_size);
    const std::size_t n = end - begin;
    std::vector<SampleInputs> batch(n);
    std::vector<std::size_t> labels(n);
    std::vector<double> weights;
    // Loading may run in parallel: each record draws from its own seeded stream.
    parallel_for(n, config.jobs, [&](std::size_t i) {
      const ImageRecord& r = records[order[begin + i]];
      if (r.labels.empty()) throw DataError("record '" + r.id + "' has no label");
      labels[i] = taxonomy.require_index(r.labels.front());
      Rng rng(record_seed(config.global_seed, r.id, epoch));
      const ImageGrid image = source.image(r);
      std::optional<SaliencyMap> map;
      if (with_map) map = source.saliency(r);
      batch[i] = build_train_inputs(spec, image, map ? &*map : nullptr, config.augment, rng);
    });
    if (!class_weights.empty()) {
      for (const auto label : labels) weights.push_back(class_weights[label]);
    }
    const StepResult result =
        model.compute_gradients(batch, labels, weights, mix_seed(config.global_seed, step), grads);
    if (!std::isfinite(result.loss)) {
      std::ostringstream msg;
      msg << "non-finite loss " << result.loss << " at epoch " << epoch << ", step " << step << " (records:";
      for (std::size_t i = begin; i < end; ++i) msg << ' ' << records[order[i]].id;
      msg << ')';
      throw TrainingError(msg.str());
    }
    optimizer.step(grads, scale);
    ++step;
    metrics.step_losses.push_back(result.loss);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = result.logits.row(static_cast<Eigen::Index>(i));
      Eigen::Index best = 0;
      row.maxCoeff(&best);
      if (static_cast<std::size_t>(best) == labels[i]) ++correct;
    }
  }
  metrics.mean_loss = std::accumulate(metrics.step_losses.begin(), metrics.step_losses.end(), 0.0) /
                      static_cast<double>(metrics.step_losses.size());
  metrics.accuracy = static_cast<double>(correct) / static_cast<double>(records.size());
  return metrics;
}

double dataset_accuracy(const PatchClassifier& classifier, std::span<const ImageRecord> records,
                        const SampleSource& source, const StyleTaxonomy& taxonomy, const PatchPolicy& policy,
                        int jobs) {
  if (records.empty()) throw DataError("no records");
  const auto columns = classifier.input_spec().columns;
  const bool with_map = std::find(columns.begin(), columns.end(), ColumnKind::saliency) != columns.end();
  std::vector<char> hit(records.size(), 0);
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    const ImageRecord& r = records[i];
    const ImageGrid image = source.image(r);
    std::optional<SaliencyMap> map;
    if (with_map) map = source.saliency(r);
    const auto probs = predict_image(classifier, image, map ? &*map : nullptr, policy, r.id);
    hit[i] = argmax(probs) == taxonomy.require_index(r.labels.at(0)) ? 1 : 0;
  });
  return static_cast<double>(std::count(hit.begin(), hit.end(), 1)) / static_cast<double>(records.size());
}

json to_json(const EpochLog& log) {
  return json{{"epoch", log.epoch},
              {"step", log.step},
              {"loss", log.loss},
              {"accuracy", log.accuracy},
              {"lr", log.lr},
              {"val_map", log.val_map ? json(*log.val_map) : json(nullptr)},
              {"wall_time", log.wall_time}};
}

namespace {

SgdOptimizer optimizer_for(Model& model, const TrainConfig& config) {
  // Frozen backbone arrays stay in the list (gradients are aligned with
  // parameters()) but move to a group whose rate is zero.
  OptimizerConfig oc = config.optimizer;
  if (config.freeze_backbone) oc.base_lr = 0.0;
  std::vector<OptimizedParam> params;
  for (auto& ref : model.parameters()) {
    const bool is_backbone = ref.name.starts_with("rgb_patch.") || ref.name.starts_with("rgb_warp.");
    ParamGroup group = ref.group;
    if (config.freeze_backbone) group = is_backbone ? ParamGroup::backbone : ParamGroup::new_layers;
    params.push_back({ref.name, ref.value, group});
  }
  return SgdOptimizer(std::move(params), oc);
}

std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void restore_rng(Rng& rng, const std::string& state) {
  std::istringstream is(state);
  is >> rng;
  if (!is) throw DataError("corrupt shuffle rng state in checkpoint");
}

}  // namespace

FitResult fit(const FitRequest& request) {
  TrainConfig cfg = request.train;
  cfg.validate();
  if (cfg.jobs == 0) cfg.jobs = default_jobs();
  if (request.source == nullptr) throw ConfigError("fit needs a sample source");
  if (request.model.num_classes != request.taxonomy.size()) {
    throw ConfigError("model.num_classes " + std::to_string(request.model.num_classes) + " does not match taxonomy '" +
                      request.taxonomy.name() + "' (" + std::to_string(request.taxonomy.size()) + " classes)");
  }
  if (request.train_records.empty()) throw DataError("no training records");

  const fs::path dir = cfg.checkpoint_dir;
  fs::create_directories(dir);
  FitResult result;
  result.best_checkpoint = dir / kBestCheckpoint;
  result.last_checkpoint = dir / kLastCheckpoint;
  result.log_path = dir / kTrainLog;

  Model model(request.model);
  SgdOptimizer optimizer = optimizer_for(model, cfg);
  Rng shuffle_rng(mix_seed(cfg.global_seed, 0x5eed));
  TrainState state;

  if (request.resume) {
    if (!fs::exists(result.last_checkpoint)) {
      throw DataError("cannot resume: " + result.last_checkpoint.string() + " does not exist");
    }
    const Checkpoint ck = read_checkpoint(result.last_checkpoint);
    require_taxonomy(ck, request.taxonomy);
    if (!(ck.config == model.config())) throw DataError("cannot resume: checkpoint model config differs");
    if (!ck.train_state) throw DataError("cannot resume: checkpoint has no training state");
    load_weights(model, ck);
    state = *ck.train_state;
    optimizer.restore_momentum(state.momentum);
    restore_rng(shuffle_rng, state.shuffle_rng);
  } else if (!request.model.backbone_weights.empty()) {
    load_backbone_weights(model, request.model.backbone_weights);
  }

  std::vector<double> weights;
  if (cfg.class_weighting) {
    ClassHistogram histogram{request.taxonomy.classes(), std::vector<std::size_t>(request.taxonomy.size(), 0)};
    for (const auto& r : request.train_records) ++histogram.counts[request.taxonomy.require_index(r.labels.at(0))];
    weights = class_weights(histogram).weights;
  }

  std::ofstream log_file(result.log_path, request.resume ? std::ios::app : std::ios::trunc);
  if (!log_file) throw Error("cannot open training log '" + result.log_path.string() + "'");

  PatchPolicy val_policy = request.val_policy;
  val_policy.kind = cfg.val_patches;

  if (cfg.patience > 0 && state.stale_epochs >= cfg.patience) {
    result.early_stopped = true;
    return result;
  }
  for (std::size_t epoch = state.epoch; epoch < cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::uint64_t step = state.step;
    const EpochMetrics metrics =
        train_epoch(model, request.train_records, *request.source, request.taxonomy, optimizer, cfg, epoch,
                    shuffle_rng, step, weights);

    EpochLog entry;
    entry.epoch = epoch + 1;
    entry.step = step;
    entry.loss = metrics.mean_loss;
    entry.accuracy = metrics.accuracy;
    entry.lr = cfg.optimizer.head_lr * lr_scale(cfg, epoch);
    if (!request.val_records.empty()) {
      entry.val_map = evaluate(model, request.val_records, *request.source, request.taxonomy, val_policy, cfg.jobs)
                          .report.map;
    }

    // Without a validation signal the latest weights are the best we know.
    bool improved = true;
    if (entry.val_map) {
      improved = !state.best_val_map || *entry.val_map > *state.best_val_map;
      if (improved) state.best_val_map = entry.val_map;
    }
    state.stale_epochs = improved ? 0 : state.stale_epochs + 1;
    state.epoch = epoch + 1;
    state.step = step;
    state.shuffle_rng = rng_state(shuffle_rng);
    state.momentum = optimizer.momentum_state();

    Checkpoint ck = make_checkpoint(model, request.taxonomy, step);
    ck.echo = request.echo;
    if (improved) save_checkpoint(ck, result.best_checkpoint);
    ck.train_state = state;
    save_checkpoint(ck, result.last_checkpoint);

    entry.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    log_file << to_json(entry).dump() << '\n';
    log_file.flush();
    log::info("epoch " + std::to_string(entry.epoch) + "/" + std::to_string(cfg.epochs) +
              " loss " + std::to_string(entry.loss) + " acc " + std::to_string(entry.accuracy) +
              (entry.val_map ? " val_map " + std::to_string(*entry.val_map) : std::string()));
    result.history.push_back(entry);

    if (cfg.patience > 0 && state.stale_epochs >= cfg.patience) {
      result.early_stopped = true;
      break;
    }
  }
  return result;
}

}  // namespace salrgb
