#include "salrgb/evaluation.hpp"

#include <algorithm>
#include <random>

#include "salrgb/error.hpp"
#include "salrgb/parallel.hpp"
#include "salrgb/rng.hpp"

namespace salrgb {

std::string_view to_string(PatchPolicyKind kind) {
  switch (kind) {
    case PatchPolicyKind::grid: return "grid";
    case PatchPolicyKind::random: return "random";
    case PatchPolicyKind::center: return "center";
  }
  return "?";
}

PatchPolicyKind parse_patch_policy(std::string_view s) {
  if (s == "grid") return PatchPolicyKind::grid;
  if (s == "random") return PatchPolicyKind::random;
  if (s == "center") return PatchPolicyKind::center;
  throw ConfigError("unknown patch policy '" + std::string(s) + "'");
}

std::vector<PatchSpec> make_patches(int height, int width, const PatchPolicy& policy, std::string_view record_id) {
  switch (policy.kind) {
    case PatchPolicyKind::grid: return grid_patches(height, width, policy.crop_size);
    case PatchPolicyKind::center: return {center_patch(height, width, policy.crop_size)};
    case PatchPolicyKind::random: {
      Rng rng(record_seed(policy.seed, record_id, 0));
      std::vector<PatchSpec> out;
      out.reserve(kTestPatchCount);
      for (int i = 0; i < kTestPatchCount; ++i) {
        PatchSpec spec = random_patch_spec(height, width, policy.crop_size, rng);
        spec.flip = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
        out.push_back(spec);
      }
      return out;
    }
  }
  return {};
}

std::vector<double> predict_image(const PatchClassifier& classifier, const ImageGrid& image, const SaliencyMap* map,
                                  const PatchPolicy& policy, std::string_view record_id) {
  const ImageGrid source = prepare_source(image, policy.resize_short, policy.crop_size);
  const auto patches = make_patches(source.height(), source.width(), policy, record_id);
  const InputSpec spec = classifier.input_spec();
  std::vector<double> sum(classifier.num_classes(), 0.0);
  // Chunked to bound memory; accumulation order is patch order either way.
  constexpr std::size_t kChunk = 10;
  for (std::size_t begin = 0; begin < patches.size(); begin += kChunk) {
    const std::size_t end = std::min(patches.size(), begin + kChunk);
    std::vector<SampleInputs> batch;
    batch.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      batch.push_back(build_patch_inputs(spec, source, map, patches[i], policy.alignment));
    }
    const auto probs = classifier.predict_proba(batch);
    for (const auto& p : probs) {
      if (p.size() != sum.size()) throw ShapeError("classifier returned the wrong number of classes");
      for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += p[k];
    }
  }
  for (auto& v : sum) v /= static_cast<double>(patches.size());
  return sum;
}

EvalReport compute_report(std::span<const PredictionRecord> predictions, const StyleTaxonomy& taxonomy,
                          nlohmann::json config) {
  if (predictions.empty()) throw DataError("no predictions to evaluate");
  const std::size_t k = taxonomy.size();
  std::vector<std::size_t> predicted;
  std::vector<std::size_t> primary;
  std::vector<std::vector<std::size_t>> truths;
  for (const auto& p : predictions) {
    if (p.probabilities.size() != k) {
      throw DataError("record '" + p.id + "' has " + std::to_string(p.probabilities.size()) +
                      " probabilities, taxonomy has " + std::to_string(k) + " classes");
    }
    if (p.truths.empty()) throw DataError("record '" + p.id + "' has no true label");
    for (const auto t : p.truths) {
      if (t >= k) throw DataError("record '" + p.id + "' has an out-of-range label");
    }
    predicted.push_back(argmax(p.probabilities));
    primary.push_back(p.truths.front());
    truths.push_back(p.truths);
  }

  EvalReport report;
  report.classes = taxonomy.classes();
  report.sample_count = predictions.size();
  report.config = std::move(config);
  report.average_precision.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> scores;
    std::vector<bool> positives;
    bool any = false;
    for (const auto& p : predictions) {
      scores.push_back(p.probabilities[c]);
      const bool pos = std::find(p.truths.begin(), p.truths.end(), c) != p.truths.end();
      positives.push_back(pos);
      any = any || pos;
    }
    if (any) report.average_precision[c] = average_precision(scores, positives);
  }
  if (std::any_of(report.average_precision.begin(), report.average_precision.end(),
                  [](const auto& ap) { return ap.has_value(); })) {
    report.map = mean_average_precision(report.average_precision);
  }
  report.precision = per_class_precision(predicted, truths, k);
  report.confusion = confusion_matrix(predicted, primary, k);
  return report;
}

Evaluation evaluate(const PatchClassifier& classifier, std::span<const ImageRecord> records, const SampleSource& source,
                    const StyleTaxonomy& taxonomy, const PatchPolicy& policy, int jobs, nlohmann::json config) {
  if (classifier.num_classes() != taxonomy.size()) {
    throw DataError("classifier has " + std::to_string(classifier.num_classes()) + " classes, taxonomy has " +
                    std::to_string(taxonomy.size()));
  }
  const auto columns = classifier.input_spec().columns;
  const bool needs_map = std::find(columns.begin(), columns.end(), ColumnKind::saliency) != columns.end();

  std::vector<PredictionRecord> predictions(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    const ImageRecord& r = records[i];
    const ImageGrid image = source.image(r);
    std::optional<SaliencyMap> map;
    if (needs_map) map = source.saliency(r);
    predictions[i] = {r.id, predict_image(classifier, image, map ? &*map : nullptr, policy, r.id),
                      label_indices(r, taxonomy)};
  });
  std::stable_sort(predictions.begin(), predictions.end(),
                   [](const PredictionRecord& a, const PredictionRecord& b) { return a.id < b.id; });
  Evaluation out;
  out.report = compute_report(predictions, taxonomy, std::move(config));
  out.predictions = std::move(predictions);
  return out;
}

}  // namespace salrgb
