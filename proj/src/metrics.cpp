#include "salrgb/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "salrgb/error.hpp"

namespace salrgb {

double average_precision(std::span<const double> scores, const std::vector<bool>& positives) {
  if (scores.size() != positives.size()) throw ShapeError("scores and positives differ in length");
  if (scores.empty()) throw DataError("average precision needs at least one item");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (!positives[order[rank]]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
  }
  if (hits == 0) throw DataError("average precision is undefined without positives");
  return sum / static_cast<double>(hits);
}

double mean_average_precision(std::span<const std::optional<double>> per_class_ap) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& ap : per_class_ap) {
    if (!ap) continue;
    sum += *ap;
    ++n;
  }
  if (n == 0) throw DataError("no class has a defined average precision");
  return sum / static_cast<double>(n);
}

ConfusionMatrix confusion_matrix(std::span<const std::size_t> predicted, std::span<const std::size_t> truth,
                                 std::size_t classes) {
  if (predicted.size() != truth.size()) throw ShapeError("predictions and truths differ in length");
  ConfusionMatrix cm;
  cm.rows.assign(classes, std::vector<double>(classes, 0.0));
  std::vector<std::size_t> support(classes, 0);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] >= classes || truth[i] >= classes) throw ShapeError("class index out of range");
    cm.rows[truth[i]][predicted[i]] += 1.0;
    ++support[truth[i]];
  }
  cm.zero_support.assign(classes, false);
  for (std::size_t r = 0; r < classes; ++r) {
    if (support[r] == 0) {
      cm.zero_support[r] = true;
      continue;
    }
    for (auto& v : cm.rows[r]) v /= static_cast<double>(support[r]);
  }
  return cm;
}

std::vector<std::optional<double>> per_class_precision(std::span<const std::size_t> predicted,
                                                       std::span<const std::vector<std::size_t>> truths,
                                                       std::size_t classes) {
  if (predicted.size() != truths.size()) throw ShapeError("predictions and truths differ in length");
  std::vector<std::size_t> hits(classes, 0);
  std::vector<std::size_t> total(classes, 0);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const std::size_t c = predicted[i];
    if (c >= classes) throw ShapeError("class index out of range");
    ++total[c];
    if (std::find(truths[i].begin(), truths[i].end(), c) != truths[i].end()) ++hits[c];
  }
  std::vector<std::optional<double>> out(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    if (total[c] > 0) out[c] = static_cast<double>(hits[c]) / static_cast<double>(total[c]);
  }
  return out;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw ShapeError("argmax of an empty vector");
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace salrgb
