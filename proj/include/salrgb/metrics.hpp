#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace salrgb {

// Ranked-retrieval average precision. Items are sorted by descending score
// (ties keep input order); AP is the mean over positive ranks k of
// precision@k. Throws DataError when there is no positive.
double average_precision(std::span<const double> scores, const std::vector<bool>& positives);

// Unweighted mean over defined entries. Throws DataError if none is defined.
double mean_average_precision(std::span<const std::optional<double>> per_class_ap);

struct ConfusionMatrix {
  std::vector<std::vector<double>> rows;  // rows[true][predicted], row-normalized
  std::vector<bool> zero_support;         // rows with no samples are all zero
};

// predicted[i] and truth[i] are class indices < classes. Throws ShapeError.
ConfusionMatrix confusion_matrix(std::span<const std::size_t> predicted,
                                 std::span<const std::size_t> truth, std::size_t classes);

// precision_c = |predicted c and c in truth| / |predicted c|; nullopt when c
// is never predicted.
std::vector<std::optional<double>> per_class_precision(
    std::span<const std::size_t> predicted, std::span<const std::vector<std::size_t>> truths,
    std::size_t classes);

std::size_t argmax(std::span<const double> values);

}  // namespace salrgb
