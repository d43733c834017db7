#include "salrgb/loss.hpp"

#include <algorithm>
#include <cmath>

#include "salrgb/error.hpp"

namespace salrgb {

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

double cross_entropy(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) {
    throw ShapeError("label " + std::to_string(label) + " out of range for " +
                     std::to_string(logits.size()) + " classes");
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (const double v : logits) sum += std::exp(v - m);
  return std::log(sum) + m - logits[label];
}

}  // namespace salrgb
