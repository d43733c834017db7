#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace salrgb {

// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> logits);

// -log softmax(logits)[label], computed via log-sum-exp.
// Throws ShapeError when label is out of range.
double cross_entropy(std::span<const double> logits, std::size_t label);

}  // namespace salrgb
