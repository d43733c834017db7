#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "salrgb/image.hpp"

namespace salrgb::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// (channels, height*width) activations with their spatial extent.
struct FeatureMap {
  Matrix data;
  int height = 0;
  int width = 0;

  int channels() const { return static_cast<int>(data.rows()); }
};

FeatureMap to_feature_map(const ImageGrid& image);

// 3x3 convolution, stride 1, zero padding 1. weight is
// (out_channels, in_channels*9) with taps ordered (in_channel, ky, kx);
// bias is (out_channels, 1).
FeatureMap conv3x3_forward(const FeatureMap& in, const Matrix& weight, const Matrix& bias);

// Accumulates into grad_weight/grad_bias; writes grad_in when non-null.
void conv3x3_backward(const FeatureMap& in, const Matrix& weight, const Matrix& grad_out,
                      Matrix& grad_weight, Matrix& grad_bias, Matrix* grad_in);

void relu_inplace(Matrix& m);

struct PoolResult {
  FeatureMap out;
  std::vector<std::int32_t> argmax;  // flat input index per output cell
};

// 2x2 stride-2 max pooling (floor on odd sizes). First maximum wins.
PoolResult maxpool2x2_forward(const FeatureMap& in);
FeatureMap maxpool2x2(const FeatureMap& in);
Matrix maxpool2x2_backward(const Matrix& grad_out, const std::vector<std::int32_t>& argmax,
                           int in_channels, int in_plane);

// Per-channel mean. Each channel is summed in ascending value order, so the
// result depends only on the multiset of activations, not their positions.
Vector global_average_pool(const FeatureMap& in);

}  // namespace salrgb::nn
