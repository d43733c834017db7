#include "salrgb/layers.hpp"

#include <algorithm>
#include <cstring>

#include "salrgb/error.hpp"

namespace salrgb::nn {
namespace {

// Rows ordered (channel, ky, kx); columns are output pixels.
void im2col3x3(const FeatureMap& in, Matrix& col) {
  const int channels = in.channels();
  const int h = in.height;
  const int w = in.width;
  col.resize(static_cast<Eigen::Index>(channels) * 9, static_cast<Eigen::Index>(h) * w);
  for (int c = 0; c < channels; ++c) {
    const double* src = in.data.row(c).data();
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        double* dst = col.row(c * 9 + ky * 3 + kx).data();
        const int dy = ky - 1;
        const int dx = kx - 1;
        const int x_begin = std::max(0, -dx);
        const int x_end = std::min(w, w - dx);
        for (int y = 0; y < h; ++y) {
          double* out = dst + static_cast<std::ptrdiff_t>(y) * w;
          const int sy = y + dy;
          if (sy < 0 || sy >= h) {
            std::fill(out, out + w, 0.0);
            continue;
          }
          std::fill(out, out + x_begin, 0.0);
          std::memcpy(out + x_begin, src + static_cast<std::ptrdiff_t>(sy) * w + x_begin + dx,
                      sizeof(double) * static_cast<std::size_t>(x_end - x_begin));
          std::fill(out + x_end, out + w, 0.0);
        }
      }
    }
  }
}

void col2im3x3(const Matrix& col, int channels, int h, int w, Matrix& grad_in) {
  grad_in.setZero(channels, static_cast<Eigen::Index>(h) * w);
  for (int c = 0; c < channels; ++c) {
    double* dst = grad_in.row(c).data();
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const double* src = col.row(c * 9 + ky * 3 + kx).data();
        const int dy = ky - 1;
        const int dx = kx - 1;
        const int x_begin = std::max(0, -dx);
        const int x_end = std::min(w, w - dx);
        for (int y = 0; y < h; ++y) {
          const int sy = y + dy;
          if (sy < 0 || sy >= h) continue;
          const double* g = src + static_cast<std::ptrdiff_t>(y) * w;
          double* d = dst + static_cast<std::ptrdiff_t>(sy) * w + dx;
          for (int x = x_begin; x < x_end; ++x) d[x] += g[x];
        }
      }
    }
  }
}

}  // namespace

FeatureMap to_feature_map(const ImageGrid& image) {
  FeatureMap fm;
  fm.height = image.height();
  fm.width = image.width();
  fm.data = Eigen::Map<const Matrix>(image.data().data(), image.channels(),
                                     static_cast<Eigen::Index>(image.plane_size()));
  return fm;
}

FeatureMap conv3x3_forward(const FeatureMap& in, const Matrix& weight, const Matrix& bias) {
  if (weight.cols() != static_cast<Eigen::Index>(in.channels()) * 9 || bias.rows() != weight.rows()) {
    throw ShapeError("conv3x3: weight shape does not match input channels");
  }
  Matrix col;
  im2col3x3(in, col);
  FeatureMap out;
  out.height = in.height;
  out.width = in.width;
  out.data.noalias() = weight * col;
  out.data.colwise() += bias.col(0);
  return out;
}

void conv3x3_backward(const FeatureMap& in, const Matrix& weight, const Matrix& grad_out,
                      Matrix& grad_weight, Matrix& grad_bias, Matrix* grad_in) {
  Matrix col;
  im2col3x3(in, col);
  grad_weight.noalias() += grad_out * col.transpose();
  grad_bias.col(0) += grad_out.rowwise().sum();
  if (grad_in != nullptr) {
    const Matrix dcol = weight.transpose() * grad_out;
    col2im3x3(dcol, in.channels(), in.height, in.width, *grad_in);
  }
}

void relu_inplace(Matrix& m) { m = m.cwiseMax(0.0); }

PoolResult maxpool2x2_forward(const FeatureMap& in) {
  const int oh = in.height / 2;
  const int ow = in.width / 2;
  if (oh < 1 || ow < 1) throw ShapeError("maxpool2x2: input smaller than 2x2");
  PoolResult r;
  r.out.height = oh;
  r.out.width = ow;
  r.out.data.resize(in.channels(), static_cast<Eigen::Index>(oh) * ow);
  r.argmax.resize(static_cast<std::size_t>(in.channels()) * oh * ow);
  for (int c = 0; c < in.channels(); ++c) {
    const double* src = in.data.row(c).data();
    double* dst = r.out.data.row(c).data();
    std::int32_t* idx = r.argmax.data() + static_cast<std::size_t>(c) * oh * ow;
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        const std::int32_t base = (2 * y) * in.width + 2 * x;
        std::int32_t best = base;
        for (const std::int32_t cand : {base + 1, base + in.width, base + in.width + 1}) {
          if (src[cand] > src[best]) best = cand;
        }
        dst[y * ow + x] = src[best];
        idx[y * ow + x] = best;
      }
    }
  }
  return r;
}

FeatureMap maxpool2x2(const FeatureMap& in) { return maxpool2x2_forward(in).out; }

Matrix maxpool2x2_backward(const Matrix& grad_out, const std::vector<std::int32_t>& argmax,
                           int in_channels, int in_plane) {
  Matrix grad_in = Matrix::Zero(in_channels, in_plane);
  const auto cells = grad_out.cols();
  for (int c = 0; c < in_channels; ++c) {
    const double* g = grad_out.row(c).data();
    double* d = grad_in.row(c).data();
    const std::int32_t* idx = argmax.data() + static_cast<std::size_t>(c) * cells;
    for (Eigen::Index i = 0; i < cells; ++i) d[idx[i]] += g[i];
  }
  return grad_in;
}

Vector global_average_pool(const FeatureMap& in) {
  Vector out(in.channels());
  std::vector<double> buffer(static_cast<std::size_t>(in.data.cols()));
  for (int c = 0; c < in.channels(); ++c) {
    std::copy(in.data.row(c).data(), in.data.row(c).data() + in.data.cols(), buffer.begin());
    std::sort(buffer.begin(), buffer.end());
    double sum = 0.0;
    for (const double v : buffer) sum += v;
    out[c] = sum / static_cast<double>(buffer.size());
  }
  return out;
}

}  // namespace salrgb::nn
