#include "salrgb/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "salrgb/error.hpp"

namespace salrgb {
namespace {

// Source coordinate taps for one output axis with pixel-center alignment.
struct Tap {
  int i0;
  int i1;
  double t;
};

std::vector<Tap> make_taps(int in, int out) {
  std::vector<Tap> taps(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double s = (o + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in - 1));
    const int i0 = static_cast<int>(std::floor(s));
    const int i1 = std::min(i0 + 1, in - 1);
    taps[static_cast<std::size_t>(o)] = {i0, i1, s - i0};
  }
  return taps;
}

// Exact when a == b, so constant regions stay constant.
inline double lerp(double a, double b, double t) { return a + t * (b - a); }

void resample_plane(std::span<const double> src, int in_h, int in_w, std::span<double> dst,
                    int out_h, int out_w) {
  const auto ty = make_taps(in_h, out_h);
  const auto tx = make_taps(in_w, out_w);
  for (int y = 0; y < out_h; ++y) {
    const auto& vy = ty[static_cast<std::size_t>(y)];
    const double* r0 = src.data() + static_cast<std::size_t>(vy.i0) * in_w;
    const double* r1 = src.data() + static_cast<std::size_t>(vy.i1) * in_w;
    double* out = dst.data() + static_cast<std::size_t>(y) * out_w;
    for (int x = 0; x < out_w; ++x) {
      const auto& vx = tx[static_cast<std::size_t>(x)];
      const double top = lerp(r0[vx.i0], r0[vx.i1], vx.t);
      const double bottom = lerp(r1[vx.i0], r1[vx.i1], vx.t);
      out[x] = std::clamp(lerp(top, bottom, vy.t), 0.0, 1.0);
    }
  }
}

void check_out_dims(int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw ShapeError("resize target must be at least 1x1");
}

}  // namespace

ImageGrid warp_resize(const ImageGrid& image, int out_height, int out_width) {
  check_out_dims(out_height, out_width);
  if (out_height == image.height() && out_width == image.width()) return image;
  ImageGrid out(image.channels(), out_height, out_width);
  for (int c = 0; c < image.channels(); ++c) {
    resample_plane(image.plane(c), image.height(), image.width(), out.plane(c), out_height, out_width);
  }
  return out;
}

SaliencyMap warp_resize(const SaliencyMap& map, int out_height, int out_width) {
  check_out_dims(out_height, out_width);
  if (out_height == map.height() && out_width == map.width()) return map;
  SaliencyMap out(out_height, out_width);
  resample_plane(map.values(), map.height(), map.width(), out.values(), out_height, out_width);
  return out;
}

ImageGrid resize_short_side(const ImageGrid& image, int short_side) {
  if (short_side < 1) throw ShapeError("short side must be positive");
  const int h = image.height();
  const int w = image.width();
  if (std::min(h, w) == short_side) return image;
  const double scale = static_cast<double>(short_side) / std::min(h, w);
  const int out_h = h <= w ? short_side : std::max(1, static_cast<int>(std::lround(h * scale)));
  const int out_w = w < h ? short_side : std::max(1, static_cast<int>(std::lround(w * scale)));
  return warp_resize(image, out_h, out_w);
}

ImageGrid fit_for_crop(const ImageGrid& image, int size) {
  if (std::min(image.height(), image.width()) >= size) return image;
  return resize_short_side(image, size);
}

PatchSpec random_patch_spec(int height, int width, int size, Rng& rng) {
  if (size < 1 || size > std::min(height, width)) {
    throw ShapeError("crop size " + std::to_string(size) + " does not fit " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
  std::uniform_int_distribution<int> top(0, height - size);
  std::uniform_int_distribution<int> left(0, width - size);
  PatchSpec spec;
  spec.size = size;
  spec.top = top(rng);
  spec.left = left(rng);
  return spec;
}

CropResult random_crop(const ImageGrid& image, int size, Rng& rng) {
  ImageGrid source = fit_for_crop(image, size);
  const PatchSpec spec = random_patch_spec(source.height(), source.width(), size, rng);
  return {apply_patch(source, spec), spec, source.height(), source.width()};
}

ImageGrid apply_patch(const ImageGrid& image, const PatchSpec& spec) {
  if (!spec.fits(image.height(), image.width())) throw ShapeError("patch outside image bounds");
  ImageGrid out(image.channels(), spec.size, spec.size);
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < spec.size; ++y) {
      for (int x = 0; x < spec.size; ++x) {
        const int sx = spec.flip ? spec.left + spec.size - 1 - x : spec.left + x;
        out.at(c, y, x) = image.at(c, spec.top + y, sx);
      }
    }
  }
  return out;
}

SaliencyMap apply_patch(const SaliencyMap& map, const PatchSpec& spec) {
  if (!spec.fits(map.height(), map.width())) throw ShapeError("patch outside map bounds");
  SaliencyMap out(spec.size, spec.size);
  for (int y = 0; y < spec.size; ++y) {
    for (int x = 0; x < spec.size; ++x) {
      const int sx = spec.flip ? spec.left + spec.size - 1 - x : spec.left + x;
      out.at(y, x) = map.at(spec.top + y, sx);
    }
  }
  return out;
}

ImageGrid hflip(const ImageGrid& image) {
  ImageGrid out = image;
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < image.height(); ++y) {
      for (int x = 0; x < image.width(); ++x) out.at(c, y, x) = image.at(c, y, image.width() - 1 - x);
    }
  }
  return out;
}

SaliencyMap hflip(const SaliencyMap& map) {
  SaliencyMap out = map;
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) out.at(y, x) = map.at(y, map.width() - 1 - x);
  }
  return out;
}

std::vector<PatchSpec> grid_patches(int height, int width, int size) {
  if (size < 1 || size > std::min(height, width)) {
    throw ShapeError("grid patch size " + std::to_string(size) + " does not fit " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
  std::vector<PatchSpec> specs;
  specs.reserve(kTestPatchCount);
  const auto offset = [](int i, int span) {
    return static_cast<int>(std::lround(static_cast<double>(i) * span / (kGridSteps - 1)));
  };
  for (int i = 0; i < kGridSteps; ++i) {
    for (int j = 0; j < kGridSteps; ++j) {
      for (const bool flip : {false, true}) {
        specs.push_back({offset(i, height - size), offset(j, width - size), size, flip});
      }
    }
  }
  return specs;
}

PatchSpec center_patch(int height, int width, int size) {
  const int s = std::min({size, height, width});
  return {(height - s) / 2, (width - s) / 2, s, false};
}

ImageGrid normalize(const ImageGrid& image, std::span<const double> mean,
                    std::span<const double> stddev) {
  if (mean.size() != static_cast<std::size_t>(image.channels()) ||
      stddev.size() != static_cast<std::size_t>(image.channels())) {
    throw ShapeError("normalize: one mean and std per channel required");
  }
  for (const double s : stddev) {
    if (!(s > 0.0)) throw ConfigError("normalize: std must be positive");
  }
  ImageGrid out = image;
  for (int c = 0; c < image.channels(); ++c) {
    const double m = mean[static_cast<std::size_t>(c)];
    const double s = stddev[static_cast<std::size_t>(c)];
    for (double& v : out.plane(c)) v = (v - m) / s;
  }
  return out;
}

}  // namespace salrgb
