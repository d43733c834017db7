#pragma once

#include <array>
#include <span>
#include <vector>

#include "salrgb/image.hpp"
#include "salrgb/rng.hpp"

namespace salrgb {

// Square crop rectangle in source pixel coordinates plus a horizontal flip.
struct PatchSpec {
  int top = 0;
  int left = 0;
  int size = 0;
  bool flip = false;

  bool fits(int height, int width) const {
    return top >= 0 && left >= 0 && size >= 1 && top + size <= height && left + size <= width;
  }
  friend bool operator==(const PatchSpec&, const PatchSpec&) = default;
};

inline constexpr int kNetworkInputSize = 224;
inline constexpr std::array<double, 3> kImageNetMean{0.485, 0.456, 0.406};
inline constexpr std::array<double, 3> kImageNetStd{0.229, 0.224, 0.225};

// Bilinear resampling with pixel-center alignment; aspect ratio is not kept.
// Output is clamped to [0,1].
ImageGrid warp_resize(const ImageGrid& image, int out_height, int out_width);
SaliencyMap warp_resize(const SaliencyMap& map, int out_height, int out_width);

// Aspect-preserving bilinear resize so the short side equals `short_side`.
ImageGrid resize_short_side(const ImageGrid& image, int short_side);

// Upscales (aspect-preserving) only when the short side is below `size`.
ImageGrid fit_for_crop(const ImageGrid& image, int size);

struct CropResult {
  ImageGrid patch;
  PatchSpec spec;     // relative to the fitted source
  int source_height;  // dimensions of the fitted source
  int source_width;
};

// Uniform offsets over every valid position. Images whose short side is below
// `size` are first resized so the short side equals `size`.
CropResult random_crop(const ImageGrid& image, int size, Rng& rng);
PatchSpec random_patch_spec(int height, int width, int size, Rng& rng);

// Exact pixel copy of the rectangle, mirrored when spec.flip.
// Throws ShapeError for out-of-bounds specs.
ImageGrid apply_patch(const ImageGrid& image, const PatchSpec& spec);
SaliencyMap apply_patch(const SaliencyMap& map, const PatchSpec& spec);

ImageGrid hflip(const ImageGrid& image);
SaliencyMap hflip(const SaliencyMap& map);

inline constexpr int kGridSteps = 5;
inline constexpr int kTestPatchCount = 2 * kGridSteps * kGridSteps;

// Test-time sampler: a 5x5 grid of offsets spaced evenly over [0, h-size] and
// [0, w-size] (corners included), each emitted unflipped then flipped.
// Always 50 specs in row-major grid order. Requires size <= min(h, w).
std::vector<PatchSpec> grid_patches(int height, int width, int size);

// Centered crop of the largest possible square no larger than `size`.
PatchSpec center_patch(int height, int width, int size);

// (v - mean[c]) / std[c]; throws ConfigError for non-positive std.
ImageGrid normalize(const ImageGrid& image, std::span<const double> mean,
                    std::span<const double> stddev);

}  // namespace salrgb
