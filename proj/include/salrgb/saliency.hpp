#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "salrgb/image.hpp"
#include "salrgb/transforms.hpp"

namespace salrgb {

struct SpectralResidualOptions {
  int working_size = 64;    // long side of the analysis grid
  int box_size = 3;         // log-amplitude smoothing window
  double blur_sigma = 2.5;  // output smoothing, in working-grid pixels
  friend bool operator==(const SpectralResidualOptions&, const SpectralResidualOptions&) = default;
};

// Spectral-residual saliency: luminance, downscale, FFT, log amplitude minus
// its box-filtered version, inverse FFT with the original phase, squared
// magnitude, Gaussian blur, upscale, min-max normalize. A constant image
// yields an all-zero map. Throws ShapeError for 1x1 input.
SaliencyMap spectral_residual(const ImageGrid& image, const SpectralResidualOptions& options = {});

// Isotropic Gaussian centred at ((h-1)/2, (w-1)/2), sigma = sigma_frac*min(h,w),
// scaled so its maximum is 1.
SaliencyMap center_prior(int height, int width, double sigma_frac);

// (1-w)*sal + w*prior, clamped to [0,1]. Both inputs already live in [0,1],
// so no rescaling is applied and the blend stays monotone in w.
SaliencyMap combine(const SaliencyMap& saliency, const SaliencyMap& prior, double weight);

struct SaliencyGeneratorOptions {
  SpectralResidualOptions spectral;
  double center_prior_weight = 0.2;
  double center_prior_sigma = 0.3;
  friend bool operator==(const SaliencyGeneratorOptions&, const SaliencyGeneratorOptions&) = default;
};

// spectral_residual optionally blended with a center prior.
SaliencyMap generate_saliency(const ImageGrid& image, const SaliencyGeneratorOptions& options);

// Single-channel 8-bit rasters. load maps 0..255 to [0,1]; save rounds to
// nearest. Throws DataError for missing, multi-channel or empty files.
SaliencyMap load_saliency(const std::filesystem::path& path);
void save_saliency(const SaliencyMap& map, const std::filesystem::path& path);

// <root>/<id>.<ext> for the first standard raster extension that exists.
std::optional<std::filesystem::path> find_saliency_file(const std::filesystem::path& root,
                                                        std::string_view id);

enum class SaliencyAlignment { aligned, whole_map };

std::string_view to_string(SaliencyAlignment a);
SaliencyAlignment parse_alignment(std::string_view s);

// Saliency column input for one patch. `aligned` maps the patch rectangle
// (given in a source_height x source_width image) proportionally into the
// map, crops, flips if requested and warps to out x out. `whole_map` warps the
// full map and only applies the flip.
SaliencyMap align_to_patch(const SaliencyMap& map, const PatchSpec& spec, int source_height,
                           int source_width, SaliencyAlignment alignment,
                           int out = kNetworkInputSize);

}  // namespace salrgb
