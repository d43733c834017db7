#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>

#include "salrgb/image.hpp"
#include "salrgb/manifest.hpp"
#include "salrgb/model.hpp"
#include "salrgb/rng.hpp"
#include "salrgb/saliency.hpp"
#include "salrgb/transforms.hpp"

namespace salrgb {

// Supplies decoded images and saliency maps for records.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual ImageGrid image(const ImageRecord& record) const = 0;
  // Throws DataError naming the record when no map exists.
  virtual SaliencyMap saliency(const ImageRecord& record) const = 0;
};

class DiskSampleSource final : public SampleSource {
 public:
  DiskSampleSource(std::filesystem::path image_root, std::filesystem::path saliency_root,
                   std::filesystem::path cache_dir = {});
  ImageGrid image(const ImageRecord& record) const override;
  SaliencyMap saliency(const ImageRecord& record) const override;

 private:
  std::filesystem::path image_root_;
  std::filesystem::path saliency_root_;
  std::filesystem::path cache_dir_;
};

class MemorySampleSource final : public SampleSource {
 public:
  void add(const std::string& id, ImageGrid image, SaliencyMap map);
  ImageGrid image(const ImageRecord& record) const override;
  SaliencyMap saliency(const ImageRecord& record) const override;

 private:
  std::unordered_map<std::string, ImageGrid> images_;
  std::unordered_map<std::string, SaliencyMap> maps_;
};

struct AugmentConfig {
  int resize_short = 256;  // 0 = no resize before cropping
  int crop_size = 224;
  bool hflip = true;
  SaliencyAlignment alignment = SaliencyAlignment::aligned;
  friend bool operator==(const AugmentConfig&, const AugmentConfig&) = default;
};

// Inputs for one patch of `image`, which must already be the fitted source
// (see prepare_source); `patch` indexes into it. `map` may be null when no saliency column is used.
SampleInputs build_patch_inputs(const InputSpec& spec, const ImageGrid& image, const SaliencyMap* map,
                                const PatchSpec& patch, SaliencyAlignment alignment);

// Train-time sampling: optional short-side resize, uniform random crop,
// random horizontal flip.
SampleInputs build_train_inputs(const InputSpec& spec, const ImageGrid& image, const SaliencyMap* map,
                                const AugmentConfig& augment, Rng& rng);

// Short-side resize (when resize_short > 0) followed by fit_for_crop.
ImageGrid prepare_source(const ImageGrid& image, int resize_short, int crop_size);

}  // namespace salrgb
