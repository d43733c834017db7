#include "salrgb/sample_source.hpp"

#include <random>

#include "salrgb/error.hpp"
#include "salrgb/fetch.hpp"
#include "salrgb/validation.hpp"

namespace salrgb {

namespace fs = std::filesystem;

DiskSampleSource::DiskSampleSource(fs::path image_root, fs::path saliency_root, fs::path cache_dir)
    : image_root_(std::move(image_root)), saliency_root_(std::move(saliency_root)), cache_dir_(std::move(cache_dir)) {}

ImageGrid DiskSampleSource::image(const ImageRecord& record) const {
  fs::path path = resolve_image_path(record, image_root_, cache_dir_);
  if (record.is_remote() && !fs::exists(path)) {
    path = fetch_remote(record, cache_dir_.empty() ? image_root_ : cache_dir_);
  }
  if (!fs::exists(path)) throw DataError("record '" + record.id + "': image not found at " + path.string());
  try {
    return read_image(path);
  } catch (const DataError&) {
    throw;
  } catch (const Error& e) {
    throw DataError("record '" + record.id + "': " + e.what());
  }
}

SaliencyMap DiskSampleSource::saliency(const ImageRecord& record) const {
  const auto path = find_saliency_file(saliency_root_, record.id);
  if (!path) throw DataError("record '" + record.id + "': no saliency map under " + saliency_root_.string());
  return load_saliency(*path);
}

void MemorySampleSource::add(const std::string& id, ImageGrid image, SaliencyMap map) {
  images_[id] = std::move(image);
  maps_[id] = std::move(map);
}

ImageGrid MemorySampleSource::image(const ImageRecord& record) const {
  const auto it = images_.find(record.id);
  if (it == images_.end()) throw DataError("record '" + record.id + "': no image");
  return it->second;
}

SaliencyMap MemorySampleSource::saliency(const ImageRecord& record) const {
  const auto it = maps_.find(record.id);
  if (it == maps_.end() || it->second.empty()) throw DataError("record '" + record.id + "': no saliency map");
  return it->second;
}

SampleInputs build_patch_inputs(const InputSpec& spec, const ImageGrid& image, const SaliencyMap* map,
                                const PatchSpec& patch, SaliencyAlignment alignment) {
  SampleInputs inputs;
  for (const ColumnKind kind : spec.columns) {
    switch (kind) {
      case ColumnKind::rgb_patch: {
        ImageGrid crop = apply_patch(image, patch);
        if (crop.height() != spec.size) crop = warp_resize(crop, spec.size, spec.size);
        inputs.rgb_patch = normalize(crop, spec.mean, spec.stddev);
        break;
      }
      case ColumnKind::rgb_warp: {
        ImageGrid warped = warp_resize(image, spec.size, spec.size);
        if (patch.flip) warped = hflip(warped);
        inputs.rgb_warp = normalize(warped, spec.mean, spec.stddev);
        break;
      }
      case ColumnKind::saliency:
        if (map == nullptr) throw DataError("saliency column needs a saliency map");
        inputs.saliency = align_to_patch(*map, patch, image.height(), image.width(), alignment, spec.size);
        break;
    }
  }
  return inputs;
}

ImageGrid prepare_source(const ImageGrid& image, int resize_short, int crop_size) {
  if (resize_short > 0) return fit_for_crop(resize_short_side(image, resize_short), crop_size);
  return fit_for_crop(image, crop_size);
}

SampleInputs build_train_inputs(const InputSpec& spec, const ImageGrid& image, const SaliencyMap* map,
                                const AugmentConfig& augment, Rng& rng) {
  const ImageGrid source = prepare_source(image, augment.resize_short, augment.crop_size);
  PatchSpec patch = random_patch_spec(source.height(), source.width(), augment.crop_size, rng);
  if (augment.hflip) patch.flip = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
  return build_patch_inputs(spec, source, map, patch, augment.alignment);
}

}  // namespace salrgb
