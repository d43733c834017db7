#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace salrgb {

// Planar (channel, row, column) grid of doubles. Decoded images hold values
// in [0,1]; normalized network inputs are unbounded.
class ImageGrid {
 public:
  ImageGrid() = default;
  ImageGrid(int channels, int height, int width, double fill = 0.0);

  int channels() const noexcept { return channels_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  bool empty() const noexcept { return data_.empty(); }

  double& at(int c, int y, int x) { return data_[index(c, y, x)]; }
  double at(int c, int y, int x) const { return data_[index(c, y, x)]; }

  std::span<double> plane(int c) { return {data_.data() + c * plane_size(), plane_size()}; }
  std::span<const double> plane(int c) const {
    return {data_.data() + c * plane_size(), plane_size()};
  }
  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

 private:
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

// Single-channel map of attention values in [0,1], row-major.
class SaliencyMap {
 public:
  SaliencyMap() = default;
  SaliencyMap(int height, int width, double fill = 0.0);
  SaliencyMap(int height, int width, std::vector<double> values);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& at(int y, int x) { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int y, int x) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  double max() const;

  friend bool operator==(const SaliencyMap&, const SaliencyMap&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> values_;
};

// Raster codecs (PNG, JPEG, BMP, ...). 8-bit channels map to [0,1],
// grayscale is replicated to three channels and alpha is dropped.
// Throws DataError on undecodable bytes.
ImageGrid decode_image(std::span<const std::uint8_t> bytes);
ImageGrid read_image(const std::filesystem::path& path);
// Writes 8-bit PNG (or whatever the extension selects), rounding to nearest.
void write_image(const ImageGrid& image, const std::filesystem::path& path);

// Header-level probe: {height, width, channels}. Throws DataError.
struct RasterInfo {
  int height;
  int width;
  int channels;
};
RasterInfo probe_image(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace salrgb
