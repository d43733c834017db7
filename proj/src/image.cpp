#include "salrgb/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "salrgb/error.hpp"

namespace salrgb {

ImageGrid::ImageGrid(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
  if (channels < 1 || height < 1 || width < 1) {
    throw ShapeError("image grid dimensions must be positive");
  }
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

SaliencyMap::SaliencyMap(int height, int width, double fill) : height_(height), width_(width) {
  if (height < 1 || width < 1) throw ShapeError("saliency map dimensions must be positive");
  values_.assign(static_cast<std::size_t>(height) * width, fill);
}

SaliencyMap::SaliencyMap(int height, int width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
  if (height < 1 || width < 1) throw ShapeError("saliency map dimensions must be positive");
  if (values_.size() != static_cast<std::size_t>(height) * width) {
    throw ShapeError("saliency map value count does not match its dimensions");
  }
}

double SaliencyMap::max() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

namespace {

// Divisor rather than reciprocal so that 8-bit codes map to exactly k / 255.
double channel_max(int depth) {
  switch (depth) {
    case CV_8U: return 255.0;
    case CV_16U: return 65535.0;
    case CV_32F:
    case CV_64F: return 1.0;
    default: throw DataError("unsupported raster bit depth");
  }
}

ImageGrid from_mat(const cv::Mat& mat) {
  const int src_channels = mat.channels();
  if (src_channels != 1 && src_channels != 3 && src_channels != 4) {
    throw DataError("unsupported channel count " + std::to_string(src_channels));
  }
  cv::Mat as_double;
  mat.convertTo(as_double, CV_MAKETYPE(CV_64F, src_channels));
  const double full = channel_max(mat.depth());
  ImageGrid out(3, mat.rows, mat.cols);
  for (int y = 0; y < mat.rows; ++y) {
    const double* row = as_double.ptr<double>(y);
    for (int x = 0; x < mat.cols; ++x) {
      const double* px = row + static_cast<std::ptrdiff_t>(x) * src_channels;
      if (src_channels == 1) {
        const double v = std::clamp(px[0] / full, 0.0, 1.0);
        out.at(0, y, x) = v;
        out.at(1, y, x) = v;
        out.at(2, y, x) = v;
      } else {
        // OpenCV stores BGR(A).
        out.at(0, y, x) = std::clamp(px[2] / full, 0.0, 1.0);
        out.at(1, y, x) = std::clamp(px[1] / full, 0.0, 1.0);
        out.at(2, y, x) = std::clamp(px[0] / full, 0.0, 1.0);
      }
    }
  }
  return out;
}

}  // namespace

ImageGrid decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw DataError("cannot decode empty image data");
  const cv::Mat buffer(1, static_cast<int>(bytes.size()), CV_8U, const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat mat;
  try {
    mat = cv::imdecode(buffer, cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception& e) {
    throw DataError(std::string("cannot decode image: ") + e.what());
  }
  if (mat.empty()) throw DataError("cannot decode image");
  return from_mat(mat);
}

ImageGrid read_image(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_image(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_image(const ImageGrid& image, const std::filesystem::path& path) {
  if (image.channels() != 3 && image.channels() != 1) {
    throw ShapeError("write_image expects 1 or 3 channels");
  }
  const bool gray = image.channels() == 1;
  cv::Mat mat(image.height(), image.width(), gray ? CV_8UC1 : CV_8UC3);
  for (int y = 0; y < image.height(); ++y) {
    auto* row = mat.ptr<std::uint8_t>(y);
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < image.channels(); ++c) {
        const int dst = gray ? 0 : 2 - c;
        const double v = std::clamp(image.at(c, y, x), 0.0, 1.0);
        row[x * image.channels() + dst] = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), mat);
  } catch (const cv::Exception& e) {
    throw DataError("cannot write " + path.string() + ": " + e.what());
  }
  if (!ok) throw DataError("cannot write " + path.string());
}

RasterInfo probe_image(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  const cv::Mat buffer(1, static_cast<int>(bytes.size()), CV_8U, const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat mat;
  try {
    if (!bytes.empty()) mat = cv::imdecode(buffer, cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception&) {
    mat.release();
  }
  if (mat.empty()) throw DataError("cannot decode " + path.string());
  return {mat.rows, mat.cols, mat.channels()};
}

}  // namespace salrgb
