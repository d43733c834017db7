#include "salrgb/saliency.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "salrgb/error.hpp"

namespace fs = std::filesystem;

namespace salrgb {
namespace {

cv::Mat luminance(const ImageGrid& image) {
  cv::Mat lum(image.height(), image.width(), CV_64F);
  for (int y = 0; y < image.height(); ++y) {
    auto* row = lum.ptr<double>(y);
    for (int x = 0; x < image.width(); ++x) {
      if (image.channels() >= 3) {
        row[x] = 0.299 * image.at(0, y, x) + 0.587 * image.at(1, y, x) + 0.114 * image.at(2, y, x);
      } else {
        row[x] = image.at(0, y, x);
      }
    }
  }
  return lum;
}

// Mean filter over a k x k window with periodic borders (the spectrum wraps).
cv::Mat box_filter_wrap(const cv::Mat& src, int k) {
  const int r = k / 2;
  cv::Mat dst(src.size(), CV_64F);
  const double norm = 1.0 / (k * k);
  for (int y = 0; y < src.rows; ++y) {
    for (int x = 0; x < src.cols; ++x) {
      double acc = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = ((y + dy) % src.rows + src.rows) % src.rows;
        const auto* row = src.ptr<double>(yy);
        for (int dx = -r; dx <= r; ++dx) acc += row[((x + dx) % src.cols + src.cols) % src.cols];
      }
      dst.at<double>(y, x) = acc * norm;
    }
  }
  return dst;
}

SaliencyMap min_max_normalized(const cv::Mat& m) {
  double lo = 0.0;
  double hi = 0.0;
  cv::minMaxLoc(m, &lo, &hi);
  SaliencyMap out(m.rows, m.cols);
  if (!(hi - lo > 0.0) || !std::isfinite(hi - lo)) return out;
  const double range = hi - lo;
  for (int y = 0; y < m.rows; ++y) {
    const auto* row = m.ptr<double>(y);
    for (int x = 0; x < m.cols; ++x) out.at(y, x) = (row[x] - lo) / range;
  }
  return out;
}

}  // namespace

SaliencyMap spectral_residual(const ImageGrid& image, const SpectralResidualOptions& options) {
  if (image.height() * image.width() <= 1) {
    throw ShapeError("spectral residual needs more than one pixel");
  }
  if (options.working_size < 2 || options.box_size < 1 || options.box_size % 2 == 0 ||
      !(options.blur_sigma >= 0.0)) {
    throw ConfigError("invalid spectral residual options");
  }
  const int h = image.height();
  const int w = image.width();
  const cv::Mat lum = luminance(image);
  double lo = 0.0;
  double hi = 0.0;
  cv::minMaxLoc(lum, &lo, &hi);
  if (hi == lo) return SaliencyMap(h, w);  // flat spectrum: no residual

  const int long_side = std::max(h, w);
  const double scale = static_cast<double>(options.working_size) / long_side;
  const cv::Size work(std::max(1, static_cast<int>(std::lround(w * scale))),
                      std::max(1, static_cast<int>(std::lround(h * scale))));
  cv::Mat small;
  cv::resize(lum, small, work, 0, 0, scale < 1.0 ? cv::INTER_AREA : cv::INTER_LINEAR);

  cv::Mat spectrum;
  cv::dft(small, spectrum, cv::DFT_COMPLEX_OUTPUT);
  cv::Mat planes[2];
  cv::split(spectrum, planes);
  cv::Mat amplitude;
  cv::magnitude(planes[0], planes[1], amplitude);

  // Synthetic inputs (flat shapes on flat backgrounds) have exact spectral
  // nulls; unfloored, log(0) neighbours would dominate the residual.
  const double floor = 1e-3 * cv::mean(amplitude)[0];
  cv::Mat log_amp(amplitude.size(), CV_64F);
  for (int y = 0; y < amplitude.rows; ++y) {
    for (int x = 0; x < amplitude.cols; ++x) {
      log_amp.at<double>(y, x) = std::log(std::max(amplitude.at<double>(y, x), floor));
    }
  }
  const cv::Mat residual = log_amp - box_filter_wrap(log_amp, options.box_size);

  // exp(residual) with the original phase.
  for (int y = 0; y < amplitude.rows; ++y) {
    for (int x = 0; x < amplitude.cols; ++x) {
      const double a = amplitude.at<double>(y, x);
      const double mag = std::exp(residual.at<double>(y, x));
      double re = 1.0;
      double im = 0.0;
      if (a > 0.0) {
        re = planes[0].at<double>(y, x) / a;
        im = planes[1].at<double>(y, x) / a;
      }
      planes[0].at<double>(y, x) = mag * re;
      planes[1].at<double>(y, x) = mag * im;
    }
  }
  cv::merge(planes, 2, spectrum);
  cv::Mat back;
  cv::dft(spectrum, back, cv::DFT_INVERSE | cv::DFT_SCALE | cv::DFT_COMPLEX_OUTPUT);
  cv::split(back, planes);
  cv::Mat energy = planes[0].mul(planes[0]) + planes[1].mul(planes[1]);
  if (options.blur_sigma > 0.0) {
    cv::GaussianBlur(energy, energy, cv::Size(0, 0), options.blur_sigma);
  }
  cv::Mat full;
  cv::resize(energy, full, cv::Size(w, h), 0, 0, cv::INTER_LINEAR);
  return min_max_normalized(full);
}

SaliencyMap center_prior(int height, int width, double sigma_frac) {
  if (!(sigma_frac > 0.0)) throw ConfigError("center prior sigma fraction must be positive");
  SaliencyMap out(height, width);
  const double cy = (height - 1) / 2.0;
  const double cx = (width - 1) / 2.0;
  const double sigma = sigma_frac * std::min(height, width);
  const double denom = 2.0 * sigma * sigma;
  double peak = 0.0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
      out.at(y, x) = std::exp(-d2 / denom);
      peak = std::max(peak, out.at(y, x));
    }
  }
  if (peak != 1.0) {
    for (double& v : out.values()) v /= peak;
  }
  return out;
}

SaliencyMap combine(const SaliencyMap& saliency, const SaliencyMap& prior, double weight) {
  if (saliency.height() != prior.height() || saliency.width() != prior.width()) {
    throw ShapeError("combine: saliency and prior dimensions differ");
  }
  if (!(weight >= 0.0 && weight <= 1.0)) throw ConfigError("combine: weight must lie in [0, 1]");
  SaliencyMap out(saliency.height(), saliency.width());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = (1.0 - weight) * saliency.values()[i] + weight * prior.values()[i];
    out.values()[i] = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

SaliencyMap generate_saliency(const ImageGrid& image, const SaliencyGeneratorOptions& options) {
  SaliencyMap map = spectral_residual(image, options.spectral);
  if (options.center_prior_weight > 0.0) {
    map = combine(map, center_prior(map.height(), map.width(), options.center_prior_sigma),
                  options.center_prior_weight);
  }
  return map;
}

SaliencyMap load_saliency(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("saliency map not found: " + path.string());
  const auto bytes = read_file_bytes(path);
  cv::Mat mat;
  if (!bytes.empty()) {
    const cv::Mat buffer(1, static_cast<int>(bytes.size()), CV_8U, const_cast<std::uint8_t*>(bytes.data()));
    try {
      mat = cv::imdecode(buffer, cv::IMREAD_UNCHANGED);
    } catch (const cv::Exception&) {
      mat.release();
    }
  }
  if (mat.empty() || mat.rows <= 0 || mat.cols <= 0) {
    throw DataError("cannot decode saliency map " + path.string());
  }
  if (mat.channels() != 1) {
    throw DataError("saliency map " + path.string() + " must be single-channel, found " +
                    std::to_string(mat.channels()) + " channels");
  }
  double full = 255.0;
  if (mat.depth() == CV_16U) full = 65535.0;
  else if (mat.depth() != CV_8U) throw DataError("saliency map " + path.string() + " must be 8- or 16-bit");
  SaliencyMap out(mat.rows, mat.cols);
  cv::Mat as_double;
  mat.convertTo(as_double, CV_64F);
  for (int y = 0; y < mat.rows; ++y) {
    const auto* row = as_double.ptr<double>(y);
    for (int x = 0; x < mat.cols; ++x) out.at(y, x) = std::clamp(row[x] / full, 0.0, 1.0);
  }
  return out;
}

void save_saliency(const SaliencyMap& map, const fs::path& path) {
  if (map.empty()) throw ShapeError("cannot save an empty saliency map");
  cv::Mat mat(map.height(), map.width(), CV_8UC1);
  for (int y = 0; y < map.height(); ++y) {
    auto* row = mat.ptr<std::uint8_t>(y);
    for (int x = 0; x < map.width(); ++x) {
      row[x] = static_cast<std::uint8_t>(std::lround(std::clamp(map.at(y, x), 0.0, 1.0) * 255.0));
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

std::optional<fs::path> find_saliency_file(const fs::path& root, std::string_view id) {
  for (const char* ext : {".png", ".jpg", ".jpeg", ".bmp", ".pgm", ".tif", ".tiff", ".webp"}) {
    fs::path candidate = root / (std::string(id) + ext);
    if (fs::exists(candidate)) return candidate;
  }
  return std::nullopt;
}

std::string_view to_string(SaliencyAlignment a) {
  return a == SaliencyAlignment::aligned ? "aligned" : "whole_map";
}

SaliencyAlignment parse_alignment(std::string_view s) {
  if (s == "aligned") return SaliencyAlignment::aligned;
  if (s == "whole_map") return SaliencyAlignment::whole_map;
  throw ConfigError("unknown saliency alignment '" + std::string(s) + "'");
}

SaliencyMap align_to_patch(const SaliencyMap& map, const PatchSpec& spec, int source_height,
                           int source_width, SaliencyAlignment alignment, int out) {
  if (alignment == SaliencyAlignment::whole_map) {
    SaliencyMap warped = warp_resize(map, out, out);
    return spec.flip ? hflip(warped) : warped;
  }
  if (!spec.fits(source_height, source_width)) throw ShapeError("patch outside image bounds");
  const double sy = static_cast<double>(map.height()) / source_height;
  const double sx = static_cast<double>(map.width()) / source_width;
  const int r0 = static_cast<int>(std::lround(spec.top * sy));
  const int c0 = static_cast<int>(std::lround(spec.left * sx));
  int r1 = static_cast<int>(std::lround((spec.top + spec.size) * sy));
  int c1 = static_cast<int>(std::lround((spec.left + spec.size) * sx));
  r1 = std::max(r1, r0 + 1);
  c1 = std::max(c1, c0 + 1);
  if (r0 < 0 || c0 < 0 || r1 > map.height() || c1 > map.width()) {
    throw ShapeError("patch falls outside the saliency map after scaling");
  }
  SaliencyMap crop(r1 - r0, c1 - c0);
  for (int y = r0; y < r1; ++y) {
    for (int x = c0; x < c1; ++x) {
      const int dx = spec.flip ? (c1 - 1 - x) : (x - c0);
      crop.at(y - r0, dx) = map.at(y, x);
    }
  }
  return warp_resize(crop, out, out);
}

}  // namespace salrgb
