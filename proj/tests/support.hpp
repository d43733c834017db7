#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "salrgb/evaluation.hpp"
#include "salrgb/image.hpp"
#include "salrgb/manifest.hpp"
#include "salrgb/model.hpp"

namespace salrgb::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("salrgb-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << text;
}

// Uniform background with one bright disc.
inline ImageGrid blob_image(int cy, int cx, double radius, double brightness, double background = 0.2,
                            int size = kNetworkInputSize) {
  ImageGrid img(3, size, size, background);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
      if (d2 <= radius * radius) {
        for (int c = 0; c < 3; ++c) img.at(c, y, x) = brightness;
      }
    }
  }
  return img;
}

// Smooth deterministic texture, values in [0,1].
inline ImageGrid pattern_image(int height, int width, double phase = 0.0) {
  ImageGrid img(3, height, width);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        img.at(c, y, x) = 0.5 + 0.4 * std::sin(0.11 * x + 0.07 * y * (c + 1) + phase);
      }
    }
  }
  return img;
}

inline ImageRecord record(std::string id, std::string label, Split split = Split::train) {
  ImageRecord r;
  r.id = std::move(id);
  r.source = r.id + ".png";
  r.split = split;
  r.labels = {std::move(label)};
  return r;
}

// Returns the same probability vector for every patch.
class ConstantClassifier final : public PatchClassifier {
 public:
  explicit ConstantClassifier(std::vector<double> probs, std::vector<ColumnKind> columns = {ColumnKind::rgb_patch})
      : probs_(std::move(probs)), columns_(std::move(columns)) {}
  std::size_t num_classes() const override { return probs_.size(); }
  InputSpec input_spec() const override { return {columns_, kImageNetMean, kImageNetStd, kNetworkInputSize}; }
  std::vector<std::vector<double>> predict_proba(std::span<const SampleInputs> batch) const override {
    return std::vector<std::vector<double>>(batch.size(), probs_);
  }

 private:
  std::vector<double> probs_;
  std::vector<ColumnKind> columns_;
};

// Finite-difference probe of d f / d w at the current value of w. Networks
// with ReLU and max-pool are piecewise smooth: when a switch lies within eps
// of w the central difference straddles it and is off by half the jump, while
// the one-sided difference on the far side of the switch still equals the
// analytic slope. `agrees` accepts central agreement, or one-sided agreement
// (reported through `one_sided` so callers can bound how often it happens).
struct FdProbe {
  double central = 0.0;
  double forward = 0.0;
  double backward = 0.0;

  static double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); }
  bool agrees(double analytic, double tol, bool* one_sided = nullptr) const {
    if (rel(analytic, central) < tol) return true;
    const bool ok = rel(analytic, forward) < tol || rel(analytic, backward) < tol;
    if (ok && one_sided != nullptr) *one_sided = true;
    return ok;
  }
};

template <class F>
FdProbe probe_fd(double& w, double eps, F&& f) {
  const double saved = w;
  const double mid = f();
  w = saved + eps;
  const double up = f();
  w = saved - eps;
  const double down = f();
  w = saved;
  return {(up - down) / (2 * eps), (up - mid) / eps, (mid - down) / eps};
}

// 20 records over 4 classes with tie-free scores; reference metrics come from
// tests/oracles/eval_fixture.py.
inline std::vector<PredictionRecord> eval_fixture() {
  constexpr int kN = 20, kK = 4;
  std::vector<PredictionRecord> out;
  for (int i = 0; i < kN; ++i) {
    std::vector<double> v(kK);
    double hi = -1e300;
    for (int c = 0; c < kK; ++c) {
      v[c] = ((i * 7 + c * 13) % 17) / 17.0 + 0.001 * (i + 1) * (c + 1);
      hi = std::max(hi, v[c]);
    }
    double z = 0.0;
    for (auto& x : v) z += (x = std::exp(x - hi));
    for (auto& x : v) x /= z;
    PredictionRecord r;
    r.id = "r" + std::to_string(100 + i);
    r.probabilities = v;
    r.truths = {static_cast<std::size_t>(i % kK)};
    if (i % 5 == 0) r.truths.push_back(static_cast<std::size_t>((i + 1) % kK));
    out.push_back(std::move(r));
  }
  return out;
}

inline constexpr double kFixtureAp[4] = {0.29528267784846735, 0.6213815789473683, 0.42415935672514615,
                                         0.334197235513025};
inline constexpr double kFixtureMap = 0.4187552122585017;
inline constexpr double kFixturePrecision[4] = {0.16666666666666666, 0.6, 0.2, 0.25};
inline constexpr double kFixtureConfusion[4][4] = {
    {0.2, 0.2, 0.2, 0.4}, {0.2, 0.4, 0.4, 0.0}, {0.4, 0.2, 0.2, 0.2}, {0.4, 0.2, 0.2, 0.2}};

inline StyleTaxonomy fixture_taxonomy() { return StyleTaxonomy("fixture", {"A", "B", "C", "D"}); }

}  // namespace salrgb::testing
