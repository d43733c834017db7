#include <gtest/gtest.h>

#include <map>
#include <set>

#include <opencv2/imgcodecs.hpp>

#include "salrgb/error.hpp"
#include "salrgb/image.hpp"
#include "salrgb/transforms.hpp"
#include "support.hpp"

namespace salrgb {
namespace {

std::vector<std::uint8_t> encode(const cv::Mat& mat, const char* ext = ".png") {
  std::vector<std::uint8_t> bytes;
  cv::imencode(ext, mat, bytes);
  return bytes;
}

ImageGrid ramp(int h, int w) {
  ImageGrid img(3, h, w);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) img.at(c, y, x) = (c * 7 + y * w + x) / static_cast<double>(3 * h * w + 7);
  return img;
}

TEST(Decode, BlackAndWhiteEndpoints) {
  const auto black = decode_image(encode(cv::Mat(2, 2, CV_8UC3, cv::Scalar(0, 0, 0))));
  EXPECT_EQ(black.channels(), 3);
  for (double v : black.data()) EXPECT_EQ(v, 0.0);
  const auto white = decode_image(encode(cv::Mat(2, 2, CV_8UC3, cv::Scalar(255, 255, 255))));
  for (double v : white.data()) EXPECT_EQ(v, 1.0);
}

TEST(Decode, ChannelOrderIsRgb) {
  // OpenCV stores BGR: blue=10, green=20, red=30.
  const auto img = decode_image(encode(cv::Mat(1, 1, CV_8UC3, cv::Scalar(10, 20, 30))));
  EXPECT_DOUBLE_EQ(img.at(0, 0, 0), 30 / 255.0);
  EXPECT_DOUBLE_EQ(img.at(1, 0, 0), 20 / 255.0);
  EXPECT_DOUBLE_EQ(img.at(2, 0, 0), 10 / 255.0);
}

TEST(Decode, GrayscaleIsReplicatedAndAlphaDropped) {
  cv::Mat gray(3, 4, CV_8UC1);
  for (int i = 0; i < 12; ++i) gray.data[i] = static_cast<std::uint8_t>(i * 20);
  const auto g = decode_image(encode(gray));
  ASSERT_EQ(g.channels(), 3);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 4; ++x) {
      EXPECT_EQ(g.at(0, y, x), g.at(1, y, x));
      EXPECT_EQ(g.at(0, y, x), g.at(2, y, x));
    }
  const auto rgba = decode_image(encode(cv::Mat(2, 2, CV_8UC4, cv::Scalar(0, 0, 255, 7))));
  EXPECT_EQ(rgba.channels(), 3);
  EXPECT_EQ(rgba.at(0, 1, 1), 1.0);
}

TEST(Decode, SixteenBitScalesToUnitRange) {
  const auto img = decode_image(encode(cv::Mat(1, 1, CV_16UC3, cv::Scalar(65535, 0, 65535))));
  EXPECT_EQ(img.at(0, 0, 0), 1.0);
  EXPECT_EQ(img.at(1, 0, 0), 0.0);
}

TEST(Decode, GarbageIsRejected) {
  const std::vector<std::uint8_t> junk = {1, 2, 3, 4, 5};
  EXPECT_THROW(decode_image(junk), DataError);
  EXPECT_THROW(decode_image({}), DataError);
}

TEST(Decode, WriteReadRoundTripIsExactOn8BitValues) {
  testing::TempDir dir;
  ImageGrid img(3, 5, 7);
  for (std::size_t i = 0; i < img.data().size(); ++i) img.data()[i] = static_cast<double>(i % 256) / 255.0;
  write_image(img, dir / "x.png");
  EXPECT_EQ(read_image(dir / "x.png"), img);
  const auto info = probe_image(dir / "x.png");
  EXPECT_EQ(info.height, 5);
  EXPECT_EQ(info.width, 7);
}

TEST(Warp, SameDimsIsIdentity) {
  const auto img = ramp(9, 13);
  EXPECT_EQ(warp_resize(img, 9, 13), img);
}

TEST(Warp, ConstantStaysConstant) {
  const ImageGrid img(3, 17, 11, 0.37);
  for (auto [h, w] : std::vector<std::pair<int, int>>{{1, 1}, {5, 40}, {224, 224}, {3, 2}}) {
    const auto out = warp_resize(img, h, w);
    for (double v : out.data()) EXPECT_EQ(v, 0.37);
  }
}

TEST(Warp, CheckerboardHalvesToBlockMeans) {
  ImageGrid board(3, 4, 4);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) board.at(c, y, x) = (x + y) % 2 == 0 ? 1.0 : 0.0;
  const auto half = warp_resize(board, 2, 2);
  for (double v : half.data()) EXPECT_NEAR(v, 0.5, 1e-15);

  ImageGrid blocks(3, 4, 4);
  const double vals[4] = {0.1, 0.9, 0.3, 0.6};
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) blocks.at(c, y, x) = vals[(y % 2) * 2 + (x % 2)];
  const auto halved = warp_resize(blocks, 2, 2);
  for (double v : halved.data()) EXPECT_NEAR(v, (0.1 + 0.9 + 0.3 + 0.6) / 4, 1e-15);
}

TEST(Warp, OutputClampedAndAspectNotPreserved) {
  const auto out = warp_resize(ramp(10, 30), 20, 20);
  EXPECT_EQ(out.height(), 20);
  EXPECT_EQ(out.width(), 20);
  for (double v : out.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_THROW(warp_resize(ramp(4, 4), 0, 3), ShapeError);
}

TEST(Crop, ExactSizeImageGivesFullSpec) {
  Rng rng(1);
  const auto img = ramp(224, 224);
  const auto r = random_crop(img, 224, rng);
  EXPECT_EQ(r.spec.top, 0);
  EXPECT_EQ(r.spec.left, 0);
  EXPECT_EQ(r.patch, img);
}

TEST(Crop, FixedSeedIsRepeatableAndSpecReproducesCrop) {
  const auto img = ramp(300, 300);
  Rng a(42), b(42);
  const auto ra = random_crop(img, 224, a);
  const auto rb = random_crop(img, 224, b);
  EXPECT_EQ(ra.spec, rb.spec);
  EXPECT_EQ(apply_patch(img, ra.spec), ra.patch);
  EXPECT_EQ(ra.patch.height(), 224);
}

TEST(Crop, OffsetsAreUniform) {
  Rng rng(2024);
  constexpr int kDraws = 10000;
  std::vector<int> top(77, 0), left(77, 0);
  for (int i = 0; i < kDraws; ++i) {
    const auto s = random_patch_spec(300, 300, 224, rng);
    ASSERT_TRUE(s.fits(300, 300));
    ++top[s.top];
    ++left[s.left];
  }
  auto chi2 = [&](const std::vector<int>& counts) {
    const double expected = kDraws / 77.0;
    double sum = 0.0;
    for (int c : counts) sum += (c - expected) * (c - expected) / expected;
    return sum;
  };
  // 76 degrees of freedom; 0.1% critical value is about 117.
  EXPECT_LT(chi2(top), 117.0);
  EXPECT_LT(chi2(left), 117.0);
  EXPECT_GT(top.front(), 0);
  EXPECT_GT(top.back(), 0);
}

TEST(Crop, SmallSourceIsUpscaledToShortSide) {
  Rng rng(3);
  const auto r = random_crop(ramp(100, 150), 224, rng);
  EXPECT_EQ(r.source_height, 224);
  EXPECT_EQ(r.source_width, 336);
  EXPECT_EQ(r.patch.height(), 224);
  EXPECT_EQ(r.patch.width(), 224);
}

TEST(Patch, IdentityFlipInvolutionAndHandIndexing) {
  const auto img = ramp(6, 6);
  EXPECT_EQ(apply_patch(img, {0, 0, 6, false}), img);
  const auto flipped = apply_patch(img, {0, 0, 6, true});
  EXPECT_EQ(hflip(flipped), img);
  EXPECT_EQ(apply_patch(flipped, {0, 0, 6, true}), img);

  ImageGrid three(1, 3, 3);
  for (int i = 0; i < 9; ++i) three.data()[i] = i / 10.0;
  const auto block = apply_patch(three, {1, 1, 2, false});
  EXPECT_EQ(block.data(), (std::vector<double>{0.4, 0.5, 0.7, 0.8}));
  const auto mirrored = apply_patch(three, {1, 1, 2, true});
  EXPECT_EQ(mirrored.data(), (std::vector<double>{0.5, 0.4, 0.8, 0.7}));
  EXPECT_THROW(apply_patch(three, {2, 2, 2, false}), ShapeError);
  EXPECT_THROW(apply_patch(three, {-1, 0, 2, false}), ShapeError);
}

TEST(Patch, EveryInBoundsSpecHasSquareShape) {
  const auto img = ramp(12, 9);
  for (int size = 1; size <= 9; ++size)
    for (int top = 0; top + size <= 12; ++top)
      for (int left = 0; left + size <= 9; ++left) {
        const auto p = apply_patch(img, {top, left, size, (top + left) % 2 == 0});
        ASSERT_EQ(p.height(), size);
        ASSERT_EQ(p.width(), size);
      }
}

TEST(Grid, FiftySpecsTwentyFiveRectangles) {
  const auto specs = grid_patches(256, 341, 224);
  ASSERT_EQ(specs.size(), 50u);
  std::set<std::tuple<int, int, int>> rects;
  for (const auto& s : specs) {
    EXPECT_TRUE(s.fits(256, 341));
    rects.insert({s.top, s.left, s.size});
  }
  EXPECT_EQ(rects.size(), 25u);
  EXPECT_EQ(specs.front(), (PatchSpec{0, 0, 224, false}));
  EXPECT_EQ(specs[1], (PatchSpec{0, 0, 224, true}));
  EXPECT_EQ(specs.back(), (PatchSpec{32, 117, 224, true}));
}

TEST(Grid, DegenerateSquareSource) {
  const auto specs = grid_patches(224, 224, 224);
  ASSERT_EQ(specs.size(), 50u);
  std::set<bool> flips;
  for (const auto& s : specs) {
    EXPECT_EQ(s.top, 0);
    EXPECT_EQ(s.left, 0);
    flips.insert(s.flip);
  }
  EXPECT_EQ(flips.size(), 2u);
}

TEST(Grid, LinearSpacingOn448) {
  const auto specs = grid_patches(448, 448, 224);
  std::set<int> tops, lefts;
  for (const auto& s : specs) {
    tops.insert(s.top);
    lefts.insert(s.left);
  }
  const std::set<int> expected{0, 56, 112, 168, 224};
  EXPECT_EQ(tops, expected);
  EXPECT_EQ(lefts, expected);
  EXPECT_EQ(grid_patches(448, 448, 224), specs);  // pure geometry, repeatable
  EXPECT_THROW(grid_patches(200, 300, 224), ShapeError);
}

TEST(Grid, CenterPatch) {
  EXPECT_EQ(center_patch(256, 300, 224), (PatchSpec{16, 38, 224, false}));
  EXPECT_EQ(center_patch(100, 120, 224), (PatchSpec{0, 10, 100, false}));
}

TEST(Normalize, Examples) {
  const auto img = ramp(3, 3);
  const std::array<double, 3> zero{0, 0, 0}, one{1, 1, 1};
  EXPECT_EQ(normalize(img, zero, one), img);
  const std::array<double, 3> mean{0.2, 0.4, 0.6};
  ImageGrid at_mean(3, 2, 2);
  for (int c = 0; c < 3; ++c)
    for (auto& v : at_mean.plane(c)) v = mean[c];
  const auto centered = normalize(at_mean, mean, one);
  for (double v : centered.data()) EXPECT_EQ(v, 0.0);
  ImageGrid single(3, 1, 1, 0.8);
  const std::array<double, 3> half{0.5, 0.5, 0.5}, quarter{0.25, 0.25, 0.25};
  EXPECT_NEAR(normalize(single, half, quarter).at(0, 0, 0), 1.2, 1e-15);
  const std::array<double, 3> bad{0.25, 0.0, 0.25};
  EXPECT_THROW(normalize(single, half, bad), ConfigError);
}

}  // namespace
}  // namespace salrgb
