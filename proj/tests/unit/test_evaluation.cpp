#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>

#include "salrgb/error.hpp"
#include "salrgb/evaluation.hpp"
#include "support.hpp"

namespace salrgb {
namespace {

using testing::ConstantClassifier;

// Alternates one-hot outputs per patch in call order.
class AlternatingClassifier final : public PatchClassifier {
 public:
  std::size_t num_classes() const override { return 2; }
  InputSpec input_spec() const override { return {{ColumnKind::rgb_patch}}; }
  std::vector<std::vector<double>> predict_proba(std::span<const SampleInputs> batch) const override {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      out.push_back(counter_++ % 2 == 0 ? std::vector<double>{1.0, 0.0} : std::vector<double>{0.0, 1.0});
    }
    return out;
  }

 private:
  mutable std::size_t counter_ = 0;
};

// Reads the class back from a constant image whose fill encodes it.
class BrightnessClassifier final : public PatchClassifier {
 public:
  explicit BrightnessClassifier(std::size_t k) : k_(k) {}
  std::size_t num_classes() const override { return k_; }
  InputSpec input_spec() const override { return {{ColumnKind::rgb_patch, ColumnKind::saliency}}; }
  std::vector<std::vector<double>> predict_proba(std::span<const SampleInputs> batch) const override {
    std::vector<std::vector<double>> out;
    for (const auto& s : batch) {
      const double fill = s.rgb_patch->at(0, 100, 100) * kImageNetStd[0] + kImageNetMean[0];
      const auto cls = static_cast<std::size_t>(std::lround(fill / 0.2));
      std::vector<double> p(k_, 0.1 / static_cast<double>(k_ - 1));
      p[cls] = 0.9;
      out.push_back(p);
    }
    return out;
  }

 private:
  std::size_t k_;
};

// Records every patch it is shown.
class RecordingClassifier final : public PatchClassifier {
 public:
  std::size_t num_classes() const override { return 2; }
  InputSpec input_spec() const override { return {{ColumnKind::rgb_patch}}; }
  std::vector<std::vector<double>> predict_proba(std::span<const SampleInputs> batch) const override {
    std::lock_guard lock(mu_);
    for (const auto& s : batch) seen_.push_back(*s.rgb_patch);
    return std::vector<std::vector<double>>(batch.size(), {0.5, 0.5});
  }
  const std::vector<ImageGrid>& seen() const { return seen_; }

 private:
  mutable std::mutex mu_;
  mutable std::vector<ImageGrid> seen_;
};

MemorySampleSource constant_source(const std::vector<ImageRecord>& records, const std::vector<int>& classes) {
  MemorySampleSource src;
  for (std::size_t i = 0; i < records.size(); ++i) {
    src.add(records[i].id, ImageGrid(3, 240, 300, 0.2 * classes[i]), SaliencyMap(240, 300, 0.5));
  }
  return src;
}

TEST(PatchPolicy, NamesRoundTrip) {
  for (auto k : {PatchPolicyKind::grid, PatchPolicyKind::random, PatchPolicyKind::center}) {
    EXPECT_EQ(parse_patch_policy(to_string(k)), k);
  }
  EXPECT_THROW(parse_patch_policy("all"), ConfigError);
}

TEST(MakePatches, GridAndRandomGiveFiftyPatches) {
  PatchPolicy policy;
  EXPECT_EQ(make_patches(256, 341, policy).size(), 50u);
  policy.kind = PatchPolicyKind::center;
  EXPECT_EQ(make_patches(256, 341, policy).size(), 1u);
  policy.kind = PatchPolicyKind::random;
  const auto a = make_patches(256, 341, policy, "img1");
  ASSERT_EQ(a.size(), 50u);
  for (const auto& p : a) EXPECT_TRUE(p.fits(256, 341));
  const auto b = make_patches(256, 341, policy, "img1");
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].top, b[i].top);
    EXPECT_EQ(a[i].left, b[i].left);
    EXPECT_EQ(a[i].flip, b[i].flip);
  }
  const auto c = make_patches(256, 341, policy, "img2");
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) any_diff |= a[i].top != c[i].top || a[i].left != c[i].left;
  EXPECT_TRUE(any_diff);
}

TEST(PredictImage, ConstantClassifierPassesThrough) {
  const ConstantClassifier stub({0.1, 0.2, 0.7});
  const auto p = predict_image(stub, testing::pattern_image(300, 400), nullptr, PatchPolicy{});
  ASSERT_EQ(p.size(), 3u);
  EXPECT_NEAR(p[0], 0.1, 1e-15);
  EXPECT_NEAR(p[1], 0.2, 1e-15);
  EXPECT_NEAR(p[2], 0.7, 1e-15);
}

TEST(PredictImage, AveragesOverAllFiftyPatches) {
  const AlternatingClassifier stub;
  const auto p = predict_image(stub, testing::pattern_image(300, 400), nullptr, PatchPolicy{});
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(PredictImage, GridFeedsFiftyDistinctPatchesWithMirroredPairs) {
  const RecordingClassifier stub;
  predict_image(stub, testing::pattern_image(300, 400, 0.3), nullptr, PatchPolicy{});
  const auto& seen = stub.seen();
  ASSERT_EQ(seen.size(), 50u);
  for (std::size_t i = 0; i < 50; i += 2) {
    EXPECT_TRUE(seen[i + 1] == hflip(seen[i])) << "pair " << i;
  }
  for (std::size_t i = 0; i < 50; ++i) {
    for (std::size_t j = i + 1; j < 50; ++j) EXPECT_FALSE(seen[i] == seen[j]) << i << " vs " << j;
  }
}

TEST(PredictImage, MissingSaliencyForSaliencyClassifierThrows) {
  const ConstantClassifier stub({0.5, 0.5}, {ColumnKind::saliency});
  EXPECT_THROW(predict_image(stub, testing::pattern_image(256, 256), nullptr, PatchPolicy{}), Error);
}

TEST(ComputeReport, MatchesReferenceOnFixture) {
  const auto preds = testing::eval_fixture();
  const auto report = compute_report(preds, testing::fixture_taxonomy());
  EXPECT_EQ(report.sample_count, 20u);
  for (int c = 0; c < 4; ++c) {
    ASSERT_TRUE(report.average_precision[c].has_value());
    EXPECT_NEAR(*report.average_precision[c], testing::kFixtureAp[c], 1e-12) << c;
    ASSERT_TRUE(report.precision[c].has_value());
    EXPECT_NEAR(*report.precision[c], testing::kFixturePrecision[c], 1e-12) << c;
    for (int d = 0; d < 4; ++d) EXPECT_NEAR(report.confusion.rows[c][d], testing::kFixtureConfusion[c][d], 1e-12);
  }
  ASSERT_TRUE(report.map.has_value());
  EXPECT_NEAR(*report.map, testing::kFixtureMap, 1e-12);
}

TEST(ComputeReport, ClassWithoutPositivesIsUndefinedAndExcluded) {
  std::vector<PredictionRecord> preds{{"a", {0.7, 0.2, 0.1}, {0}}, {"b", {0.3, 0.6, 0.1}, {1}}};
  const auto report = compute_report(preds, StyleTaxonomy("t3", {"x", "y", "z"}));
  EXPECT_FALSE(report.average_precision[2].has_value());
  EXPECT_DOUBLE_EQ(*report.map, 1.0);
  EXPECT_TRUE(report.confusion.zero_support[2]);
}

TEST(ComputeReport, RejectsBadInput) {
  const auto tax = testing::fixture_taxonomy();
  EXPECT_THROW(compute_report({}, tax), DataError);
  std::vector<PredictionRecord> wrong{{"a", {0.5, 0.5}, {0}}};
  EXPECT_THROW(compute_report(wrong, tax), DataError);
}

TEST(Evaluate, PerfectClassifierScoresOne) {
  std::vector<ImageRecord> records;
  std::vector<int> cls;
  const auto tax = testing::fixture_taxonomy();
  for (int i = 0; i < 12; ++i) {
    records.push_back(testing::record("img" + std::to_string(11 - i), tax.at(i % 4), Split::test));
    cls.push_back(i % 4);
  }
  const auto src = constant_source(records, cls);
  const BrightnessClassifier stub(4);
  const auto ev = evaluate(stub, records, src, tax, PatchPolicy{}, 2);
  EXPECT_DOUBLE_EQ(*ev.report.map, 1.0);
  for (int c = 0; c < 4; ++c) EXPECT_DOUBLE_EQ(ev.report.confusion.rows[c][c], 1.0);
  ASSERT_EQ(ev.predictions.size(), 12u);
  EXPECT_TRUE(std::is_sorted(ev.predictions.begin(), ev.predictions.end(),
                             [](const auto& a, const auto& b) { return a.id < b.id; }));
  for (const auto& p : ev.predictions) {
    EXPECT_NEAR(std::accumulate(p.probabilities.begin(), p.probabilities.end(), 0.0), 1.0, 1e-12);
  }
}

TEST(Evaluate, ResultIndependentOfJobs) {
  std::vector<ImageRecord> records;
  std::vector<int> cls;
  const auto tax = testing::fixture_taxonomy();
  for (int i = 0; i < 9; ++i) {
    records.push_back(testing::record("r" + std::to_string(i), tax.at((i * 3) % 4), Split::test));
    cls.push_back(i % 4);
  }
  const auto src = constant_source(records, cls);
  const BrightnessClassifier stub(4);
  const auto a = evaluate(stub, records, src, tax, PatchPolicy{}, 1);
  const auto b = evaluate(stub, records, src, tax, PatchPolicy{}, 3);
  ASSERT_EQ(a.predictions.size(), b.predictions.size());
  for (std::size_t i = 0; i < a.predictions.size(); ++i) {
    EXPECT_EQ(a.predictions[i].probabilities, b.predictions[i].probabilities);
  }
  EXPECT_EQ(a.report.map, b.report.map);
}

TEST(Evaluate, ClassCountMismatchThrows) {
  const ConstantClassifier stub({0.5, 0.5});
  MemorySampleSource src;
  std::vector<ImageRecord> records{testing::record("a", "A")};
  EXPECT_THROW(evaluate(stub, records, src, testing::fixture_taxonomy(), PatchPolicy{}), DataError);
}

}  // namespace
}  // namespace salrgb
