#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "salrgb/error.hpp"
#include "salrgb/loss.hpp"
#include "salrgb/model.hpp"
#include "support.hpp"

namespace salrgb {
namespace {

using nn::Matrix;

ModelConfig small_config(std::vector<ColumnKind> columns, std::size_t fusion = 16, std::size_t classes = 3) {
  ModelConfig c;
  c.columns = std::move(columns);
  c.fusion_dim = fusion;
  c.num_classes = classes;
  c.init_seed = 17;
  return c;
}

SaliencyMap impulse(int y, int x) {
  SaliencyMap m(224, 224, 0.0);
  m.at(y, x) = 1.0;
  return m;
}

SampleInputs inputs_for(const SaliencyMap& map, const ImageGrid& rgb) {
  SampleInputs s;
  s.saliency = map;
  s.rgb_patch = rgb;
  return s;
}

Matrix& param(Model& m, const std::string& name) {
  for (auto& ref : m.parameters()) {
    if (ref.name == name) return *ref.value;
  }
  throw std::runtime_error("no parameter " + name);
}

TEST(SaliencyColumn, ConstantMapGivesConstantFeatures) {
  const auto f = saliency_column_forward(SaliencyMap(224, 224, 0.37));
  ASSERT_EQ(f.size(), 3136);
  for (Eigen::Index i = 0; i < f.size(); ++i) EXPECT_EQ(f(i), 0.37);
}

TEST(SaliencyColumn, ImpulseLocality) {
  const auto a = saliency_column_forward(impulse(0, 0));
  EXPECT_EQ(a(0), 1.0);
  EXPECT_EQ(a.sum(), 1.0);
  const auto b = saliency_column_forward(impulse(0, 4));
  std::vector<Eigen::Index> differ;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) != b(i)) differ.push_back(i);
  }
  EXPECT_EQ(differ, (std::vector<Eigen::Index>{0, 1}));
  const auto c = saliency_column_forward(impulse(223, 223));
  EXPECT_EQ(c(3135), 1.0);
  EXPECT_THROW(saliency_column_forward(SaliencyMap(112, 112)), ShapeError);
}

TEST(ModelConfig, ValidationAndStrictJson) {
  ModelConfig c;
  EXPECT_NO_THROW(c.validate());
  nlohmann::json j = c;
  EXPECT_EQ(j.at("saliency_feature_dim"), 3136);
  EXPECT_EQ(j.get<ModelConfig>(), c);

  nlohmann::json bad = j;
  bad["fusion_width"] = 3;
  EXPECT_THROW(bad.get<ModelConfig>(), ConfigError);
  bad = j;
  bad["saliency_feature_dim"] = 100;
  EXPECT_THROW(bad.get<ModelConfig>(), ConfigError);
  bad = j;
  bad["columns"] = {"saliency", "depth"};
  EXPECT_THROW(bad.get<ModelConfig>(), ConfigError);

  c.columns = {};
  EXPECT_THROW(c.validate(), ConfigError);
  c.columns = {ColumnKind::saliency, ColumnKind::saliency};
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig{};
  c.dropout_rate = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig{};
  c.backbone_id = "missing";
  EXPECT_THROW(Model{c}, ConfigError);
  c = ModelConfig{};
  c.rgb_feature_dim = 2208;
  EXPECT_THROW(Model{c}, ConfigError);
}

TEST(ModelShape, ParameterCounts) {
  const Model sal_only(small_config({ColumnKind::saliency}, 8, 3));
  EXPECT_EQ(sal_only.num_parameters(), 25123u);
  EXPECT_EQ(sal_only.fusion_input_dim(), 3136u);
  EXPECT_TRUE(sal_only.parameter_groups().backbone.empty());
  EXPECT_EQ(sal_only.backbone(0), nullptr);

  const Model two(small_config({ColumnKind::rgb_patch, ColumnKind::saliency}, 16, 14));
  const std::size_t toy = (27 * 8 + 8) + (72 * 16 + 16) + (144 * 32 + 32);
  EXPECT_EQ(two.fusion_input_dim(), 32u + 3136u);
  EXPECT_EQ(two.num_parameters(), toy + (32 + 3136 + 1) * 16 + (16 + 1) * 14);
  const auto groups = two.parameter_groups();
  EXPECT_TRUE(groups.backbone.empty());  // random init trains with the new layers
  EXPECT_EQ(groups.new_layers.front(), "rgb_patch.conv1.weight");
  EXPECT_EQ(groups.new_layers.back(), "classifier.bias");
  EXPECT_EQ(two.config().rgb_feature_dim, 32u);

  auto pretrained = small_config({ColumnKind::rgb_patch, ColumnKind::saliency});
  pretrained.backbone_weights = "weights.ckpt";
  const auto pg = Model(pretrained).parameter_groups();
  EXPECT_EQ(pg.backbone.size(), 6u);
  EXPECT_EQ(pg.new_layers, (std::vector<std::string>{"fusion.weight", "fusion.bias", "classifier.weight", "classifier.bias"}));
}

TEST(Head, ZeroFeaturesGiveZeroLogits) {
  const Model m(small_config({ColumnKind::saliency}));
  const Matrix logits = m.classify_features(Matrix::Zero(2, 3136), Mode::eval);
  EXPECT_EQ(logits, Matrix::Zero(2, 3));
  EXPECT_THROW(m.classify_features(Matrix::Zero(2, 10), Mode::eval), ShapeError);
}

TEST(Head, HandSetWeights) {
  Model m(small_config({ColumnKind::saliency}, 2, 2));
  auto& w1 = param(m, "fusion.weight");
  auto& b1 = param(m, "fusion.bias");
  auto& w2 = param(m, "classifier.weight");
  auto& b2 = param(m, "classifier.bias");
  w1.setZero();
  w1(0, 0) = 1.0;
  w1(0, 1) = 2.0;
  w1(1, 0) = -1.0;
  w1(1, 1) = 0.5;
  b1 << 0.5, 0.25;
  w2 << 1.0, -2.0, 3.0, 1.0;
  b2 << 0.1, -0.1;
  Matrix x = Matrix::Zero(1, 3136);
  x(0, 0) = 1.0;
  x(0, 1) = 2.0;
  // hidden = relu([1+4+0.5, -1+1+0.25]) = [5.5, 0.25]
  // logits = [5.5-0.5+0.1, 16.5+0.25-0.1] = [5.1, 16.65]
  const Matrix logits = m.classify_features(x, Mode::eval);
  EXPECT_NEAR(logits(0, 0), 5.1, 1e-12);
  EXPECT_NEAR(logits(0, 1), 16.65, 1e-12);
  x(0, 0) = -10.0;  // first hidden unit clipped to zero
  const Matrix clipped = m.classify_features(x, Mode::eval);
  EXPECT_NEAR(clipped(0, 0), -2.0 * 11.25 + 0.1, 1e-12);
}

TEST(Head, EvalModeIgnoresDropoutRate) {
  auto a = small_config({ColumnKind::saliency});
  auto b = a;
  b.dropout_rate = 0.9;
  const Model ma(a), mb(b);
  std::vector<SampleInputs> batch(1);
  batch[0].saliency = impulse(30, 40);
  EXPECT_EQ(ma.forward(batch, Mode::eval), mb.forward(batch, Mode::eval));
  EXPECT_NE(ma.forward(batch, Mode::train, 1), mb.forward(batch, Mode::train, 1));
  EXPECT_EQ(ma.forward(batch, Mode::train, 1), ma.forward(batch, Mode::train, 1));
}

TEST(Softmax, Examples) {
  const std::vector<double> uniform(14, 0.7);
  for (double p : softmax(uniform)) EXPECT_NEAR(p, 1.0 / 14, 1e-15);
  std::vector<double> logits(14, 0.0);
  logits[0] = 2.0;
  const auto p = softmax(logits);
  EXPECT_NEAR(p[0], std::exp(2.0) / (std::exp(2.0) + 13.0), 1e-15);
  std::vector<double> shifted = logits;
  for (double& v : shifted) v += 123.0;
  const auto q = softmax(shifted);
  for (int i = 0; i < 14; ++i) EXPECT_NEAR(p[i], q[i], 1e-15);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 30.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> l(20);
    for (double& v : l) v = n(rng);
    const auto s = softmax(l);
    EXPECT_NEAR(std::accumulate(s.begin(), s.end(), 0.0), 1.0, 1e-6);
    for (double v : s) EXPECT_GE(v, 0.0);
  }
}

TEST(CrossEntropy, ClosedForms) {
  EXPECT_NEAR(cross_entropy(std::vector<double>(14, 0.0), 3), std::log(14.0), 1e-12);
  EXPECT_NEAR(cross_entropy(std::vector<double>{1.0, 0.0}, 0), std::log(1.0 + std::exp(-1.0)), 1e-12);
  EXPECT_LT(cross_entropy(std::vector<double>{800.0, 0.0, 0.0}, 0), 1e-300);
  EXPECT_TRUE(std::isfinite(cross_entropy(std::vector<double>{800.0, 0.0}, 1)));
  EXPECT_THROW(cross_entropy(std::vector<double>{1.0, 0.0}, 2), ShapeError);
}

TEST(Forward, GeometrySensitivityAcrossPoolingCell) {
  const Model m(small_config({ColumnKind::saliency}, 32, 4));
  std::vector<SampleInputs> a(1), b(1);
  a[0].saliency = impulse(100, 100);
  b[0].saliency = impulse(100, 104);
  const auto pa = m.predict_proba(a);
  const auto pb = m.predict_proba(b);
  EXPECT_NE(pa, pb);
  EXPECT_NEAR(std::accumulate(pa[0].begin(), pa[0].end(), 0.0), 1.0, 1e-12);
}

TEST(Forward, SaliencyColumnIgnoresRgbContent) {
  const Model m(small_config({ColumnKind::rgb_patch, ColumnKind::saliency}));
  const auto map = impulse(10, 20);
  const std::vector<SampleInputs> x{inputs_for(map, testing::pattern_image(224, 224, 0.0))};
  const std::vector<SampleInputs> y{inputs_for(map, testing::pattern_image(224, 224, 2.0))};
  const auto fx = m.column_features(x);
  const auto fy = m.column_features(y);
  EXPECT_EQ(fx[1], fy[1]);
  EXPECT_NE(fx[0], fy[0]);
}

TEST(Forward, ZeroedColumnWeightsMakeLogitsInvariant) {
  Model m(small_config({ColumnKind::rgb_patch, ColumnKind::saliency}));
  param(m, "fusion.weight").leftCols(32).setZero();
  const auto map = impulse(10, 20);
  const std::vector<SampleInputs> x{inputs_for(map, testing::pattern_image(224, 224, 0.0))};
  const std::vector<SampleInputs> y{inputs_for(map, testing::pattern_image(224, 224, 2.0))};
  EXPECT_EQ(m.forward(x, Mode::eval), m.forward(y, Mode::eval));
}

TEST(Forward, MissingColumnInputIsAnError) {
  const Model m(small_config({ColumnKind::rgb_patch, ColumnKind::saliency}));
  std::vector<SampleInputs> batch(1);
  batch[0].saliency = impulse(1, 1);
  EXPECT_THROW(m.forward(batch, Mode::eval), ShapeError);
}

TEST(Forward, CloneAndJobCountDoNotChangeResults) {
  Model m(small_config({ColumnKind::rgb_patch, ColumnKind::rgb_warp, ColumnKind::saliency}));
  std::vector<SampleInputs> batch;
  for (int i = 0; i < 3; ++i) {
    SampleInputs s = inputs_for(impulse(i, 2 * i), testing::pattern_image(224, 224, i));
    s.rgb_warp = testing::pattern_image(224, 224, i + 0.5);
    batch.push_back(s);
  }
  const Matrix serial = m.forward(batch, Mode::eval);
  const Model copy = m.clone();
  EXPECT_EQ(copy.forward(batch, Mode::eval), serial);
  m.set_jobs(3);
  EXPECT_EQ(m.forward(batch, Mode::eval), serial);
  Gradients g1, g3;
  const std::vector<std::size_t> labels{0, 1, 2};
  m.set_jobs(1);
  m.compute_gradients(batch, labels, {}, 9, g1);
  m.set_jobs(3);
  m.compute_gradients(batch, labels, {}, 9, g3);
  EXPECT_EQ(g1, g3);
}

// Finite differences over every parameter group, including the optional
// projection and a toy backbone, with non-uniform sample weights.
TEST(Gradients, MatchFiniteDifferencesWithProjectionAndWeights) {
  auto cfg = small_config({ColumnKind::rgb_patch, ColumnKind::saliency}, 6, 3);
  cfg.saliency_projection_dim = 5;
  cfg.dropout_rate = 0.0;
  Model m(cfg);
  std::vector<SampleInputs> batch;
  for (int i = 0; i < 2; ++i) {
    SaliencyMap map(224, 224, 0.0);
    for (int y = 0; y < 224; ++y)
      for (int x = 0; x < 224; ++x) map.at(y, x) = 0.5 + 0.5 * std::sin(0.05 * (x + 3 * i) + 0.03 * y);
    batch.push_back(inputs_for(map, testing::pattern_image(224, 224, i)));
  }
  const std::vector<std::size_t> labels{2, 0};
  const std::vector<double> weights{0.4, 1.6};
  Gradients grads;
  m.compute_gradients(batch, labels, weights, 0, grads, Mode::eval);
  auto loss = [&](Model& model) {
    Gradients scratch;
    return model.compute_gradients(batch, labels, weights, 0, scratch, Mode::eval).loss;
  };
  std::mt19937_64 rng(5);
  auto refs = m.parameters();
  ASSERT_EQ(refs.size(), grads.size());
  int one_sided = 0, total = 0;
  for (std::size_t k = 0; k < refs.size(); ++k) {
    for (int t = 0; t < 3; ++t) {
      const auto idx = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(refs[k].value->size()));
      const auto fd = testing::probe_fd(refs[k].value->data()[idx], 1e-5, [&] { return loss(m); });
      const double analytic = grads[k].data()[idx];
      bool used_one_sided = false;
      EXPECT_TRUE(fd.agrees(analytic, 1e-4, &used_one_sided) || std::abs(fd.central - analytic) < 1e-9)
          << refs[k].name << "[" << idx << "] analytic " << analytic << " central " << fd.central;
      one_sided += used_one_sided;
      ++total;
    }
  }
  EXPECT_LE(one_sided * 4, total);
}

}  // namespace
}  // namespace salrgb
