#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "sepsis/gbdt.hpp"
#include "sepsis/kernels.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace sepsis;
using namespace sepsis::gbdt;

TEST(Loss, GradientAndHessianExamples) {
  const auto a = logloss_grad_hess(0.3, 1);
  EXPECT_NEAR(a.g, -0.7, 1e-15);
  EXPECT_NEAR(a.h, 0.21, 1e-15);
  const auto b = logloss_grad_hess(0.9, 0);
  EXPECT_NEAR(b.g, 0.9, 1e-15);
  EXPECT_NEAR(b.h, 0.09, 1e-15);
  EXPECT_GT(logloss_grad_hess(0.0, 1).h, 0.0);
}

TEST(Loss, GradientMatchesFiniteDifference) {
  for (double z : {-4.0, -0.5, 0.0, 1.3, 5.0}) {
    for (int y : {0, 1}) {
      const double eps = 1e-6;
      const double fd = (oracle::row_log_loss(z + eps, y) - oracle::row_log_loss(z - eps, y)) / (2 * eps);
      const double fd2 =
          (oracle::row_log_loss(z + 1e-4, y) - 2 * oracle::row_log_loss(z, y) + oracle::row_log_loss(z - 1e-4, y)) / 1e-8;
      const auto gh = logloss_grad_hess(sigmoid(z), y);
      EXPECT_NEAR(gh.g, fd, 1e-6);
      EXPECT_NEAR(gh.h, fd2, 1e-5);
    }
  }
}

TEST(Binning, FewDistinctValuesGetOwnBins) {
  ColumnMatrix m;
  m.names = {"a", "b"};
  m.columns = {{1, 2, 3, 1, 2, kMissing}, {kMissing, kMissing, kMissing, kMissing, kMissing, kMissing}};
  const auto b = quantile_bin(m, 16);
  EXPECT_EQ(b.layout.value_bins[0], 3u);
  EXPECT_EQ(b.bins[0], (std::vector<std::uint16_t>{0, 1, 2, 0, 1, 3}));
  EXPECT_EQ(b.layout.value_bins[1], 0u);
  for (auto v : b.bins[1]) EXPECT_EQ(v, b.layout.missing_bin(1));
}

TEST(Binning, UniformQuantiles) {
  ColumnMatrix m;
  m.names = {"u"};
  m.columns.emplace_back();
  auto rng = make_rng(1, "uniform");
  for (int i = 0; i < 100000; ++i) m.columns[0].push_back(uniform01(rng));
  const auto edges = quantile_edges(m.columns[0], 10);
  ASSERT_EQ(edges.size(), 9u);
  for (std::size_t i = 0; i < edges.size(); ++i) EXPECT_NEAR(edges[i], (i + 1) / 10.0, 0.02);
}

TEST(Binning, RejectsDegenerateInput) {
  ColumnMatrix empty;
  empty.names = {"a"};
  empty.columns = {{}};
  EXPECT_THROW(quantile_bin(empty, 8), ValidationError);
  ColumnMatrix one;
  one.names = {"a"};
  one.columns = {{1.0}};
  EXPECT_THROW(quantile_bin(one, 1), ValidationError);
}

TEST(Train, ZeroRoundsPredictsPrevalence) {
  auto p = fixture::planted(500, 3, 1);
  const auto r = fit(p.x, p.y, fixture::quick_params(0));
  const double prev = std::accumulate(p.y.begin(), p.y.end(), 0.0) / p.y.size();
  EXPECT_TRUE(r.model.trees.empty());
  for (double q : predict_proba(r.model, p.x)) EXPECT_NEAR(q, prev, 1e-12);
}

TEST(Train, TrainingLossDecreases) {
  auto p = fixture::planted(2000, 4, 2, 0.1);
  const auto r = fit(p.x, p.y, fixture::quick_params(30));
  ASSERT_EQ(r.trace.train.size(), 31u);
  for (std::size_t i = 1; i < r.trace.train.size(); ++i) EXPECT_LE(r.trace.train[i], r.trace.train[i - 1] + 1e-12);
  EXPECT_LT(r.trace.train.back(), 0.6 * r.trace.train.front());
}

TEST(Train, SingleClassLabelsWarn) {
  auto p = fixture::planted(100, 2, 3);
  std::fill(p.y.begin(), p.y.end(), 0);
  const auto r = fit(p.x, p.y, fixture::quick_params(10));
  EXPECT_TRUE(r.model.trees.empty());
  EXPECT_FALSE(r.trace.warnings.empty());
  for (double q : predict_proba(r.model, p.x)) EXPECT_LT(q, 1e-12);
}

TEST(Train, UnusedFeatureHasZeroImportance) {
  auto p = fixture::planted(1500, 2, 4);
  p.x.names.push_back("constant");
  p.x.columns.emplace_back(1500, 3.0);
  const auto r = fit(p.x, p.y, fixture::quick_params(20));
  for (const auto& t : r.model.trees) EXPECT_FALSE(t.uses_feature(2));
  const auto imp = permutation_importance(r.model, p.x, p.y, Metric::neg_log_loss, 3, 7);
  EXPECT_EQ(imp.mean[2], 0.0);
  EXPECT_GT(imp.mean[0], 0.0);
}

TEST(Train, EarlyStoppingKeepsBestRound) {
  auto p = fixture::planted(400, 8, 5);
  auto v = fixture::planted(400, 8, 6);
  auto params = fixture::quick_params(300, 6);
  params.initial_learning_rate = 1.0;
  params.min_child_weight = 0;
  params.l2_lambda = 0;
  params.early_stopping_rounds = 5;
  const auto r = fit(p.x, p.y, params, &v.x, v.y);
  ASSERT_TRUE(r.trace.best_round.has_value());
  EXPECT_EQ(r.model.trees.size(), *r.trace.best_round);
  EXPECT_LT(r.model.trees.size(), 300u);
  const auto& val = r.trace.validation;
  EXPECT_EQ(*std::min_element(val.begin(), val.end()), val[*r.trace.best_round]);
}

TEST(Train, LearningRateDecaysStepwise) {
  TrainParams t;
  t.initial_learning_rate = 0.01;
  EXPECT_DOUBLE_EQ(t.learning_rate(0), 0.01);
  EXPECT_DOUBLE_EQ(t.learning_rate(99), 0.01);
  EXPECT_DOUBLE_EQ(t.learning_rate(100), 0.01 * 0.99);
  t.rounds = -1;
  EXPECT_THROW(t.validate(), ConfigError);
}

namespace {

// One split on x0 at 0.5, missing values to the right.
ModelArtifact stump() {
  ModelArtifact m;
  m.base_score = 0.25;
  m.feature_names = {"x0", "x1"};
  m.bins.edges = {{0.5}, {}};
  m.bins.value_bins = {2, 0};
  Tree t;
  TreeNode root;
  root.feature = 0;
  root.bin = 0;
  root.threshold = 0.5;
  root.default_left = false;
  root.left = 1;
  root.right = 2;
  root.cover = 10;
  TreeNode l, r;
  l.value = -1.0;
  l.cover = 4;
  r.value = 2.0;
  r.cover = 6;
  t.nodes = {root, l, r};
  m.trees = {t};
  return m;
}

}  // namespace

TEST(Model, HandBuiltStump) {
  const auto m = stump();
  m.check();
  EXPECT_DOUBLE_EQ(m.margin(std::vector<double>{0.2, 0}), -0.75);
  EXPECT_DOUBLE_EQ(m.margin(std::vector<double>{0.5, 0}), -0.75);
  EXPECT_DOUBLE_EQ(m.margin(std::vector<double>{0.7, 0}), 2.25);
  EXPECT_DOUBLE_EQ(m.margin(std::vector<double>{kMissing, 0}), 2.25);
  EXPECT_DOUBLE_EQ(expected_margin(m), 0.25 + (4 * -1.0 + 6 * 2.0) / 10);
  EXPECT_EQ(m.trees[0].depth(), 1);
}

TEST(Model, CheckCatchesBadNodes) {
  auto m = stump();
  m.trees[0].nodes[0].feature = 5;
  EXPECT_THROW(m.check(), InvariantError);
  m = stump();
  m.trees[0].nodes[1].value = std::nan("");
  EXPECT_THROW(m.check(), InvariantError);
}

TEST(Predict, ParallelMatchesSerialAndColumnOrderIsResolved) {
  auto p = fixture::planted(3000, 5, 8, 0.2);
  const auto r = fit(p.x, p.y, fixture::quick_params(25));
  EXPECT_EQ(predict_margin(r.model, p.x, Execution::parallel), predict_margin(r.model, p.x, Execution::serial));
  auto shuffled = p.x.select_columns({"x4", "x2", "x0", "x3", "x1"});
  EXPECT_EQ(predict_margin(r.model, shuffled), predict_margin(r.model, p.x));
  EXPECT_THROW(predict_margin(r.model, p.x.select_columns({"x0", "x1"})), SchemaError);
}

TEST(Serialize, RoundTripIsBitExact) {
  auto p = fixture::planted(1000, 4, 9, 0.1);
  const auto m = fit(p.x, p.y, fixture::quick_params(15)).model;
  const auto text = serialize(m);
  const auto back = deserialize(text);
  EXPECT_EQ(serialize(back), text);
  EXPECT_EQ(predict_margin(back, p.x), predict_margin(m, p.x));
}

TEST(Serialize, CorruptionAndVersionRejected) {
  auto p = fixture::planted(300, 2, 10);
  const auto text = serialize(fit(p.x, p.y, fixture::quick_params(5)).model);
  EXPECT_THROW(deserialize(text.substr(0, text.size() - 20)), ValidationError);
  auto bumped = text;
  bumped.replace(bumped.find("format_version 1"), 16, "format_version 999");
  EXPECT_THROW(deserialize(bumped), ValidationError);
  EXPECT_THROW(deserialize("not a model"), ValidationError);
  EXPECT_THROW(load_model("/nonexistent/model.gbdt"), ValidationError);
}

TEST(Importance, AurocEdgeCases) {
  const std::vector<std::uint8_t> y = {0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(auroc(y, std::vector<double>{0.1, 0.2, 0.3, 0.4}), 1.0);
  EXPECT_DOUBLE_EQ(auroc(y, std::vector<double>{0.4, 0.3, 0.2, 0.1}), 0.0);
  EXPECT_DOUBLE_EQ(auroc(y, std::vector<double>{0.5, 0.5, 0.5, 0.5}), 0.5);
  EXPECT_DOUBLE_EQ(auroc(std::vector<std::uint8_t>{1, 1}, std::vector<double>{0.1, 0.2}), 0.5);
}

TEST(Kernels, HistogramsParallelMatchSerial) {
  auto p = fixture::planted(5000, 6, 11, 0.15);
  const auto b = quantile_bin(p.x, 32);
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (std::size_t f = 0; f < b.features(); ++f) {
    offsets.push_back(total);
    total += b.layout.total_bins(f);
  }
  std::vector<double> g(b.rows), h(b.rows);
  auto rng = make_rng(3, "gh");
  for (std::size_t i = 0; i < b.rows; ++i) {
    g[i] = standard_normal(rng);
    h[i] = uniform01(rng);
  }
  std::vector<std::uint32_t> rows;
  for (std::uint32_t i = 0; i < b.rows; i += 3) rows.push_back(i);
  std::vector<kernels::GradPair> a(total), s(total);
  kernels::build_histograms_parallel(b.bins, offsets, rows, g, h, a);
  kernels::build_histograms_serial(b.bins, offsets, rows, g, h, s);
  for (std::size_t i = 0; i < total; ++i) {
    EXPECT_EQ(a[i].g, s[i].g);
    EXPECT_EQ(a[i].h, s[i].h);
    EXPECT_EQ(a[i].count, s[i].count);
  }
}
