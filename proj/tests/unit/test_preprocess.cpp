#include <gtest/gtest.h>

#include <cmath>

#include "sepsis/kernels.hpp"
#include "sepsis/preprocess.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace sepsis;

namespace {

// Cohort whose value columns are the given named series, one encounter.
CohortFrame columns_cohort(const std::vector<std::pair<std::string, std::vector<double>>>& cols) {
  std::string text = "[[column]]\nname = \"id\"\nrole = \"id\"\n[[column]]\nname = \"y\"\nrole = \"label\"\n";
  for (const auto& [name, v] : cols) text += "[[column]]\nname = \"" + name + "\"\nrole = \"lab\"\nunit = \"u\"\n";
  const auto schema = FeatureSchema::parse(text);
  auto e = EncounterSeries::blank(1, cols.size(), cols.front().second.size());
  for (std::size_t i = 0; i < cols.size(); ++i) e.columns[i] = cols[i].second;
  return fixture::cohort(schema, {e});
}

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  auto rng = make_rng(seed, "noise");
  std::vector<double> v(n);
  for (auto& x : v) x = standard_normal(rng);
  return v;
}

}  // namespace

TEST(Correlation, IdenticalAndNegatedColumns) {
  const auto a = noise(100, 1);
  std::vector<double> neg(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) neg[i] = -a[i];
  const auto c = correlation_matrix(columns_cohort({{"a", a}, {"b", a}, {"c", neg}}), {"a", "b", "c"});
  EXPECT_NEAR(c.at(0, 1), 1.0, 1e-12);
  EXPECT_NEAR(c.at(0, 2), -1.0, 1e-12);
}

TEST(Correlation, IndependentColumnsNearZeroAndMatchDirectFormula) {
  auto a = noise(10000, 2), b = noise(10000, 3);
  for (std::size_t i = 0; i < a.size(); i += 7) a[i] = kMissing;
  const auto c = correlation_matrix(columns_cohort({{"a", a}, {"b", b}}), {"a", "b"});
  EXPECT_LT(std::abs(c.at(0, 1)), 0.05);
  EXPECT_NEAR(c.at(0, 1), oracle::pearson(a, b), 1e-12);
  EXPECT_EQ(c.support[1], 10000u - (10000u + 6u) / 7u);
}

TEST(Correlation, ConstantColumnIsUndefined) {
  const auto c = correlation_matrix(columns_cohort({{"a", noise(50, 1)}, {"k", std::vector<double>(50, 2.0)}}), {"a", "k"});
  EXPECT_FALSE(c.is_defined(0, 1));
}

TEST(Correlation, UnknownFeatureIsSchemaError) {
  EXPECT_THROW(correlation_matrix(columns_cohort({{"a", noise(5, 1)}, {"b", noise(5, 2)}}), {"a", "zz"}), SchemaError);
}

TEST(Kernels, CorrelationParallelMatchesSerial) {
  std::vector<std::vector<double>> cols;
  for (std::uint64_t s = 0; s < 12; ++s) {
    auto v = noise(3000, s);
    for (std::size_t i = s; i < v.size(); i += 11) v[i] = kMissing;
    cols.push_back(v);
  }
  const auto p = kernels::pairwise_correlation_parallel(cols);
  const auto q = kernels::pairwise_correlation_serial(cols);
  ASSERT_EQ(p.size(), q.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_EQ(p[i].rho, q[i].rho);
    EXPECT_EQ(p[i].support, q[i].support);
  }
}

TEST(Ward, PerfectlyCorrelatedPairMerges) {
  const auto a = noise(200, 1);
  auto b = a;
  b[0] = kMissing;
  const auto cohort = columns_cohort({{"A", a}, {"B", b}});
  const auto corr = correlation_matrix(cohort, {"A", "B"});
  const auto r = ward_cluster_prune(corr, 1.0, missing_fractions(cohort, {"A", "B"}));
  ASSERT_EQ(r.clusters.size(), 1u);
  EXPECT_EQ(r.representatives[0], "A");
}

TEST(Ward, UncorrelatedPairStaysApartAtCutoffOne) {
  CorrelationMatrix c;
  c.names = {"A", "B"};
  c.values = {1, 0, 0, 1};
  c.support = {10, 10, 10, 10};
  c.defined = {1, 1, 1, 1};
  const auto r = ward_cluster_prune(c, 1.0, {{"A", 0.0}, {"B", 0.0}});
  EXPECT_EQ(r.clusters.size(), 2u);
  // Height of the would-be merge equals d = 1, so a larger cutoff joins them.
  EXPECT_EQ(ward_cluster_prune(c, 1.0001, {{"A", 0.0}, {"B", 0.0}}).clusters.size(), 1u);
}

TEST(Ward, SingleFeatureIsSingletonCluster) {
  CorrelationMatrix c;
  c.names = {"A"};
  c.values = {1};
  c.support = {5};
  c.defined = {1};
  const auto r = ward_cluster_prune(c, 1.0, {{"A", 0.0}});
  ASSERT_EQ(r.clusters.size(), 1u);
  EXPECT_EQ(r.representatives[0], "A");
}

TEST(Ward, SeventyFourNearDuplicatesGiveThirtyFiveRepresentatives) {
  std::vector<std::pair<std::string, std::vector<double>>> cols;
  std::vector<std::string> names;
  for (int g = 0; g < 35; ++g) {
    const auto base = noise(2000, static_cast<std::uint64_t>(100 + g));
    const int members = g < 4 ? 3 : 2;
    for (int m = 0; m < members; ++m) {
      auto v = base;
      const auto jitter = noise(2000, static_cast<std::uint64_t>(1000 + g * 10 + m));
      for (std::size_t i = 0; i < v.size(); ++i) v[i] += 0.05 * jitter[i];
      const auto name = "g" + std::to_string(g) + "_" + std::to_string(m);
      cols.emplace_back(name, v);
      names.push_back(name);
    }
  }
  ASSERT_EQ(names.size(), 74u);
  const auto cohort = columns_cohort(cols);
  const auto r = ward_cluster_prune(correlation_matrix(cohort, names), 1.0, missing_fractions(cohort, names));
  EXPECT_EQ(r.representatives.size(), 35u);
  for (const auto& cl : r.clusters) {
    for (const auto& m : cl) EXPECT_EQ(m.substr(0, m.find('_')), cl.front().substr(0, cl.front().find('_')));
  }
}

TEST(Ward, InputOrderDoesNotMatter) {
  const auto a = noise(300, 1), b = noise(300, 2);
  auto a2 = a;
  for (auto& x : a2) x += 0.01;
  const auto cohort = columns_cohort({{"a", a}, {"b", b}, {"a2", a2}});
  const auto miss = missing_fractions(cohort, {"a", "b", "a2"});
  const auto r1 = ward_cluster_prune(correlation_matrix(cohort, {"a", "b", "a2"}), 1.0, miss);
  const auto r2 = ward_cluster_prune(correlation_matrix(cohort, {"a2", "b", "a"}), 1.0, miss);
  EXPECT_EQ(r1.clusters, r2.clusters);
  EXPECT_EQ(r1.representatives, r2.representatives);
}

TEST(Masks, PresenceIndicators) {
  const auto c = build_masks(columns_cohort({{"a", {1.2, kMissing, 3.0}}, {"b", {kMissing, kMissing, kMissing}},
                                             {"c", {1, 2, 3}}}),
                             {"a", "b", "c"});
  const auto& e = c.encounters[0];
  EXPECT_EQ(e.columns[*c.schema.value_index("mask_a")], (std::vector<double>{1, 0, 1}));
  EXPECT_EQ(e.columns[*c.schema.value_index("mask_b")], (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(e.columns[*c.schema.value_index("mask_c")], (std::vector<double>{1, 1, 1}));
  EXPECT_EQ(c.schema.value_column(*c.schema.value_index("mask_a")).role, Role::mask);
}

TEST(Impute, LinearInterpolation) {
  std::vector<double> v = {1, kMissing, 3};
  interpolate_linear(v);
  EXPECT_EQ(v, (std::vector<double>{1, 2, 3}));
  std::vector<double> lead = {kMissing, 2, 4, kMissing};
  interpolate_linear(lead);
  EXPECT_TRUE(is_missing(lead[0]));
  EXPECT_TRUE(is_missing(lead[3]));
  std::vector<double> uneven = {0, kMissing, kMissing, 3};
  interpolate_linear(uneven);
  EXPECT_DOUBLE_EQ(uneven[1], 1.0);
  EXPECT_DOUBLE_EQ(uneven[2], 2.0);
}

TEST(Impute, CarryForwardAndBackward) {
  std::vector<double> v = {kMissing, 2, kMissing, kMissing, 5, kMissing};
  carry_forward(v);
  EXPECT_TRUE(is_missing(v[0]));
  EXPECT_EQ(v[3], 2);
  EXPECT_EQ(v[5], 5);
  carry_backward(v);
  EXPECT_EQ(v[0], 2);
}

TEST(Impute, DemographicsForwardFilledAndPoliciesDiffer) {
  const auto s = fixture::small_schema();
  auto e = EncounterSeries::blank(1, s.value_count(), 4);
  e.columns[*s.value_index("age")] = {70, kMissing, kMissing, kMissing};
  e.columns[*s.value_index("HR")] = {kMissing, 80, kMissing, 90};
  e.columns[*s.value_index("SBP")] = {100, kMissing, 120, kMissing};
  auto c = build_masks(fixture::cohort(s, {e}), {"HR", "SBP", "WBC"});
  const auto retro = impute(c, ImputePolicy::from_name("retrospective")).encounters[0];
  const auto causal = impute(c, ImputePolicy::from_name("causal")).encounters[0];
  EXPECT_EQ(retro.columns[*s.value_index("age")], (std::vector<double>{70, 70, 70, 70}));
  EXPECT_DOUBLE_EQ(retro.columns[*s.value_index("HR")][2], 85.0);
  EXPECT_TRUE(is_missing(retro.columns[*s.value_index("HR")][0]));
  EXPECT_TRUE(is_missing(retro.columns[*s.value_index("SBP")][3]));
  EXPECT_EQ(causal.columns[*s.value_index("HR")][2], 80);
  EXPECT_EQ(causal.columns[*s.value_index("SBP")][3], 120);
  // Masks keep the pre-imputation presence.
  EXPECT_EQ(retro.columns[*c.schema.value_index("mask_HR")], (std::vector<double>{0, 1, 0, 1}));
}

TEST(Impute, UnknownPolicyAndMissingMask) {
  EXPECT_THROW(ImputePolicy::from_name("mean"), ConfigError);
  const auto s = fixture::small_schema();
  EXPECT_THROW(impute(fixture::cohort(s, {fixture::encounter(s, 1, 3)}), {}), Error);
}

TEST(Project, KeepsListedVitalLabColumns) {
  const auto s = fixture::small_schema();
  const auto c = project_columns(fixture::cohort(s, {fixture::encounter(s, 1, 3)}), {"WBC", "HR"});
  EXPECT_EQ(c.schema.value_names(), (std::vector<std::string>{"age", "HR", "WBC"}));
  EXPECT_EQ(c.encounters[0].columns.size(), 3u);
}
