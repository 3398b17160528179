#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "sepsis/clinical_scores.hpp"
#include "sepsis/features.hpp"
#include "support/fixtures.hpp"

using namespace sepsis;

namespace {

const std::vector<WindowStat> kAllStats = {WindowStat::delta1, WindowStat::delta2, WindowStat::variance,
                                           WindowStat::slope,  WindowStat::energy, WindowStat::mean,
                                           WindowStat::min,    WindowStat::max,    WindowStat::median};

// Straight from the definitions, using raw sums rather than centered ones.
double brute(WindowStat s, const std::vector<double>& x, std::size_t t, int w) {
  auto lagged = [&](std::size_t lag) {
    if (t < lag || std::isnan(x[t]) || std::isnan(x[t - lag])) return kMissing;
    return x[t] - x[t - lag];
  };
  if (s == WindowStat::delta1) return lagged(1);
  if (s == WindowStat::delta2) return lagged(2);
  const long start = static_cast<long>(t) - w + 1;
  std::vector<double> v, o;
  for (long k = std::max(0L, start); k <= static_cast<long>(t); ++k) {
    if (std::isnan(x[static_cast<std::size_t>(k)])) continue;
    v.push_back(x[static_cast<std::size_t>(k)]);
    o.push_back(static_cast<double>(k - std::max(0L, start)));
  }
  const double n = static_cast<double>(v.size());
  double sx = 0, sxx = 0, so = 0, soo = 0, sxo = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    sx += v[i];
    sxx += v[i] * v[i];
    so += o[i];
    soo += o[i] * o[i];
    sxo += v[i] * o[i];
  }
  const bool two = v.size() >= 2, one = !v.empty();
  switch (s) {
    case WindowStat::variance: return two ? sxx / n - (sx / n) * (sx / n) : kMissing;
    case WindowStat::energy: return two ? sxx / n : kMissing;
    case WindowStat::slope: {
      if (!two) return kMissing;
      const double den = n * soo - so * so;
      return den == 0 ? 0.0 : (n * sxo - so * sx) / den;
    }
    case WindowStat::mean: return one ? sx / n : kMissing;
    case WindowStat::min: return one ? *std::min_element(v.begin(), v.end()) : kMissing;
    case WindowStat::max: return one ? *std::max_element(v.begin(), v.end()) : kMissing;
    case WindowStat::median: {
      if (!one) return kMissing;
      std::sort(v.begin(), v.end());
      const auto m = v.size();
      return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
    }
    default: return kMissing;
  }
}

WindowSpec spec_of(int w, std::vector<WindowStat> stats) {
  WindowSpec s;
  s.window_hours = w;
  s.statistics = std::move(stats);
  return s;
}

}  // namespace

TEST(Windowed, MatchesBruteForceOnRandomSeries) {
  auto rng = make_rng(11, "window");
  for (int trial = 0; trial < 50; ++trial) {
    const int w = 2 + static_cast<int>(uniform_index(rng, 10));
    std::vector<double> x(5 + uniform_index(rng, 40));
    for (auto& v : x) v = uniform01(rng) < 0.3 ? kMissing : 50 + 10 * standard_normal(rng);
    const auto got = windowed_stats(x, spec_of(w, kAllStats));
    for (std::size_t s = 0; s < kAllStats.size(); ++s) {
      for (std::size_t t = 0; t < x.size(); ++t) {
        const double want = brute(kAllStats[s], x, t, w);
        if (std::isnan(want)) {
          EXPECT_TRUE(std::isnan(got[s][t])) << to_string(kAllStats[s]) << " t=" << t;
        } else {
          EXPECT_NEAR(got[s][t], want, 1e-7 * std::max(1.0, std::abs(want))) << to_string(kAllStats[s]) << " t=" << t;
        }
      }
    }
  }
}

TEST(Windowed, DeltaOfTwoPoints) {
  const auto r = windowed_stats(std::vector<double>{5, 7}, spec_of(6, {WindowStat::delta1, WindowStat::delta2}));
  EXPECT_TRUE(is_missing(r[0][0]));
  EXPECT_EQ(r[0][1], 2.0);
  EXPECT_TRUE(is_missing(r[1][1]));
}

TEST(Windowed, ConstantSeriesHasZeroVarianceAndSlope) {
  const auto r = windowed_stats(std::vector<double>(10, 4.0), spec_of(6, {WindowStat::variance, WindowStat::slope}));
  EXPECT_TRUE(is_missing(r[0][0]));
  for (std::size_t t = 1; t < 10; ++t) {
    EXPECT_EQ(r[0][t], 0.0);
    EXPECT_EQ(r[1][t], 0.0);
  }
}

TEST(Windowed, LinearSeriesSlope) {
  const std::vector<double> x = {1, 3, 5, 7, 9, 11};
  const auto r = windowed_stats(x, spec_of(6, {WindowStat::slope, WindowStat::energy}));
  EXPECT_NEAR(r[0][5], 2.0, 1e-12);
  EXPECT_NEAR(r[1][5], (1 + 9 + 25 + 49 + 81 + 121) / 6.0, 1e-12);
}

TEST(Windowed, SpecValidation) {
  EXPECT_THROW(WindowSpec::from_names(6, {"kurtosis"}), ConfigError);
  EXPECT_THROW(WindowSpec::from_names(1, {"variance"}), ConfigError);
  EXPECT_THROW(WindowSpec::from_names(6, {"slope", "slope"}), ConfigError);
  EXPECT_EQ(WindowSpec::from_names(1, {"delta1"}).statistics.size(), 1u);
}

TEST(Windowed, ColumnNamesGroupedByStatistic) {
  const auto names = windowed_column_names({"HR", "SBP"}, spec_of(6, {WindowStat::delta1, WindowStat::variance}));
  EXPECT_EQ(names, (std::vector<std::string>{"delta1_HR", "delta1_SBP", "var_HR", "var_SBP"}));
}

TEST(Windowed, AppendParallelMatchesSerial) {
  const auto s = fixture::small_schema();
  std::vector<EncounterSeries> enc;
  auto rng = make_rng(4, "append");
  for (EncounterId id = 1; id <= 30; ++id) {
    auto e = fixture::encounter(s, id, 5 + uniform_index(rng, 30));
    for (auto& c : e.columns) {
      for (auto& v : c) v = uniform01(rng) < 0.2 ? kMissing : 60 + standard_normal(rng);
    }
    enc.push_back(e);
  }
  const auto c = fixture::cohort(s, enc);
  const auto spec = spec_of(6, kAllStats);
  const auto a = append_windowed_stats(c, {"HR", "SBP", "WBC"}, spec, Execution::parallel);
  const auto b = append_windowed_stats(c, {"HR", "SBP", "WBC"}, spec, Execution::serial);
  EXPECT_EQ(a.data_digest(), b.data_digest());
  EXPECT_EQ(a.schema.value_count(), s.value_count() + 27);
}

TEST(ShiftLabels, Examples) {
  const auto l = fixture::labels_with_onset(20, 10);
  const auto s = shift_labels(l, 6);
  EXPECT_EQ(onset_of(s), 4u);
  EXPECT_EQ(onset_of(shift_labels(fixture::labels_with_onset(8, 3), 6)), 0u);
  EXPECT_FALSE(onset_of(shift_labels(fixture::labels_with_onset(8, -1), 6)).has_value());
  EXPECT_EQ(shift_labels(l, 0), l);
  EXPECT_THROW(shift_labels(l, -1), ValidationError);
}

namespace {

CohortFrame assembly_cohort(std::size_t base) {
  std::string text = "[[column]]\nname = \"id\"\nrole = \"id\"\n[[column]]\nname = \"y\"\nrole = \"label\"\n";
  for (std::size_t i = 0; i < base; ++i) {
    text += "[[column]]\nname = \"f" + std::to_string(i) + "\"\nrole = \"lab\"\nunit = \"u\"\n";
  }
  text += "[[column]]\nname = \"age\"\nrole = \"demographic\"\nunit = \"y\"\n";
  text += "[[column]]\nname = \"sex\"\nrole = \"demographic\"\nunit = \"\"\n";
  text += "[[column]]\nname = \"weight\"\nrole = \"demographic\"\nunit = \"kg\"\n";
  for (const auto& n : clinical_feature_names()) text += "[[column]]\nname = \"" + n + "\"\nrole = \"derived\"\n";
  for (std::size_t i = 0; i < base; ++i) {
    text += "[[column]]\nname = \"mask_f" + std::to_string(i) + "\"\nrole = \"mask\"\n";
  }
  const auto schema = FeatureSchema::parse(text);
  return fixture::cohort(schema, {fixture::encounter(schema, 1, 4, 2)});
}

AssemblySpec assembly_spec(std::size_t base) {
  AssemblySpec spec;
  for (std::size_t i = 0; i < base; ++i) {
    spec.original.push_back("f" + std::to_string(i));
    spec.masks.push_back("mask_f" + std::to_string(i));
  }
  spec.clinical = clinical_feature_names();
  spec.demographic = {"age", "sex", "weight"};
  return spec;
}

}  // namespace

TEST(Assembly, TwoBaseFeaturesNoneSelected) {
  const auto a = assemble_feature_matrix(assembly_cohort(2), assembly_spec(2), 10);
  EXPECT_EQ(a.bookkeeping.total, 14u);
  EXPECT_TRUE(a.bookkeeping.identity_holds());
  EXPECT_EQ(a.bookkeeping.identity_text(), "2 + 2 + 0 + 7 + 3 = 14");
  EXPECT_EQ(a.matrix.rows(), 4u);
  EXPECT_EQ(a.matrix.shifted_labels, (std::vector<std::uint8_t>{1, 1, 1, 1}));
  EXPECT_EQ(a.matrix.block("clinical").begin, 4u);
}

TEST(Assembly, ThirtyFiveBaseFeaturesGiveOneSeventyFiveCandidates) {
  std::vector<std::string> base;
  for (int i = 0; i < 35; ++i) base.push_back("f" + std::to_string(i));
  EXPECT_EQ(windowed_column_names(base, WindowSpec{}).size(), 175u);
}

TEST(Assembly, DuplicateColumnRejected) {
  auto spec = assembly_spec(2);
  spec.clinical.push_back("f0");
  EXPECT_THROW(assemble_feature_matrix(assembly_cohort(2), spec), ValidationError);
}

TEST(Assembly, SelectColumnsRecomputesBlocks) {
  const auto a = assemble_feature_matrix(assembly_cohort(2), assembly_spec(2));
  const auto m = a.matrix.select_columns({"f1", "mask_f0", "SOFA", "age"});
  EXPECT_EQ(m.block("masks").begin, 1u);
  EXPECT_EQ(m.block("clinical").count, 1u);
  EXPECT_THROW(a.matrix.select_columns({"age", "f1"}), ValidationError);
}

namespace {

// Encounter-keyed matrix with one column that tracks the training target and
// one pure-noise column, both in the statistical block.
FeatureMatrix selection_matrix(std::uint64_t seed) {
  auto rng = make_rng(seed, "selection-fixture");
  FeatureMatrix m;
  m.data.names = {"signal", "noise"};
  m.data.columns.resize(2);
  m.blocks = {{"statistical", 0, 2}};
  for (EncounterId id = 1; id <= 200; ++id) {
    const bool septic = id % 5 == 0;
    const auto labels = fixture::labels_with_onset(12, septic ? 9 : -1);
    const auto shifted = shift_labels(labels, 6);
    for (std::size_t t = 0; t < 12; ++t) {
      m.encounter_ids.push_back(id);
      m.hours.push_back(static_cast<int>(t));
      m.labels.push_back(labels[t]);
      m.shifted_labels.push_back(shifted[t]);
      m.data.columns[0].push_back(shifted[t] + 0.3 * standard_normal(rng));
      m.data.columns[1].push_back(standard_normal(rng));
    }
  }
  return m;
}

SelectionParams selection_params(std::uint64_t seed) {
  SelectionParams p;
  p.seed = seed;
  p.rounds = 30;
  p.max_depth = 3;
  p.repeats = 3;
  return p;
}

}  // namespace

TEST(Selection, SignalKeptNoiseUsuallyDropped) {
  int noise_dropped = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = select_statistical_features(selection_matrix(seed), {"signal", "noise"}, selection_params(seed));
    ASSERT_EQ(r.importance.size(), 2u);
    EXPECT_GT(r.importance[0].mean, 0.0);
    EXPECT_EQ(r.selected.front(), "signal");
    noise_dropped += std::find(r.selected.begin(), r.selected.end(), "noise") == r.selected.end();
    EXPECT_EQ(r.train_encounters + r.validation_encounters, 200u);
  }
  EXPECT_GT(noise_dropped, 8);
}

TEST(Selection, EmptyCandidateListAndForcedCount) {
  const auto m = selection_matrix(1);
  EXPECT_TRUE(select_statistical_features(m, {}, selection_params(1)).selected.empty());
  auto p = selection_params(1);
  p.forced_count = 1;
  EXPECT_EQ(select_statistical_features(m, {"noise", "signal"}, p).selected, (std::vector<std::string>{"signal"}));
  EXPECT_THROW(select_statistical_features(m, {"absent"}, p), SchemaError);
}
