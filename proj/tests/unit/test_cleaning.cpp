#include <gtest/gtest.h>

#include "sepsis/cleaning.hpp"
#include "support/fixtures.hpp"

using namespace sepsis;

namespace {

EncounterSeries stay(const FeatureSchema& s, EncounterId id, std::size_t rows, double age = 60) {
  auto e = fixture::encounter(s, id, rows, -1, 50);
  std::fill(e.columns[*s.value_index("age")].begin(), e.columns[*s.value_index("age")].end(), age);
  return e;
}

}  // namespace

TEST(Los, IsTheHourIndex) {
  const auto s = fixture::small_schema();
  const auto e = stay(s, 1, 700);
  const auto los = compute_los(e);
  EXPECT_EQ(los[0], 0);
  EXPECT_EQ(los[5], 5);
  EXPECT_EQ(los.back(), 699);
  const auto c = append_los(fixture::cohort(s, {e}));
  EXPECT_TRUE(c.schema.value_index("LOS").has_value());
}

TEST(Cleaning, ShortStayRemoved) {
  const auto s = fixture::small_schema();
  const auto r = apply_cohort_filters(fixture::cohort(s, {stay(s, 1, 4), stay(s, 2, 5)}), {});
  ASSERT_EQ(r.cohort.encounters.size(), 1u);
  EXPECT_EQ(r.cohort.encounters[0].id, 2);
  EXPECT_EQ(r.audit.at("min_stay").encounters_removed, 1u);
  EXPECT_EQ(r.audit.at("min_stay").rows_removed, 4u);
}

TEST(Cleaning, OldPatientRemoved) {
  const auto s = fixture::small_schema();
  const auto r = apply_cohort_filters(fixture::cohort(s, {stay(s, 1, 10, 106), stay(s, 2, 10, 105)}), {});
  ASSERT_EQ(r.cohort.encounters.size(), 1u);
  EXPECT_EQ(r.audit.at("max_age").encounters_removed, 1u);
}

TEST(Cleaning, LongStayTruncatedAt700) {
  const auto s = fixture::small_schema();
  const auto r = apply_cohort_filters(fixture::cohort(s, {stay(s, 1, 800)}), {});
  ASSERT_EQ(r.cohort.encounters.size(), 1u);
  EXPECT_EQ(r.cohort.encounters[0].rows(), 700u);
  EXPECT_EQ(r.audit.at("max_stay").rows_removed, 100u);
  EXPECT_EQ(r.audit.at("max_stay").encounters_removed, 0u);
}

TEST(Cleaning, RowsPastDischargeGraceDropped) {
  const auto s = fixture::small_schema();
  auto e = stay(s, 1, 100);
  e.discharge_time = e.admission_time + std::chrono::hours(10);
  const auto r = apply_cohort_filters(fixture::cohort(s, {e}), {});
  ASSERT_EQ(r.cohort.encounters.size(), 1u);
  EXPECT_EQ(r.cohort.encounters[0].rows(), 83u);  // hours 0..82 are within discharge + 72 h
  EXPECT_EQ(r.audit.at("post_discharge").rows_removed, 17u);
}

TEST(Cleaning, AuditOrderAndTotals) {
  const auto s = fixture::small_schema();
  const auto r = apply_cohort_filters(fixture::cohort(s, {stay(s, 1, 3), stay(s, 2, 900), stay(s, 3, 20, 110)}), {});
  std::vector<std::string> rules;
  for (const auto& e : r.audit.entries) rules.push_back(e.rule);
  EXPECT_EQ(rules, (std::vector<std::string>{"max_age", "post_discharge", "max_stay", "min_stay"}));
  EXPECT_EQ(r.audit.rows_removed(), 3u + 200u + 20u);
  EXPECT_EQ(r.cohort.provenance.back().rows_after, 700u);
}

TEST(Cleaning, RulesValidated) {
  CleaningRules bad;
  bad.min_stay_hours = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = {};
  bad.min_stay_hours = 800;
  EXPECT_THROW(bad.validate(), ConfigError);
}
