#include <gtest/gtest.h>

#include <sstream>

#include "sepsis/ingest.hpp"
#include "sepsis/synth.hpp"
#include "support/fixtures.hpp"

using namespace sepsis;

namespace {

const char* kHeader = "encounter_id,hour,SepsisLabel,HR,SBP,WBC,age\n";

CohortFrame read(const std::string& text) {
  std::istringstream in(text);
  return read_wide_csv(in, fixture::small_schema());
}

}  // namespace

TEST(WideCsv, GapsBecomeSilentRows) {
  const auto c = read(std::string(kHeader) + "1,0,0,80,120,,60\n1,2,0,82,,,\n");
  ASSERT_EQ(c.encounters.size(), 1u);
  const auto& e = c.encounters[0];
  ASSERT_EQ(e.rows(), 3u);
  const auto& s = c.schema;
  EXPECT_EQ(e.columns[*s.value_index("HR")][0], 80);
  EXPECT_TRUE(is_missing(e.columns[*s.value_index("HR")][1]));
  EXPECT_EQ(e.columns[*s.value_index("HR")][2], 82);
  for (const auto& col : e.columns) EXPECT_TRUE(is_missing(col[1]));
}

TEST(WideCsv, HeaderOnlyIsEmptyCohort) { EXPECT_TRUE(read(kHeader).encounters.empty()); }

TEST(WideCsv, NonNumericFieldCitesLine) {
  try {
    read(std::string(kHeader) + "1,0,0,80,120,,60\n1,1,0,abc,120,,60\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(WideCsv, UnknownColumnIsSchemaError) {
  EXPECT_THROW(read("encounter_id,hour,SepsisLabel,Lactate\n1,0,0,1\n"), SchemaError);
}

TEST(WideCsv, RoundTripIsBitExact) {
  auto cfg = SynthConfig{};
  cfg.n_encounters = 20;
  cfg.seed = 9;
  const auto schema = FeatureSchema::load_default();
  const auto c = generate_cohort(schema, cfg).cohort;
  std::stringstream buf;
  write_wide_csv(buf, c);
  const auto back = read_wide_csv(buf, schema);
  EXPECT_EQ(back.data_digest(), c.data_digest());
  ASSERT_EQ(back.encounters.size(), c.encounters.size());
  EXPECT_EQ(back.encounters[3].admission_time, c.encounters[3].admission_time);
  EXPECT_EQ(back.encounters[3].discharge_time, c.encounters[3].discharge_time);
}

TEST(Psv, ReadsOneEncounter) {
  std::istringstream in("HR|SBP|SepsisLabel\n80|120|0\nNaN|NaN|0\n90|110|1\n");
  const auto e = read_psv_encounter(in, fixture::small_schema(), 4);
  ASSERT_EQ(e.rows(), 3u);
  EXPECT_EQ(e.onset_hour(), 2);
  for (const auto& col : e.columns) EXPECT_TRUE(is_missing(col[1]));
}

TEST(Psv, EmptyAndRaggedFilesFail) {
  std::istringstream empty("HR|SepsisLabel\n");
  EXPECT_THROW(read_psv_encounter(empty, fixture::small_schema(), 1), ValidationError);
  std::istringstream ragged("HR|SepsisLabel\n80\n");
  EXPECT_THROW(read_psv_encounter(ragged, fixture::small_schema(), 1), ParseError);
}

namespace {

FeatureSchema min_max_schema() {
  return FeatureSchema::parse(R"(
[[column]]
name = "encounter_id"
role = "id"
[[column]]
name = "min_HR"
role = "vital"
unit = "bpm"
[[column]]
name = "max_HR"
role = "vital"
unit = "bpm"
[[column]]
name = "SepsisLabel"
role = "label"
)");
}

RawEvent hr(Timestamp t, double v) { return {1, t, "HR", v}; }

}  // namespace

TEST(Bucketing, MinAndMaxPerHour) {
  const auto s = min_max_schema();
  const auto adm = parse_timestamp("2020-01-01 00:00:00");
  using std::chrono::minutes;
  const auto r = bucket_to_hourly({hr(adm + minutes(300), 80), hr(adm + minutes(340), 96), hr(adm + minutes(130), 70)},
                                  s, 1, adm);
  const auto lo = *s.value_index("min_HR"), hi = *s.value_index("max_HR");
  ASSERT_EQ(r.series.rows(), 6u);
  EXPECT_EQ(r.series.columns[lo][5], 80);
  EXPECT_EQ(r.series.columns[hi][5], 96);
  EXPECT_EQ(r.series.columns[lo][2], 70);
  EXPECT_EQ(r.series.columns[hi][2], 70);
  EXPECT_TRUE(is_missing(r.series.columns[lo][3]));
  EXPECT_TRUE(is_missing(r.series.columns[hi][3]));
}

TEST(Bucketing, EventBeforeAdmissionIsRejected) {
  const auto s = min_max_schema();
  const auto adm = parse_timestamp("2020-01-01 00:00:00");
  const auto r = bucket_to_hourly({hr(adm - std::chrono::minutes(5), 80), hr(adm, 81)}, s, 1, adm);
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_EQ(r.series.rows(), 1u);
}

TEST(FormatValue, ShortestRoundTrip) {
  EXPECT_EQ(format_value(0.1), "0.1");
  EXPECT_EQ(format_value(kMissing), "");
  const double x = 1.0 / 3.0;
  EXPECT_EQ(std::stod(format_value(x)), x);
}
