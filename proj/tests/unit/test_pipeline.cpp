#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include "json.hpp"
#include <sstream>

#include "sepsis/pipeline.hpp"
#include "support/fixtures.hpp"

using namespace sepsis;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("sepsis_unit_" + name);
  fs::remove_all(p);
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

const char* kSmallRun = R"(
seed = 11
[features]
selection_rounds = 15
selection_repeats = 2
[train]
rounds = 20
learning_rate = 0.2
max_depth = 3
max_bins = 32
[eval]
explain_rows = 40
[synth]
n_encounters = 300
prevalence = 0.15
prospective_encounters = 60
)";

RunConfig small_run(const fs::path& out) {
  auto c = RunConfig::parse(kSmallRun);
  c.output = out;
  return c;
}

}  // namespace

TEST(RunConfig, ParsesSectionsAndDefaults) {
  const auto c = RunConfig::parse(R"(
seed = 5
[train]
rounds = 40
nonstat.rounds = 10
learning_rate = 0.1
[eval]
thresholds = [0.2, 0.4]
[routing]
nonstat_model = false
)");
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.full_params.rounds, 40);
  EXPECT_EQ(c.nonstat_params.rounds, 10);
  EXPECT_DOUBLE_EQ(c.nonstat_params.initial_learning_rate, 0.1);
  EXPECT_EQ(c.thresholds, (std::vector<double>{0.2, 0.4}));
  EXPECT_FALSE(c.use_nonstat_model);
  EXPECT_EQ(c.synth.seed, stream_seed(5, "synth"));
  EXPECT_NE(c.full_params.seed, c.nonstat_params.seed);
}

TEST(RunConfig, UnknownKeysAndSectionsRejected) {
  EXPECT_THROW(RunConfig::parse("[train]\nround = 3\n"), ConfigError);
  EXPECT_THROW(RunConfig::parse("[trainning]\nrounds = 3\n"), ConfigError);
  EXPECT_THROW(RunConfig::parse("rounds = 3\n"), ConfigError);
  EXPECT_THROW(RunConfig::parse("[train]\ntrain_fraction = 1.0\n").validate(), ConfigError);
}

TEST(RunConfig, SetSeedRederivesStreams) {
  auto c = RunConfig::parse("seed = 1\n");
  const auto before = c.selection.seed;
  c.set_seed(2);
  EXPECT_EQ(c.seed, 2u);
  EXPECT_NE(c.selection.seed, before);
  EXPECT_EQ(c.selection.seed, stream_seed(2, "selection"));
}

TEST(RunConfig, MissingSchemaFileIsValidationError) {
  auto c = RunConfig::parse("[schema]\npath = \"/nonexistent/schema.toml\"\n");
  EXPECT_THROW(c.validate(), ValidationError);
  c.output = scratch("missing_schema");
  EXPECT_THROW(run_pipeline(c), ValidationError);
  EXPECT_FALSE(fs::exists(c.output / "manifest.txt"));
}

TEST(Split, EightyTwentyStratified) {
  const auto s = fixture::small_schema();
  std::vector<EncounterSeries> enc;
  for (EncounterId id = 1; id <= 100; ++id) enc.push_back(fixture::encounter(s, id, 8, id % 10 == 0 ? 3 : -1, 50));
  const auto r = stratified_split(fixture::cohort(s, enc), 0.8, 3);
  ASSERT_EQ(r.train.encounters.size(), 80u);
  ASSERT_EQ(r.test.encounters.size(), 20u);
  auto septic = [](const CohortFrame& c) {
    std::size_t n = 0;
    for (const auto& e : c.encounters) n += e.onset_hour().has_value();
    return n;
  };
  EXPECT_EQ(septic(r.train), 8u);
  EXPECT_EQ(septic(r.test), 2u);
  EXPECT_EQ(stratified_split(fixture::cohort(s, enc), 0.8, 3).test.data_digest(), r.test.data_digest());
  std::vector<EncounterSeries> one_septic = {fixture::encounter(s, 1, 8, 3, 50)};
  for (EncounterId id = 2; id <= 10; ++id) one_septic.push_back(fixture::encounter(s, id, 8, -1, 50));
  EXPECT_THROW(stratified_split(fixture::cohort(s, one_septic), 0.8, 3), ValidationError);
}

namespace {

// Two encounters: id 1 has one row, id 2 has five.
FeatureMatrix routing_matrix() {
  FeatureMatrix m;
  m.data.names = {"x0", "var_x0"};
  m.data.columns.resize(2);
  m.blocks = {{"original", 0, 1}, {"statistical", 1, 1}};
  auto add = [&](EncounterId id, int hour, double x, double v, std::uint8_t y) {
    m.encounter_ids.push_back(id);
    m.hours.push_back(hour);
    m.labels.push_back(y);
    m.shifted_labels.push_back(y);
    m.data.columns[0].push_back(x);
    m.data.columns[1].push_back(v);
  };
  add(1, 0, 1.0, kMissing, 0);
  for (int h = 0; h < 5; ++h) add(2, h, h * 0.5, 0.1 * h, h >= 3);
  return m;
}

gbdt::ModelArtifact model_on(const std::vector<std::string>& names, std::uint64_t seed) {
  auto p = fixture::planted(400, names.size(), seed);
  p.x.names = names;
  return gbdt::fit(p.x, p.y, fixture::quick_params(5)).model;
}

}  // namespace

TEST(Routing, PartitionsByEncounterLength) {
  const auto m = routing_matrix();
  const auto full = model_on({"x0", "var_x0"}, 1);
  const auto nonstat = model_on({"x0"}, 2);
  const auto r = route_and_predict(m, full, &nonstat, RoutingPolicy{});
  EXPECT_EQ(r.summary.nonstat_encounters, 1u);
  EXPECT_EQ(r.summary.nonstat_rows, 1u);
  EXPECT_EQ(r.summary.full_encounters, 1u);
  EXPECT_EQ(r.summary.full_rows, 5u);
  ASSERT_EQ(r.series.size(), 2u);
  EXPECT_EQ(r.series[0].model, "nonstat");
  EXPECT_EQ(r.series[1].model, "full");
  const auto want = gbdt::predict_proba(nonstat, m.data.select_rows({0}));
  EXPECT_EQ(r.series[0].probabilities, want);
  const auto csv = predictions_csv(r.series);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "encounter_id,hour,label,probability,model");
}

TEST(Routing, ShortEncountersWithoutNonstatModelFail) {
  const auto m = routing_matrix();
  const auto full = model_on({"x0", "var_x0"}, 1);
  EXPECT_THROW(route_and_predict(m, full, nullptr, RoutingPolicy{}), Error);
  const auto bad = model_on({"var_x0"}, 3);
  EXPECT_THROW(route_and_predict(m, full, &bad, RoutingPolicy{}), ValidationError);
  const auto only_long = m.select_rows({1, 2, 3, 4, 5});
  EXPECT_NO_THROW(route_and_predict(only_long, full, nullptr, RoutingPolicy{}));
}

TEST(Explain, SharesSumToHundredAndTopKClamped) {
  auto p = fixture::planted(1000, 4, 5);
  const auto m = gbdt::fit(p.x, p.y, fixture::quick_params(20)).model;
  const auto r = explain_report(m, p.x, 2);
  ASSERT_EQ(r.top.size(), 2u);
  EXPECT_EQ(r.top[0].name, "x0");
  EXPECT_GE(r.top[0].percent, r.top[1].percent);
  EXPECT_EQ(r.remaining_features, 2u);
  EXPECT_NEAR(r.top_percent + r.remaining_percent, 100.0, 1e-9);
  const auto wide = explain_report(m, p.x, 10);
  EXPECT_EQ(wide.top.size(), 4u);
  EXPECT_FALSE(wide.warnings.empty());
  const auto j = nlohmann::json::parse(explain_report_json(r));
  EXPECT_EQ(j["top"][0]["feature"], "x0");
}

TEST(Explain, BaseOnlyModelHasNoSplits) {
  auto p = fixture::planted(200, 3, 6);
  const auto m = gbdt::fit(p.x, p.y, fixture::quick_params(0)).model;
  const auto r = explain_report(m, p.x, 3);
  EXPECT_TRUE(r.no_splits);
  for (const auto& e : r.top) EXPECT_EQ(e.percent, 0.0);
}

TEST(Run, SmallRunIsDeterministic) {
  const auto a = run_pipeline(small_run(scratch("run_a")));
  const auto b = run_pipeline(small_run(scratch("run_b")));
  EXPECT_EQ(a.manifest, b.manifest);
  EXPECT_TRUE(a.bookkeeping.identity_holds());
  EXPECT_TRUE(fs::exists(a.output_dir / "manifest.txt"));
  EXPECT_FALSE(fs::exists(a.output_dir / "FAILED"));
  for (const char* f : {"model_full.gbdt", "model_nonstat.gbdt", "predictions_test.csv", "evaluation_test.json",
                        "explain.json", "feature_bookkeeping.json", "split.json", "cleaning_audit.json"}) {
    EXPECT_TRUE(fs::exists(a.output_dir / f)) << f;
  }
  ASSERT_TRUE(a.prospective_predictions.has_value());
  EXPECT_GT(a.prospective_predictions->summary.nonstat_encounters, 0u);
}

TEST(Run, FailureWritesMarker) {
  auto c = small_run(scratch("run_fail"));
  c.use_nonstat_model = false;
  EXPECT_THROW(run_pipeline(c), Error);
  const auto failed = read_file(c.output / "FAILED");
  EXPECT_NE(failed.find("stage: prospective"), std::string::npos) << failed;
  EXPECT_NE(failed.find("cause: "), std::string::npos);
  EXPECT_FALSE(fs::exists(c.output / "manifest.txt"));
}

TEST(Run, ManifestLineFormat) {
  const auto dir = scratch("manifest");
  fs::create_directories(dir / "sub");
  std::ofstream(dir / "sub" / "f.txt") << "abc";
  EXPECT_EQ(manifest_line(dir, dir / "sub" / "f.txt"),
            "sub/f.txt 3 ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
