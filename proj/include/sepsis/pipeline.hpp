#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sepsis/cleaning.hpp"
#include "sepsis/clinical_scores.hpp"
#include "sepsis/cohort.hpp"
#include "sepsis/evaluation.hpp"
#include "sepsis/features.hpp"
#include "sepsis/gbdt.hpp"
#include "sepsis/preprocess.hpp"
#include "sepsis/synth.hpp"

namespace sepsis {

struct RoutingPolicy {
  int min_hours_for_stats = 2;
  void validate() const;
};

// Everything a run needs, read from one config file:
//
//   seed = 7
//   [paths]    input, output, model_full, model_nonstat, predictions
//   [schema]   path, band_table
//   [cleaning] min_stay_hours, max_stay_hours, max_age_years, post_discharge_grace_hours
//   [features] window_hours, statistics, label_horizon, impute, ward_cutoff,
//              select, selection_count, selection_* (fit settings)
//   [train]    train_fraction, rounds, learning_rate, lr_decay_factor,
//              lr_decay_every, max_depth, max_bins, min_child_weight,
//              l2_lambda, subsample_rows, early_stopping_rounds, pos_weight;
//              nonstat.<key> overrides a key for the non-stat model
//   [eval]     thresholds, success_window, dt_*/u_* utility parameters,
//              explain_rows, top_k
//   [routing]  min_hours_for_stats, nonstat_model
//   [synth]    generator settings; prospective_encounters and
//              prospective_one_hour_fraction add a prospective cohort
//
// Relative paths resolve against the config file's directory.
struct RunConfig {
  std::uint64_t seed = 0;

  std::filesystem::path input;  // wide CSV; empty means synthesize
  std::filesystem::path output = "out";
  std::filesystem::path model_full;
  std::filesystem::path model_nonstat;
  std::filesystem::path predictions;
  std::filesystem::path schema_path;
  std::filesystem::path band_table;

  CleaningRules cleaning;
  WindowSpec window;
  int label_horizon = 6;
  ImputePolicy impute;
  double ward_cutoff = 1.0;
  bool select_features = true;
  SelectionParams selection;

  double train_fraction = 0.8;
  gbdt::TrainParams full_params;
  gbdt::TrainParams nonstat_params;

  std::vector<double> thresholds = default_thresholds();
  int success_window = 6;
  UtilityParams utility;
  std::size_t explain_rows = 500;
  std::size_t top_k = 20;

  RoutingPolicy routing;
  bool use_nonstat_model = true;

  SynthConfig synth;
  std::size_t prospective_encounters = 0;
  double prospective_one_hour_fraction = 0.4;

  std::string source_text;  // verbatim config, echoed into the outputs

  static RunConfig parse(const std::string& text, const std::filesystem::path& base_dir = ".");
  static RunConfig load(const std::filesystem::path& path);
  // Applies a new run seed and re-derives every seeded sub-setting.
  void set_seed(std::uint64_t s);
  // Throws ConfigError / ValidationError, including for referenced files
  // that do not exist.
  void validate() const;
  FeatureSchema load_schema() const;
  const BandTable& bands() const;

 private:
  mutable std::shared_ptr<BandTable> bands_;
};

// ---- split ------------------------------------------------------------------------------

struct SplitResult {
  CohortFrame train;
  CohortFrame test;
};

// Encounter-level split; each class (septic or not) contributes
// round(fraction * size) encounters to the training side. Throws
// ValidationError when a class has fewer than two encounters.
SplitResult stratified_split(const CohortFrame& cohort, double fraction, std::uint64_t seed);

// ---- features ---------------------------------------------------------------------------

// Frozen feature decisions learned on the training split.
struct FeaturePlan {
  std::vector<std::string> base;         // vital/lab representatives
  std::vector<std::string> statistical;  // selected statistic columns
  std::vector<std::string> demographic;
  WindowSpec window;
  ImputePolicy impute;
  int label_horizon = 6;

  std::vector<std::string> masks() const;
  std::vector<std::string> candidates() const;  // every statistic of every base feature
};

// Projection, masks, imputation, clinical scores and window statistics.
CohortFrame prepare_cohort(const CohortFrame& cleaned, const FeaturePlan& plan, const BandTable& bands);
// Matrix with the plan's statistical selection, or with every candidate.
AssembledFeatures build_matrix(const CohortFrame& prepared, const FeaturePlan& plan, bool all_candidates = false);
// Reconstructs a plan from a trained model's feature names.
FeaturePlan plan_from_model(const gbdt::ModelArtifact& model, const FeatureSchema& schema, const RunConfig& config);

// ---- routing ----------------------------------------------------------------------------

struct RoutingSummary {
  std::size_t full_encounters = 0;
  std::size_t full_rows = 0;
  std::size_t nonstat_encounters = 0;
  std::size_t nonstat_rows = 0;
};

struct RoutedPredictions {
  std::vector<PredictionSeries> series;  // matrix encounter order
  RoutingSummary summary;
};

// Encounters with fewer than policy.min_hours_for_stats rows go to the
// non-stat model, the rest to the full model. Throws Error when short
// encounters exist but `nonstat` is null, and ValidationError when the
// non-stat model uses statistical columns.
RoutedPredictions route_and_predict(const FeatureMatrix& matrix, const gbdt::ModelArtifact& full,
                                    const gbdt::ModelArtifact* nonstat, const RoutingPolicy& policy);

// CSV with header encounter_id,hour,label,probability,model.
std::string predictions_csv(const std::vector<PredictionSeries>& series);

// ---- explanation -----------------------------------------------------------------------

struct ExplainEntry {
  std::string name;
  double mean_abs = 0.0;
  double percent = 0.0;
};

struct ExplainReport {
  std::vector<ExplainEntry> top;  // descending share
  std::size_t remaining_features = 0;
  double remaining_percent = 0.0;
  double top_percent = 0.0;
  std::size_t rows = 0;
  bool no_splits = false;
  std::vector<std::string> warnings;
};

// Mean |phi| per feature as a share of the total over the rows of `frame`.
ExplainReport explain_report(const gbdt::ModelArtifact& model, const ColumnMatrix& frame, std::size_t top_k = 20);
std::string explain_report_json(const ExplainReport& report);

// ---- full run ------------------------------------------------------------------------------

struct RunResult {
  std::filesystem::path output_dir;
  CleaningAudit cleaning;
  CohortFrame train_cohort;  // cleaned, before any fitted transformation
  CohortFrame test_cohort;
  CorrelationMatrix correlation;
  ClusterPruneResult prune;
  FeaturePlan plan;
  SelectionResult selection;
  Bookkeeping bookkeeping;
  FeatureMatrix train_matrix;
  FeatureMatrix test_matrix;
  gbdt::TrainResult full;
  std::optional<gbdt::TrainResult> nonstat;
  RoutedPredictions test_predictions;
  SweepResult test_sweep;
  std::optional<RoutedPredictions> prospective_predictions;
  std::optional<SweepResult> prospective_sweep;
  ExplainReport explanation;
  std::vector<std::string> manifest;  // lines of manifest.txt
};

// Last stage a run executes; the manifest is written either way.
enum class StopAfter { features, train, all };

// Runs every stage and writes the artifacts plus manifest.txt into
// config.output. On failure a FAILED file names the stage and cause, the
// partial outputs stay, and the error propagates. Stage names go to `log`
// when it is set.
RunResult run_pipeline(const RunConfig& config, std::ostream* log = nullptr, StopAfter until = StopAfter::all);

// Manifest line for one file: "<relative path> <bytes> <sha256>".
std::string manifest_line(const std::filesystem::path& root, const std::filesystem::path& file);

}  // namespace sepsis
