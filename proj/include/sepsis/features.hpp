#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sepsis/cohort.hpp"
#include "sepsis/common.hpp"
#include "sepsis/matrix.hpp"

namespace sepsis {

// ---- trailing-window statistics ---------------------------------------------

enum class WindowStat { delta1, delta2, variance, slope, energy, mean, min, max, median };

WindowStat window_stat_from_string(std::string_view name);
std::string_view to_string(WindowStat stat);
// Output column name, e.g. "var_HR" for variance of HR.
std::string stat_column_name(WindowStat stat, std::string_view feature);

struct WindowSpec {
  int window_hours = 6;
  std::vector<WindowStat> statistics = {WindowStat::delta1, WindowStat::delta2, WindowStat::variance,
                                        WindowStat::slope, WindowStat::energy};

  // Throws ConfigError on unknown names.
  static WindowSpec from_names(int window_hours, const std::vector<std::string>& names);
  void validate() const;
};

// Statistics of one series, one output vector per spec statistic in spec
// order. Deltas need both endpoints observed. Windowed statistics use the
// observed points among rows (t - window + 1 .. t); variance, slope and energy
// need at least two of them, mean/min/max/median need one. Variance is the
// population variance, slope the least-squares slope against the row offset,
// energy the mean of squares.
std::vector<std::vector<double>> windowed_stats(std::span<const double> series, const WindowSpec& spec);

// Appends the statistic columns (role=derived) of every listed feature,
// grouped by statistic: all delta1 columns first, then delta2, and so on.
CohortFrame append_windowed_stats(const CohortFrame& cohort, const std::vector<std::string>& features,
                                  const WindowSpec& spec, Execution exec = Execution::parallel);

// Names produced by append_windowed_stats, in the same order.
std::vector<std::string> windowed_column_names(const std::vector<std::string>& features, const WindowSpec& spec);

// ---- labels ----------------------------------------------------------------------

// shifted[t] = labels[min(t + horizon, n - 1)]. Throws ValidationError for a
// negative horizon and InvariantError for non-monotone labels.
std::vector<std::uint8_t> shift_labels(std::span<const std::uint8_t> labels, int horizon = 6);

// ---- feature matrix ---------------------------------------------------------------

struct FeatureBlock {
  std::string name;
  std::size_t begin = 0;
  std::size_t count = 0;
};

// Rows are (encounter, hour) pairs in cohort order.
struct FeatureMatrix {
  ColumnMatrix data;
  std::vector<FeatureBlock> blocks;
  std::vector<EncounterId> encounter_ids;
  std::vector<int> hours;
  std::vector<std::uint8_t> labels;          // original
  std::vector<std::uint8_t> shifted_labels;  // training target

  std::size_t rows() const { return data.rows(); }
  const FeatureBlock& block(std::string_view name) const;
  std::vector<std::string> block_names(std::string_view name) const;
  // Row subset keeping keys and labels aligned.
  FeatureMatrix select_rows(const std::vector<std::size_t>& rows) const;
  // Column subset; blocks are recomputed from the kept names.
  FeatureMatrix select_columns(const std::vector<std::string>& names) const;
};

struct AssemblySpec {
  std::vector<std::string> original;
  std::vector<std::string> masks;
  std::vector<std::string> statistical;
  std::vector<std::string> clinical;
  std::vector<std::string> demographic;
  int label_horizon = 6;
};

struct Bookkeeping {
  std::size_t original = 0;
  std::size_t masks = 0;
  std::size_t statistical_candidates = 0;
  std::size_t statistical_selected = 0;
  std::size_t clinical = 0;
  std::size_t demographic = 0;
  std::size_t total = 0;

  bool identity_holds() const {
    return original + masks + statistical_selected + clinical + demographic == total;
  }
  std::string identity_text() const;
};

struct AssembledFeatures {
  FeatureMatrix matrix;
  Bookkeeping bookkeeping;
};

// Concatenates the blocks in order original, masks, statistical, clinical,
// demographic. Throws ValidationError on duplicate names or a mask column
// with missing entries.
AssembledFeatures assemble_feature_matrix(const CohortFrame& cohort, const AssemblySpec& spec,
                                          std::size_t statistical_candidates = 0);

// ---- statistical feature selection ---------------------------------------------

struct SelectionParams {
  double validation_fraction = 0.2;
  int repeats = 5;
  std::uint64_t seed = 0;
  int rounds = 100;
  int max_depth = 6;
  double learning_rate = 0.1;
  int max_bins = 64;
  // When set, keep exactly this many statistical features by mean importance
  // instead of the positive-importance rule.
  std::optional<int> forced_count;
};

struct FeatureImportanceRow {
  std::string name;
  double mean = 0.0;
  double std = 0.0;
};

struct SelectionResult {
  std::vector<std::string> selected;           // candidate order
  std::vector<FeatureImportanceRow> importance;  // one row per candidate
  std::size_t train_encounters = 0;
  std::size_t validation_encounters = 0;
};

// Splits the matrix by encounter into fit and validation parts, fits a
// booster on every column with the shifted labels and keeps the candidates
// whose mean permutation importance (negative log loss) on the validation
// part is positive.
SelectionResult select_statistical_features(const FeatureMatrix& matrix, const std::vector<std::string>& candidates,
                                            const SelectionParams& params);

}  // namespace sepsis
