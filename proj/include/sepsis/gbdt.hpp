#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sepsis/common.hpp"
#include "sepsis/matrix.hpp"

namespace sepsis::gbdt {

// ---- binning ---------------------------------------------------------------------

// Per-feature cut points. A value x falls in bin lower_bound(edges, x), i.e.
// the number of edges strictly below x, so value bins are 0..edges.size().
// The missing bin follows the value bins. A feature with no observed values
// has no value bins at all.
struct BinLayout {
  std::vector<std::vector<double>> edges;
  std::vector<std::uint16_t> value_bins;

  std::size_t features() const { return edges.size(); }
  std::uint16_t missing_bin(std::size_t f) const { return value_bins[f]; }
  std::size_t total_bins(std::size_t f) const { return static_cast<std::size_t>(value_bins[f]) + 1; }
  std::uint16_t bin_of(std::size_t f, double x) const;
};

struct BinnedMatrix {
  BinLayout layout;
  std::vector<std::vector<std::uint16_t>> bins;  // [feature][row]
  std::size_t rows = 0;

  std::size_t features() const { return bins.size(); }
};

// Edges at the i/max_bins empirical quantiles of the observed values
// (deduplicated); when there are at most max_bins distinct values the edges
// are the midpoints between neighbours instead.
std::vector<double> quantile_edges(std::span<const double> values, int max_bins);

// Throws ValidationError for zero rows or max_bins < 2.
BinnedMatrix quantile_bin(const ColumnMatrix& matrix, int max_bins);
// Bins `matrix` with a frozen layout (columns in layout order).
BinnedMatrix apply_bins(const ColumnMatrix& matrix, const BinLayout& layout);

// ---- model --------------------------------------------------------------------------

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  std::uint16_t bin = 0;      // value bins <= bin go left
  double threshold = 0.0;     // raw form of `bin`: x <= threshold goes left
  bool default_left = true;   // direction of missing values
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;  // leaf output, learning rate applied
  double cover = 0.0;  // training rows that reached the node
  double gain = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  std::size_t leaf_for(std::span<const double> row) const;
  bool uses_feature(std::size_t f) const;
  int depth() const;
};

struct TrainParams {
  int rounds = 3000;
  double initial_learning_rate = 0.01;
  double lr_decay_factor = 0.99;
  int lr_decay_every = 100;
  int max_depth = 6;
  int max_bins = 256;
  double min_child_weight = 1.0;
  double l2_lambda = 1.0;
  double subsample_rows = 1.0;
  std::uint64_t seed = 0;
  std::optional<int> early_stopping_rounds;
  // Weight of positive rows in the loss; 1 gives plain log loss.
  double pos_weight = 1.0;

  void validate() const;
  double learning_rate(int round) const;
};

struct ModelArtifact {
  int format_version = 1;
  double base_score = 0.0;  // log-odds
  std::vector<std::string> feature_names;
  BinLayout bins;
  std::vector<Tree> trees;
  TrainParams params;
  bool has_cover = true;

  std::size_t features() const { return feature_names.size(); }
  // Margin of one row laid out in feature_names order.
  double margin(std::span<const double> row) const;
  // Throws InvariantError when a node references an unknown feature or a
  // leaf value is not finite.
  void check() const;
};

double sigmoid(double margin);

struct GradHess {
  double g;
  double h;
};
// First and second derivative of log loss w.r.t. the margin; p is clamped
// to [1e-15, 1 - 1e-15].
GradHess logloss_grad_hess(double p, int y);

// Mean (weighted) log loss with clamped probabilities.
double log_loss(std::span<const std::uint8_t> labels, std::span<const double> probs, double pos_weight = 1.0);

// Column indices of the model's features in `matrix`. Throws SchemaError
// when a model feature is absent.
std::vector<std::size_t> feature_layout(const ModelArtifact& model, const ColumnMatrix& matrix);

std::vector<double> predict_margin(const ModelArtifact& model, const ColumnMatrix& matrix,
                                   Execution exec = Execution::parallel);
std::vector<double> predict_proba(const ModelArtifact& model, const ColumnMatrix& matrix,
                                  Execution exec = Execution::parallel);

// ---- training --------------------------------------------------------------------------

struct LossTrace {
  std::vector<double> train;       // entry 0 is the base-score loss
  std::vector<double> validation;  // same indexing, empty without validation data
  std::optional<std::size_t> best_round;
  std::vector<std::string> warnings;
};

struct TrainResult {
  ModelArtifact model;
  LossTrace trace;
};

struct ValidationSet {
  const BinnedMatrix* binned = nullptr;
  std::span<const std::uint8_t> labels;
};

TrainResult train(const BinnedMatrix& binned, std::span<const std::uint8_t> labels, const TrainParams& params,
                  const std::vector<std::string>& feature_names, std::optional<ValidationSet> validation = {});

// Bins `x` with params.max_bins and trains; the validation matrix, when
// given, is binned with the training layout.
TrainResult fit(const ColumnMatrix& x, std::span<const std::uint8_t> labels, const TrainParams& params,
                const ColumnMatrix* validation_x = nullptr, std::span<const std::uint8_t> validation_labels = {});

// ---- permutation importance ----------------------------------------------------------

enum class Metric { neg_log_loss, auroc };
Metric metric_from_string(std::string_view name);

double auroc(std::span<const std::uint8_t> labels, std::span<const double> scores);

struct Importance {
  std::vector<std::string> names;
  std::vector<double> mean;
  std::vector<double> std;
  double baseline = 0.0;
};

// metric(original) minus metric with one column permuted, averaged over
// repeats. Permutations come from the (seed, feature, repeat) stream. Only
// trees that split on the feature are re-evaluated, so features the model
// never uses score exactly 0. `features` defaults to all model features.
Importance permutation_importance(const ModelArtifact& model, const ColumnMatrix& frame,
                                  std::span<const std::uint8_t> labels, Metric metric, int repeats,
                                  std::uint64_t seed, const std::vector<std::string>& features = {});

// ---- tree Shapley values -------------------------------------------------------------

struct Attribution {
  std::vector<double> phi;
  double phi0 = 0.0;
};

// Base score plus the cover-weighted mean leaf output of every tree.
double expected_margin(const ModelArtifact& model);

// Path-dependent tree SHAP in margin space. Throws Error when the model has
// no cover counts.
Attribution shap_attributions(const ModelArtifact& model, std::span<const double> row);

// phi for every row of `matrix`, row-major (rows x model features).
std::vector<double> shap_batch(const ModelArtifact& model, const ColumnMatrix& matrix,
                               Execution exec = Execution::parallel);

// ---- serialization ----------------------------------------------------------------------

// Text format:
//   sepsis-gbdt
//   format_version <n>
//   sha256 <hex digest of the body>
//   <JSON body>
std::string serialize(const ModelArtifact& model);
ModelArtifact deserialize(std::string_view text);
void save_model(const ModelArtifact& model, const std::filesystem::path& path);
ModelArtifact load_model(const std::filesystem::path& path);

}  // namespace sepsis::gbdt
