#pragma once

#include <map>
#include <string>
#include <vector>

#include "sepsis/cohort.hpp"

namespace sepsis {

// Pearson correlations over pairwise-complete rows pooled across encounters.
struct CorrelationMatrix {
  std::vector<std::string> names;
  std::vector<double> values;        // n*n, row-major
  std::vector<std::size_t> support;  // complete-pair count per entry
  std::vector<std::uint8_t> defined; // 0 where support < 2 or a side is constant

  std::size_t size() const { return names.size(); }
  double at(std::size_t i, std::size_t j) const { return values[i * names.size() + j]; }
  bool is_defined(std::size_t i, std::size_t j) const { return defined[i * names.size() + j] != 0; }
};

// Throws SchemaError for an unknown feature and ValidationError for fewer
// than two features.
CorrelationMatrix correlation_matrix(const CohortFrame& cohort, const std::vector<std::string>& features);

struct LinkageStep {
  std::vector<std::string> left;
  std::vector<std::string> right;
  double height;
};

struct ClusterPruneResult {
  std::vector<std::vector<std::string>> clusters;  // members sorted by name
  std::vector<std::string> representatives;        // one per cluster, same order
  double cutoff = 1.0;
  std::vector<LinkageStep> merges;                 // applied merges, in order
};

// Agglomerative Ward clustering on d = 1 - |rho| (Lance-Williams updates).
// Clusters are joined while the smallest linkage height is strictly below
// `cutoff`. Each cluster is represented by its least-missing feature, ties
// broken by name. The result does not depend on the input feature order.
ClusterPruneResult ward_cluster_prune(const CorrelationMatrix& corr, double cutoff,
                                      const std::map<std::string, double>& missing_fraction);

// Missing fraction per feature over all rows of the cohort.
std::map<std::string, double> missing_fractions(const CohortFrame& cohort, const std::vector<std::string>& features);

// Drops every vital/lab value column not listed in `vital_lab_keep`; other
// value columns are kept. Column order follows the schema.
CohortFrame project_columns(const CohortFrame& cohort, const std::vector<std::string>& vital_lab_keep);

// Appends mask_<feature> (role=mask): 1 where observed, 0 where missing.
CohortFrame build_masks(const CohortFrame& cohort, const std::vector<std::string>& features);

enum class ImputeMode { retrospective, causal };
struct ImputePolicy {
  ImputeMode mode = ImputeMode::retrospective;
  static ImputePolicy from_name(std::string_view name);
  std::string_view name() const;
};

// Per-encounter imputation. Demographics are forward filled (and, in
// retrospective mode, back filled). Vital and lab columns are linearly
// interpolated between observations (retrospective) or carried forward from
// the last observation (causal). Leading gaps stay missing; trailing gaps
// stay missing in retrospective mode. Every vital/lab column must already
// have its mask column.
CohortFrame impute(const CohortFrame& cohort, const ImputePolicy& policy);

// Single-column primitives used by impute().
void interpolate_linear(std::span<double> values);
void carry_forward(std::span<double> values);
void carry_backward(std::span<double> values);

}  // namespace sepsis
