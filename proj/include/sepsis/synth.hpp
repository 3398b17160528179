#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sepsis/cohort.hpp"
#include "sepsis/common.hpp"

namespace sepsis {

struct SynthConfig {
  std::size_t n_encounters = 1000;
  double prevalence = 0.0579;
  // Log-normal length of stay, redrawn until inside [los_min, los_max].
  double los_median_hours = 36.0;
  double los_sigma = 0.8;
  int los_min_hours = 5;
  int los_max_hours = 700;
  // Missing rate per role name ("vital", "lab", "demographic").
  std::map<std::string, double> missingness = {{"vital", 0.20}, {"lab", 0.90}, {"demographic", 0.0}};
  // Additive pre-onset drift per analyte, in units of the analyte's typical
  // standard deviation, reached linearly over lead_hours before onset and
  // held afterwards.
  std::map<std::string, double> drift = {{"HR", 3.0}, {"SBP", -2.5}, {"Temp", 3.0}, {"WBC", 3.0}};
  int lead_hours = 12;
  double one_hour_fraction = 0.0;
  // First-order autoregressive coefficient of the hourly paths.
  double ar_coefficient = 0.9;
  // Per-encounter baseline offset, in standard deviations.
  double baseline_sd = 0.5;
  // Half-width of the hourly min/max spread, in standard deviations.
  double spread_sd = 0.3;
  // Correlation of a linked analyte with its source path.
  double link_correlation = 0.95;
  std::uint64_t seed = 0;

  // Throws ConfigError when a field is out of range or the onset lead can
  // never fit in a stay.
  void validate() const;
};

struct GroundTruth {
  EncounterId encounter_id = 0;
  bool septic = false;
  std::optional<int> onset_hour;
};

struct SynthResult {
  CohortFrame cohort;
  std::vector<GroundTruth> truth;
};

// Deterministic in config.seed; each encounter draws from its own stream, so
// the output does not depend on thread scheduling.
SynthResult generate_cohort(const FeatureSchema& schema, const SynthConfig& config);

// Masks vital/lab cells per (row, analyte) and demographic cells per cell at
// the rate of their role. Missing roles keep their cells.
CohortFrame inject_missingness(const CohortFrame& cohort, const std::map<std::string, double>& rates,
                               std::uint64_t seed);

// CSV sidecar: encounter_id,septic,onset_hour.
void write_ground_truth(std::ostream& out, const std::vector<GroundTruth>& truth);

}  // namespace sepsis
