#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sepsis/cohort.hpp"
#include "sepsis/common.hpp"

namespace sepsis {

struct UtilityParams {
  int dt_early = -12;
  int dt_optimal = -6;
  int dt_late = 3;
  double max_u_tp = 1.0;
  double u_fp = -0.05;
  double min_u_fn = -2.0;
  double u_tn = 0.0;

  void validate() const;
};

// Utility of one hour. `onset` is the onset row (original labels), or
// nullopt for a non-septic stay.
double hour_utility(int t, std::optional<int> onset, bool positive, const UtilityParams& params);

// Sum of hourly utilities. Throws ValidationError on a length mismatch.
double utility_per_patient(std::span<const std::uint8_t> labels, std::span<const std::uint8_t> predictions,
                           const UtilityParams& params);

// The per-hour utility-maximizing predictions (positive only where it
// scores strictly more than negative).
std::vector<std::uint8_t> optimal_predictions(std::span<const std::uint8_t> labels, const UtilityParams& params);

struct UtilityBreakdown {
  double observed = 0.0;
  double inaction = 0.0;
  double optimal = 0.0;
  double normalized = 0.0;
};

// (observed - inaction) / (optimal - inaction). Throws Error with
// "normalization undefined" when optimal equals inaction.
UtilityBreakdown utility_breakdown(const std::vector<std::vector<std::uint8_t>>& labels,
                                   const std::vector<std::vector<std::uint8_t>>& predictions,
                                   const UtilityParams& params);
double normalized_utility(const std::vector<std::vector<std::uint8_t>>& labels,
                          const std::vector<std::vector<std::uint8_t>>& predictions, const UtilityParams& params);

// Hourly probabilities of one encounter on its source grid.
struct PredictionSeries {
  EncounterId encounter_id = 0;
  int start_hour = 0;
  std::vector<std::uint8_t> labels;  // original
  std::vector<double> probabilities;
  std::string model;  // which model scored the encounter

  std::vector<std::uint8_t> flags(double threshold) const;
};

struct EncounterOutcome {
  EncounterId encounter_id = 0;
  bool septic = false;
  bool flagged = false;
  bool success = false;
  std::optional<int> onset_hour;
  std::optional<int> first_flag_hour;
  // Onset minus the first flag inside the success window.
  std::optional<int> timeliness_hours;
};

// Septic success: a probability > threshold at some hour in
// [onset - success_window, onset]. Non-septic success: never flagged.
EncounterOutcome encounter_outcome(const PredictionSeries& series, double threshold, int success_window = 6);

struct MetricsPanel {
  double threshold = 0.0;
  std::optional<double> normalized_utility;
  std::optional<double> f1;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  double flag_rate = 0.0;
  std::optional<double> false_flag_fraction;  // flagged non-septic / flagged
  std::optional<double> conventional_fpr;     // flagged non-septic / non-septic
  std::optional<double> ppv;
  std::optional<double> npv;
  std::optional<double> median_timeliness;
  std::size_t encounters = 0;
  std::size_t septic = 0;
  std::size_t flagged = 0;
  std::size_t septic_success = 0;
  std::size_t nonseptic_flagged = 0;
};

// Throws ValidationError for an empty outcome list.
MetricsPanel metrics_panel(const std::vector<EncounterOutcome>& outcomes, double threshold);

std::vector<double> default_thresholds();

struct SweepResult {
  std::vector<MetricsPanel> panels;
  std::size_t best_index = 0;  // highest normalized utility, first on ties
};

SweepResult threshold_sweep(const std::vector<PredictionSeries>& predictions, const std::vector<double>& thresholds,
                            const UtilityParams& params, int success_window = 6);

// Stable JSON report: utility parameters, cohort counts, one record per
// threshold and the best threshold.
std::string evaluation_report_json(const SweepResult& sweep, const UtilityParams& params,
                                   const std::vector<PredictionSeries>& predictions);

}  // namespace sepsis
