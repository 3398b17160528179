#pragma once

#include <string>
#include <vector>

#include "sepsis/cohort.hpp"

namespace sepsis {

struct CleaningRules {
  int min_stay_hours = 5;
  int max_stay_hours = 700;
  double max_age_years = 105.0;
  int post_discharge_grace_hours = 72;
  std::string age_column = "age";

  // Throws ConfigError on non-positive thresholds or min >= max.
  void validate() const;
};

struct CleaningAuditEntry {
  std::string rule;
  std::size_t encounters_removed = 0;
  std::size_t rows_removed = 0;
};

// One entry per rule, in application order: max_age, post_discharge,
// max_stay, min_stay.
struct CleaningAudit {
  std::vector<CleaningAuditEntry> entries;

  const CleaningAuditEntry& at(std::string_view rule) const;
  std::size_t rows_removed() const;
};

struct CleanResult {
  CohortFrame cohort;
  CleaningAudit audit;
};

// Drops encounters older than max_age (admission age), removes rows more than
// the grace period past discharge, truncates rows at hour >= max_stay, and
// then drops encounters left with fewer than min_stay rows. Surviving rows
// keep their order.
CleanResult apply_cohort_filters(const CohortFrame& cohort, const CleaningRules& rules);

// Length of stay in hours at every row (the row's hour index).
std::vector<double> compute_los(const EncounterSeries& series);

// Appends a derived LOS column named `name` to every encounter.
CohortFrame append_los(const CohortFrame& cohort, const std::string& name = "LOS");

}  // namespace sepsis
