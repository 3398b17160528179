#include "sepsis/cleaning.hpp"

#include <array>

#include "sepsis/common.hpp"

namespace sepsis {

void CleaningRules::validate() const {
  if (min_stay_hours <= 0 || max_stay_hours <= 0 || max_age_years <= 0 || post_discharge_grace_hours <= 0) {
    throw ConfigError("cleaning thresholds must be positive");
  }
  if (min_stay_hours >= max_stay_hours) throw ConfigError("min_stay_hours must be below max_stay_hours");
}

const CleaningAuditEntry& CleaningAudit::at(std::string_view rule) const {
  for (const auto& e : entries) {
    if (e.rule == rule) return e;
  }
  throw Error("no cleaning rule named '" + std::string(rule) + "'");
}

std::size_t CleaningAudit::rows_removed() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.rows_removed;
  return n;
}

namespace {

constexpr std::array<const char*, 4> kRules = {"max_age", "post_discharge", "max_stay", "min_stay"};

struct EncounterVerdict {
  bool keep = true;
  std::size_t keep_rows = 0;
  std::array<std::size_t, 4> enc_removed{};
  std::array<std::size_t, 4> rows_removed{};
};

EncounterVerdict judge(const EncounterSeries& e, const CleaningRules& rules, std::optional<std::size_t> age_col) {
  EncounterVerdict v;
  std::size_t rows = e.rows();
  if (age_col) {
    for (double a : e.columns[*age_col]) {
      if (is_missing(a)) continue;
      if (a > rules.max_age_years) {
        v.keep = false;
        v.enc_removed[0] = 1;
        v.rows_removed[0] = rows;
        return v;
      }
      break;
    }
  }
  if (e.discharge_time) {
    const auto limit = *e.discharge_time + std::chrono::hours(rules.post_discharge_grace_hours);
    std::size_t keep = rows;
    for (std::size_t r = 0; r < rows; ++r) {
      if (e.admission_time + std::chrono::hours(e.hour_index(r)) > limit) {
        keep = r;
        break;
      }
    }
    v.rows_removed[1] = rows - keep;
    rows = keep;
  }
  {
    std::size_t keep = rows;
    for (std::size_t r = 0; r < rows; ++r) {
      if (e.hour_index(r) >= rules.max_stay_hours) {
        keep = r;
        break;
      }
    }
    v.rows_removed[2] = rows - keep;
    rows = keep;
  }
  if (rows < static_cast<std::size_t>(rules.min_stay_hours)) {
    v.keep = false;
    v.enc_removed[3] = 1;
    v.rows_removed[3] = rows;
    return v;
  }
  v.keep_rows = rows;
  return v;
}

}  // namespace

CleanResult apply_cohort_filters(const CohortFrame& cohort, const CleaningRules& rules) {
  rules.validate();
  const auto age_col = cohort.schema.value_index(rules.age_column);
  const auto n = cohort.encounters.size();
  std::vector<EncounterVerdict> verdicts(n);
#pragma omp parallel for schedule(dynamic, 32)
  for (std::size_t i = 0; i < n; ++i) verdicts[i] = judge(cohort.encounters[i], rules, age_col);

  CleanResult out;
  out.cohort.schema = cohort.schema;
  out.cohort.provenance = cohort.provenance;
  for (std::size_t k = 0; k < kRules.size(); ++k) out.audit.entries.push_back({kRules[k], 0, 0});
  for (std::size_t i = 0; i < n; ++i) {
    const auto& v = verdicts[i];
    for (std::size_t k = 0; k < kRules.size(); ++k) {
      out.audit.entries[k].encounters_removed += v.enc_removed[k];
      out.audit.entries[k].rows_removed += v.rows_removed[k];
    }
    if (!v.keep) continue;
    EncounterSeries e = cohort.encounters[i];
    if (v.keep_rows < e.rows()) {
      e.labels.resize(v.keep_rows);
      for (auto& c : e.columns) c.resize(v.keep_rows);
    }
    out.cohort.encounters.push_back(std::move(e));
  }
  std::string note;
  for (const auto& e : out.audit.entries) {
    if (!note.empty()) note += ' ';
    note += e.rule + "=" + std::to_string(e.encounters_removed) + "/" + std::to_string(e.rows_removed);
  }
  out.cohort.record("apply_cohort_filters", n, cohort.total_rows(), note);
  return out;
}

std::vector<double> compute_los(const EncounterSeries& series) {
  std::vector<double> los(series.rows());
  for (std::size_t r = 0; r < los.size(); ++r) los[r] = static_cast<double>(series.hour_index(r));
  return los;
}

CohortFrame append_los(const CohortFrame& cohort, const std::string& name) {
  CohortFrame out;
  ColumnSpec spec;
  spec.name = name;
  spec.role = Role::derived;
  spec.unit = "h";
  out.schema = cohort.schema.with_appended({spec});
  out.provenance = cohort.provenance;
  out.encounters = cohort.encounters;
  for (auto& e : out.encounters) e.columns.push_back(compute_los(e));
  out.record("compute_los", cohort.encounters.size(), cohort.total_rows());
  return out;
}

}  // namespace sepsis
