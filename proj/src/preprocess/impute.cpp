#include <algorithm>
#include <set>

#include "sepsis/common.hpp"
#include "sepsis/preprocess.hpp"

namespace sepsis {

CohortFrame project_columns(const CohortFrame& cohort, const std::vector<std::string>& vital_lab_keep) {
  const std::set<std::string> keep(vital_lab_keep.begin(), vital_lab_keep.end());
  for (const auto& k : keep) cohort.schema.require_value_index(k);

  std::vector<ColumnSpec> cols;
  std::vector<std::size_t> kept_values;
  for (const auto& c : cohort.schema.columns()) {
    const bool is_value = c.role != Role::id && c.role != Role::label && c.role != Role::time;
    if ((c.role == Role::vital || c.role == Role::lab) && !keep.count(c.name)) continue;
    cols.push_back(c);
    if (is_value) kept_values.push_back(cohort.schema.require_value_index(c.name));
  }
  CohortFrame out;
  out.schema = FeatureSchema(std::move(cols));
  out.provenance = cohort.provenance;
  out.encounters.reserve(cohort.encounters.size());
  for (const auto& e : cohort.encounters) {
    EncounterSeries s;
    s.id = e.id;
    s.admission_time = e.admission_time;
    s.discharge_time = e.discharge_time;
    s.start_hour = e.start_hour;
    s.labels = e.labels;
    for (auto c : kept_values) s.columns.push_back(e.columns[c]);
    out.encounters.push_back(std::move(s));
  }
  out.record("project_columns", cohort.encounters.size(), cohort.total_rows(),
             "kept " + std::to_string(kept_values.size()) + " of " + std::to_string(cohort.schema.value_count()));
  return out;
}

CohortFrame build_masks(const CohortFrame& cohort, const std::vector<std::string>& features) {
  std::vector<std::size_t> idx;
  std::vector<ColumnSpec> extra;
  for (const auto& f : features) {
    idx.push_back(cohort.schema.require_value_index(f));
    ColumnSpec spec;
    spec.name = "mask_" + f;
    spec.role = Role::mask;
    spec.unit = "binary";
    extra.push_back(spec);
  }
  CohortFrame out;
  out.schema = cohort.schema.with_appended(extra);
  out.provenance = cohort.provenance;
  out.encounters = cohort.encounters;
  const auto n = out.encounters.size();
#pragma omp parallel for schedule(dynamic, 32)
  for (std::size_t i = 0; i < n; ++i) {
    auto& e = out.encounters[i];
    for (auto c : idx) {
      std::vector<double> mask(e.rows());
      for (std::size_t r = 0; r < e.rows(); ++r) mask[r] = is_missing(e.columns[c][r]) ? 0.0 : 1.0;
      e.columns.push_back(std::move(mask));
    }
  }
  out.record("build_masks", n, cohort.total_rows(), std::to_string(features.size()) + " masks");
  return out;
}

ImputePolicy ImputePolicy::from_name(std::string_view name) {
  if (name == "retrospective" || name == "linear") return {ImputeMode::retrospective};
  if (name == "causal" || name == "locf") return {ImputeMode::causal};
  throw ConfigError("unknown imputation policy '" + std::string(name) + "'");
}

std::string_view ImputePolicy::name() const {
  return mode == ImputeMode::retrospective ? "retrospective" : "causal";
}

void interpolate_linear(std::span<double> values) {
  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (is_missing(values[i])) continue;
    if (prev && i > *prev + 1) {
      const double a = values[*prev], b = values[i];
      const double lo = std::min(a, b), hi = std::max(a, b);
      const double span = static_cast<double>(i - *prev);
      for (std::size_t k = *prev + 1; k < i; ++k) {
        const double t = static_cast<double>(k - *prev) / span;
        values[k] = std::clamp(a + (b - a) * t, lo, hi);
      }
    }
    prev = i;
  }
}

void carry_forward(std::span<double> values) {
  double last = kMissing;
  for (double& v : values) {
    if (is_missing(v)) {
      v = last;
    } else {
      last = v;
    }
  }
}

void carry_backward(std::span<double> values) {
  double next = kMissing;
  for (auto it = values.rbegin(); it != values.rend(); ++it) {
    if (is_missing(*it)) {
      *it = next;
    } else {
      next = *it;
    }
  }
}

CohortFrame impute(const CohortFrame& cohort, const ImputePolicy& policy) {
  const auto& schema = cohort.schema;
  std::vector<std::size_t> demo, series_cols;
  for (std::size_t c = 0; c < schema.value_count(); ++c) {
    const auto& spec = schema.value_column(c);
    if (spec.role == Role::demographic) demo.push_back(c);
    if (spec.role == Role::vital || spec.role == Role::lab) {
      if (!schema.value_index("mask_" + spec.name)) {
        throw ValidationError("impute: column '" + spec.name + "' has no mask; build masks first");
      }
      series_cols.push_back(c);
    }
  }
  CohortFrame out = cohort;
  const auto n = out.encounters.size();
#pragma omp parallel for schedule(dynamic, 32)
  for (std::size_t i = 0; i < n; ++i) {
    auto& e = out.encounters[i];
    for (auto c : demo) {
      carry_forward(e.columns[c]);
      if (policy.mode == ImputeMode::retrospective) carry_backward(e.columns[c]);
    }
    for (auto c : series_cols) {
      if (policy.mode == ImputeMode::retrospective) {
        interpolate_linear(e.columns[c]);
      } else {
        carry_forward(e.columns[c]);
      }
    }
  }
  out.record("impute", n, cohort.total_rows(), std::string(policy.name()));
  return out;
}

}  // namespace sepsis
