#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sepsis/cohort.hpp"
#include "sepsis/common.hpp"
#include "sepsis/gbdt.hpp"

namespace fixture {

// Two vitals, one lab, one demographic.
inline const char* kSmallSchema = R"(
[[column]]
name = "encounter_id"
role = "id"

[[column]]
name = "hour"
role = "time"
unit = "h"

[[column]]
name = "age"
role = "demographic"
unit = "years"
range.min = 0
range.max = 120

[[column]]
name = "HR"
role = "vital"
unit = "bpm"
range.min = 20
range.max = 300
score_var = "hr"

[[column]]
name = "SBP"
role = "vital"
unit = "mmHg"
range.min = 20
range.max = 300
score_var = "sbp"

[[column]]
name = "WBC"
role = "lab"
unit = "10^3/uL"
range.min = 0
range.max = 500
score_var = "wbc"

[[column]]
name = "SepsisLabel"
role = "label"
)";

inline sepsis::FeatureSchema small_schema() { return sepsis::FeatureSchema::parse(kSmallSchema); }

inline std::vector<std::uint8_t> labels_with_onset(std::size_t rows, int onset) {
  std::vector<std::uint8_t> l(rows, 0);
  for (int t = std::max(0, onset); onset >= 0 && t < static_cast<int>(rows); ++t) l[static_cast<std::size_t>(t)] = 1;
  return l;
}

// Encounter on `schema` with every value set to `fill` and the given onset
// (-1 for none).
inline sepsis::EncounterSeries encounter(const sepsis::FeatureSchema& schema, sepsis::EncounterId id,
                                         std::size_t rows, int onset = -1, double fill = 1.0) {
  auto e = sepsis::EncounterSeries::blank(id, schema.value_count(), rows);
  e.admission_time = sepsis::parse_timestamp("2020-01-01 00:00:00") + std::chrono::hours(24 * id);
  for (auto& c : e.columns) std::fill(c.begin(), c.end(), fill);
  e.labels = labels_with_onset(rows, onset);
  return e;
}

inline sepsis::CohortFrame cohort(const sepsis::FeatureSchema& schema, std::vector<sepsis::EncounterSeries> enc) {
  sepsis::CohortFrame c;
  c.schema = schema;
  c.encounters = std::move(enc);
  return c;
}

// Random matrix with a planted signal: label is 1 when x0 + 0.5 x1 + noise > 1.
struct Planted {
  sepsis::ColumnMatrix x;
  std::vector<std::uint8_t> y;
};

inline Planted planted(std::size_t rows, std::size_t features, std::uint64_t seed, double missing_rate = 0.0) {
  auto rng = sepsis::make_rng(seed, "fixture");
  Planted p;
  for (std::size_t f = 0; f < features; ++f) {
    p.x.names.push_back("x" + std::to_string(f));
    p.x.columns.emplace_back(rows);
  }
  p.y.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t f = 0; f < features; ++f) p.x.columns[f][r] = sepsis::standard_normal(rng);
    const double s = p.x.columns[0][r] + (features > 1 ? 0.5 * p.x.columns[1][r] : 0.0) +
                     0.5 * sepsis::standard_normal(rng);
    p.y[r] = s > 1.0 ? 1 : 0;
    for (std::size_t f = 0; f < features; ++f) {
      if (missing_rate > 0 && sepsis::uniform01(rng) < missing_rate) p.x.columns[f][r] = sepsis::kMissing;
    }
  }
  return p;
}

inline sepsis::gbdt::TrainParams quick_params(int rounds = 20, int depth = 3) {
  sepsis::gbdt::TrainParams t;
  t.rounds = rounds;
  t.max_depth = depth;
  t.initial_learning_rate = 0.3;
  t.max_bins = 32;
  return t;
}

}  // namespace fixture
