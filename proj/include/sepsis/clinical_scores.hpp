#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sepsis/cohort.hpp"

namespace sepsis {

enum class ClinicalVar {
  temp, hr, resp, sbp, map, dbp, spo2, paco2, pao2, fio2, sao2, wbc, platelets, bilirubin,
  creatinine, bun, gcs,
  // Derived from the inputs above; FiO2 normalized to a fraction.
  pf_ratio, sf_ratio,
};
inline constexpr std::size_t kClinicalVarCount = 19;

ClinicalVar clinical_var_from_string(std::string_view name);
std::string_view to_string(ClinicalVar v);

// Inputs to the bedside scores for one hour. Unset entries are missing.
class ClinicalRow {
 public:
  ClinicalRow();
  ClinicalRow& set(ClinicalVar v, double value);
  double get(ClinicalVar v) const;
  bool has(ClinicalVar v) const;

 private:
  void refresh_ratios();
  std::array<double, kClinicalVarCount> values_;
};

// FiO2 as a fraction: values above 1 are percentages.
double fio2_fraction(double fio2);

// One band of a score criterion: `points` when the variable lies in the
// interval. A criterion's points are the maximum over its matching bands.
// Fallback bands apply only when every primary variable of the criterion is
// missing.
struct ScoreBand {
  std::string score;
  std::string criterion;
  ClinicalVar var;
  double lo;
  double hi;
  bool lo_inclusive;
  bool hi_inclusive;
  int points;
  bool fallback = false;

  bool contains(double v) const;
};

// Band tables are data files, one band per line:
//   <score> <criterion> <variable> <interval> <points> [fallback]
// with intervals written like (38,inf) or [-inf,36).
class BandTable {
 public:
  static BandTable parse(const std::string& text);
  static BandTable load(const std::filesystem::path& path);
  static std::filesystem::path default_path();
  // The shipped table, loaded once.
  static const BandTable& shipped();

  int score(std::string_view score, const ClinicalRow& row) const;
  // Points of one criterion; 0 when its inputs are missing.
  int criterion_points(std::string_view score, std::string_view criterion, const ClinicalRow& row) const;
  std::vector<std::string> criteria(std::string_view score) const;
  const std::vector<ScoreBand>& bands() const { return bands_; }

 private:
  struct Criterion {
    std::string score;
    std::string name;
    std::vector<std::size_t> bands;
  };
  const Criterion* find(std::string_view score, std::string_view criterion) const;
  int points(const Criterion& c, const ClinicalRow& row) const;

  std::vector<ScoreBand> bands_;
  std::vector<Criterion> criteria_;  // in first-appearance order
};

int score_sirs(const ClinicalRow& row, const BandTable& table = BandTable::shipped());
int score_qsofa(const ClinicalRow& row, const BandTable& table = BandTable::shipped());
int score_mews(const ClinicalRow& row, const BandTable& table = BandTable::shipped());
int score_partial_sofa(const ClinicalRow& row, const BandTable& table = BandTable::shipped());

struct RatioFeatures {
  double shock_index;
  double bun_cr;
  double sao2_fio2;
};
// Each ratio is missing when an operand is missing or the denominator <= 0.
RatioFeatures ratio_features(const ClinicalRow& row);

// Names of the seven clinical columns, in assembly order.
const std::vector<std::string>& clinical_feature_names();

// Builds a ClinicalRow for every hour from the schema's score_var columns
// (the mean of the present columns mapped to the same variable) and appends
// the seven clinical columns (role=derived).
CohortFrame append_clinical_features(const CohortFrame& cohort, const BandTable& table = BandTable::shipped());

}  // namespace sepsis
