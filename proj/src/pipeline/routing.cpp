#include <map>

#include "sepsis/pipeline.hpp"

namespace sepsis {
namespace {

bool is_statistic_name(const std::string& name) {
  for (auto s : {WindowStat::delta1, WindowStat::delta2, WindowStat::variance, WindowStat::slope, WindowStat::energy,
                 WindowStat::mean, WindowStat::min, WindowStat::max, WindowStat::median}) {
    if (name.rfind(stat_column_name(s, ""), 0) == 0) return true;
  }
  return false;
}

struct EncounterRange {
  EncounterId id;
  std::size_t begin;
  std::size_t end;
};

std::vector<EncounterRange> encounter_ranges(const FeatureMatrix& m) {
  std::vector<EncounterRange> out;
  std::map<EncounterId, bool> seen;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto id = m.encounter_ids[r];
    if (!out.empty() && out.back().id == id) {
      out.back().end = r + 1;
      continue;
    }
    if (seen[id]) throw InvariantError("feature matrix rows of encounter " + std::to_string(id) + " are not contiguous");
    seen[id] = true;
    out.push_back({id, r, r + 1});
  }
  return out;
}

}  // namespace

RoutedPredictions route_and_predict(const FeatureMatrix& matrix, const gbdt::ModelArtifact& full,
                                    const gbdt::ModelArtifact* nonstat, const RoutingPolicy& policy) {
  policy.validate();
  if (nonstat) {
    for (const auto& name : nonstat->feature_names) {
      if (is_statistic_name(name)) {
        throw ValidationError("non-stat model uses statistical feature '" + name + "'");
      }
    }
  }
  const auto ranges = encounter_ranges(matrix);
  std::vector<std::size_t> short_rows, long_rows;
  std::size_t short_encounters = 0;
  for (const auto& e : ranges) {
    const bool is_short = e.end - e.begin < static_cast<std::size_t>(policy.min_hours_for_stats);
    auto& dst = is_short ? short_rows : long_rows;
    for (auto r = e.begin; r < e.end; ++r) dst.push_back(r);
    short_encounters += is_short ? 1 : 0;
  }
  if (short_encounters > 0 && !nonstat) {
    throw Error("routing: " + std::to_string(short_encounters) + " encounters have fewer than " +
                std::to_string(policy.min_hours_for_stats) + " hours but no non-stat model is available");
  }

  // Both layouts are checked up front so a mismatch fails even when one
  // branch is empty.
  (void)gbdt::feature_layout(full, matrix.data);
  if (nonstat) (void)gbdt::feature_layout(*nonstat, matrix.data);

  std::vector<double> prob(matrix.rows(), kMissing);
  auto score = [&](const gbdt::ModelArtifact& model, const std::vector<std::size_t>& rows) {
    if (rows.empty()) return;
    const auto p = gbdt::predict_proba(model, matrix.data.select_rows(rows));
    for (std::size_t i = 0; i < rows.size(); ++i) prob[rows[i]] = p[i];
  };
  score(full, long_rows);
  if (nonstat) score(*nonstat, short_rows);

  RoutedPredictions out;
  out.summary.full_rows = long_rows.size();
  out.summary.nonstat_rows = short_rows.size();
  out.summary.nonstat_encounters = short_encounters;
  out.summary.full_encounters = ranges.size() - short_encounters;
  out.series.reserve(ranges.size());
  for (const auto& e : ranges) {
    PredictionSeries s;
    s.encounter_id = e.id;
    s.start_hour = matrix.hours[e.begin];
    s.model = e.end - e.begin < static_cast<std::size_t>(policy.min_hours_for_stats) ? "nonstat" : "full";
    s.labels.assign(matrix.labels.begin() + static_cast<std::ptrdiff_t>(e.begin),
                    matrix.labels.begin() + static_cast<std::ptrdiff_t>(e.end));
    s.probabilities.assign(prob.begin() + static_cast<std::ptrdiff_t>(e.begin),
                           prob.begin() + static_cast<std::ptrdiff_t>(e.end));
    out.series.push_back(std::move(s));
  }
  return out;
}

}  // namespace sepsis
