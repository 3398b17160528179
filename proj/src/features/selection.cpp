#include <algorithm>
#include <map>
#include <numeric>

#include "sepsis/features.hpp"
#include "sepsis/gbdt.hpp"

namespace sepsis {

SelectionResult select_statistical_features(const FeatureMatrix& matrix, const std::vector<std::string>& candidates,
                                            const SelectionParams& params) {
  SelectionResult result;
  if (candidates.empty()) return result;
  if (params.repeats < 1) throw ConfigError("selection repeats must be >= 1");
  if (!(params.validation_fraction > 0.0 && params.validation_fraction < 1.0)) {
    throw ConfigError("selection validation fraction must be in (0, 1)");
  }
  for (const auto& c : candidates) matrix.data.require_index(c);

  // Encounter-level split, stratified on the original labels.
  std::vector<EncounterId> ids;
  std::map<EncounterId, int> septic;
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    auto [it, inserted] = septic.emplace(matrix.encounter_ids[r], 0);
    if (inserted) ids.push_back(matrix.encounter_ids[r]);
    it->second = std::max(it->second, static_cast<int>(matrix.labels[r]));
  }
  std::vector<int> cls;
  for (auto id : ids) cls.push_back(septic[id]);
  auto rng = make_rng(params.seed, "selection");
  const auto in_validation = stratified_choice(cls, params.validation_fraction, rng);
  std::map<EncounterId, bool> side;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    side[ids[i]] = in_validation[i];
    (in_validation[i] ? result.validation_encounters : result.train_encounters) += 1;
  }
  std::vector<std::size_t> fit_rows, val_rows;
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    (side[matrix.encounter_ids[r]] ? val_rows : fit_rows).push_back(r);
  }
  if (val_rows.empty()) throw ValidationError("feature selection: validation split is empty");
  if (fit_rows.empty()) throw ValidationError("feature selection: fitting split is empty");

  const auto fit_part = matrix.select_rows(fit_rows);
  const auto val_part = matrix.select_rows(val_rows);
  gbdt::TrainParams tp;
  tp.rounds = params.rounds;
  tp.initial_learning_rate = params.learning_rate;
  tp.max_depth = params.max_depth;
  tp.max_bins = params.max_bins;
  tp.seed = stream_seed(params.seed, "selection-model");
  const auto model = gbdt::fit(fit_part.data, fit_part.shifted_labels, tp).model;
  const auto imp = gbdt::permutation_importance(model, val_part.data, val_part.shifted_labels,
                                                gbdt::Metric::neg_log_loss, params.repeats,
                                                stream_seed(params.seed, "permutation"), candidates);
  for (std::size_t i = 0; i < imp.names.size(); ++i) result.importance.push_back({imp.names[i], imp.mean[i], imp.std[i]});

  std::vector<bool> keep(candidates.size(), false);
  if (params.forced_count) {
    if (*params.forced_count < 0) throw ConfigError("forced selection count must be >= 0");
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return imp.mean[a] > imp.mean[b]; });
    const auto k = std::min(order.size(), static_cast<std::size_t>(*params.forced_count));
    for (std::size_t i = 0; i < k; ++i) keep[order[i]] = true;
  } else {
    for (std::size_t i = 0; i < candidates.size(); ++i) keep[i] = imp.mean[i] > 0.0;
  }
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (keep[i]) result.selected.push_back(candidates[i]);
  }
  return result;
}

}  // namespace sepsis
