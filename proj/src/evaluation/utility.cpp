#include "sepsis/evaluation.hpp"

namespace sepsis {

void UtilityParams::validate() const {
  if (!(dt_early < dt_optimal && dt_optimal < dt_late)) throw ConfigError("utility needs dt_early < dt_optimal < dt_late");
  if (!(max_u_tp > 0.0)) throw ConfigError("max_u_tp must be > 0");
  if (!(u_fp < 0.0)) throw ConfigError("u_fp must be < 0");
  if (!(min_u_fn < 0.0)) throw ConfigError("min_u_fn must be < 0");
}

double hour_utility(int t, std::optional<int> onset, bool positive, const UtilityParams& p) {
  if (!onset) return positive ? p.u_fp : p.u_tn;
  const int early = *onset + p.dt_early;
  const int optimal = *onset + p.dt_optimal;
  const int late = *onset + p.dt_late;
  if (t > late) return 0.0;
  if (t <= optimal) {
    if (!positive) return 0.0;
    const double m1 = p.max_u_tp / static_cast<double>(p.dt_optimal - p.dt_early);
    return std::max(m1 * static_cast<double>(t - early), p.u_fp);
  }
  const double span = static_cast<double>(p.dt_late - p.dt_optimal);
  if (positive) return p.max_u_tp - p.max_u_tp / span * static_cast<double>(t - optimal);
  return p.min_u_fn / span * static_cast<double>(t - optimal);
}

double utility_per_patient(std::span<const std::uint8_t> labels, std::span<const std::uint8_t> predictions,
                           const UtilityParams& params) {
  if (labels.size() != predictions.size()) throw ValidationError("utility: labels and predictions differ in length");
  const auto onset_row = onset_of(labels);
  const std::optional<int> onset = onset_row ? std::optional<int>(static_cast<int>(*onset_row)) : std::nullopt;
  double total = 0.0;
  for (std::size_t t = 0; t < labels.size(); ++t) total += hour_utility(static_cast<int>(t), onset, predictions[t] != 0, params);
  return total;
}

std::vector<std::uint8_t> optimal_predictions(std::span<const std::uint8_t> labels, const UtilityParams& params) {
  const auto onset_row = onset_of(labels);
  const std::optional<int> onset = onset_row ? std::optional<int>(static_cast<int>(*onset_row)) : std::nullopt;
  std::vector<std::uint8_t> out(labels.size());
  for (std::size_t t = 0; t < labels.size(); ++t) {
    const int h = static_cast<int>(t);
    out[t] = hour_utility(h, onset, true, params) > hour_utility(h, onset, false, params) ? 1 : 0;
  }
  return out;
}

UtilityBreakdown utility_breakdown(const std::vector<std::vector<std::uint8_t>>& labels,
                                   const std::vector<std::vector<std::uint8_t>>& predictions,
                                   const UtilityParams& params) {
  params.validate();
  if (labels.size() != predictions.size()) throw ValidationError("utility: one prediction series per encounter");
  const auto n = static_cast<std::ptrdiff_t>(labels.size());
  std::vector<double> obs(labels.size()), none(labels.size()), best(labels.size());
#pragma omp parallel for schedule(dynamic, 32)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    obs[i] = utility_per_patient(labels[i], predictions[i], params);
    const std::vector<std::uint8_t> zeros(labels[i].size(), 0);
    none[i] = utility_per_patient(labels[i], zeros, params);
    best[i] = utility_per_patient(labels[i], optimal_predictions(labels[i], params), params);
  }
  UtilityBreakdown u;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    u.observed += obs[i];
    u.inaction += none[i];
    u.optimal += best[i];
  }
  if (u.optimal == u.inaction) throw Error("normalization undefined: optimal utility equals inaction utility");
  u.normalized = (u.observed - u.inaction) / (u.optimal - u.inaction);
  return u;
}

double normalized_utility(const std::vector<std::vector<std::uint8_t>>& labels,
                          const std::vector<std::vector<std::uint8_t>>& predictions, const UtilityParams& params) {
  return utility_breakdown(labels, predictions, params).normalized;
}

}  // namespace sepsis
