#include <algorithm>

#include "sepsis/evaluation.hpp"

namespace sepsis {

std::vector<std::uint8_t> PredictionSeries::flags(double threshold) const {
  std::vector<std::uint8_t> out(probabilities.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = probabilities[i] > threshold ? 1 : 0;
  return out;
}

EncounterOutcome encounter_outcome(const PredictionSeries& s, double threshold, int success_window) {
  if (s.labels.size() != s.probabilities.size()) throw ValidationError("outcome: labels and probabilities differ in length");
  EncounterOutcome o;
  o.encounter_id = s.encounter_id;
  const auto onset_row = onset_of(s.labels);
  o.septic = onset_row.has_value();
  if (onset_row) o.onset_hour = s.start_hour + static_cast<int>(*onset_row);
  std::optional<int> first_in_window;
  for (std::size_t r = 0; r < s.probabilities.size(); ++r) {
    if (!(s.probabilities[r] > threshold)) continue;
    const int hour = s.start_hour + static_cast<int>(r);
    if (!o.first_flag_hour) o.first_flag_hour = hour;
    o.flagged = true;
    if (o.onset_hour && hour >= *o.onset_hour - success_window && hour <= *o.onset_hour && !first_in_window) {
      first_in_window = hour;
    }
  }
  if (o.septic) {
    o.success = first_in_window.has_value();
    if (o.success) o.timeliness_hours = *o.onset_hour - *first_in_window;
  } else {
    o.success = !o.flagged;
  }
  return o;
}

MetricsPanel metrics_panel(const std::vector<EncounterOutcome>& outcomes, double threshold) {
  if (outcomes.empty()) throw ValidationError("metrics panel needs at least one outcome");
  MetricsPanel m;
  m.threshold = threshold;
  m.encounters = outcomes.size();
  std::size_t nonseptic = 0, unflagged = 0, unflagged_nonseptic = 0;
  std::vector<int> timeliness;
  for (const auto& o : outcomes) {
    m.septic += o.septic;
    nonseptic += !o.septic;
    m.flagged += o.flagged;
    if (o.septic && o.success) m.septic_success += 1;
    if (!o.septic && o.flagged) m.nonseptic_flagged += 1;
    if (!o.flagged) {
      unflagged += 1;
      unflagged_nonseptic += !o.septic;
    }
    if (o.timeliness_hours) timeliness.push_back(*o.timeliness_hours);
  }
  auto ratio = [](std::size_t a, std::size_t b) -> std::optional<double> {
    if (b == 0) return std::nullopt;
    return static_cast<double>(a) / static_cast<double>(b);
  };
  m.flag_rate = static_cast<double>(m.flagged) / static_cast<double>(m.encounters);
  m.sensitivity = ratio(m.septic_success, m.septic);
  m.specificity = ratio(nonseptic - m.nonseptic_flagged, nonseptic);
  m.ppv = ratio(m.septic_success, m.flagged);
  m.false_flag_fraction = ratio(m.nonseptic_flagged, m.flagged);
  m.conventional_fpr = ratio(m.nonseptic_flagged, nonseptic);
  m.npv = ratio(unflagged_nonseptic, unflagged);
  if (m.sensitivity) {
    const double ppv = m.ppv.value_or(0.0);
    const double sens = *m.sensitivity;
    m.f1 = ppv + sens > 0.0 ? 2.0 * ppv * sens / (ppv + sens) : 0.0;
  }
  if (!timeliness.empty()) {
    std::sort(timeliness.begin(), timeliness.end());
    m.median_timeliness = timeliness[(timeliness.size() - 1) / 2];
  }
  return m;
}

std::vector<double> default_thresholds() {
  std::vector<double> t;
  for (int i = 1; i <= 9; ++i) t.push_back(i / 10.0);
  return t;
}

SweepResult threshold_sweep(const std::vector<PredictionSeries>& predictions, const std::vector<double>& thresholds,
                            const UtilityParams& params, int success_window) {
  if (thresholds.empty()) throw ValidationError("threshold sweep needs at least one threshold");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0 && thresholds[i] < 1.0)) throw ValidationError("thresholds must lie in (0, 1)");
    if (i > 0 && !(thresholds[i] > thresholds[i - 1])) throw ValidationError("thresholds must be strictly increasing");
  }
  std::vector<std::vector<std::uint8_t>> labels;
  for (const auto& p : predictions) labels.push_back(p.labels);
  SweepResult out;
  std::optional<double> best;
  for (double th : thresholds) {
    std::vector<EncounterOutcome> outcomes;
    std::vector<std::vector<std::uint8_t>> flags;
    for (const auto& p : predictions) {
      outcomes.push_back(encounter_outcome(p, th, success_window));
      flags.push_back(p.flags(th));
    }
    auto panel = metrics_panel(outcomes, th);
    try {
      panel.normalized_utility = normalized_utility(labels, flags, params);
    } catch (const ValidationError&) {
      throw;
    } catch (const InvariantError&) {
      throw;
    } catch (const Error&) {
      panel.normalized_utility.reset();
    }
    if (panel.normalized_utility && (!best || *panel.normalized_utility > *best)) {
      best = panel.normalized_utility;
      out.best_index = out.panels.size();
    }
    out.panels.push_back(std::move(panel));
  }
  return out;
}

}  // namespace sepsis
