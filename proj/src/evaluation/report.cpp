#include "json.hpp"
#include "sepsis/evaluation.hpp"

namespace sepsis {
namespace {

using Json = nlohmann::ordered_json;

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

std::string evaluation_report_json(const SweepResult& sweep, const UtilityParams& params,
                                   const std::vector<PredictionSeries>& predictions) {
  Json j;
  j["utility_params"] = {{"dt_early", params.dt_early},   {"dt_optimal", params.dt_optimal},
                         {"dt_late", params.dt_late},     {"max_u_tp", params.max_u_tp},
                         {"u_fp", params.u_fp},           {"min_u_fn", params.min_u_fn},
                         {"u_tn", params.u_tn}};
  std::size_t rows = 0, septic = 0;
  for (const auto& p : predictions) {
    rows += p.labels.size();
    septic += onset_of(p.labels).has_value();
  }
  j["cohort"] = {{"encounters", predictions.size()}, {"septic_encounters", septic}, {"rows", rows}};
  Json panels = Json::array();
  for (const auto& m : sweep.panels) {
    panels.push_back({{"threshold", m.threshold},
                      {"normalized_utility", opt(m.normalized_utility)},
                      {"f1", opt(m.f1)},
                      {"sensitivity", opt(m.sensitivity)},
                      {"specificity", opt(m.specificity)},
                      {"flag_rate", m.flag_rate},
                      {"false_flag_fraction", opt(m.false_flag_fraction)},
                      {"conventional_fpr", opt(m.conventional_fpr)},
                      {"ppv", opt(m.ppv)},
                      {"npv", opt(m.npv)},
                      {"median_timeliness", opt(m.median_timeliness)},
                      {"encounters", m.encounters},
                      {"septic", m.septic},
                      {"flagged", m.flagged},
                      {"septic_success", m.septic_success},
                      {"nonseptic_flagged", m.nonseptic_flagged}});
  }
  j["thresholds"] = std::move(panels);
  if (!sweep.panels.empty()) j["best_threshold"] = sweep.panels[sweep.best_index].threshold;
  return j.dump(2) + "\n";
}

}  // namespace sepsis
