#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "sepsis/pipeline.hpp"

namespace sepsis {

ExplainReport explain_report(const gbdt::ModelArtifact& model, const ColumnMatrix& frame, std::size_t top_k) {
  ExplainReport rep;
  rep.rows = frame.rows();
  const std::size_t nf = model.features();
  if (top_k > nf) {
    rep.warnings.push_back("top_k " + std::to_string(top_k) + " exceeds the " + std::to_string(nf) +
                           " model features; clamped");
    top_k = nf;
  }
  std::vector<double> mean_abs(nf, 0.0);
  const bool has_splits = std::any_of(model.trees.begin(), model.trees.end(),
                                      [](const gbdt::Tree& t) { return t.nodes.size() > 1; });
  if (has_splits && rep.rows > 0) {
    const auto phi = gbdt::shap_batch(model, frame);
    for (std::size_t r = 0; r < rep.rows; ++r) {
      for (std::size_t f = 0; f < nf; ++f) mean_abs[f] += std::abs(phi[r * nf + f]);
    }
    for (auto& v : mean_abs) v /= static_cast<double>(rep.rows);
  }
  const double total = std::accumulate(mean_abs.begin(), mean_abs.end(), 0.0);
  rep.no_splits = !(total > 0.0);

  std::vector<std::size_t> order(nf);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return mean_abs[a] > mean_abs[b]; });
  for (std::size_t i = 0; i < nf; ++i) {
    const auto f = order[i];
    const double pct = rep.no_splits ? 0.0 : 100.0 * mean_abs[f] / total;
    if (i < top_k) {
      rep.top.push_back({model.feature_names[f], mean_abs[f], pct});
      rep.top_percent += pct;
    } else {
      rep.remaining_percent += pct;
      ++rep.remaining_features;
    }
  }
  return rep;
}

std::string explain_report_json(const ExplainReport& report) {
  nlohmann::ordered_json j;
  j["rows"] = report.rows;
  j["no_splits"] = report.no_splits;
  auto top = nlohmann::ordered_json::array();
  for (const auto& e : report.top) {
    top.push_back({{"feature", e.name}, {"mean_abs_attribution", e.mean_abs}, {"percent", e.percent}});
  }
  j["top"] = std::move(top);
  j["top_percent"] = report.top_percent;
  j["remaining_features"] = report.remaining_features;
  j["remaining_percent"] = report.remaining_percent;
  j["warnings"] = report.warnings;
  return j.dump(1) + "\n";
}

}  // namespace sepsis
