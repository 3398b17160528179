#include "sepsis/common.hpp"
#include "sepsis/kernels.hpp"
#include "sepsis/preprocess.hpp"

namespace sepsis {

CorrelationMatrix correlation_matrix(const CohortFrame& cohort, const std::vector<std::string>& features) {
  if (features.size() < 2) throw ValidationError("correlation needs at least two features");
  std::vector<std::size_t> idx;
  for (const auto& f : features) idx.push_back(cohort.schema.require_value_index(f));

  // Pool each feature across encounters in cohort order.
  const std::size_t total = cohort.total_rows();
  std::vector<std::vector<double>> pooled(features.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    pooled[k].reserve(total);
    for (const auto& e : cohort.encounters) {
      pooled[k].insert(pooled[k].end(), e.columns[idx[k]].begin(), e.columns[idx[k]].end());
    }
  }

  const auto pairs = kernels::pairwise_correlation_parallel(pooled);
  const std::size_t n = features.size();
  CorrelationMatrix m;
  m.names = features;
  m.values.assign(n * n, 0.0);
  m.support.assign(n * n, 0);
  m.defined.assign(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t observed = 0;
    for (double v : pooled[i]) observed += is_missing(v) ? 0 : 1;
    m.support[i * n + i] = observed;
    if (observed > 1) {
      m.values[i * n + i] = 1.0;
      m.defined[i * n + i] = 1;
    }
  }
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j, ++k) {
      const auto& p = pairs[k];
      for (auto [a, b] : {std::pair{i, j}, std::pair{j, i}}) {
        m.values[a * n + b] = p.defined ? p.rho : 0.0;
        m.support[a * n + b] = p.support;
        m.defined[a * n + b] = p.defined ? 1 : 0;
      }
    }
  }
  return m;
}

std::map<std::string, double> missing_fractions(const CohortFrame& cohort, const std::vector<std::string>& features) {
  std::map<std::string, double> out;
  const double total = static_cast<double>(cohort.total_rows());
  for (const auto& f : features) {
    const auto c = cohort.schema.require_value_index(f);
    std::size_t missing = 0;
    for (const auto& e : cohort.encounters) {
      for (double v : e.columns[c]) missing += is_missing(v) ? 1 : 0;
    }
    out[f] = total > 0 ? static_cast<double>(missing) / total : 1.0;
  }
  return out;
}

}  // namespace sepsis
