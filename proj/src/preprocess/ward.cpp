#include <algorithm>
#include <cmath>
#include <numeric>

#include "sepsis/common.hpp"
#include "sepsis/preprocess.hpp"

namespace sepsis {

ClusterPruneResult ward_cluster_prune(const CorrelationMatrix& corr, double cutoff,
                                      const std::map<std::string, double>& missing_fraction) {
  const std::size_t n = corr.size();
  if (n == 0) throw ValidationError("ward_cluster_prune needs at least one feature");
  if (corr.values.size() != n * n) throw ValidationError("malformed correlation matrix");

  // Work in name order so ties resolve the same way for any input order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return corr.names[a] < corr.names[b]; });

  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const std::size_t a = order[i], b = order[j];
      const double rho = corr.is_defined(a, b) ? corr.at(a, b) : 0.0;
      dist[i * n + j] = 1.0 - std::abs(rho);
    }
  }

  std::vector<std::vector<std::string>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {corr.names[order[i]]};
  std::vector<bool> active(n, true);

  ClusterPruneResult out;
  out.cutoff = cutoff;
  for (std::size_t remaining = n; remaining > 1; --remaining) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (active[j] && dist[i * n + j] < best) {
          best = dist[i * n + j];
          bi = i;
          bj = j;
        }
      }
    }
    if (!(best < cutoff)) break;

    // Lance-Williams update for Ward on squared distances; heights stay in
    // distance units.
    const double ni = static_cast<double>(members[bi].size());
    const double nj = static_cast<double>(members[bj].size());
    const double dij2 = best * best;
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      const double nk = static_cast<double>(members[k].size());
      const double dik = dist[bi * n + k], djk = dist[bj * n + k];
      const double d2 = ((ni + nk) * dik * dik + (nj + nk) * djk * djk - nk * dij2) / (ni + nj + nk);
      const double d = std::sqrt(std::max(d2, 0.0));
      dist[bi * n + k] = dist[k * n + bi] = d;
    }
    out.merges.push_back({members[bi], members[bj], best});
    members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
    std::sort(members[bi].begin(), members[bi].end());
    members[bj].clear();
    active[bj] = false;
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (active[i]) out.clusters.push_back(members[i]);
  }
  std::sort(out.clusters.begin(), out.clusters.end());
  auto missing_of = [&](const std::string& name) {
    auto it = missing_fraction.find(name);
    return it == missing_fraction.end() ? 1.0 : it->second;
  };
  for (const auto& c : out.clusters) {
    const auto rep = std::min_element(c.begin(), c.end(), [&](const std::string& a, const std::string& b) {
      const double ma = missing_of(a), mb = missing_of(b);
      return ma != mb ? ma < mb : a < b;
    });
    out.representatives.push_back(*rep);
  }
  return out;
}

}  // namespace sepsis
