#include "sepsis/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace sepsis::kernels {

PairStats pearson(std::span<const double> x, std::span<const double> y) {
  PairStats s;
  double sx = 0.0, sy = 0.0;
  const std::size_t n = std::min(x.size(), y.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(x[i]) || std::isnan(y[i])) continue;
    sx += x[i];
    sy += y[i];
    ++s.support;
  }
  if (s.support < 2) return s;
  const double mx = sx / static_cast<double>(s.support);
  const double my = sy / static_cast<double>(s.support);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(x[i]) || std::isnan(y[i])) continue;
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return s;
  s.rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  s.defined = true;
  return s;
}

namespace {

std::vector<std::pair<std::size_t, std::size_t>> upper_pairs(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  return pairs;
}

}  // namespace

std::vector<PairStats> pairwise_correlation_parallel(const std::vector<std::vector<double>>& columns) {
  const auto pairs = upper_pairs(columns.size());
  std::vector<PairStats> out(pairs.size());
  const auto n = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    out[k] = pearson(columns[pairs[k].first], columns[pairs[k].second]);
  }
  return out;
}

std::vector<PairStats> pairwise_correlation_serial(const std::vector<std::vector<double>>& columns) {
  const auto pairs = upper_pairs(columns.size());
  std::vector<PairStats> out(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    out[k] = pearson(columns[pairs[k].first], columns[pairs[k].second]);
  }
  return out;
}

namespace {

inline void histogram_one_feature(const std::vector<std::uint16_t>& fbins, GradPair* fhist,
                                  std::span<const std::uint32_t> rows, std::span<const double> grad,
                                  std::span<const double> hess) {
  for (const auto r : rows) {
    GradPair& slot = fhist[fbins[r]];
    slot.g += grad[r];
    slot.h += hess[r];
    slot.count += 1.0;
  }
}

}  // namespace

void build_histograms_parallel(const std::vector<std::vector<std::uint16_t>>& bins,
                               const std::vector<std::size_t>& offsets, std::span<const std::uint32_t> rows,
                               std::span<const double> grad, std::span<const double> hess,
                               std::span<GradPair> hist) {
  const auto nf = static_cast<std::ptrdiff_t>(bins.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t f = 0; f < nf; ++f) {
    histogram_one_feature(bins[f], hist.data() + offsets[f], rows, grad, hess);
  }
}

void build_histograms_serial(const std::vector<std::vector<std::uint16_t>>& bins,
                             const std::vector<std::size_t>& offsets, std::span<const std::uint32_t> rows,
                             std::span<const double> grad, std::span<const double> hess,
                             std::span<GradPair> hist) {
  for (std::size_t f = 0; f < bins.size(); ++f) {
    histogram_one_feature(bins[f], hist.data() + offsets[f], rows, grad, hess);
  }
}

}  // namespace sepsis::kernels
