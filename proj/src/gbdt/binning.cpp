#include <algorithm>

#include "sepsis/gbdt.hpp"

namespace sepsis::gbdt {

std::uint16_t BinLayout::bin_of(std::size_t f, double x) const {
  if (is_missing(x) || value_bins[f] == 0) return missing_bin(f);
  const auto& e = edges[f];
  return static_cast<std::uint16_t>(std::lower_bound(e.begin(), e.end(), x) - e.begin());
}

std::vector<double> quantile_edges(std::span<const double> values, int max_bins) {
  std::vector<double> v;
  v.reserve(values.size());
  for (double x : values) {
    if (!is_missing(x)) v.push_back(x);
  }
  std::vector<double> edges;
  if (v.empty()) return edges;
  std::sort(v.begin(), v.end());
  std::vector<double> distinct = v;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() <= static_cast<std::size_t>(max_bins)) {
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
      edges.push_back(distinct[i] + (distinct[i + 1] - distinct[i]) / 2.0);
    }
    return edges;
  }
  const double last = static_cast<double>(v.size() - 1);
  for (int i = 1; i < max_bins; ++i) {
    const double pos = last * static_cast<double>(i) / static_cast<double>(max_bins);
    const auto lo = static_cast<std::size_t>(pos);
    const auto hi = std::min(lo + 1, v.size() - 1);
    const double q = v[lo] + (v[hi] - v[lo]) * (pos - static_cast<double>(lo));
    if (edges.empty() || q > edges.back()) edges.push_back(q);
  }
  return edges;
}

namespace {

std::vector<std::uint16_t> bin_column(const BinLayout& layout, std::size_t f, const std::vector<double>& col) {
  std::vector<std::uint16_t> out(col.size());
  for (std::size_t r = 0; r < col.size(); ++r) out[r] = layout.bin_of(f, col[r]);
  return out;
}

}  // namespace

BinnedMatrix quantile_bin(const ColumnMatrix& matrix, int max_bins) {
  if (max_bins < 2 || max_bins > 65534) throw ValidationError("max_bins must be in [2, 65534]");
  if (matrix.rows() == 0) throw ValidationError("cannot bin a matrix with zero rows");
  matrix.check();
  BinnedMatrix out;
  out.rows = matrix.rows();
  const std::size_t nf = matrix.cols();
  out.layout.edges.resize(nf);
  out.layout.value_bins.resize(nf);
  out.bins.resize(nf);
  const auto n = static_cast<std::ptrdiff_t>(nf);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t f = 0; f < n; ++f) {
    const auto& col = matrix.columns[f];
    out.layout.edges[f] = quantile_edges(col, max_bins);
    const bool observed = std::any_of(col.begin(), col.end(), [](double x) { return !is_missing(x); });
    out.layout.value_bins[f] = observed ? static_cast<std::uint16_t>(out.layout.edges[f].size() + 1) : 0;
    out.bins[f] = bin_column(out.layout, static_cast<std::size_t>(f), col);
  }
  return out;
}

BinnedMatrix apply_bins(const ColumnMatrix& matrix, const BinLayout& layout) {
  if (matrix.cols() != layout.features()) throw SchemaError("matrix width does not match the bin layout");
  BinnedMatrix out;
  out.rows = matrix.rows();
  out.layout = layout;
  out.bins.resize(matrix.cols());
  const auto n = static_cast<std::ptrdiff_t>(matrix.cols());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t f = 0; f < n; ++f) out.bins[f] = bin_column(layout, static_cast<std::size_t>(f), matrix.columns[f]);
  return out;
}

}  // namespace sepsis::gbdt
