#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP implementation used by
// the library and a plain serial reference kept for tests and benchmarks.
// Both variants perform the same floating-point operations in the same order
// per output element, so their results are bit-identical and independent of
// the thread count.

#include <cstdint>
#include <span>
#include <vector>

namespace sepsis::kernels {

// ---- pairwise correlation -------------------------------------------------

struct PairStats {
  double rho = 0.0;
  std::size_t support = 0;
  bool defined = false;
};

// columns[f] holds the pooled values of feature f (NaN = missing), all of
// equal length. Returns the upper triangle (i < j) in row-major pair order.
std::vector<PairStats> pairwise_correlation_parallel(const std::vector<std::vector<double>>& columns);
std::vector<PairStats> pairwise_correlation_serial(const std::vector<std::vector<double>>& columns);
PairStats pearson(std::span<const double> x, std::span<const double> y);

// ---- gradient histograms ------------------------------------------------------

struct GradPair {
  double g = 0.0;
  double h = 0.0;
  double count = 0.0;
};

// bins[f][row] is the bin of row in feature f; offsets[f] is the first slot of
// feature f in the flat histogram. Accumulates (g, h, 1) of every row in
// `rows` into hist, per feature in row order.
void build_histograms_parallel(const std::vector<std::vector<std::uint16_t>>& bins,
                               const std::vector<std::size_t>& offsets, std::span<const std::uint32_t> rows,
                               std::span<const double> grad, std::span<const double> hess,
                               std::span<GradPair> hist);
void build_histograms_serial(const std::vector<std::vector<std::uint16_t>>& bins,
                             const std::vector<std::size_t>& offsets, std::span<const std::uint32_t> rows,
                             std::span<const double> grad, std::span<const double> hess,
                             std::span<GradPair> hist);

}  // namespace sepsis::kernels
