#include <algorithm>
#include <cmath>
#include <numeric>

#include "sepsis/gbdt.hpp"

namespace sepsis::gbdt {
namespace {

double evaluate(Metric metric, std::span<const std::uint8_t> labels, const std::vector<double>& margins) {
  std::vector<double> p(margins.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = sigmoid(margins[i]);
  if (metric == Metric::auroc) return auroc(labels, p);
  return -log_loss(labels, p);
}

}  // namespace

Metric metric_from_string(std::string_view name) {
  if (name == "neg_log_loss") return Metric::neg_log_loss;
  if (name == "auroc") return Metric::auroc;
  throw ConfigError("unknown importance metric '" + std::string(name) + "'");
}

double auroc(std::span<const std::uint8_t> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw ValidationError("auroc: length mismatch");
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  double pos = 0.0, rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]]) {
        pos += 1.0;
        rank_sum += avg_rank;
      }
    }
    i = j + 1;
  }
  const double neg = static_cast<double>(labels.size()) - pos;
  if (pos == 0.0 || neg == 0.0) return 0.5;
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

Importance permutation_importance(const ModelArtifact& model, const ColumnMatrix& frame,
                                  std::span<const std::uint8_t> labels, Metric metric, int repeats,
                                  std::uint64_t seed, const std::vector<std::string>& features) {
  if (repeats < 1) throw ValidationError("permutation importance needs repeats >= 1");
  if (labels.size() != frame.rows()) throw ValidationError("frame and labels are not aligned");
  const auto layout = feature_layout(model, frame);
  const std::size_t n = frame.rows();
  const std::size_t nt = model.trees.size();

  // leaf[t * n + r]: output of tree t on row r.
  std::vector<double> leaf(nt * n);
  std::vector<double> margins(n);
  {
    const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static, 256)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
      std::vector<double> row(layout.size());
      for (std::size_t f = 0; f < layout.size(); ++f) row[f] = frame.columns[layout[f]][r];
      double m = model.base_score;
      for (std::size_t t = 0; t < nt; ++t) {
        const double v = model.trees[t].nodes[model.trees[t].leaf_for(row)].value;
        leaf[t * n + r] = v;
        m += v;
      }
      margins[r] = m;
    }
  }

  Importance out;
  out.baseline = evaluate(metric, labels, margins);
  const auto& names = features.empty() ? model.feature_names : features;
  for (const auto& name : names) {
    const auto it = std::find(model.feature_names.begin(), model.feature_names.end(), name);
    if (it == model.feature_names.end()) throw SchemaError("importance requested for unknown feature '" + name + "'");
    const auto f = static_cast<std::size_t>(it - model.feature_names.begin());
    std::vector<std::size_t> affected;
    for (std::size_t t = 0; t < nt; ++t) {
      if (model.trees[t].uses_feature(f)) affected.push_back(t);
    }
    out.names.push_back(name);
    if (affected.empty()) {
      out.mean.push_back(0.0);
      out.std.push_back(0.0);
      continue;
    }
    const auto& column = frame.columns[layout[f]];
    std::vector<double> scores;
    for (int rep = 0; rep < repeats; ++rep) {
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      auto rng = make_rng(seed, "permutation", (static_cast<std::uint64_t>(f) << 20) | static_cast<std::uint64_t>(rep));
      for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[uniform_index(rng, i)]);
      std::vector<double> permuted = margins;
      const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static, 256)
      for (std::ptrdiff_t r = 0; r < rows; ++r) {
        const double moved = column[perm[r]];
        auto value_of = [&](std::size_t g) { return g == f ? moved : frame.columns[layout[g]][r]; };
        double delta = 0.0;
        for (auto t : affected) {
          const auto& tree = model.trees[t];
          std::size_t i = 0;
          while (!tree.nodes[i].is_leaf()) {
            const auto& nd = tree.nodes[i];
            const double x = value_of(static_cast<std::size_t>(nd.feature));
            const bool left = is_missing(x) ? nd.default_left : x <= nd.threshold;
            i = static_cast<std::size_t>(left ? nd.left : nd.right);
          }
          delta += tree.nodes[i].value - leaf[t * n + r];
        }
        if (delta != 0.0) permuted[r] += delta;
      }
      scores.push_back(out.baseline - evaluate(metric, labels, permuted));
    }
    const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
    double var = 0.0;
    for (double s : scores) var += (s - mean) * (s - mean);
    out.mean.push_back(mean);
    out.std.push_back(std::sqrt(var / static_cast<double>(scores.size())));
  }
  return out;
}

}  // namespace sepsis::gbdt
