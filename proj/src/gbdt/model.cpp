#include <algorithm>
#include <cmath>

#include "sepsis/gbdt.hpp"

namespace sepsis::gbdt {
namespace {

template <typename Value>
std::size_t walk(const Tree& tree, Value&& value_of) {
  std::size_t i = 0;
  while (!tree.nodes[i].is_leaf()) {
    const auto& n = tree.nodes[i];
    const double x = value_of(static_cast<std::size_t>(n.feature));
    const bool left = is_missing(x) ? n.default_left : x <= n.threshold;
    i = static_cast<std::size_t>(left ? n.left : n.right);
  }
  return i;
}

}  // namespace

std::size_t Tree::leaf_for(std::span<const double> row) const {
  return walk(*this, [&](std::size_t f) { return row[f]; });
}

bool Tree::uses_feature(std::size_t f) const {
  return std::any_of(nodes.begin(), nodes.end(),
                     [&](const TreeNode& n) { return !n.is_leaf() && static_cast<std::size_t>(n.feature) == f; });
}

int Tree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

void TrainParams::validate() const {
  if (rounds < 0) throw ConfigError("rounds must be >= 0");
  if (!(initial_learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (!(lr_decay_factor > 0.0)) throw ConfigError("lr decay factor must be > 0");
  if (lr_decay_every < 1) throw ConfigError("lr decay period must be >= 1");
  if (max_depth < 0 || max_depth > 30) throw ConfigError("max_depth must be in [0, 30]");
  if (max_bins < 2 || max_bins > 65534) throw ConfigError("max_bins must be in [2, 65534]");
  if (min_child_weight < 0.0) throw ConfigError("min_child_weight must be >= 0");
  if (l2_lambda < 0.0) throw ConfigError("l2_lambda must be >= 0");
  if (!(subsample_rows > 0.0 && subsample_rows <= 1.0)) throw ConfigError("subsample_rows must be in (0, 1]");
  if (early_stopping_rounds && *early_stopping_rounds < 1) throw ConfigError("early_stopping_rounds must be >= 1");
  if (!(pos_weight > 0.0)) throw ConfigError("pos_weight must be > 0");
}

double TrainParams::learning_rate(int round) const {
  return initial_learning_rate * std::pow(lr_decay_factor, static_cast<double>(round / lr_decay_every));
}

double ModelArtifact::margin(std::span<const double> row) const {
  double m = base_score;
  for (const auto& t : trees) m += t.nodes[t.leaf_for(row)].value;
  return m;
}

void ModelArtifact::check() const {
  if (bins.features() != feature_names.size()) throw InvariantError("bin layout does not match the feature list");
  if (!std::isfinite(base_score)) throw InvariantError("base score is not finite");
  for (const auto& t : trees) {
    if (t.nodes.empty()) throw InvariantError("empty tree");
    for (const auto& n : t.nodes) {
      if (n.is_leaf()) {
        if (!std::isfinite(n.value)) throw InvariantError("leaf value is not finite");
        continue;
      }
      if (static_cast<std::size_t>(n.feature) >= feature_names.size()) {
        throw InvariantError("tree node references unknown feature " + std::to_string(n.feature));
      }
      const auto sz = static_cast<std::int32_t>(t.nodes.size());
      if (n.left <= 0 || n.right <= 0 || n.left >= sz || n.right >= sz) throw InvariantError("bad child index");
    }
  }
}

double sigmoid(double margin) { return 1.0 / (1.0 + std::exp(-margin)); }

GradHess logloss_grad_hess(double p, int y) {
  p = std::clamp(p, 1e-15, 1.0 - 1e-15);
  return {p - static_cast<double>(y), p * (1.0 - p)};
}

double log_loss(std::span<const std::uint8_t> labels, std::span<const double> probs, double pos_weight) {
  if (labels.size() != probs.size()) throw ValidationError("log_loss: length mismatch");
  if (labels.empty()) return 0.0;
  double total = 0.0, weight = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = std::clamp(probs[i], 1e-15, 1.0 - 1e-15);
    const double w = labels[i] ? pos_weight : 1.0;
    total += w * (labels[i] ? -std::log(p) : -std::log1p(-p));
    weight += w;
  }
  return total / weight;
}

std::vector<std::size_t> feature_layout(const ModelArtifact& model, const ColumnMatrix& matrix) {
  std::vector<std::size_t> idx;
  idx.reserve(model.features());
  for (const auto& name : model.feature_names) {
    auto i = matrix.index_of(name);
    if (!i) throw SchemaError("model feature '" + name + "' is missing from the input");
    idx.push_back(*i);
  }
  return idx;
}

std::vector<double> predict_margin(const ModelArtifact& model, const ColumnMatrix& matrix, Execution exec) {
  const auto idx = feature_layout(model, matrix);
  const auto rows = static_cast<std::ptrdiff_t>(matrix.rows());
  std::vector<double> out(static_cast<std::size_t>(rows));
  auto one = [&](std::ptrdiff_t r) {
    auto value_of = [&](std::size_t f) { return matrix.columns[idx[f]][static_cast<std::size_t>(r)]; };
    double m = model.base_score;
    for (const auto& t : model.trees) m += t.nodes[walk(t, value_of)].value;
    out[static_cast<std::size_t>(r)] = m;
  };
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static, 256)
    for (std::ptrdiff_t r = 0; r < rows; ++r) one(r);
  } else {
    for (std::ptrdiff_t r = 0; r < rows; ++r) one(r);
  }
  return out;
}

std::vector<double> predict_proba(const ModelArtifact& model, const ColumnMatrix& matrix, Execution exec) {
  auto m = predict_margin(model, matrix, exec);
  for (double& v : m) v = sigmoid(v);
  return m;
}

}  // namespace sepsis::gbdt
