#include <algorithm>

#include "sepsis/gbdt.hpp"

namespace sepsis::gbdt {
namespace {

struct PathElement {
  int feature = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double pweight = 0.0;
};

void extend_path(PathElement* path, int depth, double zero_fraction, double one_fraction, int feature) {
  path[depth] = {feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
  for (int i = depth - 1; i >= 0; --i) {
    path[i + 1].pweight += one_fraction * path[i].pweight * (i + 1) / static_cast<double>(depth + 1);
    path[i].pweight = zero_fraction * path[i].pweight * (depth - i) / static_cast<double>(depth + 1);
  }
}

void unwind_path(PathElement* path, int depth, int index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next_one = path[depth].pweight;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0.0) {
      const double tmp = path[i].pweight;
      path[i].pweight = next_one * (depth + 1) / (static_cast<double>(i + 1) * one);
      next_one = tmp - path[i].pweight * zero * (depth - i) / static_cast<double>(depth + 1);
    } else {
      path[i].pweight = path[i].pweight * (depth + 1) / (zero * (depth - i));
    }
  }
  for (int i = index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

double unwound_sum(const PathElement* path, int depth, int index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next_one = path[depth].pweight;
  double total = 0.0;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0.0) {
      const double tmp = next_one * (depth + 1) / (static_cast<double>(i + 1) * one);
      total += tmp;
      next_one = path[i].pweight - tmp * zero * (depth - i) / static_cast<double>(depth + 1);
    } else {
      total += path[i].pweight / zero / ((depth - i) / static_cast<double>(depth + 1));
    }
  }
  return total;
}

class TreeShap {
 public:
  TreeShap(const Tree& tree, std::span<const double> row, std::span<double> phi)
      : tree_(tree), row_(row), phi_(phi) {
    const int d = tree.depth() + 2;
    buffer_.resize(static_cast<std::size_t>(d * (d + 1) / 2 + d));
  }

  void run() { recurse(0, 0, buffer_.data(), 1.0, 1.0, -1); }

 private:
  void recurse(std::size_t node, int depth, PathElement* parent_path, double zero_fraction, double one_fraction,
               int feature) {
    PathElement* path = parent_path + depth + 1;
    std::copy(parent_path, parent_path + depth + 1, path);
    extend_path(path, depth, zero_fraction, one_fraction, feature);
    const auto& n = tree_.nodes[node];
    if (n.is_leaf()) {
      for (int i = 1; i <= depth; ++i) {
        const double w = unwound_sum(path, depth, i);
        phi_[static_cast<std::size_t>(path[i].feature)] += w * (path[i].one_fraction - path[i].zero_fraction) * n.value;
      }
      return;
    }
    const double x = row_[static_cast<std::size_t>(n.feature)];
    const bool left = is_missing(x) ? n.default_left : x <= n.threshold;
    const auto hot = static_cast<std::size_t>(left ? n.left : n.right);
    const auto cold = static_cast<std::size_t>(left ? n.right : n.left);
    const double hot_zero = tree_.nodes[hot].cover / n.cover;
    const double cold_zero = tree_.nodes[cold].cover / n.cover;
    double incoming_zero = 1.0, incoming_one = 1.0;
    int index = 0;
    for (; index <= depth; ++index) {
      if (path[index].feature == n.feature) break;
    }
    if (index != depth + 1) {
      incoming_zero = path[index].zero_fraction;
      incoming_one = path[index].one_fraction;
      unwind_path(path, depth, index);
      depth -= 1;
    }
    recurse(hot, depth + 1, path, hot_zero * incoming_zero, incoming_one, n.feature);
    recurse(cold, depth + 1, path, cold_zero * incoming_zero, 0.0, n.feature);
  }

  const Tree& tree_;
  std::span<const double> row_;
  std::span<double> phi_;
  std::vector<PathElement> buffer_;
};

double tree_expectation(const Tree& tree, std::size_t node) {
  const auto& n = tree.nodes[node];
  if (n.is_leaf()) return n.value;
  const auto l = static_cast<std::size_t>(n.left), r = static_cast<std::size_t>(n.right);
  return (tree.nodes[l].cover * tree_expectation(tree, l) + tree.nodes[r].cover * tree_expectation(tree, r)) /
         n.cover;
}

void require_cover(const ModelArtifact& model) {
  if (!model.has_cover) throw Error("model has no cover counts; tree Shapley values need them");
  for (const auto& t : model.trees) {
    for (const auto& n : t.nodes) {
      if (!n.is_leaf() && !(n.cover > 0.0)) throw Error("model has an internal node with zero cover");
    }
  }
}

}  // namespace

double expected_margin(const ModelArtifact& model) {
  require_cover(model);
  double e = model.base_score;
  for (const auto& t : model.trees) e += tree_expectation(t, 0);
  return e;
}

Attribution shap_attributions(const ModelArtifact& model, std::span<const double> row) {
  if (row.size() != model.features()) throw ValidationError("row width does not match the model");
  Attribution out;
  out.phi0 = expected_margin(model);
  out.phi.assign(model.features(), 0.0);
  for (const auto& t : model.trees) {
    if (t.nodes.size() > 1) TreeShap(t, row, out.phi).run();
  }
  return out;
}

std::vector<double> shap_batch(const ModelArtifact& model, const ColumnMatrix& matrix, Execution exec) {
  require_cover(model);
  const auto layout = feature_layout(model, matrix);
  const std::size_t nf = model.features();
  const auto rows = static_cast<std::ptrdiff_t>(matrix.rows());
  std::vector<double> out(static_cast<std::size_t>(rows) * nf, 0.0);
  auto one = [&](std::ptrdiff_t r) {
    std::vector<double> row(nf);
    for (std::size_t f = 0; f < nf; ++f) row[f] = matrix.columns[layout[f]][static_cast<std::size_t>(r)];
    std::span<double> phi(out.data() + static_cast<std::size_t>(r) * nf, nf);
    for (const auto& t : model.trees) {
      if (t.nodes.size() > 1) TreeShap(t, row, phi).run();
    }
  };
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t r = 0; r < rows; ++r) one(r);
  } else {
    for (std::ptrdiff_t r = 0; r < rows; ++r) one(r);
  }
  return out;
}

}  // namespace sepsis::gbdt
