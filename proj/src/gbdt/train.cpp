#include <algorithm>
#include <cmath>
#include <limits>

#include "sepsis/gbdt.hpp"
#include "sepsis/kernels.hpp"

namespace sepsis::gbdt {
namespace {

using kernels::GradPair;

GradPair operator+(GradPair a, const GradPair& b) { return {a.g + b.g, a.h + b.h, a.count + b.count}; }
GradPair operator-(GradPair a, const GradPair& b) { return {a.g - b.g, a.h - b.h, a.count - b.count}; }

struct SplitCandidate {
  double gain = 0.0;
  std::size_t feature = 0;
  std::uint16_t bin = 0;
  bool default_left = true;
  GradPair left;
  GradPair right;
  bool valid = false;
};

struct NodeWork {
  std::size_t node = 0;
  int depth = 0;
  std::vector<std::uint32_t> rows;
  std::vector<GradPair> hist;
  GradPair sum;
};

class TreeGrower {
 public:
  TreeGrower(const BinnedMatrix& binned, const TrainParams& params, std::span<const double> grad,
             std::span<const double> hess)
      : binned_(binned), params_(params), grad_(grad), hess_(hess) {
    offsets_.resize(binned.features());
    std::size_t off = 0;
    for (std::size_t f = 0; f < binned.features(); ++f) {
      offsets_[f] = off;
      off += binned.layout.total_bins(f);
    }
    slots_ = off;
  }

  Tree grow(std::vector<std::uint32_t> rows, double eta) {
    Tree tree;
    NodeWork root;
    root.rows = std::move(rows);
    root.hist = build(root.rows);
    for (auto r : root.rows) root.sum = root.sum + GradPair{grad_[r], hess_[r], 1.0};
    tree.nodes.push_back({});
    tree.nodes[0].cover = static_cast<double>(root.rows.size());

    std::vector<NodeWork> level;
    level.push_back(std::move(root));
    while (!level.empty()) {
      std::vector<NodeWork> next;
      for (auto& w : level) {
        SplitCandidate best;
        if (w.depth < params_.max_depth && w.rows.size() >= 2) best = find_split(w.hist);
        if (!best.valid) {
          tree.nodes[w.node].value = leaf_value(w.sum, eta);
          continue;
        }
        const auto li = tree.nodes.size();
        tree.nodes.resize(li + 2);
        auto& node = tree.nodes[w.node];
        node.feature = static_cast<std::int32_t>(best.feature);
        node.bin = best.bin;
        const auto& edges = binned_.layout.edges[best.feature];
        node.threshold = best.bin < edges.size() ? edges[best.bin] : std::numeric_limits<double>::infinity();
        node.default_left = best.default_left;
        node.left = static_cast<std::int32_t>(li);
        node.right = static_cast<std::int32_t>(li + 1);
        node.gain = best.gain;

        NodeWork l, r;
        l.node = li;
        r.node = li + 1;
        l.depth = r.depth = w.depth + 1;
        const auto& fb = binned_.bins[best.feature];
        const auto miss = binned_.layout.missing_bin(best.feature);
        for (auto row : w.rows) {
          const auto b = fb[row];
          const bool go_left = b == miss ? best.default_left : b <= best.bin;
          (go_left ? l.rows : r.rows).push_back(row);
        }
        l.sum = best.left;
        r.sum = best.right;
        NodeWork& small = l.rows.size() <= r.rows.size() ? l : r;
        NodeWork& large = l.rows.size() <= r.rows.size() ? r : l;
        small.hist = build(small.rows);
        large.hist.resize(slots_);
        for (std::size_t s = 0; s < slots_; ++s) large.hist[s] = w.hist[s] - small.hist[s];
        w.hist.clear();
        w.hist.shrink_to_fit();
        w.rows.clear();
        w.rows.shrink_to_fit();
        tree.nodes[li].cover = static_cast<double>(l.rows.size());
        tree.nodes[li + 1].cover = static_cast<double>(r.rows.size());
        next.push_back(std::move(l));
        next.push_back(std::move(r));
      }
      level = std::move(next);
    }
    return tree;
  }

 private:
  std::vector<GradPair> build(const std::vector<std::uint32_t>& rows) const {
    std::vector<GradPair> hist(slots_);
    kernels::build_histograms_parallel(binned_.bins, offsets_, rows, grad_, hess_, hist);
    return hist;
  }

  double leaf_value(const GradPair& s, double eta) const { return -s.g / (s.h + params_.l2_lambda) * eta; }

  double score(const GradPair& s) const { return s.g * s.g / (s.h + params_.l2_lambda); }

  bool admissible(const GradPair& l, const GradPair& r) const {
    return l.count >= 1.0 && r.count >= 1.0 && l.h >= params_.min_child_weight && r.h >= params_.min_child_weight;
  }

  SplitCandidate best_for_feature(const std::vector<GradPair>& hist, std::size_t f) const {
    SplitCandidate best;
    const std::size_t nv = binned_.layout.value_bins[f];
    if (nv == 0) return best;
    const GradPair* h = hist.data() + offsets_[f];
    GradPair values;
    for (std::size_t b = 0; b < nv; ++b) values = values + h[b];
    const GradPair miss = h[nv];
    const double parent = score(values + miss);
    GradPair left;
    for (std::size_t t = 0; t < nv; ++t) {
      left = left + h[t];
      const GradPair right_values = values - left;
      // Missing rows sent right.
      const GradPair l1 = left, r1 = right_values + miss;
      const bool ok1 = (t + 1 < nv || miss.count > 0) && admissible(l1, r1);
      const double g1 = ok1 ? 0.5 * (score(l1) + score(r1) - parent) : -std::numeric_limits<double>::infinity();
      // Missing rows sent left.
      const GradPair l2 = left + miss, r2 = right_values;
      const bool ok2 = t + 1 < nv && admissible(l2, r2);
      const double g2 = ok2 ? 0.5 * (score(l2) + score(r2) - parent) : -std::numeric_limits<double>::infinity();
      if (!ok1 && !ok2) continue;
      bool default_left;
      if (g2 > g1) {
        default_left = true;
      } else if (g1 > g2) {
        default_left = false;
      } else {
        default_left = left.h >= right_values.h;
      }
      const double gain = default_left ? g2 : g1;
      if (!best.valid || gain > best.gain) {
        best.valid = true;
        best.gain = gain;
        best.feature = f;
        best.bin = static_cast<std::uint16_t>(t);
        best.default_left = default_left;
        best.left = default_left ? l2 : l1;
        best.right = default_left ? r2 : r1;
      }
    }
    return best;
  }

  SplitCandidate find_split(const std::vector<GradPair>& hist) const {
    const auto nf = static_cast<std::ptrdiff_t>(binned_.features());
    std::vector<SplitCandidate> per(static_cast<std::size_t>(nf));
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t f = 0; f < nf; ++f) per[f] = best_for_feature(hist, static_cast<std::size_t>(f));
    SplitCandidate best;
    for (const auto& c : per) {
      if (c.valid && c.gain > 0.0 && (!best.valid || c.gain > best.gain)) best = c;
    }
    return best;
  }

  const BinnedMatrix& binned_;
  const TrainParams& params_;
  std::span<const double> grad_;
  std::span<const double> hess_;
  std::vector<std::size_t> offsets_;
  std::size_t slots_ = 0;
};

std::size_t binned_leaf(const Tree& tree, const BinnedMatrix& binned, std::size_t row) {
  std::size_t i = 0;
  while (!tree.nodes[i].is_leaf()) {
    const auto& n = tree.nodes[i];
    const auto f = static_cast<std::size_t>(n.feature);
    const auto b = binned.bins[f][row];
    const bool left = b == binned.layout.missing_bin(f) ? n.default_left : b <= n.bin;
    i = static_cast<std::size_t>(left ? n.left : n.right);
  }
  return i;
}

void add_tree(const Tree& tree, const BinnedMatrix& binned, std::vector<double>& margins) {
  const auto n = static_cast<std::ptrdiff_t>(margins.size());
#pragma omp parallel for schedule(static, 1024)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    margins[r] += tree.nodes[binned_leaf(tree, binned, static_cast<std::size_t>(r))].value;
  }
}

double margin_loss(std::span<const std::uint8_t> labels, const std::vector<double>& margins, double pos_weight) {
  std::vector<double> p(margins.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = sigmoid(margins[i]);
  return log_loss(labels, p, pos_weight);
}

void check_labels(std::span<const std::uint8_t> labels, std::size_t rows) {
  if (labels.size() != rows) throw ValidationError("labels and rows differ in length");
  for (auto y : labels) {
    if (y > 1) throw ValidationError("labels must be 0 or 1");
  }
}

}  // namespace

TrainResult train(const BinnedMatrix& binned, std::span<const std::uint8_t> labels, const TrainParams& params,
                  const std::vector<std::string>& feature_names, std::optional<ValidationSet> validation) {
  params.validate();
  const std::size_t n = binned.rows;
  if (n == 0) throw ValidationError("cannot train on zero rows");
  check_labels(labels, n);
  if (feature_names.size() != binned.features()) throw ValidationError("feature names do not match the matrix");
  if (validation) {
    if (!validation->binned || validation->binned->features() != binned.features()) {
      throw ValidationError("validation matrix does not match the training layout");
    }
    check_labels(validation->labels, validation->binned->rows);
  }

  TrainResult result;
  auto& model = result.model;
  auto& trace = result.trace;
  model.feature_names = feature_names;
  model.bins = binned.layout;
  model.params = params;

  double wpos = 0.0, wall = 0.0;
  std::size_t positives = 0;
  for (auto y : labels) {
    const double w = y ? params.pos_weight : 1.0;
    wpos += y ? w : 0.0;
    wall += w;
    positives += y;
  }
  const double prevalence = std::clamp(wpos / wall, 1e-15, 1.0 - 1e-15);
  model.base_score = std::log(prevalence / (1.0 - prevalence));

  std::vector<double> margins(n, model.base_score);
  std::vector<double> val_margins(validation ? validation->binned->rows : 0, model.base_score);
  trace.train.push_back(margin_loss(labels, margins, params.pos_weight));
  if (validation) trace.validation.push_back(margin_loss(validation->labels, val_margins, params.pos_weight));

  if (positives == 0 || positives == n) {
    trace.warnings.push_back("single-class labels: model holds the base score only");
    return result;
  }
  if (params.early_stopping_rounds && !validation) {
    trace.warnings.push_back("early stopping requested without validation data; ignored");
  }

  std::vector<double> grad(n), hess(n);
  TreeGrower grower(binned, params, grad, hess);
  double best_val = validation ? trace.validation.front() : 0.0;
  std::size_t best_index = 0;
  for (int m = 0; m < params.rounds; ++m) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto gh = logloss_grad_hess(sigmoid(margins[i]), labels[i]);
      const double w = labels[i] ? params.pos_weight : 1.0;
      grad[i] = w * gh.g;
      hess[i] = w * gh.h;
    }
    std::vector<std::uint32_t> rows;
    rows.reserve(n);
    if (params.subsample_rows < 1.0) {
      auto rng = make_rng(params.seed, "subsample", static_cast<std::uint64_t>(m));
      for (std::size_t i = 0; i < n; ++i) {
        if (uniform01(rng) < params.subsample_rows) rows.push_back(static_cast<std::uint32_t>(i));
      }
      if (rows.empty()) rows.push_back(0);
    } else {
      for (std::size_t i = 0; i < n; ++i) rows.push_back(static_cast<std::uint32_t>(i));
    }
    model.trees.push_back(grower.grow(std::move(rows), params.learning_rate(m)));
    add_tree(model.trees.back(), binned, margins);
    trace.train.push_back(margin_loss(labels, margins, params.pos_weight));
    if (validation) {
      add_tree(model.trees.back(), *validation->binned, val_margins);
      const double v = margin_loss(validation->labels, val_margins, params.pos_weight);
      trace.validation.push_back(v);
      if (params.early_stopping_rounds) {
        const std::size_t idx = static_cast<std::size_t>(m) + 1;
        if (v < best_val) {
          best_val = v;
          best_index = idx;
        } else if (idx - best_index >= static_cast<std::size_t>(*params.early_stopping_rounds)) {
          break;
        }
      }
    }
  }
  if (validation && params.early_stopping_rounds) {
    model.trees.resize(best_index);
    trace.best_round = best_index;
  }
  return result;
}

TrainResult fit(const ColumnMatrix& x, std::span<const std::uint8_t> labels, const TrainParams& params,
                const ColumnMatrix* validation_x, std::span<const std::uint8_t> validation_labels) {
  params.validate();
  const auto binned = quantile_bin(x, params.max_bins);
  if (!validation_x) return train(binned, labels, params, x.names);
  if (validation_x->names != x.names) throw SchemaError("validation columns differ from training columns");
  const auto vbinned = apply_bins(*validation_x, binned.layout);
  return train(binned, labels, params, x.names, ValidationSet{&vbinned, validation_labels});
}

}  // namespace sepsis::gbdt
