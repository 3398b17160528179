#include <set>

#include "sepsis/features.hpp"

namespace sepsis {

const FeatureBlock& FeatureMatrix::block(std::string_view name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return b;
  }
  throw Error("feature matrix has no block '" + std::string(name) + "'");
}

std::vector<std::string> FeatureMatrix::block_names(std::string_view name) const {
  const auto& b = block(name);
  return {data.names.begin() + static_cast<std::ptrdiff_t>(b.begin),
          data.names.begin() + static_cast<std::ptrdiff_t>(b.begin + b.count)};
}

FeatureMatrix FeatureMatrix::select_rows(const std::vector<std::size_t>& rows) const {
  FeatureMatrix out;
  out.data = data.select_rows(rows);
  out.blocks = blocks;
  out.encounter_ids.reserve(rows.size());
  for (auto r : rows) {
    out.encounter_ids.push_back(encounter_ids[r]);
    out.hours.push_back(hours[r]);
    out.labels.push_back(labels[r]);
    out.shifted_labels.push_back(shifted_labels[r]);
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_columns(const std::vector<std::string>& names) const {
  FeatureMatrix out;
  out.data = data.select_columns(names);
  const std::set<std::string> keep(names.begin(), names.end());
  std::size_t begin = 0;
  for (const auto& b : blocks) {
    std::size_t count = 0;
    for (std::size_t c = b.begin; c < b.begin + b.count; ++c) count += keep.count(data.names[c]);
    out.blocks.push_back({b.name, begin, count});
    begin += count;
  }
  // Block offsets assume the kept names follow block order.
  std::vector<std::string> ordered;
  for (const auto& b : blocks) {
    for (std::size_t c = b.begin; c < b.begin + b.count; ++c) {
      if (keep.count(data.names[c])) ordered.push_back(data.names[c]);
    }
  }
  if (ordered != names) throw ValidationError("select_columns: names must be a block-ordered subset");
  out.encounter_ids = encounter_ids;
  out.hours = hours;
  out.labels = labels;
  out.shifted_labels = shifted_labels;
  return out;
}

std::string Bookkeeping::identity_text() const {
  return std::to_string(original) + " + " + std::to_string(masks) + " + " + std::to_string(statistical_selected) +
         " + " + std::to_string(clinical) + " + " + std::to_string(demographic) + " = " + std::to_string(total);
}

AssembledFeatures assemble_feature_matrix(const CohortFrame& cohort, const AssemblySpec& spec,
                                          std::size_t statistical_candidates) {
  const std::vector<std::pair<std::string, const std::vector<std::string>*>> parts = {
      {"original", &spec.original},
      {"masks", &spec.masks},
      {"statistical", &spec.statistical},
      {"clinical", &spec.clinical},
      {"demographic", &spec.demographic}};

  AssembledFeatures out;
  auto& m = out.matrix;
  std::set<std::string> seen;
  std::vector<std::size_t> src;
  for (const auto& [block, names] : parts) {
    m.blocks.push_back({block, m.data.names.size(), names->size()});
    for (const auto& n : *names) {
      if (!seen.insert(n).second) throw ValidationError("duplicate feature column '" + n + "'");
      src.push_back(cohort.schema.require_value_index(n));
      m.data.names.push_back(n);
    }
  }
  const std::size_t rows = cohort.total_rows();
  m.data.columns.assign(src.size(), {});
  for (auto& c : m.data.columns) c.reserve(rows);
  m.encounter_ids.reserve(rows);
  m.hours.reserve(rows);
  for (const auto& e : cohort.encounters) {
    const auto shifted = shift_labels(e.labels, spec.label_horizon);
    for (std::size_t r = 0; r < e.rows(); ++r) {
      m.encounter_ids.push_back(e.id);
      m.hours.push_back(e.hour_index(r));
      m.labels.push_back(e.labels[r]);
      m.shifted_labels.push_back(shifted[r]);
    }
    for (std::size_t c = 0; c < src.size(); ++c) {
      const auto& col = e.columns[src[c]];
      m.data.columns[c].insert(m.data.columns[c].end(), col.begin(), col.end());
    }
  }
  const auto& mb = m.block("masks");
  for (std::size_t c = mb.begin; c < mb.begin + mb.count; ++c) {
    for (double v : m.data.columns[c]) {
      if (is_missing(v)) throw ValidationError("mask column '" + m.data.names[c] + "' has missing entries");
    }
  }

  auto& bk = out.bookkeeping;
  bk.original = spec.original.size();
  bk.masks = spec.masks.size();
  bk.statistical_candidates = statistical_candidates;
  bk.statistical_selected = spec.statistical.size();
  bk.clinical = spec.clinical.size();
  bk.demographic = spec.demographic.size();
  bk.total = m.data.cols();
  return out;
}

}  // namespace sepsis
