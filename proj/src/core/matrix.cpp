#include "sepsis/matrix.hpp"

#include <set>

#include "sepsis/common.hpp"

namespace sepsis {

std::optional<std::size_t> ColumnMatrix::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t ColumnMatrix::require_index(std::string_view name) const {
  if (auto i = index_of(name)) return *i;
  throw SchemaError("matrix has no column '" + std::string(name) + "'");
}

ColumnMatrix ColumnMatrix::select_columns(const std::vector<std::string>& wanted) const {
  ColumnMatrix out;
  out.names = wanted;
  out.columns.reserve(wanted.size());
  for (const auto& w : wanted) out.columns.push_back(columns[require_index(w)]);
  return out;
}

ColumnMatrix ColumnMatrix::select_rows(const std::vector<std::size_t>& rows) const {
  ColumnMatrix out;
  out.names = names;
  out.columns.resize(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    auto& dst = out.columns[c];
    dst.reserve(rows.size());
    for (auto r : rows) dst.push_back(columns[c][r]);
  }
  return out;
}

void ColumnMatrix::check() const {
  if (names.size() != columns.size()) throw ValidationError("matrix names and columns differ in count");
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) throw ValidationError("duplicate column name '" + n + "'");
  }
  for (const auto& c : columns) {
    if (c.size() != rows()) throw ValidationError("ragged matrix columns");
  }
}

}  // namespace sepsis
