#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sepsis {

// Named dense columns of equal length; NaN marks a missing cell.
struct ColumnMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  std::size_t cols() const { return columns.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  // Throws SchemaError when the column is absent.
  std::size_t require_index(std::string_view name) const;
  const std::vector<double>& column(std::string_view name) const { return columns[require_index(name)]; }

  // Columns in the given order; throws SchemaError for an unknown name.
  ColumnMatrix select_columns(const std::vector<std::string>& wanted) const;
  // Rows at the given indices, in that order.
  ColumnMatrix select_rows(const std::vector<std::size_t>& rows) const;
  // Throws ValidationError on ragged columns or duplicate names.
  void check() const;
};

}  // namespace sepsis
