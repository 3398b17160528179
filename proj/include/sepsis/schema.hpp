#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sepsis {

enum class Role { demographic, vital, lab, derived, mask, label, time, id };

std::string_view to_string(Role role);
Role role_from_string(std::string_view name);

// Closed plausibility interval.
struct Interval {
  double lo;
  double hi;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

struct ColumnSpec {
  std::string name;
  Role role = Role::derived;
  std::string unit;
  std::optional<Interval> range;
  // Clinical score input this column feeds ("hr", "sbp", ...); empty if none.
  std::string score_var;
  // Generator hints for the synthetic cohort. Reconstructed values, not
  // measured statistics.
  std::optional<double> typical_mean;
  std::optional<double> typical_sd;
  // Optional coupling: generate this analyte from another analyte's path.
  std::string synth_link;

  // "HR" for "min_HR"/"max_HR"; the name itself otherwise.
  std::string analyte() const;
  bool is_min_variant() const { return name.rfind("min_", 0) == 0; }
  bool is_max_variant() const { return name.rfind("max_", 0) == 0; }
};

// Ordered column list with role bookkeeping. Structural columns (id, time,
// label) are not stored as value columns in a cohort; every other column is,
// in schema order.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  // Throws SchemaError when an invariant fails.
  explicit FeatureSchema(std::vector<ColumnSpec> columns);

  static FeatureSchema parse(const std::string& text);
  static FeatureSchema load(const std::filesystem::path& path);
  static std::filesystem::path default_path();
  static FeatureSchema load_default();

  const std::vector<ColumnSpec>& columns() const { return columns_; }
  const ColumnSpec& id_column() const { return columns_[id_]; }
  const ColumnSpec& label_column() const { return columns_[label_]; }
  const ColumnSpec* time_column() const { return time_ ? &columns_[*time_] : nullptr; }

  // Value columns (everything except id/time/label), in schema order.
  std::size_t value_count() const { return value_columns_.size(); }
  const ColumnSpec& value_column(std::size_t i) const { return columns_[value_columns_[i]]; }
  std::optional<std::size_t> value_index(std::string_view name) const;
  std::size_t require_value_index(std::string_view name) const;
  std::vector<std::string> value_names() const;
  std::vector<std::string> names_with_role(Role role) const;

  // New schema with extra value columns appended after the existing ones.
  FeatureSchema with_appended(const std::vector<ColumnSpec>& extra) const;

  std::string to_text() const;

 private:
  std::vector<ColumnSpec> columns_;
  std::vector<std::size_t> value_columns_;
  std::size_t id_ = 0;
  std::size_t label_ = 0;
  std::optional<std::size_t> time_;
};

}  // namespace sepsis
