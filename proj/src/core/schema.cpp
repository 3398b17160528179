#include "sepsis/schema.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "sepsis/common.hpp"
#include "sepsis/text_config.hpp"

namespace sepsis {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::demographic: return "demographic";
    case Role::vital: return "vital";
    case Role::lab: return "lab";
    case Role::derived: return "derived";
    case Role::mask: return "mask";
    case Role::label: return "label";
    case Role::time: return "time";
    case Role::id: return "id";
  }
  return "unknown";
}

Role role_from_string(std::string_view name) {
  for (Role r : {Role::demographic, Role::vital, Role::lab, Role::derived, Role::mask, Role::label,
                 Role::time, Role::id}) {
    if (to_string(r) == name) return r;
  }
  throw SchemaError("unknown column role '" + std::string(name) + "'");
}

std::string ColumnSpec::analyte() const {
  if (is_min_variant() || is_max_variant()) return name.substr(4);
  return name;
}

FeatureSchema::FeatureSchema(std::vector<ColumnSpec> columns) : columns_(std::move(columns)) {
  std::set<std::string> seen;
  std::optional<std::size_t> id, label;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const auto& c = columns_[i];
    if (c.name.empty()) throw SchemaError("column " + std::to_string(i) + " has an empty name");
    if (!seen.insert(c.name).second) throw SchemaError("duplicate column name '" + c.name + "'");
    switch (c.role) {
      case Role::id:
        if (id) throw SchemaError("more than one id column ('" + c.name + "')");
        id = i;
        break;
      case Role::label:
        if (label) throw SchemaError("more than one label column ('" + c.name + "')");
        label = i;
        break;
      case Role::time:
        if (time_) throw SchemaError("more than one time column ('" + c.name + "')");
        time_ = i;
        break;
      case Role::vital:
      case Role::lab:
        if (c.unit.empty()) throw SchemaError("column '" + c.name + "' needs a unit");
        [[fallthrough]];
      default:
        value_columns_.push_back(i);
    }
    if (c.range && !(c.range->lo <= c.range->hi)) {
      throw SchemaError("column '" + c.name + "' has an empty range");
    }
  }
  if (!id) throw SchemaError("schema has no id column");
  if (!label) throw SchemaError("schema has no label column");
  id_ = *id;
  label_ = *label;
}

std::optional<std::size_t> FeatureSchema::value_index(std::string_view name) const {
  for (std::size_t i = 0; i < value_columns_.size(); ++i) {
    if (columns_[value_columns_[i]].name == name) return i;
  }
  return std::nullopt;
}

std::size_t FeatureSchema::require_value_index(std::string_view name) const {
  auto idx = value_index(name);
  if (!idx) throw SchemaError("column '" + std::string(name) + "' is not in the schema");
  return *idx;
}

std::vector<std::string> FeatureSchema::value_names() const {
  std::vector<std::string> out;
  for (auto i : value_columns_) out.push_back(columns_[i].name);
  return out;
}

std::vector<std::string> FeatureSchema::names_with_role(Role role) const {
  std::vector<std::string> out;
  for (const auto& c : columns_) {
    if (c.role == role) out.push_back(c.name);
  }
  return out;
}

FeatureSchema FeatureSchema::with_appended(const std::vector<ColumnSpec>& extra) const {
  auto cols = columns_;
  cols.insert(cols.end(), extra.begin(), extra.end());
  return FeatureSchema(std::move(cols));
}

FeatureSchema FeatureSchema::parse(const std::string& text) {
  const auto doc = ConfigDocument::parse(text);
  std::vector<ColumnSpec> cols;
  static const std::vector<std::string> kKnown = {"name",         "role",        "unit",
                                                  "range.min",    "range.max",   "score_var",
                                                  "typical.mean", "typical.sd",  "synth.link"};
  for (const auto& t : doc.array("column")) {
    if (auto unknown = t.unknown_keys(kKnown); !unknown.empty()) {
      throw SchemaError("column section at line " + std::to_string(t.line()) + ": unknown key '" +
                        unknown.front() + "'");
    }
    ColumnSpec c;
    c.name = t.string("name");
    c.role = role_from_string(t.string("role"));
    c.unit = t.string_or("unit", "");
    const auto lo = t.optional_number("range.min");
    const auto hi = t.optional_number("range.max");
    if (lo.has_value() != hi.has_value()) {
      throw SchemaError("column '" + c.name + "' must give both range.min and range.max");
    }
    if (lo) c.range = Interval{*lo, *hi};
    c.score_var = t.string_or("score_var", "");
    c.typical_mean = t.optional_number("typical.mean");
    c.typical_sd = t.optional_number("typical.sd");
    c.synth_link = t.string_or("synth.link", "");
    cols.push_back(std::move(c));
  }
  return FeatureSchema(std::move(cols));
}

FeatureSchema FeatureSchema::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw SchemaError("schema file '" + path.string() + "' not found");
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::filesystem::path FeatureSchema::default_path() {
  return std::filesystem::path(SEPSIS_DATA_DIR) / "default_schema.toml";
}

FeatureSchema FeatureSchema::load_default() { return load(default_path()); }

std::string FeatureSchema::to_text() const {
  std::ostringstream out;
  out.precision(17);
  for (const auto& c : columns_) {
    out << "[[column]]\nname = \"" << c.name << "\"\nrole = \"" << to_string(c.role) << "\"\n";
    if (!c.unit.empty()) out << "unit = \"" << c.unit << "\"\n";
    if (c.range) out << "range.min = " << c.range->lo << "\nrange.max = " << c.range->hi << "\n";
    if (!c.score_var.empty()) out << "score_var = \"" << c.score_var << "\"\n";
    if (c.typical_mean) out << "typical.mean = " << *c.typical_mean << "\n";
    if (c.typical_sd) out << "typical.sd = " << *c.typical_sd << "\n";
    if (!c.synth_link.empty()) out << "synth.link = \"" << c.synth_link << "\"\n";
    out << "\n";
  }
  return out.str();
}

}  // namespace sepsis
