#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace sepsis {

// A small TOML-like table syntax shared by the schema file and the run
// config:
//
//   # comment
//   [section]
//   key = 1.5
//   dotted.key = "text"
//   flag = true
//   list = [0.1, 0.2, "x"]
//   [[repeated]]          # array of tables; each header opens a new entry
//   name = "a"
//
// Keys are flat strings (dots are not nested). Values are numbers, strings,
// booleans, or single-level arrays of those.
struct ConfigValue;
using ConfigArray = std::vector<ConfigValue>;

struct ConfigValue {
  std::variant<double, std::string, bool, ConfigArray> data;
  std::size_t line = 0;
};

class ConfigTable {
 public:
  ConfigTable() = default;
  ConfigTable(std::string name, std::size_t line) : name_(std::move(name)), line_(line) {}

  const std::string& name() const { return name_; }
  std::size_t line() const { return line_; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, ConfigValue>& values() const { return values_; }
  void set(const std::string& key, ConfigValue v);

  // Typed getters throw ConfigError naming the section, key, and line.
  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  std::optional<double> optional_number(const std::string& key) const;
  long long integer(const std::string& key) const;
  long long integer_or(const std::string& key, long long fallback) const;
  std::string string(const std::string& key) const;
  std::string string_or(const std::string& key, const std::string& fallback) const;
  bool boolean_or(const std::string& key, bool fallback) const;
  std::vector<double> numbers_or(const std::string& key, std::vector<double> fallback) const;
  std::vector<std::string> strings_or(const std::string& key, std::vector<std::string> fallback) const;

  // Keys present in the table but absent from `known`; lets callers reject typos.
  std::vector<std::string> unknown_keys(const std::vector<std::string>& known) const;

 private:
  const ConfigValue& at(const std::string& key) const;
  std::string where(const std::string& key) const;

  std::string name_;
  std::size_t line_ = 0;
  std::map<std::string, ConfigValue> values_;
};

class ConfigDocument {
 public:
  static ConfigDocument parse(const std::string& text);
  static ConfigDocument load(const std::filesystem::path& path);

  bool has_section(const std::string& name) const { return sections_.count(name) != 0; }
  // Missing sections read as empty tables so defaults apply.
  const ConfigTable& section(const std::string& name) const;
  const std::vector<ConfigTable>& array(const std::string& name) const;
  std::vector<std::string> section_names() const;

 private:
  std::map<std::string, ConfigTable> sections_;
  std::map<std::string, std::vector<ConfigTable>> arrays_;
};

}  // namespace sepsis
