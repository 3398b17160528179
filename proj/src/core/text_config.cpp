#include "sepsis/text_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "sepsis/common.hpp"

namespace sepsis {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Strips a trailing comment that is not inside a string literal.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

class ValueParser {
 public:
  ValueParser(std::string_view text, std::size_t line) : text_(text), line_(line) {}

  ConfigValue parse_all() {
    ConfigValue v = parse_value();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters after value");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(line_, what); }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  ConfigValue parse_value() {
    skip_ws();
    if (pos_ >= text_.size()) fail("missing value");
    const char c = text_[pos_];
    if (c == '"') return {parse_string(), line_};
    if (c == '[') return {parse_array(), line_};
    if (text_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return {true, line_};
    }
    if (text_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return {false, line_};
    }
    return {parse_number(), line_};
  }

  std::string parse_string() {
    ++pos_;
    std::string out;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
        ++pos_;
        const char e = text_[pos_];
        out.push_back(e == 'n' ? '\n' : e == 't' ? '\t' : e);
      } else {
        out.push_back(text_[pos_]);
      }
      ++pos_;
    }
    if (pos_ >= text_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  ConfigArray parse_array() {
    ++pos_;
    ConfigArray out;
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == ']') {
      ++pos_;
      return out;
    }
    while (true) {
      ConfigValue v = parse_value();
      if (std::holds_alternative<ConfigArray>(v.data)) fail("nested arrays are not supported");
      out.push_back(std::move(v));
      skip_ws();
      if (pos_ >= text_.size()) fail("unterminated array");
      if (text_[pos_] == ',') {
        ++pos_;
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ']') {
          ++pos_;
          return out;
        }
        continue;
      }
      if (text_[pos_] == ']') {
        ++pos_;
        return out;
      }
      fail("expected ',' or ']' in array");
    }
  }

  double parse_number() {
    std::size_t end = pos_;
    while (end < text_.size() && text_[end] != ',' && text_[end] != ']' && text_[end] != ' ' &&
           text_[end] != '\t')
      ++end;
    const std::string token(text_.substr(pos_, end - pos_));
    pos_ = end;
    if (token == "inf" || token == "+inf") return std::numeric_limits<double>::infinity();
    if (token == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto* first = token.data();
    const auto* last = token.data() + token.size();
    if (!token.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) fail("invalid value '" + token + "'");
    return v;
  }

  std::string_view text_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

const char* type_name(const ConfigValue& v) {
  switch (v.data.index()) {
    case 0: return "number";
    case 1: return "string";
    case 2: return "boolean";
    default: return "array";
  }
}

}  // namespace

void ConfigTable::set(const std::string& key, ConfigValue v) {
  if (values_.count(key)) throw ParseError(v.line, "duplicate key '" + key + "'");
  values_[key] = std::move(v);
}

std::string ConfigTable::where(const std::string& key) const {
  std::string s = "[" + name_ + "] " + key;
  if (auto it = values_.find(key); it != values_.end()) s += " (line " + std::to_string(it->second.line) + ")";
  return s;
}

const ConfigValue& ConfigTable::at(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing required key " + where(key));
  return it->second;
}

double ConfigTable::number(const std::string& key) const {
  const auto& v = at(key);
  if (const auto* d = std::get_if<double>(&v.data)) return *d;
  throw ConfigError(where(key) + ": expected number, got " + type_name(v));
}

double ConfigTable::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

std::optional<double> ConfigTable::optional_number(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return number(key);
}

long long ConfigTable::integer(const std::string& key) const {
  const double d = number(key);
  if (d != std::floor(d) || std::abs(d) > 9.0e15) throw ConfigError(where(key) + ": expected integer");
  return static_cast<long long>(d);
}

long long ConfigTable::integer_or(const std::string& key, long long fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::string ConfigTable::string(const std::string& key) const {
  const auto& v = at(key);
  if (const auto* s = std::get_if<std::string>(&v.data)) return *s;
  throw ConfigError(where(key) + ": expected string, got " + type_name(v));
}

std::string ConfigTable::string_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? string(key) : fallback;
}

bool ConfigTable::boolean_or(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto& v = at(key);
  if (const auto* b = std::get_if<bool>(&v.data)) return *b;
  throw ConfigError(where(key) + ": expected boolean, got " + type_name(v));
}

std::vector<double> ConfigTable::numbers_or(const std::string& key, std::vector<double> fallback) const {
  if (!has(key)) return fallback;
  const auto& v = at(key);
  const auto* arr = std::get_if<ConfigArray>(&v.data);
  if (!arr) throw ConfigError(where(key) + ": expected array of numbers");
  std::vector<double> out;
  for (const auto& e : *arr) {
    const auto* d = std::get_if<double>(&e.data);
    if (!d) throw ConfigError(where(key) + ": expected array of numbers");
    out.push_back(*d);
  }
  return out;
}

std::vector<std::string> ConfigTable::strings_or(const std::string& key,
                                                 std::vector<std::string> fallback) const {
  if (!has(key)) return fallback;
  const auto& v = at(key);
  const auto* arr = std::get_if<ConfigArray>(&v.data);
  if (!arr) throw ConfigError(where(key) + ": expected array of strings");
  std::vector<std::string> out;
  for (const auto& e : *arr) {
    const auto* s = std::get_if<std::string>(&e.data);
    if (!s) throw ConfigError(where(key) + ": expected array of strings");
    out.push_back(*s);
  }
  return out;
}

std::vector<std::string> ConfigTable::unknown_keys(const std::vector<std::string>& known) const {
  std::vector<std::string> out;
  for (const auto& [k, _] : values_) {
    if (std::find(known.begin(), known.end(), k) == known.end()) out.push_back(k);
  }
  return out;
}

ConfigDocument ConfigDocument::parse(const std::string& text) {
  ConfigDocument doc;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  ConfigTable* current = nullptr;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.rfind("[[", 0) == 0) {
      if (line.size() < 5 || line.substr(line.size() - 2) != "]]") throw ParseError(line_no, "malformed array header");
      const std::string name = trim(line.substr(2, line.size() - 4));
      auto& vec = doc.arrays_[name];
      vec.emplace_back(name, line_no);
      current = &vec.back();
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "malformed section header");
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (doc.sections_.count(name)) throw ParseError(line_no, "duplicate section [" + name + "]");
      current = &doc.sections_.emplace(name, ConfigTable(name, line_no)).first->second;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(line_no, "empty key");
    if (!current) {
      current = &doc.sections_.emplace("", ConfigTable("", line_no)).first->second;
    }
    ValueParser vp(std::string_view(line).substr(eq + 1), line_no);
    current->set(key, vp.parse_all());
  }
  return doc;
}

ConfigDocument ConfigDocument::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const ConfigTable& ConfigDocument::section(const std::string& name) const {
  static const ConfigTable empty;
  auto it = sections_.find(name);
  return it == sections_.end() ? empty : it->second;
}

const std::vector<ConfigTable>& ConfigDocument::array(const std::string& name) const {
  static const std::vector<ConfigTable> empty;
  auto it = arrays_.find(name);
  return it == arrays_.end() ? empty : it->second;
}

std::vector<std::string> ConfigDocument::section_names() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : sections_) out.push_back(k);
  return out;
}

}  // namespace sepsis
