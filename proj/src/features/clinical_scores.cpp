#include "sepsis/clinical_scores.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "sepsis/common.hpp"

namespace sepsis {
namespace {

constexpr std::array<std::string_view, kClinicalVarCount> kVarNames = {
    "temp",      "hr",        "resp",       "sbp", "map", "dbp",      "spo2",
    "paco2",     "pao2",      "fio2",       "sao2", "wbc", "platelets", "bilirubin",
    "creatinine", "bun",      "gcs",        "pf_ratio", "sf_ratio"};

constexpr std::size_t idx(ClinicalVar v) { return static_cast<std::size_t>(v); }

double parse_bound(std::string_view s, std::size_t line) {
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ParseError(line, "invalid interval bound '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

ClinicalVar clinical_var_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kVarNames.size(); ++i) {
    if (kVarNames[i] == name) return static_cast<ClinicalVar>(i);
  }
  throw ConfigError("unknown clinical variable '" + std::string(name) + "'");
}

std::string_view to_string(ClinicalVar v) { return kVarNames[idx(v)]; }

double fio2_fraction(double fio2) { return fio2 > 1.0 ? fio2 / 100.0 : fio2; }

ClinicalRow::ClinicalRow() { values_.fill(kMissing); }

ClinicalRow& ClinicalRow::set(ClinicalVar v, double value) {
  if (v == ClinicalVar::pf_ratio || v == ClinicalVar::sf_ratio) {
    throw Error("pf_ratio and sf_ratio are derived; set pao2/sao2/fio2 instead");
  }
  values_[idx(v)] = value;
  refresh_ratios();
  return *this;
}

double ClinicalRow::get(ClinicalVar v) const { return values_[idx(v)]; }
bool ClinicalRow::has(ClinicalVar v) const { return !is_missing(values_[idx(v)]); }

void ClinicalRow::refresh_ratios() {
  const double fio2 = fio2_fraction(values_[idx(ClinicalVar::fio2)]);
  auto ratio = [&](double num) { return (is_missing(num) || is_missing(fio2) || fio2 <= 0.0) ? kMissing : num / fio2; };
  values_[idx(ClinicalVar::pf_ratio)] = ratio(values_[idx(ClinicalVar::pao2)]);
  values_[idx(ClinicalVar::sf_ratio)] = ratio(values_[idx(ClinicalVar::sao2)]);
}

bool ScoreBand::contains(double v) const {
  const bool above = lo_inclusive ? v >= lo : v > lo;
  const bool below = hi_inclusive ? v <= hi : v < hi;
  return above && below;
}

BandTable BandTable::parse(const std::string& text) {
  BandTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string f; fields >> f;) tok.push_back(f);
    if (tok.empty()) continue;
    if (tok.size() != 5 && tok.size() != 6) throw ParseError(line_no, "expected 5 or 6 fields");
    ScoreBand b;
    b.score = tok[0];
    b.criterion = tok[1];
    b.var = clinical_var_from_string(tok[2]);
    const std::string& iv = tok[3];
    const auto comma = iv.find(',');
    if (iv.size() < 5 || comma == std::string::npos || (iv.front() != '(' && iv.front() != '[') ||
        (iv.back() != ')' && iv.back() != ']')) {
      throw ParseError(line_no, "malformed interval '" + iv + "'");
    }
    b.lo_inclusive = iv.front() == '[';
    b.hi_inclusive = iv.back() == ']';
    b.lo = parse_bound(std::string_view(iv).substr(1, comma - 1), line_no);
    b.hi = parse_bound(std::string_view(iv).substr(comma + 1, iv.size() - comma - 2), line_no);
    if (!(b.lo <= b.hi)) throw ParseError(line_no, "empty interval '" + iv + "'");
    b.points = static_cast<int>(parse_bound(tok[4], line_no));
    if (tok.size() == 6) {
      if (tok[5] != "fallback") throw ParseError(line_no, "unknown flag '" + tok[5] + "'");
      b.fallback = true;
    }
    auto it = std::find_if(t.criteria_.begin(), t.criteria_.end(),
                           [&](const Criterion& c) { return c.score == b.score && c.name == b.criterion; });
    if (it == t.criteria_.end()) {
      t.criteria_.push_back({b.score, b.criterion, {}});
      it = t.criteria_.end() - 1;
    }
    it->bands.push_back(t.bands_.size());
    t.bands_.push_back(std::move(b));
  }
  return t;
}

BandTable BandTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open band table '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::filesystem::path BandTable::default_path() { return std::filesystem::path(SEPSIS_DATA_DIR) / "score_bands.txt"; }

const BandTable& BandTable::shipped() {
  static const BandTable table = load(default_path());
  return table;
}

const BandTable::Criterion* BandTable::find(std::string_view score, std::string_view criterion) const {
  for (const auto& c : criteria_) {
    if (c.score == score && c.name == criterion) return &c;
  }
  return nullptr;
}

int BandTable::points(const Criterion& c, const ClinicalRow& row) const {
  bool primary_present = false;
  int primary = 0, fallback = 0;
  for (auto i : c.bands) {
    const auto& b = bands_[i];
    if (!row.has(b.var)) continue;
    const double v = row.get(b.var);
    if (b.fallback) {
      if (b.contains(v)) fallback = std::max(fallback, b.points);
    } else {
      primary_present = true;
      if (b.contains(v)) primary = std::max(primary, b.points);
    }
  }
  return primary_present ? primary : fallback;
}

int BandTable::criterion_points(std::string_view score, std::string_view criterion, const ClinicalRow& row) const {
  const auto* c = find(score, criterion);
  if (!c) throw Error("no criterion '" + std::string(criterion) + "' in score '" + std::string(score) + "'");
  return points(*c, row);
}

std::vector<std::string> BandTable::criteria(std::string_view score) const {
  std::vector<std::string> out;
  for (const auto& c : criteria_) {
    if (c.score == score) out.push_back(c.name);
  }
  return out;
}

int BandTable::score(std::string_view score, const ClinicalRow& row) const {
  int total = 0;
  bool known = false;
  for (const auto& c : criteria_) {
    if (c.score != score) continue;
    known = true;
    total += points(c, row);
  }
  if (!known) throw Error("band table has no score '" + std::string(score) + "'");
  return total;
}

int score_sirs(const ClinicalRow& row, const BandTable& table) { return table.score("sirs", row); }
int score_qsofa(const ClinicalRow& row, const BandTable& table) { return table.score("qsofa", row); }
int score_mews(const ClinicalRow& row, const BandTable& table) { return table.score("mews", row); }
int score_partial_sofa(const ClinicalRow& row, const BandTable& table) { return table.score("sofa", row); }

RatioFeatures ratio_features(const ClinicalRow& row) {
  auto ratio = [](double num, double den) {
    if (is_missing(num) || is_missing(den) || den <= 0.0) return kMissing;
    return num / den;
  };
  return {ratio(row.get(ClinicalVar::hr), row.get(ClinicalVar::sbp)),
          ratio(row.get(ClinicalVar::bun), row.get(ClinicalVar::creatinine)),
          ratio(row.get(ClinicalVar::sao2), fio2_fraction(row.get(ClinicalVar::fio2)))};
}

const std::vector<std::string>& clinical_feature_names() {
  static const std::vector<std::string> names = {"SOFA", "MEWS", "qSOFA", "SIRS", "ShockIndex", "BUN_CR", "SaO2_FiO2"};
  return names;
}

CohortFrame append_clinical_features(const CohortFrame& cohort, const BandTable& table) {
  const auto& schema = cohort.schema;
  std::array<std::vector<std::size_t>, kClinicalVarCount> sources;
  for (std::size_t c = 0; c < schema.value_count(); ++c) {
    const auto& spec = schema.value_column(c);
    if (spec.score_var.empty()) continue;
    const auto v = clinical_var_from_string(spec.score_var);
    if (v == ClinicalVar::pf_ratio || v == ClinicalVar::sf_ratio) {
      throw SchemaError("column '" + spec.name + "' maps to derived variable " + spec.score_var);
    }
    sources[idx(v)].push_back(c);
  }

  std::vector<ColumnSpec> extra;
  for (const auto& n : clinical_feature_names()) {
    ColumnSpec spec;
    spec.name = n;
    spec.role = Role::derived;
    extra.push_back(spec);
  }
  CohortFrame out;
  out.schema = schema.with_appended(extra);
  out.provenance = cohort.provenance;
  out.encounters = cohort.encounters;
  const auto n = out.encounters.size();
#pragma omp parallel for schedule(dynamic, 32)
  for (std::size_t i = 0; i < n; ++i) {
    auto& e = out.encounters[i];
    std::array<std::vector<double>, 7> cols;
    for (auto& c : cols) c.resize(e.rows());
    for (std::size_t r = 0; r < e.rows(); ++r) {
      ClinicalRow row;
      for (std::size_t v = 0; v < kClinicalVarCount; ++v) {
        double sum = 0.0;
        int count = 0;
        for (auto c : sources[v]) {
          const double x = e.columns[c][r];
          if (!is_missing(x)) {
            sum += x;
            ++count;
          }
        }
        if (count > 0) row.set(static_cast<ClinicalVar>(v), sum / count);
      }
      const auto ratios = ratio_features(row);
      cols[0][r] = score_partial_sofa(row, table);
      cols[1][r] = score_mews(row, table);
      cols[2][r] = score_qsofa(row, table);
      cols[3][r] = score_sirs(row, table);
      cols[4][r] = ratios.shock_index;
      cols[5][r] = ratios.bun_cr;
      cols[6][r] = ratios.sao2_fio2;
    }
    for (auto& c : cols) e.columns.push_back(std::move(c));
  }
  out.record("clinical_features", n, cohort.total_rows());
  return out;
}

}  // namespace sepsis
