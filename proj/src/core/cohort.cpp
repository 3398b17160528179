#include "sepsis/cohort.hpp"

#include <charconv>
#include <cstdio>
#include <set>

#include "sepsis/checksum.hpp"
#include "sepsis/common.hpp"

namespace sepsis {

Timestamp parse_timestamp(std::string_view text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  auto field = [&](std::size_t pos, std::size_t len, int& out) {
    if (pos + len > text.size()) return false;
    auto [p, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
    return ec == std::errc() && p == text.data() + pos + len;
  };
  const bool ok = text.size() == 19 && field(0, 4, y) && text[4] == '-' && field(5, 2, mo) &&
                  text[7] == '-' && field(8, 2, d) && (text[10] == ' ' || text[10] == 'T') &&
                  field(11, 2, h) && text[13] == ':' && field(14, 2, mi) && text[16] == ':' &&
                  field(17, 2, s);
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ok || !ymd.ok() || h > 23 || mi > 59 || s > 59) {
    throw ValidationError("invalid timestamp '" + std::string(text) + "'");
  }
  return std::chrono::sys_days{ymd} + std::chrono::hours{h} + std::chrono::minutes{mi} +
         std::chrono::seconds{s};
}

std::string format_timestamp(Timestamp ts) {
  const auto days = std::chrono::floor<std::chrono::days>(ts);
  const std::chrono::year_month_day ymd{days};
  const std::chrono::hh_mm_ss hms{ts - days};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

EncounterSeries EncounterSeries::blank(EncounterId id, std::size_t columns, std::size_t rows) {
  EncounterSeries s;
  s.id = id;
  s.labels.assign(rows, 0);
  s.columns.assign(columns, std::vector<double>(rows, kMissing));
  return s;
}

std::optional<int> EncounterSeries::onset_hour() const { return onset_of(*this); }

std::optional<std::size_t> onset_of(std::span<const std::uint8_t> labels) {
  std::optional<std::size_t> onset;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 1) throw InvariantError("label value " + std::to_string(labels[i]) + " is not binary");
    if (labels[i] == 1 && !onset) onset = i;
    if (labels[i] == 0 && onset) {
      throw InvariantError("non-monotone label at row " + std::to_string(i));
    }
  }
  return onset;
}

std::optional<int> onset_of(const EncounterSeries& series) {
  auto row = onset_of(series.labels);
  if (!row) return std::nullopt;
  return series.hour_index(*row);
}

std::size_t CohortFrame::total_rows() const {
  std::size_t n = 0;
  for (const auto& e : encounters) n += e.rows();
  return n;
}

const EncounterSeries* CohortFrame::find(EncounterId id) const {
  for (const auto& e : encounters) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

void CohortFrame::record(std::string operation, std::size_t encounters_before, std::size_t rows_before,
                         std::string note) {
  provenance.push_back({std::move(operation), encounters_before, encounters.size(), rows_before,
                        total_rows(), std::move(note)});
}

std::string CohortFrame::data_digest() const {
  Sha256 h;
  for (const auto& name : schema.value_names()) {
    h.update(name);
    h.update(std::string_view("\0", 1));
  }
  for (const auto& e : encounters) {
    const std::int64_t header[3] = {e.id, e.start_hour, static_cast<std::int64_t>(e.rows())};
    h.update(std::string_view(reinterpret_cast<const char*>(header), sizeof header));
    h.update(std::string_view(reinterpret_cast<const char*>(e.labels.data()), e.labels.size()));
    for (const auto& c : e.columns) h.update(std::span<const double>(c));
  }
  return h.hex();
}

namespace {

void check_encounter(const FeatureSchema& schema, const EncounterSeries& e, std::vector<Violation>& out) {
  const auto& label = schema.label_column().name;
  if (e.columns.size() != schema.value_count()) {
    out.push_back({e.id, "", "column count " + std::to_string(e.columns.size()) + " does not match schema (" +
                                 std::to_string(schema.value_count()) + ")"});
    return;
  }
  if (e.start_hour < 0) out.push_back({e.id, "", "negative hour index"});
  bool seen_positive = false;
  bool reported = false;
  for (std::size_t r = 0; r < e.rows(); ++r) {
    const auto l = e.labels[r];
    if (l > 1) {
      out.push_back({e.id, label, "non-binary label"});
      break;
    }
    if (l == 1) seen_positive = true;
    if (l == 0 && seen_positive && !reported) {
      out.push_back({e.id, label, "non-monotone label"});
      reported = true;
    }
  }
  for (std::size_t c = 0; c < e.columns.size(); ++c) {
    const auto& spec = schema.value_column(c);
    const auto& col = e.columns[c];
    if (col.size() != e.rows()) {
      out.push_back({e.id, spec.name, "column length does not match row count"});
      continue;
    }
    if (spec.role == Role::mask) {
      for (double v : col) {
        if (is_missing(v) || (v != 0.0 && v != 1.0)) {
          out.push_back({e.id, spec.name, "mask column must be 0/1 without missing entries"});
          break;
        }
      }
    }
    if (!spec.range) continue;
    for (double v : col) {
      if (!is_missing(v) && !spec.range->contains(v)) {
        out.push_back({e.id, spec.name, "out of physiologic range"});
        break;
      }
    }
  }
}

}  // namespace

std::vector<Violation> validate_cohort(const CohortFrame& cohort) {
  const auto n = cohort.encounters.size();
  std::vector<std::vector<Violation>> per(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t i = 0; i < n; ++i) check_encounter(cohort.schema, cohort.encounters[i], per[i]);

  std::vector<Violation> out;
  std::set<EncounterId> ids;
  for (std::size_t i = 0; i < n; ++i) {
    if (!ids.insert(cohort.encounters[i].id).second) {
      out.push_back({cohort.encounters[i].id, cohort.schema.id_column().name, "duplicate encounter id"});
    }
    out.insert(out.end(), per[i].begin(), per[i].end());
  }
  return out;
}

}  // namespace sepsis
