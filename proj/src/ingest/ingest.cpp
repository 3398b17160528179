#include "sepsis/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <map>

#include "sepsis/common.hpp"

namespace sepsis {
namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

void chomp(std::string& line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [p, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

template <class Int>
bool parse_int(std::string_view s, Int& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return !s.empty() && ec == std::errc() && p == s.data() + s.size();
}

struct PendingRow {
  int hour;
  std::uint8_t label;
  std::vector<double> values;
  std::size_t line;
};

struct PendingEncounter {
  std::optional<Timestamp> admission;
  std::optional<Timestamp> discharge;
  std::vector<PendingRow> rows;
};

}  // namespace

std::string format_value(double v) {
  if (is_missing(v)) return {};
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

CohortFrame read_wide_csv(std::istream& in, const FeatureSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header row");
  chomp(line);
  const auto header = split(line, ',');

  const auto& id_name = schema.id_column().name;
  const auto& label_name = schema.label_column().name;
  const std::string time_name = schema.time_column() ? schema.time_column()->name : std::string("hour");

  enum class Kind { id, time, label, admission, discharge, value };
  std::vector<std::pair<Kind, std::size_t>> layout;
  bool has_id = false, has_label = false, has_time = false;
  for (auto h : header) {
    const std::string name(h);
    if (name == id_name) {
      layout.push_back({Kind::id, 0});
      has_id = true;
    } else if (name == label_name) {
      layout.push_back({Kind::label, 0});
      has_label = true;
    } else if (name == time_name) {
      layout.push_back({Kind::time, 0});
      has_time = true;
    } else if (name == kAdmissionColumn) {
      layout.push_back({Kind::admission, 0});
    } else if (name == kDischargeColumn) {
      layout.push_back({Kind::discharge, 0});
    } else if (auto idx = schema.value_index(name)) {
      layout.push_back({Kind::value, *idx});
    } else {
      throw SchemaError("unknown column '" + name + "' in CSV header");
    }
  }
  if (!has_id) throw SchemaError("CSV header lacks id column '" + id_name + "'");
  if (!has_label) throw SchemaError("CSV header lacks label column '" + label_name + "'");
  if (!has_time) throw SchemaError("CSV header lacks time column '" + time_name + "'");

  std::map<EncounterId, PendingEncounter> pending;
  std::size_t line_no = 1;
  std::size_t data_lines = 0;
  while (std::getline(in, line)) {
    ++line_no;
    chomp(line);
    if (line.empty()) continue;
    ++data_lines;
    const auto fields = split(line, ',');
    if (fields.size() != layout.size()) {
      throw ParseError(line_no, "expected " + std::to_string(layout.size()) + " fields, got " +
                                    std::to_string(fields.size()));
    }
    PendingRow row{0, 0, std::vector<double>(schema.value_count(), kMissing), line_no};
    EncounterId id = 0;
    std::optional<Timestamp> admit, discharge;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto f = fields[i];
      const std::string col(header[i]);
      switch (layout[i].first) {
        case Kind::id:
          if (!parse_int(f, id)) throw ParseError(line_no, "invalid encounter id '" + std::string(f) + "'");
          break;
        case Kind::time:
          if (!parse_int(f, row.hour) || row.hour < 0) {
            throw ParseError(line_no, "invalid hour index '" + std::string(f) + "'");
          }
          break;
        case Kind::label: {
          int l = 0;
          if (!parse_int(f, l) || (l != 0 && l != 1)) {
            throw ParseError(line_no, "label must be 0 or 1, got '" + std::string(f) + "'");
          }
          row.label = static_cast<std::uint8_t>(l);
          break;
        }
        case Kind::admission:
          if (!f.empty()) admit = parse_timestamp(f);
          break;
        case Kind::discharge:
          if (!f.empty()) discharge = parse_timestamp(f);
          break;
        case Kind::value: {
          if (f.empty()) break;
          double v = 0.0;
          if (!parse_double(f, v)) {
            throw ParseError(line_no, "non-numeric value '" + std::string(f) + "' in column '" + col + "'");
          }
          row.values[layout[i].second] = v;
          break;
        }
      }
    }
    auto& enc = pending[id];
    if (admit) enc.admission = admit;
    if (discharge) enc.discharge = discharge;
    enc.rows.push_back(std::move(row));
  }

  CohortFrame cohort;
  cohort.schema = schema;
  for (auto& [id, enc] : pending) {
    std::stable_sort(enc.rows.begin(), enc.rows.end(),
                     [](const PendingRow& a, const PendingRow& b) { return a.hour < b.hour; });
    for (std::size_t i = 1; i < enc.rows.size(); ++i) {
      if (enc.rows[i].hour == enc.rows[i - 1].hour) {
        throw ParseError(enc.rows[i].line, "duplicate hour " + std::to_string(enc.rows[i].hour) +
                                               " for encounter " + std::to_string(id));
      }
    }
    const int first = enc.rows.front().hour;
    const int last = enc.rows.back().hour;
    auto series = EncounterSeries::blank(id, schema.value_count(), static_cast<std::size_t>(last - first + 1));
    series.start_hour = first;
    if (enc.admission) series.admission_time = *enc.admission;
    series.discharge_time = enc.discharge;
    std::vector<bool> observed(series.rows(), false);
    for (const auto& r : enc.rows) {
      const auto at = static_cast<std::size_t>(r.hour - first);
      series.labels[at] = r.label;
      observed[at] = true;
      for (std::size_t c = 0; c < r.values.size(); ++c) series.columns[c][at] = r.values[c];
    }
    // Gap rows inherit the label of the preceding observed row.
    for (std::size_t r = 1; r < series.rows(); ++r) {
      if (!observed[r]) series.labels[r] = series.labels[r - 1];
    }
    cohort.encounters.push_back(std::move(series));
  }
  cohort.provenance.push_back({"read_wide_csv", 0, cohort.encounters.size(), data_lines, data_lines,
                               "source_lines=" + std::to_string(data_lines) +
                                   " rejected=0 grid_rows=" + std::to_string(cohort.total_rows())});
  return cohort;
}

void write_wide_csv(std::ostream& out, const CohortFrame& cohort) {
  const auto& schema = cohort.schema;
  const std::string time_name = schema.time_column() ? schema.time_column()->name : std::string("hour");
  out << schema.id_column().name << ',' << time_name;
  for (const auto& n : schema.value_names()) out << ',' << n;
  out << ',' << schema.label_column().name << ',' << kAdmissionColumn << ',' << kDischargeColumn << '\n';
  for (const auto& e : cohort.encounters) {
    const std::string admit = format_timestamp(e.admission_time);
    const std::string discharge = e.discharge_time ? format_timestamp(*e.discharge_time) : std::string();
    for (std::size_t r = 0; r < e.rows(); ++r) {
      out << e.id << ',' << e.hour_index(r);
      for (const auto& col : e.columns) out << ',' << format_value(col[r]);
      out << ',' << static_cast<int>(e.labels[r]) << ',' << admit << ',' << discharge << '\n';
    }
  }
}

EncounterSeries read_psv_encounter(std::istream& in, const FeatureSchema& schema, EncounterId id) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty encounter");
  chomp(line);
  const auto header = split(line, '|');
  if (header.size() < 2) throw ParseError(1, "PSV header needs at least one value column and the label");
  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i + 1 < header.size(); ++i) {
    const std::string name(header[i]);
    auto idx = schema.value_index(name);
    if (!idx) throw SchemaError("unknown column '" + name + "' in PSV header");
    targets.push_back(*idx);
  }

  std::vector<std::vector<double>> rows;
  std::vector<std::uint8_t> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    chomp(line);
    if (line.empty()) continue;
    const auto fields = split(line, '|');
    if (fields.size() != header.size()) {
      throw ParseError(line_no, "ragged row: expected " + std::to_string(header.size()) + " fields, got " +
                                    std::to_string(fields.size()));
    }
    std::vector<double> values(targets.size(), kMissing);
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (fields[i] == "NaN") continue;
      if (!parse_double(fields[i], values[i])) {
        throw ParseError(line_no, "non-numeric value '" + std::string(fields[i]) + "'");
      }
    }
    double l = 0.0;
    if (!parse_double(fields.back(), l) || (l != 0.0 && l != 1.0)) {
      throw ParseError(line_no, "label must be 0 or 1");
    }
    rows.push_back(std::move(values));
    labels.push_back(static_cast<std::uint8_t>(l));
  }
  if (rows.empty()) throw ValidationError("empty encounter");

  auto series = EncounterSeries::blank(id, schema.value_count(), rows.size());
  series.labels = std::move(labels);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t i = 0; i < targets.size(); ++i) series.columns[targets[i]][r] = rows[r][i];
  }
  return series;
}

BucketResult bucket_to_hourly(const std::vector<RawEvent>& events, const FeatureSchema& schema, EncounterId id,
                              Timestamp admission, std::optional<Timestamp> discharge) {
  // Resolve each event column to its target value columns.
  struct Target {
    std::optional<std::size_t> min_col, max_col, direct;
    bool label = false;
  };
  std::map<std::string, Target> targets;
  auto resolve = [&](const std::string& column) -> const Target& {
    auto it = targets.find(column);
    if (it != targets.end()) return it->second;
    Target t;
    if (column == schema.label_column().name) {
      t.label = true;
    } else {
      t.min_col = schema.value_index("min_" + column);
      t.max_col = schema.value_index("max_" + column);
      if (!t.min_col && !t.max_col) {
        t.direct = schema.value_index(column);
        if (!t.direct) throw SchemaError("event column '" + column + "' is not in the schema");
      }
    }
    return targets.emplace(column, t).first->second;
  };

  BucketResult result;
  struct Placed {
    const RawEvent* event;
    long hour;
  };
  std::vector<Placed> placed;
  long max_hour = -1;
  for (const auto& ev : events) {
    if (ev.encounter_id != id) {
      result.rejected.push_back({ev, "event belongs to encounter " + std::to_string(ev.encounter_id)});
      continue;
    }
    if (ev.timestamp < admission) {
      result.rejected.push_back({ev, "event before admission"});
      continue;
    }
    resolve(ev.column);
    const auto secs = (ev.timestamp - admission).count();
    const long hour = static_cast<long>(secs / 3600);
    placed.push_back({&ev, hour});
    max_hour = std::max(max_hour, hour);
  }
  // Stable order: by timestamp, ties keep input order.
  std::stable_sort(placed.begin(), placed.end(),
                   [](const Placed& a, const Placed& b) { return a.event->timestamp < b.event->timestamp; });

  auto series = EncounterSeries::blank(id, schema.value_count(), static_cast<std::size_t>(max_hour + 1));
  series.admission_time = admission;
  series.discharge_time = discharge;
  std::optional<long> first_positive;
  for (const auto& p : placed) {
    const auto& t = targets.at(p.event->column);
    const auto h = static_cast<std::size_t>(p.hour);
    const double v = p.event->value;
    if (t.label) {
      if (v == 1.0 && (!first_positive || p.hour < *first_positive)) first_positive = p.hour;
      continue;
    }
    if (t.min_col) {
      double& cell = series.columns[*t.min_col][h];
      cell = is_missing(cell) ? v : std::min(cell, v);
    }
    if (t.max_col) {
      double& cell = series.columns[*t.max_col][h];
      cell = is_missing(cell) ? v : std::max(cell, v);
    }
    if (t.direct) series.columns[*t.direct][h] = v;
  }
  if (first_positive) {
    for (auto r = static_cast<std::size_t>(*first_positive); r < series.rows(); ++r) series.labels[r] = 1;
  }
  result.series = std::move(series);
  return result;
}

EventIngestResult read_event_files(std::istream& events, std::istream& admissions, const FeatureSchema& schema) {
  struct Admission {
    Timestamp admit;
    std::optional<Timestamp> discharge;
  };
  std::map<EncounterId, Admission> adm;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(admissions, line)) throw ParseError(1, "admissions file lacks a header");
  ++line_no;
  while (std::getline(admissions, line)) {
    ++line_no;
    chomp(line);
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() < 2 || f.size() > 3) throw ParseError(line_no, "expected encounter_id,admission_time[,discharge_time]");
    EncounterId id = 0;
    if (!parse_int(f[0], id)) throw ParseError(line_no, "invalid encounter id");
    Admission a{parse_timestamp(f[1]), std::nullopt};
    if (f.size() == 3 && !f[2].empty()) a.discharge = parse_timestamp(f[2]);
    adm[id] = a;
  }

  std::map<EncounterId, std::vector<RawEvent>> by_encounter;
  std::size_t event_lines = 0;
  line_no = 0;
  if (!std::getline(events, line)) throw ParseError(1, "events file lacks a header");
  ++line_no;
  while (std::getline(events, line)) {
    ++line_no;
    chomp(line);
    if (line.empty()) continue;
    ++event_lines;
    const auto f = split(line, ',');
    if (f.size() != 4) throw ParseError(line_no, "expected encounter_id,timestamp,column,value");
    RawEvent ev;
    if (!parse_int(f[0], ev.encounter_id)) throw ParseError(line_no, "invalid encounter id");
    ev.timestamp = parse_timestamp(f[1]);
    ev.column = std::string(f[2]);
    if (!parse_double(f[3], ev.value)) throw ParseError(line_no, "non-numeric value '" + std::string(f[3]) + "'");
    by_encounter[ev.encounter_id].push_back(std::move(ev));
  }

  EventIngestResult out;
  out.cohort.schema = schema;
  for (auto& [id, evs] : by_encounter) {
    auto it = adm.find(id);
    if (it == adm.end()) {
      for (auto& e : evs) out.rejected.push_back({e, "no admission record"});
      continue;
    }
    auto b = bucket_to_hourly(evs, schema, id, it->second.admit, it->second.discharge);
    out.rejected.insert(out.rejected.end(), b.rejected.begin(), b.rejected.end());
    if (b.series.rows() > 0) out.cohort.encounters.push_back(std::move(b.series));
  }
  out.cohort.provenance.push_back({"read_event_files", 0, out.cohort.encounters.size(), event_lines,
                                   event_lines - out.rejected.size(),
                                   "source_lines=" + std::to_string(event_lines) +
                                       " rejected=" + std::to_string(out.rejected.size()) +
                                       " grid_rows=" + std::to_string(out.cohort.total_rows())});
  return out;
}

}  // namespace sepsis
