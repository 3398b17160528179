#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "sepsis/cohort.hpp"

namespace sepsis {

// Reserved optional columns in the wide CSV, outside the schema.
inline constexpr std::string_view kAdmissionColumn = "admission_time";
inline constexpr std::string_view kDischargeColumn = "discharge_time";

// Wide CSV: comma separated, header required, one row per (encounter, hour),
// empty field = missing. The header must name the schema's id and label
// columns and may name its time column (hour since admission, integer) and
// any value column; the reserved admission_time/discharge_time columns carry
// timestamps. Rows are grouped by encounter id (ascending) and expanded to a
// dense hourly grid.
CohortFrame read_wide_csv(std::istream& in, const FeatureSchema& schema);
// Writes every schema column plus the reserved timestamp columns. Values are
// printed in shortest round-trip form, so read(write(c)) reproduces c.
void write_wide_csv(std::ostream& out, const CohortFrame& cohort);

// PhysioNet-style per-encounter file: pipe separated, header line naming the
// columns, 'NaN' for missing, last column the label, row ordinal = hour.
EncounterSeries read_psv_encounter(std::istream& in, const FeatureSchema& schema, EncounterId id);

struct RawEvent {
  EncounterId encounter_id = 0;
  Timestamp timestamp{};
  std::string column;
  double value = 0.0;
};

struct RejectedEvent {
  RawEvent event;
  std::string reason;
};

struct BucketResult {
  EncounterSeries series;
  std::vector<RejectedEvent> rejected;
};

// Aggregates one encounter's events into hourly buckets [h, h+1) anchored at
// admission. An event column naming an analyte with min_/max_ variants fills
// both with the bucket minimum and maximum; an event naming a column directly
// keeps the bucket's last reading; events on the label column mark positive
// hours from the first reading of 1 onward.
BucketResult bucket_to_hourly(const std::vector<RawEvent>& events, const FeatureSchema& schema,
                              EncounterId id, Timestamp admission,
                              std::optional<Timestamp> discharge = std::nullopt);

// Event-level ingestion: events CSV (encounter_id,timestamp,column,value) and
// an admissions CSV (encounter_id,admission_time[,discharge_time]).
struct EventIngestResult {
  CohortFrame cohort;
  std::vector<RejectedEvent> rejected;
};
EventIngestResult read_event_files(std::istream& events, std::istream& admissions,
                                   const FeatureSchema& schema);

// Shortest round-trip decimal form; empty string for missing.
std::string format_value(double v);

}  // namespace sepsis
