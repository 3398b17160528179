#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sepsis/schema.hpp"

namespace sepsis {

using EncounterId = std::int64_t;
using Timestamp = std::chrono::sys_seconds;

// "YYYY-MM-DD HH:MM:SS" (a 'T' separator is also accepted), UTC.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);

// One stay on a dense hourly grid. Row i sits at hour_index start_hour + i;
// silent hours are rows whose values are all missing. Values are stored
// column-major, one vector per schema value column.
struct EncounterSeries {
  EncounterId id = 0;
  Timestamp admission_time{};
  std::optional<Timestamp> discharge_time;
  int start_hour = 0;
  std::vector<std::uint8_t> labels;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return labels.size(); }
  int hour_index(std::size_t row) const { return start_hour + static_cast<int>(row); }
  std::optional<int> onset_hour() const;

  // Empty series with `rows` all-missing rows for `columns` value columns.
  static EncounterSeries blank(EncounterId id, std::size_t columns, std::size_t rows);
};

// Row index of the first positive label, or nullopt when all labels are 0.
// Throws InvariantError when the labels are not a monotone step function.
std::optional<std::size_t> onset_of(std::span<const std::uint8_t> labels);
// Onset as an hour index.
std::optional<int> onset_of(const EncounterSeries& series);

struct ProvenanceEntry {
  std::string operation;
  std::size_t encounters_before = 0;
  std::size_t encounters_after = 0;
  std::size_t rows_before = 0;
  std::size_t rows_after = 0;
  std::string note;
};

struct CohortFrame {
  FeatureSchema schema;
  std::vector<EncounterSeries> encounters;
  std::vector<ProvenanceEntry> provenance;

  std::size_t total_rows() const;
  const EncounterSeries* find(EncounterId id) const;
  // Provenance is append-only; this is the only mutation it offers.
  void record(std::string operation, std::size_t encounters_before, std::size_t rows_before,
              std::string note = {});
  // SHA-256 over ids, grid offsets, labels and value columns. Provenance is
  // excluded.
  std::string data_digest() const;
};

struct Violation {
  EncounterId encounter_id;
  std::string column;
  std::string reason;
  bool operator==(const Violation&) const = default;
};

// Pure check of every cohort invariant; never throws for bad data.
std::vector<Violation> validate_cohort(const CohortFrame& cohort);

}  // namespace sepsis
