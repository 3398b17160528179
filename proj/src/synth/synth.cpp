#include "sepsis/synth.hpp"

#include <algorithm>
#include <cmath>

#include "sepsis/common.hpp"

namespace sepsis {
namespace {

struct Analyte {
  std::string name;
  Role role = Role::vital;
  double mean = 0.0;
  double sd = 1.0;
  std::optional<Interval> range;
  std::string link;
  std::vector<std::size_t> min_cols, max_cols, direct_cols;
};

std::vector<Analyte> analytes_of(const FeatureSchema& schema) {
  std::vector<Analyte> out;
  for (std::size_t c = 0; c < schema.value_count(); ++c) {
    const auto& spec = schema.value_column(c);
    if (spec.role != Role::vital && spec.role != Role::lab) continue;
    const auto name = spec.analyte();
    auto it = std::find_if(out.begin(), out.end(), [&](const Analyte& a) { return a.name == name; });
    if (it == out.end()) {
      Analyte a;
      a.name = name;
      a.role = spec.role;
      a.range = spec.range;
      if (spec.typical_mean) {
        a.mean = *spec.typical_mean;
        a.sd = spec.typical_sd.value_or(std::abs(a.mean) * 0.1 + 1e-3);
      } else if (spec.range) {
        a.mean = (spec.range->lo + spec.range->hi) / 2.0;
        a.sd = (spec.range->hi - spec.range->lo) / 8.0;
      }
      a.link = spec.synth_link;
      out.push_back(a);
      it = out.end() - 1;
    }
    if (spec.is_min_variant()) {
      it->min_cols.push_back(c);
    } else if (spec.is_max_variant()) {
      it->max_cols.push_back(c);
    } else {
      it->direct_cols.push_back(c);
    }
  }
  for (const auto& a : out) {
    if (a.link.empty()) continue;
    auto src = std::find_if(out.begin(), out.end(), [&](const Analyte& b) { return b.name == a.link; });
    if (src == out.end() || !src->link.empty()) {
      throw SchemaError("synth.link of '" + a.name + "' must name an unlinked analyte");
    }
  }
  return out;
}

double clamp_to(double v, const std::optional<Interval>& range) {
  return range ? std::clamp(v, range->lo, range->hi) : v;
}

int draw_los(Rng& rng, const SynthConfig& cfg, int at_least) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const double h = std::exp(std::log(cfg.los_median_hours) + cfg.los_sigma * standard_normal(rng));
    const int los = static_cast<int>(std::lround(h));
    if (los >= std::max(cfg.los_min_hours, at_least) && los <= cfg.los_max_hours) return los;
  }
  throw ConfigError("synth: no admissible length of stay after 10000 draws (onset lead " +
                    std::to_string(cfg.lead_hours) + " h)");
}

}  // namespace

void SynthConfig::validate() const {
  if (n_encounters == 0) throw ConfigError("synth: n_encounters must be > 0");
  if (!(prevalence >= 0.0 && prevalence <= 1.0)) throw ConfigError("synth: prevalence must be in [0, 1]");
  if (!(los_median_hours > 0.0) || !(los_sigma >= 0.0)) throw ConfigError("synth: bad length-of-stay parameters");
  if (los_min_hours < 1 || los_max_hours < los_min_hours) throw ConfigError("synth: bad length-of-stay bounds");
  for (const auto& [role, rate] : missingness) {
    if (role != "vital" && role != "lab" && role != "demographic") {
      throw ConfigError("synth: unknown missingness role '" + role + "'");
    }
    if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("synth: missingness rates must be in [0, 1]");
  }
  if (lead_hours < 1) throw ConfigError("synth: lead_hours must be >= 1");
  if (!(one_hour_fraction >= 0.0 && one_hour_fraction <= 1.0)) throw ConfigError("synth: one_hour_fraction must be in [0, 1]");
  if (!(ar_coefficient >= 0.0 && ar_coefficient < 1.0)) throw ConfigError("synth: ar_coefficient must be in [0, 1)");
  if (!(link_correlation >= -1.0 && link_correlation <= 1.0)) throw ConfigError("synth: link_correlation must be in [-1, 1]");
  if (prevalence > 0.0 && one_hour_fraction < 1.0 && lead_hours + 1 > los_max_hours) {
    throw ConfigError("synth: infeasible config, onset lead " + std::to_string(lead_hours) +
                      " h never fits a stay of at most " + std::to_string(los_max_hours) + " h");
  }
}

SynthResult generate_cohort(const FeatureSchema& schema, const SynthConfig& cfg) {
  cfg.validate();
  const auto analytes = analytes_of(schema);
  const double phi = cfg.ar_coefficient;
  const double innovation = std::sqrt(1.0 - phi * phi);
  const double link_rest = std::sqrt(std::max(0.0, 1.0 - cfg.link_correlation * cfg.link_correlation));

  SynthResult out;
  out.cohort.schema = schema;
  out.cohort.encounters.resize(cfg.n_encounters);
  out.truth.resize(cfg.n_encounters);
  const Timestamp epoch = std::chrono::sys_days(std::chrono::year(2020) / 1 / 1);
  const auto n = static_cast<std::ptrdiff_t>(cfg.n_encounters);

#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const EncounterId id = i + 1;
    auto rng = make_rng(cfg.seed, "synth", static_cast<std::uint64_t>(id));
    const bool one_hour = uniform01(rng) < cfg.one_hour_fraction;
    const bool septic = uniform01(rng) < cfg.prevalence;
    const int los = one_hour ? 1 : draw_los(rng, cfg, septic ? cfg.lead_hours + 1 : 1);
    std::optional<int> onset;
    if (septic) {
      onset = one_hour ? 0 : cfg.lead_hours + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(los - cfg.lead_hours)));
    }
    auto e = EncounterSeries::blank(id, schema.value_count(), static_cast<std::size_t>(los));
    e.admission_time = epoch + std::chrono::hours(24 * id);
    e.discharge_time = e.admission_time + std::chrono::hours(los);
    for (int t = 0; t < los; ++t) e.labels[static_cast<std::size_t>(t)] = onset && t >= *onset ? 1 : 0;

    // Demographics: constant over the stay.
    for (std::size_t c = 0; c < schema.value_count(); ++c) {
      const auto& spec = schema.value_column(c);
      if (spec.role != Role::demographic) continue;
      double v = kMissing;
      if (spec.name == "sex") {
        v = uniform01(rng) < 0.5 ? 1.0 : 0.0;
      } else if (spec.typical_mean) {
        v = *spec.typical_mean + spec.typical_sd.value_or(0.0) * standard_normal(rng);
        if (spec.name == "age") v = std::clamp(std::round(v), 18.0, 100.0);
        v = clamp_to(v, spec.range);
      }
      std::fill(e.columns[c].begin(), e.columns[c].end(), v);
    }

    // Standardized AR(1) paths; linked analytes borrow their source's path.
    std::vector<std::vector<double>> z(analytes.size(), std::vector<double>(static_cast<std::size_t>(los)));
    for (std::size_t a = 0; a < analytes.size(); ++a) {
      if (!analytes[a].link.empty()) continue;
      const double offset = cfg.baseline_sd * standard_normal(rng);
      double state = standard_normal(rng);
      for (int t = 0; t < los; ++t) {
        if (t > 0) state = phi * state + innovation * standard_normal(rng);
        z[a][static_cast<std::size_t>(t)] = offset + state;
      }
    }
    for (std::size_t a = 0; a < analytes.size(); ++a) {
      if (analytes[a].link.empty()) continue;
      const auto src = static_cast<std::size_t>(
          std::find_if(analytes.begin(), analytes.end(), [&](const Analyte& b) { return b.name == analytes[a].link; }) -
          analytes.begin());
      for (int t = 0; t < los; ++t) {
        z[a][static_cast<std::size_t>(t)] = cfg.link_correlation * z[src][static_cast<std::size_t>(t)] + link_rest * standard_normal(rng);
      }
    }

    for (std::size_t a = 0; a < analytes.size(); ++a) {
      const auto& an = analytes[a];
      const auto drift_it = cfg.drift.find(an.name);
      const double drift = drift_it == cfg.drift.end() ? 0.0 : drift_it->second;
      for (int t = 0; t < los; ++t) {
        const auto r = static_cast<std::size_t>(t);
        double ramp = 0.0;
        if (onset && drift != 0.0) {
          ramp = std::clamp(static_cast<double>(t - (*onset - cfg.lead_hours)) / cfg.lead_hours, 0.0, 1.0);
        }
        const double v = an.mean + an.sd * (z[a][r] + drift * ramp);
        const double lo = v - std::abs(standard_normal(rng)) * cfg.spread_sd * an.sd;
        const double hi = v + std::abs(standard_normal(rng)) * cfg.spread_sd * an.sd;
        for (auto c : an.min_cols) e.columns[c][r] = clamp_to(lo, an.range);
        for (auto c : an.max_cols) e.columns[c][r] = clamp_to(hi, an.range);
        for (auto c : an.direct_cols) e.columns[c][r] = clamp_to(v, an.range);
      }
    }
    out.truth[i] = {id, septic, onset};
    out.cohort.encounters[i] = std::move(e);
  }
  out.cohort.record("synth", 0, 0,
                    "seed=" + std::to_string(cfg.seed) + " encounters=" + std::to_string(cfg.n_encounters));
  out.cohort = inject_missingness(out.cohort, cfg.missingness, cfg.seed);
  return out;
}

CohortFrame inject_missingness(const CohortFrame& cohort, const std::map<std::string, double>& rates,
                               std::uint64_t seed) {
  const auto& schema = cohort.schema;
  // Column groups masked together: vital/lab variants of one analyte share a
  // draw, every other column draws alone.
  struct Group {
    double rate;
    std::vector<std::size_t> cols;
  };
  std::vector<Group> groups;
  std::map<std::string, std::size_t> by_analyte;
  for (std::size_t c = 0; c < schema.value_count(); ++c) {
    const auto& spec = schema.value_column(c);
    const auto it = rates.find(std::string(to_string(spec.role)));
    if (it == rates.end()) continue;
    if (spec.role == Role::vital || spec.role == Role::lab) {
      auto [g, inserted] = by_analyte.emplace(spec.analyte(), groups.size());
      if (inserted) groups.push_back({it->second, {}});
      groups[g->second].cols.push_back(c);
    } else {
      groups.push_back({it->second, {c}});
    }
  }
  CohortFrame out = cohort;
  const auto n = static_cast<std::ptrdiff_t>(out.encounters.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    auto& e = out.encounters[i];
    auto rng = make_rng(seed, "missingness", static_cast<std::uint64_t>(e.id));
    for (std::size_t r = 0; r < e.rows(); ++r) {
      for (const auto& g : groups) {
        if (uniform01(rng) < g.rate) {
          for (auto c : g.cols) e.columns[c][r] = kMissing;
        }
      }
    }
  }
  out.record("inject_missingness", cohort.encounters.size(), cohort.total_rows());
  return out;
}

void write_ground_truth(std::ostream& out, const std::vector<GroundTruth>& truth) {
  out << "encounter_id,septic,onset_hour\n";
  for (const auto& g : truth) {
    out << g.encounter_id << ',' << (g.septic ? 1 : 0) << ',';
    if (g.onset_hour) out << *g.onset_hour;
    out << '\n';
  }
}

}  // namespace sepsis
