#include <algorithm>
#include <array>

#include "sepsis/features.hpp"

namespace sepsis {
namespace {

constexpr std::array<std::string_view, 9> kStatNames = {"delta1", "delta2", "variance", "slope", "energy",
                                                         "mean",   "min",    "max",      "median"};
constexpr std::array<std::string_view, 9> kStatPrefix = {"delta1_", "delta2_", "var_",  "slope_",  "energy_",
                                                          "wmean_",  "wmin_",   "wmax_", "wmedian_"};

double delta(std::span<const double> x, std::size_t t, std::size_t lag) {
  if (t < lag || is_missing(x[t]) || is_missing(x[t - lag])) return kMissing;
  return x[t] - x[t - lag];
}

struct WindowPoints {
  std::array<double, 64> value;
  std::array<double, 64> offset;
  std::size_t n = 0;
};

}  // namespace

WindowStat window_stat_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kStatNames.size(); ++i) {
    if (kStatNames[i] == name) return static_cast<WindowStat>(i);
  }
  if (name == "var") return WindowStat::variance;
  throw ConfigError("unknown window statistic '" + std::string(name) + "'");
}

std::string_view to_string(WindowStat stat) { return kStatNames[static_cast<std::size_t>(stat)]; }

std::string stat_column_name(WindowStat stat, std::string_view feature) {
  return std::string(kStatPrefix[static_cast<std::size_t>(stat)]) + std::string(feature);
}

WindowSpec WindowSpec::from_names(int window_hours, const std::vector<std::string>& names) {
  WindowSpec spec;
  spec.window_hours = window_hours;
  spec.statistics.clear();
  for (const auto& n : names) spec.statistics.push_back(window_stat_from_string(n));
  spec.validate();
  return spec;
}

void WindowSpec::validate() const {
  if (window_hours < 1 || window_hours > 64) throw ConfigError("window_hours must be in [1, 64]");
  for (std::size_t i = 0; i < statistics.size(); ++i) {
    const auto s = statistics[i];
    const bool needs_two = s == WindowStat::variance || s == WindowStat::slope || s == WindowStat::energy;
    if (needs_two && window_hours < 2) {
      throw ConfigError("window_hours must be >= 2 for " + std::string(to_string(s)));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (statistics[j] == s) throw ConfigError("duplicate window statistic " + std::string(to_string(s)));
    }
  }
}

std::vector<std::vector<double>> windowed_stats(std::span<const double> x, const WindowSpec& spec) {
  spec.validate();
  const std::size_t n = x.size();
  const auto w = static_cast<std::size_t>(spec.window_hours);
  std::vector<std::vector<double>> out(spec.statistics.size(), std::vector<double>(n, kMissing));
  WindowPoints pts;
  for (std::size_t t = 0; t < n; ++t) {
    pts.n = 0;
    const std::size_t first = t + 1 >= w ? t + 1 - w : 0;
    for (std::size_t k = first; k <= t; ++k) {
      if (is_missing(x[k])) continue;
      pts.value[pts.n] = x[k];
      pts.offset[pts.n] = static_cast<double>(k - first);
      ++pts.n;
    }
    const double m = static_cast<double>(pts.n);
    double mean = 0.0, var = 0.0, energy = 0.0, slope = 0.0;
    if (pts.n > 0) {
      for (std::size_t i = 0; i < pts.n; ++i) mean += pts.value[i];
      mean /= m;
      double omean = 0.0;
      for (std::size_t i = 0; i < pts.n; ++i) omean += pts.offset[i];
      omean /= m;
      double sxy = 0.0, sxx = 0.0;
      for (std::size_t i = 0; i < pts.n; ++i) {
        const double dv = pts.value[i] - mean;
        const double dof = pts.offset[i] - omean;
        var += dv * dv;
        energy += pts.value[i] * pts.value[i];
        sxy += dof * dv;
        sxx += dof * dof;
      }
      var /= m;
      energy /= m;
      slope = sxx > 0.0 ? sxy / sxx : 0.0;
    }
    for (std::size_t s = 0; s < spec.statistics.size(); ++s) {
      double v = kMissing;
      switch (spec.statistics[s]) {
        case WindowStat::delta1: v = delta(x, t, 1); break;
        case WindowStat::delta2: v = delta(x, t, 2); break;
        case WindowStat::variance: if (pts.n >= 2) v = var; break;
        case WindowStat::slope: if (pts.n >= 2) v = slope; break;
        case WindowStat::energy: if (pts.n >= 2) v = energy; break;
        case WindowStat::mean: if (pts.n >= 1) v = mean; break;
        case WindowStat::min:
          if (pts.n >= 1) v = *std::min_element(pts.value.begin(), pts.value.begin() + pts.n);
          break;
        case WindowStat::max:
          if (pts.n >= 1) v = *std::max_element(pts.value.begin(), pts.value.begin() + pts.n);
          break;
        case WindowStat::median:
          if (pts.n >= 1) {
            std::array<double, 64> tmp = pts.value;
            std::sort(tmp.begin(), tmp.begin() + pts.n);
            v = pts.n % 2 ? tmp[pts.n / 2] : 0.5 * (tmp[pts.n / 2 - 1] + tmp[pts.n / 2]);
          }
          break;
      }
      out[s][t] = v;
    }
  }
  return out;
}

std::vector<std::string> windowed_column_names(const std::vector<std::string>& features, const WindowSpec& spec) {
  std::vector<std::string> names;
  names.reserve(features.size() * spec.statistics.size());
  for (auto s : spec.statistics) {
    for (const auto& f : features) names.push_back(stat_column_name(s, f));
  }
  return names;
}

CohortFrame append_windowed_stats(const CohortFrame& cohort, const std::vector<std::string>& features,
                                  const WindowSpec& spec, Execution exec) {
  spec.validate();
  std::vector<std::size_t> src;
  for (const auto& f : features) src.push_back(cohort.schema.require_value_index(f));
  std::vector<ColumnSpec> extra;
  for (const auto& name : windowed_column_names(features, spec)) {
    ColumnSpec c;
    c.name = name;
    c.role = Role::derived;
    extra.push_back(c);
  }
  CohortFrame out;
  out.schema = cohort.schema.with_appended(extra);
  out.provenance = cohort.provenance;
  out.encounters = cohort.encounters;
  const std::size_t nstat = spec.statistics.size();

  auto one = [&](EncounterSeries& e) {
    std::vector<std::vector<double>> cols(nstat * src.size());
    for (std::size_t f = 0; f < src.size(); ++f) {
      auto stats = windowed_stats(e.columns[src[f]], spec);
      for (std::size_t s = 0; s < nstat; ++s) cols[s * src.size() + f] = std::move(stats[s]);
    }
    for (auto& c : cols) e.columns.push_back(std::move(c));
  };
  const auto n = static_cast<std::ptrdiff_t>(out.encounters.size());
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i) one(out.encounters[i]);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) one(out.encounters[i]);
  }
  out.record("windowed_stats", cohort.encounters.size(), cohort.total_rows(),
             std::to_string(extra.size()) + " columns, window " + std::to_string(spec.window_hours));
  return out;
}

}  // namespace sepsis
