// Parallel kernels against their serial references. Each pair runs on the
// same inputs; compare the two timings per kernel.

#include <benchmark/benchmark.h>

#include "sepsis/features.hpp"
#include "sepsis/gbdt.hpp"
#include "sepsis/kernels.hpp"
#include "sepsis/synth.hpp"
#include "support/fixtures.hpp"

using namespace sepsis;

namespace {

std::vector<std::vector<double>> correlation_input() {
  static const auto cols = [] {
    auto p = fixture::planted(20000, 40, 1, 0.3);
    return p.x.columns;
  }();
  return cols;
}

struct HistInput {
  gbdt::BinnedMatrix binned;
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> rows;
  std::vector<double> g, h;
  std::size_t total = 0;
};

const HistInput& hist_input() {
  static const HistInput in = [] {
    HistInput x;
    auto p = fixture::planted(100000, 60, 2, 0.3);
    x.binned = gbdt::quantile_bin(p.x, 256);
    for (std::size_t f = 0; f < x.binned.features(); ++f) {
      x.offsets.push_back(x.total);
      x.total += x.binned.layout.total_bins(f);
    }
    auto rng = make_rng(2, "bench");
    for (std::uint32_t r = 0; r < x.binned.rows; ++r) {
      x.rows.push_back(r);
      x.g.push_back(standard_normal(rng));
      x.h.push_back(uniform01(rng));
    }
    return x;
  }();
  return in;
}

struct ModelInput {
  fixture::Planted data;
  gbdt::ModelArtifact model;
};

const ModelInput& model_input() {
  static const ModelInput in = [] {
    ModelInput m;
    m.data = fixture::planted(20000, 30, 3, 0.2);
    m.model = gbdt::fit(m.data.x, m.data.y, fixture::quick_params(100, 6)).model;
    return m;
  }();
  return in;
}

const CohortFrame& window_input() {
  static const CohortFrame c = [] {
    SynthConfig cfg;
    cfg.n_encounters = 1000;
    cfg.seed = 4;
    return generate_cohort(FeatureSchema::load_default(), cfg).cohort;
  }();
  return c;
}

std::vector<std::string> window_features() {
  const auto& s = window_input().schema;
  auto v = s.names_with_role(Role::vital);
  const auto l = s.names_with_role(Role::lab);
  v.insert(v.end(), l.begin(), l.end());
  return v;
}

void BM_correlation(benchmark::State& st) {
  const auto cols = correlation_input();
  for (auto _ : st) {
    benchmark::DoNotOptimize(st.range(0) ? kernels::pairwise_correlation_parallel(cols)
                                         : kernels::pairwise_correlation_serial(cols));
  }
}

void BM_histograms(benchmark::State& st) {
  const auto& in = hist_input();
  std::vector<kernels::GradPair> hist(in.total);
  for (auto _ : st) {
    std::fill(hist.begin(), hist.end(), kernels::GradPair{});
    if (st.range(0)) {
      kernels::build_histograms_parallel(in.binned.bins, in.offsets, in.rows, in.g, in.h, hist);
    } else {
      kernels::build_histograms_serial(in.binned.bins, in.offsets, in.rows, in.g, in.h, hist);
    }
    benchmark::DoNotOptimize(hist.data());
  }
}

Execution exec_of(const benchmark::State& st) { return st.range(0) ? Execution::parallel : Execution::serial; }

void BM_predict_margin(benchmark::State& st) {
  const auto& in = model_input();
  for (auto _ : st) benchmark::DoNotOptimize(gbdt::predict_margin(in.model, in.data.x, exec_of(st)));
}

void BM_shap_batch(benchmark::State& st) {
  const auto& in = model_input();
  const auto rows = in.data.x.select_rows([] {
    std::vector<std::size_t> r(500);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = i * 37;
    return r;
  }());
  for (auto _ : st) benchmark::DoNotOptimize(gbdt::shap_batch(in.model, rows, exec_of(st)));
}

void BM_windowed_stats(benchmark::State& st) {
  const auto& c = window_input();
  const auto features = window_features();
  for (auto _ : st) benchmark::DoNotOptimize(append_windowed_stats(c, features, WindowSpec{}, exec_of(st)));
}

}  // namespace

// Argument 0 is the serial reference, 1 the OpenMP version.
BENCHMARK(BM_correlation)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_histograms)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_predict_margin)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_shap_batch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_windowed_stats)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
