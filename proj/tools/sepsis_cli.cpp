#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sepsis/ingest.hpp"
#include "sepsis/pipeline.hpp"

namespace fs = std::filesystem;
using namespace sepsis;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string output;
  std::string input;
  bool quiet = false;
};

RunConfig load_config(const Options& o) {
  RunConfig c = o.config.empty() ? RunConfig::parse("") : RunConfig::load(o.config);
  if (o.seed) c.set_seed(*o.seed);
  if (!o.output.empty()) c.output = o.output;
  if (!o.input.empty()) c.input = o.input;
  c.validate();
  return c;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
}

// Input cohort from [paths] input, or a synthetic one when it is empty.
CohortFrame source_cohort(const RunConfig& c, const FeatureSchema& schema) {
  if (c.input.empty()) return generate_cohort(schema, c.synth).cohort;
  std::ifstream in(c.input, std::ios::binary);
  if (!in) throw ValidationError("cannot open input cohort '" + c.input.string() + "'");
  return read_wide_csv(in, schema);
}

std::string cohort_csv(const CohortFrame& cohort) {
  std::ostringstream out;
  write_wide_csv(out, cohort);
  return out.str();
}

int cmd_synth(const Options& o) {
  const auto c = load_config(o);
  const auto r = generate_cohort(c.load_schema(), c.synth);
  write_file(c.output / "cohort.csv", cohort_csv(r.cohort));
  std::ostringstream gt;
  write_ground_truth(gt, r.truth);
  write_file(c.output / "ground_truth.csv", gt.str());
  std::cout << "wrote " << r.cohort.encounters.size() << " encounters (" << r.cohort.total_rows() << " rows) to "
            << c.output.string() << "\n";
  return 0;
}

int cmd_ingest(const Options& o) {
  const auto c = load_config(o);
  const auto cohort = source_cohort(c, c.load_schema());
  const auto violations = validate_cohort(cohort);
  nlohmann::ordered_json j;
  j["encounters"] = cohort.encounters.size();
  j["rows"] = cohort.total_rows();
  j["data_sha256"] = cohort.data_digest();
  auto v = nlohmann::ordered_json::array();
  for (const auto& x : violations) v.push_back({{"encounter_id", x.encounter_id}, {"column", x.column}, {"reason", x.reason}});
  j["violations"] = std::move(v);
  write_file(c.output / "ingest_report.json", j.dump(1) + "\n");
  if (!violations.empty()) {
    throw ValidationError(std::to_string(violations.size()) + " cohort violations; see ingest_report.json");
  }
  std::cout << cohort.encounters.size() << " encounters valid\n";
  return 0;
}

int cmd_clean(const Options& o) {
  const auto c = load_config(o);
  const auto r = apply_cohort_filters(source_cohort(c, c.load_schema()), c.cleaning);
  write_file(c.output / "cleaned.csv", cohort_csv(r.cohort));
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& e : r.audit.entries) {
    j.push_back({{"rule", e.rule}, {"encounters_removed", e.encounters_removed}, {"rows_removed", e.rows_removed}});
  }
  write_file(c.output / "cleaning_audit.json", j.dump(1) + "\n");
  std::cout << r.cohort.encounters.size() << " encounters after cleaning\n";
  return 0;
}

int cmd_run(const Options& o, StopAfter until) {
  const auto c = load_config(o);
  const auto r = run_pipeline(c, o.quiet ? nullptr : &std::clog, until);
  std::cout << "bookkeeping " << r.bookkeeping.identity_text() << "\n";
  if (until == StopAfter::all) {
    const auto& best = r.test_sweep.panels[r.test_sweep.best_index];
    std::cout << "test best threshold " << best.threshold << " normalized utility "
              << (best.normalized_utility ? std::to_string(*best.normalized_utility) : "n/a") << " F1 "
              << (best.f1 ? std::to_string(*best.f1) : "n/a") << "\n";
  }
  std::cout << "manifest " << (r.output_dir / "manifest.txt").string() << "\n";
  return 0;
}

struct LoadedModels {
  gbdt::ModelArtifact full;
  std::optional<gbdt::ModelArtifact> nonstat;
};

LoadedModels load_models(const RunConfig& c) {
  if (c.model_full.empty()) throw ConfigError("[paths] model_full is required");
  LoadedModels m{gbdt::load_model(c.model_full), std::nullopt};
  if (!c.model_nonstat.empty()) m.nonstat = gbdt::load_model(c.model_nonstat);
  return m;
}

FeatureMatrix matrix_for(const RunConfig& c, const gbdt::ModelArtifact& model, bool keep_short) {
  const auto schema = c.load_schema();
  auto rules = c.cleaning;
  if (keep_short) rules.min_stay_hours = 1;
  const auto cleaned = apply_cohort_filters(source_cohort(c, schema), rules);
  const auto plan = plan_from_model(model, schema, c);
  return build_matrix(prepare_cohort(cleaned.cohort, plan, c.bands()), plan).matrix;
}

int cmd_predict(const Options& o) {
  const auto c = load_config(o);
  const auto models = load_models(c);
  const auto matrix = matrix_for(c, models.full, models.nonstat.has_value());
  const auto routed =
      route_and_predict(matrix, models.full, models.nonstat ? &*models.nonstat : nullptr, c.routing);
  write_file(c.output / "predictions.csv", predictions_csv(routed.series));
  std::cout << routed.summary.full_rows << " rows scored by the full model, " << routed.summary.nonstat_rows
            << " by the non-stat model\n";
  return 0;
}

std::vector<PredictionSeries> read_predictions(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open predictions '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  if (line.rfind("encounter_id,hour,label,probability", 0) != 0) {
    throw ParseError(1, "expected header encounter_id,hour,label,probability[,model]");
  }
  std::vector<PredictionSeries> out;
  std::size_t no = 1;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() < 4) throw ParseError(no, "expected at least 4 fields");
    EncounterId id;
    int hour, label;
    double p;
    try {
      id = std::stoll(f[0]);
      hour = std::stoi(f[1]);
      label = std::stoi(f[2]);
      p = std::stod(f[3]);
    } catch (const std::exception&) {
      throw ParseError(no, "non-numeric field");
    }
    if (out.empty() || out.back().encounter_id != id) {
      PredictionSeries s;
      s.encounter_id = id;
      s.start_hour = hour;
      if (f.size() > 4) s.model = f[4];
      out.push_back(std::move(s));
    } else if (hour != out.back().start_hour + static_cast<int>(out.back().probabilities.size())) {
      throw ParseError(no, "hours of an encounter must be consecutive");
    }
    out.back().labels.push_back(static_cast<std::uint8_t>(label != 0));
    out.back().probabilities.push_back(p);
  }
  return out;
}

int cmd_evaluate(const Options& o) {
  const auto c = load_config(o);
  if (c.predictions.empty()) throw ConfigError("[paths] predictions is required");
  const auto preds = read_predictions(c.predictions);
  const auto sweep = threshold_sweep(preds, c.thresholds, c.utility, c.success_window);
  write_file(c.output / "evaluation.json", evaluation_report_json(sweep, c.utility, preds));
  const auto& best = sweep.panels[sweep.best_index];
  std::cout << "best threshold " << best.threshold << " normalized utility "
            << (best.normalized_utility ? std::to_string(*best.normalized_utility) : "n/a") << "\n";
  return 0;
}

int cmd_explain(const Options& o) {
  const auto c = load_config(o);
  const auto models = load_models(c);
  const auto matrix = matrix_for(c, models.full, false);
  std::vector<std::size_t> rows;
  const auto take = std::min(matrix.rows(), c.explain_rows);
  for (std::size_t i = 0; i < take; ++i) rows.push_back(i * matrix.rows() / take);
  const auto rep = explain_report(models.full, matrix.data.select_rows(rows), c.top_k);
  write_file(c.output / "explain.json", explain_report_json(rep));
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "top " << rep.top.size() << " features carry " << rep.top_percent << "% of the attribution\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Early sepsis prediction pipeline"};
  app.require_subcommand(1);
  Options opt;

  struct Command {
    const char* name;
    const char* help;
    std::function<int()> run;
  };
  const std::vector<Command> commands = {
      {"synth", "Generate a synthetic cohort (cohort.csv, ground_truth.csv)", [&] { return cmd_synth(opt); }},
      {"ingest", "Read and validate the input cohort (ingest_report.json)", [&] { return cmd_ingest(opt); }},
      {"clean", "Apply the cohort filters (cleaned.csv, cleaning_audit.json)", [&] { return cmd_clean(opt); }},
      {"features", "Run through feature assembly (prune, selection, bookkeeping reports)",
       [&] { return cmd_run(opt, StopAfter::features); }},
      {"train", "Run through model training (models and loss traces)", [&] { return cmd_run(opt, StopAfter::train); }},
      {"predict", "Score the input cohort with saved models (predictions.csv)", [&] { return cmd_predict(opt); }},
      {"evaluate", "Threshold sweep over a predictions file (evaluation.json)", [&] { return cmd_evaluate(opt); }},
      {"explain", "Attribution report for a saved model (explain.json)", [&] { return cmd_explain(opt); }},
      {"run", "Full pipeline with manifest", [&] { return cmd_run(opt, StopAfter::all); }},
  };
  std::map<CLI::App*, const Command*> by_app;
  for (const auto& cmd : commands) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("--config", opt.config, "Run config file; defaults apply when omitted");
    sub->add_option("--seed", opt.seed, "Run seed; overrides the config's seed");
    sub->add_option("--output", opt.output, "Output directory; overrides [paths] output");
    sub->add_option("--input", opt.input, "Wide CSV cohort; overrides [paths] input");
    sub->add_flag("--quiet", opt.quiet, "Do not print stage names");
    by_app[sub] = &cmd;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    for (auto* sub : app.get_subcommands()) return by_app.at(sub)->run();
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
