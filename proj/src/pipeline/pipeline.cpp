#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sepsis/checksum.hpp"
#include "sepsis/ingest.hpp"
#include "sepsis/pipeline.hpp"

namespace sepsis {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

bool is_septic(const EncounterSeries& e) {
  return std::any_of(e.labels.begin(), e.labels.end(), [](std::uint8_t l) { return l != 0; });
}

CohortFrame subset(const CohortFrame& cohort, const std::vector<bool>& keep, bool side, const std::string& op) {
  CohortFrame out;
  out.schema = cohort.schema;
  out.provenance = cohort.provenance;
  for (std::size_t i = 0; i < cohort.encounters.size(); ++i) {
    if (keep[i] == side) out.encounters.push_back(cohort.encounters[i]);
  }
  out.record(op, cohort.encounters.size(), cohort.total_rows());
  return out;
}

Json audit_json(const CleaningAudit& audit, const CohortFrame& cleaned) {
  Json j;
  auto rules = Json::array();
  for (const auto& e : audit.entries) {
    rules.push_back({{"rule", e.rule}, {"encounters_removed", e.encounters_removed}, {"rows_removed", e.rows_removed}});
  }
  j["rules"] = std::move(rules);
  j["encounters_after"] = cleaned.encounters.size();
  j["rows_after"] = cleaned.total_rows();
  auto prov = Json::array();
  for (const auto& p : cleaned.provenance) {
    prov.push_back({{"operation", p.operation},
                    {"encounters_before", p.encounters_before},
                    {"encounters_after", p.encounters_after},
                    {"rows_before", p.rows_before},
                    {"rows_after", p.rows_after},
                    {"note", p.note}});
  }
  j["provenance"] = std::move(prov);
  j["data_sha256"] = cleaned.data_digest();
  return j;
}

Json split_side_json(const CohortFrame& c) {
  const auto septic = static_cast<std::size_t>(std::count_if(c.encounters.begin(), c.encounters.end(), is_septic));
  const auto n = c.encounters.size();
  return {{"encounters", n},
          {"septic", septic},
          {"rows", c.total_rows()},
          {"prevalence", n ? static_cast<double>(septic) / static_cast<double>(n) : 0.0}};
}

Json prune_json(const ClusterPruneResult& p, const CorrelationMatrix& corr) {
  Json j;
  j["cutoff"] = p.cutoff;
  j["input_features"] = corr.size();
  j["clusters"] = p.clusters.size();
  auto cl = Json::array();
  for (std::size_t i = 0; i < p.clusters.size(); ++i) {
    cl.push_back({{"representative", p.representatives[i]}, {"members", p.clusters[i]}});
  }
  j["cluster_members"] = std::move(cl);
  auto merges = Json::array();
  for (const auto& m : p.merges) merges.push_back({{"left", m.left}, {"right", m.right}, {"height", m.height}});
  j["merges"] = std::move(merges);
  return j;
}

Json bookkeeping_json(const Bookkeeping& b, const FeatureMatrix& m) {
  Json j;
  j["original"] = b.original;
  j["masks"] = b.masks;
  j["statistical_candidates"] = b.statistical_candidates;
  j["statistical_selected"] = b.statistical_selected;
  j["clinical"] = b.clinical;
  j["demographic"] = b.demographic;
  j["total"] = b.total;
  j["identity"] = b.identity_text();
  j["identity_holds"] = b.identity_holds();
  Json blocks;
  for (const auto& blk : m.blocks) blocks[blk.name] = m.block_names(blk.name);
  j["blocks"] = std::move(blocks);
  return j;
}

Json selection_json(const SelectionResult& s, bool enabled) {
  Json j;
  j["enabled"] = enabled;
  j["train_encounters"] = s.train_encounters;
  j["validation_encounters"] = s.validation_encounters;
  j["selected"] = s.selected;
  auto rows = Json::array();
  for (const auto& r : s.importance) rows.push_back({{"feature", r.name}, {"mean", r.mean}, {"std", r.std}});
  j["importance"] = std::move(rows);
  return j;
}

std::string loss_csv(const gbdt::LossTrace& t) {
  std::ostringstream out;
  out << "round,train,validation\n";
  for (std::size_t i = 0; i < t.train.size(); ++i) {
    out << i << ',' << format_value(t.train[i]) << ',';
    if (i < t.validation.size()) out << format_value(t.validation[i]);
    out << '\n';
  }
  return out.str();
}

Json routing_json(const RoutingSummary& s, const RoutingPolicy& p) {
  return {{"min_hours_for_stats", p.min_hours_for_stats},
          {"full_encounters", s.full_encounters},
          {"full_rows", s.full_rows},
          {"nonstat_encounters", s.nonstat_encounters},
          {"nonstat_rows", s.nonstat_rows}};
}

std::vector<std::string> in_schema_order(const FeatureSchema& schema, const std::vector<std::string>& names) {
  const std::set<std::string> wanted(names.begin(), names.end());
  std::vector<std::string> out;
  for (const auto& n : schema.value_names()) {
    if (wanted.count(n)) out.push_back(n);
  }
  return out;
}

std::vector<std::string> vital_lab_names(const FeatureSchema& schema) {
  std::vector<std::string> out;
  for (std::size_t c = 0; c < schema.value_count(); ++c) {
    const auto r = schema.value_column(c).role;
    if (r == Role::vital || r == Role::lab) out.push_back(schema.value_column(c).name);
  }
  return out;
}

class OutputDir {
 public:
  explicit OutputDir(fs::path root) : root_(std::move(root)) {
    fs::create_directories(root_);
    fs::remove(root_ / "FAILED");
    fs::remove(root_ / "manifest.txt");
  }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(root_ / name, std::ios::binary);
    if (!out) throw Error("cannot write '" + (root_ / name).string() + "'");
    out << content;
    if (!out) throw Error("write failed for '" + (root_ / name).string() + "'");
    files_.insert(name);
  }
  void write_json(const std::string& name, const Json& j) { write(name, j.dump(1) + "\n"); }
  void add(const std::string& name) { files_.insert(name); }
  const fs::path& root() const { return root_; }
  const std::set<std::string>& files() const { return files_; }

 private:
  fs::path root_;
  std::set<std::string> files_;
};

}  // namespace

SplitResult stratified_split(const CohortFrame& cohort, double fraction, std::uint64_t seed) {
  if (cohort.encounters.empty()) throw ValidationError("split: empty cohort");
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split: fraction must be in (0, 1)");
  std::vector<int> cls;
  std::size_t septic = 0;
  for (const auto& e : cohort.encounters) {
    cls.push_back(is_septic(e) ? 1 : 0);
    septic += static_cast<std::size_t>(cls.back());
  }
  const auto nonseptic = cls.size() - septic;
  if (septic < 2 || nonseptic < 2) {
    throw ValidationError("split: each class needs at least 2 encounters (septic " + std::to_string(septic) +
                          ", non-septic " + std::to_string(nonseptic) + ")");
  }
  auto rng = make_rng(seed, "split");
  const auto chosen = stratified_choice(cls, fraction, rng);
  return {subset(cohort, chosen, true, "split_train"), subset(cohort, chosen, false, "split_test")};
}

std::vector<std::string> FeaturePlan::masks() const {
  std::vector<std::string> out;
  for (const auto& b : base) out.push_back("mask_" + b);
  return out;
}

std::vector<std::string> FeaturePlan::candidates() const { return windowed_column_names(base, window); }

CohortFrame prepare_cohort(const CohortFrame& cleaned, const FeaturePlan& plan, const BandTable& bands) {
  auto c = project_columns(cleaned, plan.base);
  c = build_masks(c, plan.base);
  c = impute(c, plan.impute);
  c = append_clinical_features(c, bands);
  return append_windowed_stats(c, plan.base, plan.window);
}

AssembledFeatures build_matrix(const CohortFrame& prepared, const FeaturePlan& plan, bool all_candidates) {
  AssemblySpec spec;
  spec.original = plan.base;
  spec.masks = plan.masks();
  const auto candidates = plan.candidates();
  spec.statistical = all_candidates ? candidates : plan.statistical;
  spec.clinical = clinical_feature_names();
  spec.demographic = plan.demographic;
  spec.label_horizon = plan.label_horizon;
  return assemble_feature_matrix(prepared, spec, candidates.size());
}

FeaturePlan plan_from_model(const gbdt::ModelArtifact& model, const FeatureSchema& schema, const RunConfig& config) {
  FeaturePlan plan;
  plan.window = config.window;
  plan.impute = config.impute;
  plan.label_horizon = config.label_horizon;
  const auto vl = vital_lab_names(schema);
  const std::set<std::string> vital_lab(vl.begin(), vl.end());
  const auto demo = schema.names_with_role(Role::demographic);
  const std::set<std::string> demographic(demo.begin(), demo.end());
  for (const auto& n : model.feature_names) {
    if (vital_lab.count(n)) plan.base.push_back(n);
    if (demographic.count(n)) plan.demographic.push_back(n);
  }
  const auto candidates = plan.candidates();
  const std::set<std::string> names(model.feature_names.begin(), model.feature_names.end());
  for (const auto& c : candidates) {
    if (names.count(c)) plan.statistical.push_back(c);
  }
  return plan;
}

std::string predictions_csv(const std::vector<PredictionSeries>& series) {
  std::ostringstream out;
  out << "encounter_id,hour,label,probability,model\n";
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.probabilities.size(); ++i) {
      out << s.encounter_id << ',' << s.start_hour + static_cast<int>(i) << ',' << int(s.labels[i]) << ','
          << format_value(s.probabilities[i]) << ',' << s.model << '\n';
    }
  }
  return out.str();
}

std::string manifest_line(const fs::path& root, const fs::path& file) {
  const auto rel = fs::relative(file, root).generic_string();
  return rel + " " + std::to_string(fs::file_size(file)) + " " + sha256_file(file);
}

RunResult run_pipeline(const RunConfig& config, std::ostream* log, StopAfter until) {
  std::string stage = "validate_config";
  auto enter = [&](const char* name) {
    stage = name;
    if (log) *log << "[stage] " << name << std::endl;
  };
  // Validation precedes any output so a bad config leaves nothing behind.
  if (log) *log << "[stage] " << stage << std::endl;
  config.validate();
  const auto schema = config.load_schema();
  const auto& bands = config.bands();

  OutputDir out(config.output);
  RunResult res;
  res.output_dir = config.output;
  try {
    out.write("config_echo.txt", config.source_text + (config.source_text.empty() || config.source_text.back() == '\n'
                                                           ? ""
                                                           : "\n") +
                                     "# effective seed " + std::to_string(config.seed) + "\n");

    enter("ingest");
    CohortFrame raw;
    if (config.input.empty()) {
      auto synth = generate_cohort(schema, config.synth);
      raw = std::move(synth.cohort);
      std::ostringstream gt;
      write_ground_truth(gt, synth.truth);
      out.write("ground_truth.csv", gt.str());
    } else {
      std::ifstream in(config.input, std::ios::binary);
      if (!in) throw ValidationError("cannot open input cohort '" + config.input.string() + "'");
      raw = read_wide_csv(in, schema);
    }
    const auto violations = validate_cohort(raw);
    if (!violations.empty()) {
      std::ostringstream msg;
      msg << violations.size() << " cohort violations; first: encounter " << violations.front().encounter_id
          << " column '" << violations.front().column << "': " << violations.front().reason;
      throw ValidationError(msg.str());
    }

    enter("clean");
    auto cleaned = apply_cohort_filters(raw, config.cleaning);
    res.cleaning = cleaned.audit;
    out.write_json("cleaning_audit.json", audit_json(cleaned.audit, cleaned.cohort));

    enter("split");
    auto split = stratified_split(cleaned.cohort, config.train_fraction, stream_seed(config.seed, "split"));
    out.write_json("split.json", {{"train_fraction", config.train_fraction},
                                  {"train", split_side_json(split.train)},
                                  {"test", split_side_json(split.test)}});

    enter("prune");
    const auto vl = vital_lab_names(schema);
    res.correlation = correlation_matrix(split.train, vl);
    res.prune = ward_cluster_prune(res.correlation, config.ward_cutoff, missing_fractions(split.train, vl));
    out.write_json("prune_report.json", prune_json(res.prune, res.correlation));

    enter("features");
    FeaturePlan plan;
    plan.base = in_schema_order(schema, res.prune.representatives);
    plan.demographic = schema.names_with_role(Role::demographic);
    plan.window = config.window;
    plan.impute = config.impute;
    plan.label_horizon = config.label_horizon;
    const auto train_prepared = prepare_cohort(split.train, plan, bands);
    const auto candidates = plan.candidates();

    enter("select");
    if (config.select_features && !candidates.empty()) {
      const auto all = build_matrix(train_prepared, plan, true);
      res.selection = select_statistical_features(all.matrix, candidates, config.selection);
      plan.statistical = res.selection.selected;
    } else {
      plan.statistical = candidates;
      res.selection.selected = candidates;
    }
    out.write_json("selection.json", selection_json(res.selection, config.select_features));

    enter("assemble");
    auto train_features = build_matrix(train_prepared, plan);
    res.bookkeeping = train_features.bookkeeping;
    if (!res.bookkeeping.identity_holds()) {
      throw InvariantError("feature bookkeeping identity fails: " + res.bookkeeping.identity_text());
    }
    out.write_json("feature_bookkeeping.json", bookkeeping_json(res.bookkeeping, train_features.matrix));
    res.train_matrix = std::move(train_features.matrix);
    res.test_matrix = build_matrix(prepare_cohort(split.test, plan, bands), plan).matrix;
    res.plan = plan;

    if (until != StopAfter::features) {
      enter("train");
      res.full = gbdt::fit(res.train_matrix.data, res.train_matrix.shifted_labels, config.full_params);
      gbdt::save_model(res.full.model, out.root() / "model_full.gbdt");
      out.add("model_full.gbdt");
      out.write("loss_full.csv", loss_csv(res.full.trace));
      if (config.use_nonstat_model) {
        std::vector<std::string> keep;
        for (const auto& b : res.train_matrix.blocks) {
          if (b.name == "statistical") continue;
          const auto names = res.train_matrix.block_names(b.name);
          keep.insert(keep.end(), names.begin(), names.end());
        }
        const auto nonstat_matrix = res.train_matrix.select_columns(keep);
        res.nonstat = gbdt::fit(nonstat_matrix.data, nonstat_matrix.shifted_labels, config.nonstat_params);
        gbdt::save_model(res.nonstat->model, out.root() / "model_nonstat.gbdt");
        out.add("model_nonstat.gbdt");
        out.write("loss_nonstat.csv", loss_csv(res.nonstat->trace));
      }
      Json warnings = Json::array();
      for (const auto& w : res.full.trace.warnings) warnings.push_back("full: " + w);
      if (res.nonstat) {
        for (const auto& w : res.nonstat->trace.warnings) warnings.push_back("nonstat: " + w);
      }
      out.write_json("training.json", {{"full_trees", res.full.model.trees.size()},
                                       {"nonstat_trees", res.nonstat ? Json(res.nonstat->model.trees.size()) : Json()},
                                       {"warnings", std::move(warnings)}});
    }

    if (until == StopAfter::all) {
      const gbdt::ModelArtifact* nonstat = res.nonstat ? &res.nonstat->model : nullptr;

      enter("evaluate");
      res.test_predictions = route_and_predict(res.test_matrix, res.full.model, nonstat, config.routing);
      out.write_json("routing_test.json", routing_json(res.test_predictions.summary, config.routing));
      out.write("predictions_test.csv", predictions_csv(res.test_predictions.series));
      res.test_sweep =
          threshold_sweep(res.test_predictions.series, config.thresholds, config.utility, config.success_window);
      out.write("evaluation_test.json",
                evaluation_report_json(res.test_sweep, config.utility, res.test_predictions.series));

      if (config.prospective_encounters > 0) {
        enter("prospective");
        auto pcfg = config.synth;
        pcfg.n_encounters = config.prospective_encounters;
        pcfg.one_hour_fraction = config.prospective_one_hour_fraction;
        pcfg.seed = stream_seed(config.seed, "prospective");
        auto prospective = generate_cohort(schema, pcfg);
        // Prospective encounters are kept however short they are; that is
        // what the non-stat model is for.
        auto rules = config.cleaning;
        rules.min_stay_hours = 1;
        const auto pclean = apply_cohort_filters(prospective.cohort, rules);
        const auto pmatrix = build_matrix(prepare_cohort(pclean.cohort, plan, bands), plan).matrix;
        res.prospective_predictions = route_and_predict(pmatrix, res.full.model, nonstat, config.routing);
        out.write_json("routing_prospective.json", routing_json(res.prospective_predictions->summary, config.routing));
        res.prospective_sweep = threshold_sweep(res.prospective_predictions->series, config.thresholds, config.utility,
                                                config.success_window);
        out.write("evaluation_prospective.json", evaluation_report_json(*res.prospective_sweep, config.utility,
                                                                        res.prospective_predictions->series));
      }

      enter("explain");
      std::vector<std::size_t> rows;
      const auto n = res.test_matrix.rows();
      const auto take = std::min(n, config.explain_rows);
      for (std::size_t i = 0; i < take; ++i) rows.push_back(i * n / take);
      res.explanation = explain_report(res.full.model, res.test_matrix.data.select_rows(rows), config.top_k);
      out.write("explain.json", explain_report_json(res.explanation));
    }

    enter("manifest");
    res.train_cohort = std::move(split.train);
    res.test_cohort = std::move(split.test);
    res.manifest.push_back("seed " + std::to_string(config.seed));
    res.manifest.push_back("config_sha256 " + sha256_hex(config.source_text));
    for (const auto& f : out.files()) res.manifest.push_back(manifest_line(out.root(), out.root() / f));
    std::string text;
    for (const auto& l : res.manifest) text += l + "\n";
    out.write("manifest.txt", text);
  } catch (const std::exception& e) {
    std::ofstream failed(out.root() / "FAILED", std::ios::binary);
    failed << "stage: " << stage << "\ncause: " << e.what() << "\n";
    throw;
  }
  return res;
}

}  // namespace sepsis
