#include <algorithm>
#include <fstream>
#include <sstream>

#include "sepsis/pipeline.hpp"
#include "sepsis/text_config.hpp"

namespace sepsis {
namespace {

namespace fs = std::filesystem;

void reject_unknown(const ConfigTable& t, const std::vector<std::string>& known) {
  const auto extra = t.unknown_keys(known);
  if (!extra.empty()) {
    const std::string where = t.name().empty() ? "top level" : "[" + t.name() + "]";
    throw ConfigError("config " + where + ": unknown key '" + extra.front() + "'");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

int as_int(const ConfigTable& t, const std::string& key, int fallback) {
  return static_cast<int>(t.integer_or(key, fallback));
}

const std::vector<std::string> kTrainKeys = {
    "rounds",    "learning_rate",  "lr_decay_factor", "lr_decay_every",        "max_depth", "max_bins",
    "min_child_weight", "l2_lambda", "subsample_rows", "early_stopping_rounds", "pos_weight"};

gbdt::TrainParams read_train(const ConfigTable& t, const std::string& prefix, gbdt::TrainParams p) {
  auto key = [&](const char* k) { return prefix + k; };
  p.rounds = as_int(t, key("rounds"), p.rounds);
  p.initial_learning_rate = t.number_or(key("learning_rate"), p.initial_learning_rate);
  p.lr_decay_factor = t.number_or(key("lr_decay_factor"), p.lr_decay_factor);
  p.lr_decay_every = as_int(t, key("lr_decay_every"), p.lr_decay_every);
  p.max_depth = as_int(t, key("max_depth"), p.max_depth);
  p.max_bins = as_int(t, key("max_bins"), p.max_bins);
  p.min_child_weight = t.number_or(key("min_child_weight"), p.min_child_weight);
  p.l2_lambda = t.number_or(key("l2_lambda"), p.l2_lambda);
  p.subsample_rows = t.number_or(key("subsample_rows"), p.subsample_rows);
  if (t.has(key("early_stopping_rounds"))) p.early_stopping_rounds = as_int(t, key("early_stopping_rounds"), 0);
  p.pos_weight = t.number_or(key("pos_weight"), p.pos_weight);
  return p;
}

}  // namespace

void RoutingPolicy::validate() const {
  if (min_hours_for_stats < 1) throw ConfigError("routing: min_hours_for_stats must be >= 1");
}

RunConfig RunConfig::parse(const std::string& text, const fs::path& base_dir) {
  const auto doc = ConfigDocument::parse(text);
  for (const auto& name : doc.section_names()) {
    static const std::vector<std::string> known = {"",       "paths", "schema", "cleaning", "features",
                                                   "train",  "eval",  "routing", "synth"};
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      throw ConfigError("config: unknown section [" + name + "]");
    }
  }
  RunConfig c;
  c.source_text = text;

  const auto& top = doc.section("");
  reject_unknown(top, {"seed"});

  const auto& paths = doc.section("paths");
  reject_unknown(paths, {"input", "output", "model_full", "model_nonstat", "predictions"});
  c.input = resolve(base_dir, paths.string_or("input", ""));
  c.output = resolve(base_dir, paths.string_or("output", "out"));
  c.model_full = resolve(base_dir, paths.string_or("model_full", ""));
  c.model_nonstat = resolve(base_dir, paths.string_or("model_nonstat", ""));
  c.predictions = resolve(base_dir, paths.string_or("predictions", ""));

  const auto& schema = doc.section("schema");
  reject_unknown(schema, {"path", "band_table"});
  c.schema_path = resolve(base_dir, schema.string_or("path", ""));
  c.band_table = resolve(base_dir, schema.string_or("band_table", ""));

  const auto& cl = doc.section("cleaning");
  reject_unknown(cl, {"min_stay_hours", "max_stay_hours", "max_age_years", "post_discharge_grace_hours"});
  c.cleaning.min_stay_hours = as_int(cl, "min_stay_hours", c.cleaning.min_stay_hours);
  c.cleaning.max_stay_hours = as_int(cl, "max_stay_hours", c.cleaning.max_stay_hours);
  c.cleaning.max_age_years = cl.number_or("max_age_years", c.cleaning.max_age_years);
  c.cleaning.post_discharge_grace_hours =
      as_int(cl, "post_discharge_grace_hours", c.cleaning.post_discharge_grace_hours);

  const auto& ft = doc.section("features");
  reject_unknown(ft, {"window_hours", "statistics", "label_horizon", "impute", "ward_cutoff", "select",
                      "selection_count", "selection_validation_fraction", "selection_repeats",
                      "selection_rounds", "selection_max_depth", "selection_learning_rate",
                      "selection_max_bins"});
  {
    std::vector<std::string> names;
    for (auto s : c.window.statistics) names.emplace_back(to_string(s));
    c.window = WindowSpec::from_names(as_int(ft, "window_hours", c.window.window_hours),
                                      ft.strings_or("statistics", names));
  }
  c.label_horizon = as_int(ft, "label_horizon", c.label_horizon);
  c.impute = ImputePolicy::from_name(ft.string_or("impute", "retrospective"));
  c.ward_cutoff = ft.number_or("ward_cutoff", c.ward_cutoff);
  c.select_features = ft.boolean_or("select", true);
  if (ft.has("selection_count")) c.selection.forced_count = as_int(ft, "selection_count", 0);
  c.selection.validation_fraction = ft.number_or("selection_validation_fraction", c.selection.validation_fraction);
  c.selection.repeats = as_int(ft, "selection_repeats", c.selection.repeats);
  c.selection.rounds = as_int(ft, "selection_rounds", c.selection.rounds);
  c.selection.max_depth = as_int(ft, "selection_max_depth", c.selection.max_depth);
  c.selection.learning_rate = ft.number_or("selection_learning_rate", c.selection.learning_rate);
  c.selection.max_bins = as_int(ft, "selection_max_bins", c.selection.max_bins);

  const auto& tr = doc.section("train");
  {
    std::vector<std::string> known = {"train_fraction"};
    for (const auto& k : kTrainKeys) {
      known.push_back(k);
      known.push_back("nonstat." + k);
    }
    reject_unknown(tr, known);
  }
  c.train_fraction = tr.number_or("train_fraction", c.train_fraction);
  c.full_params = read_train(tr, "", c.full_params);
  c.nonstat_params = read_train(tr, "nonstat.", c.full_params);

  const auto& ev = doc.section("eval");
  reject_unknown(ev, {"thresholds", "success_window", "dt_early", "dt_optimal", "dt_late", "max_u_tp", "u_fp",
                      "min_u_fn", "u_tn", "explain_rows", "top_k"});
  c.thresholds = ev.numbers_or("thresholds", c.thresholds);
  c.success_window = as_int(ev, "success_window", c.success_window);
  c.utility.dt_early = as_int(ev, "dt_early", c.utility.dt_early);
  c.utility.dt_optimal = as_int(ev, "dt_optimal", c.utility.dt_optimal);
  c.utility.dt_late = as_int(ev, "dt_late", c.utility.dt_late);
  c.utility.max_u_tp = ev.number_or("max_u_tp", c.utility.max_u_tp);
  c.utility.u_fp = ev.number_or("u_fp", c.utility.u_fp);
  c.utility.min_u_fn = ev.number_or("min_u_fn", c.utility.min_u_fn);
  c.utility.u_tn = ev.number_or("u_tn", c.utility.u_tn);
  const auto explain_rows = ev.integer_or("explain_rows", static_cast<long long>(c.explain_rows));
  const auto top_k = ev.integer_or("top_k", static_cast<long long>(c.top_k));
  if (explain_rows < 0 || top_k < 0) throw ConfigError("[eval] explain_rows and top_k must be >= 0");
  c.explain_rows = static_cast<std::size_t>(explain_rows);
  c.top_k = static_cast<std::size_t>(top_k);

  const auto& rt = doc.section("routing");
  reject_unknown(rt, {"min_hours_for_stats", "nonstat_model"});
  c.routing.min_hours_for_stats = as_int(rt, "min_hours_for_stats", c.routing.min_hours_for_stats);
  c.use_nonstat_model = rt.boolean_or("nonstat_model", true);

  const auto& sy = doc.section("synth");
  {
    std::vector<std::string> known = {"n_encounters", "prevalence", "los_median_hours", "los_sigma",
                                      "los_min_hours", "los_max_hours", "lead_hours", "one_hour_fraction",
                                      "ar_coefficient", "baseline_sd", "spread_sd", "link_correlation",
                                      "prospective_encounters", "prospective_one_hour_fraction"};
    for (const auto& [k, v] : sy.values()) {
      if (k.rfind("missing.", 0) == 0 || k.rfind("drift.", 0) == 0) known.push_back(k);
    }
    reject_unknown(sy, known);
  }
  auto& s = c.synth;
  const auto n = sy.integer_or("n_encounters", static_cast<long long>(s.n_encounters));
  if (n < 1) throw ConfigError("[synth] n_encounters must be >= 1");
  s.n_encounters = static_cast<std::size_t>(n);
  s.prevalence = sy.number_or("prevalence", s.prevalence);
  s.los_median_hours = sy.number_or("los_median_hours", s.los_median_hours);
  s.los_sigma = sy.number_or("los_sigma", s.los_sigma);
  s.los_min_hours = as_int(sy, "los_min_hours", s.los_min_hours);
  s.los_max_hours = as_int(sy, "los_max_hours", s.los_max_hours);
  s.lead_hours = as_int(sy, "lead_hours", s.lead_hours);
  s.one_hour_fraction = sy.number_or("one_hour_fraction", s.one_hour_fraction);
  s.ar_coefficient = sy.number_or("ar_coefficient", s.ar_coefficient);
  s.baseline_sd = sy.number_or("baseline_sd", s.baseline_sd);
  s.spread_sd = sy.number_or("spread_sd", s.spread_sd);
  s.link_correlation = sy.number_or("link_correlation", s.link_correlation);
  for (const auto& [k, v] : sy.values()) {
    if (k.rfind("missing.", 0) == 0) s.missingness[k.substr(8)] = sy.number(k);
    if (k.rfind("drift.", 0) == 0) s.drift[k.substr(6)] = sy.number(k);
  }
  const auto pe = sy.integer_or("prospective_encounters", 0);
  if (pe < 0) throw ConfigError("[synth] prospective_encounters must be >= 0");
  c.prospective_encounters = static_cast<std::size_t>(pe);
  c.prospective_one_hour_fraction = sy.number_or("prospective_one_hour_fraction", c.prospective_one_hour_fraction);

  const auto seed = top.integer_or("seed", 0);
  if (seed < 0) throw ConfigError("config: seed must be >= 0");
  c.set_seed(static_cast<std::uint64_t>(seed));
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  synth.seed = stream_seed(s, "synth");
  selection.seed = stream_seed(s, "selection");
  full_params.seed = stream_seed(s, "train", 0);
  nonstat_params.seed = stream_seed(s, "train", 1);
}

void RunConfig::validate() const {
  auto require_file = [](const fs::path& p, const char* what) {
    if (!p.empty() && !fs::is_regular_file(p)) {
      throw ValidationError(std::string(what) + " '" + p.string() + "' does not exist");
    }
  };
  require_file(schema_path, "schema file");
  require_file(band_table, "band table");
  require_file(input, "input cohort");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must be in (0, 1)");
  cleaning.validate();
  window.validate();
  if (label_horizon < 0) throw ConfigError("label_horizon must be >= 0");
  if (!(ward_cutoff > 0.0)) throw ConfigError("ward_cutoff must be > 0");
  if (!(selection.validation_fraction > 0.0 && selection.validation_fraction < 1.0)) {
    throw ConfigError("selection_validation_fraction must be in (0, 1)");
  }
  if (selection.repeats < 1 || selection.rounds < 1) throw ConfigError("selection repeats and rounds must be >= 1");
  if (selection.forced_count && *selection.forced_count < 0) throw ConfigError("selection_count must be >= 0");
  full_params.validate();
  nonstat_params.validate();
  utility.validate();
  if (success_window < 0) throw ConfigError("success_window must be >= 0");
  if (thresholds.empty()) throw ConfigError("at least one threshold is required");
  routing.validate();
  if (input.empty()) synth.validate();
  if (!(prospective_one_hour_fraction >= 0.0 && prospective_one_hour_fraction <= 1.0)) {
    throw ConfigError("prospective_one_hour_fraction must be in [0, 1]");
  }
}

FeatureSchema RunConfig::load_schema() const {
  return schema_path.empty() ? FeatureSchema::load_default() : FeatureSchema::load(schema_path);
}

const BandTable& RunConfig::bands() const {
  if (band_table.empty()) return BandTable::shipped();
  if (!bands_) bands_ = std::make_shared<BandTable>(BandTable::load(band_table));
  return *bands_;
}

}  // namespace sepsis
