#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "sepsis/checksum.hpp"
#include "sepsis/gbdt.hpp"

namespace sepsis::gbdt {
namespace {

using Json = nlohmann::ordered_json;

constexpr std::string_view kMagic = "sepsis-gbdt";
constexpr int kFormatVersion = 1;

Json params_to_json(const TrainParams& p) {
  Json j;
  j["rounds"] = p.rounds;
  j["initial_learning_rate"] = p.initial_learning_rate;
  j["lr_decay_factor"] = p.lr_decay_factor;
  j["lr_decay_every"] = p.lr_decay_every;
  j["max_depth"] = p.max_depth;
  j["max_bins"] = p.max_bins;
  j["min_child_weight"] = p.min_child_weight;
  j["l2_lambda"] = p.l2_lambda;
  j["subsample_rows"] = p.subsample_rows;
  j["seed"] = p.seed;
  j["early_stopping_rounds"] = p.early_stopping_rounds ? Json(*p.early_stopping_rounds) : Json(nullptr);
  j["pos_weight"] = p.pos_weight;
  return j;
}

TrainParams params_from_json(const Json& j) {
  TrainParams p;
  p.rounds = j.at("rounds").get<int>();
  p.initial_learning_rate = j.at("initial_learning_rate").get<double>();
  p.lr_decay_factor = j.at("lr_decay_factor").get<double>();
  p.lr_decay_every = j.at("lr_decay_every").get<int>();
  p.max_depth = j.at("max_depth").get<int>();
  p.max_bins = j.at("max_bins").get<int>();
  p.min_child_weight = j.at("min_child_weight").get<double>();
  p.l2_lambda = j.at("l2_lambda").get<double>();
  p.subsample_rows = j.at("subsample_rows").get<double>();
  p.seed = j.at("seed").get<std::uint64_t>();
  if (!j.at("early_stopping_rounds").is_null()) p.early_stopping_rounds = j.at("early_stopping_rounds").get<int>();
  p.pos_weight = j.at("pos_weight").get<double>();
  return p;
}

std::string next_line(std::string_view text, std::size_t& pos) {
  const auto end = text.find('\n', pos);
  if (end == std::string_view::npos) throw ValidationError("model file: truncated header");
  std::string line(text.substr(pos, end - pos));
  pos = end + 1;
  return line;
}

}  // namespace

std::string serialize(const ModelArtifact& model) {
  Json body;
  body["format_version"] = kFormatVersion;
  body["base_score"] = model.base_score;
  body["features"] = model.feature_names;
  body["value_bins"] = model.bins.value_bins;
  body["bin_edges"] = model.bins.edges;
  body["params"] = params_to_json(model.params);
  Json trees = Json::array();
  for (const auto& t : model.trees) {
    Json nodes = Json::array();
    for (const auto& n : t.nodes) {
      Json jn;
      if (n.is_leaf()) {
        jn["value"] = n.value;
      } else {
        jn["feature"] = n.feature;
        jn["bin"] = n.bin;
        jn["default_left"] = n.default_left;
        jn["left"] = n.left;
        jn["right"] = n.right;
        jn["gain"] = n.gain;
      }
      if (model.has_cover) jn["cover"] = n.cover;
      nodes.push_back(std::move(jn));
    }
    trees.push_back(Json{{"nodes", std::move(nodes)}});
  }
  body["trees"] = std::move(trees);
  const std::string text = body.dump(1) + "\n";
  std::ostringstream out;
  out << kMagic << "\nformat_version " << kFormatVersion << "\nsha256 " << sha256_hex(text) << "\n" << text;
  return out.str();
}

ModelArtifact deserialize(std::string_view text) {
  std::size_t pos = 0;
  if (next_line(text, pos) != kMagic) throw ValidationError("model file: bad magic line");
  const auto version_line = next_line(text, pos);
  if (version_line.rfind("format_version ", 0) != 0) throw ValidationError("model file: missing format_version");
  const auto version = version_line.substr(15);
  if (version != std::to_string(kFormatVersion)) {
    throw ValidationError("model file: unsupported format version " + version);
  }
  const auto sum_line = next_line(text, pos);
  if (sum_line.rfind("sha256 ", 0) != 0) throw ValidationError("model file: missing checksum");
  const auto body_text = text.substr(pos);
  if (sha256_hex(body_text) != sum_line.substr(7)) throw ValidationError("model file: checksum mismatch");

  Json body;
  try {
    body = Json::parse(body_text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model file: ") + e.what());
  }
  ModelArtifact m;
  try {
    m.format_version = body.at("format_version").get<int>();
    m.base_score = body.at("base_score").get<double>();
    m.feature_names = body.at("features").get<std::vector<std::string>>();
    m.bins.value_bins = body.at("value_bins").get<std::vector<std::uint16_t>>();
    m.bins.edges = body.at("bin_edges").get<std::vector<std::vector<double>>>();
    m.params = params_from_json(body.at("params"));
    for (const auto& jt : body.at("trees")) {
      Tree t;
      for (const auto& jn : jt.at("nodes")) {
        TreeNode n;
        if (jn.contains("feature")) {
          n.feature = jn.at("feature").get<std::int32_t>();
          n.bin = jn.at("bin").get<std::uint16_t>();
          n.default_left = jn.at("default_left").get<bool>();
          n.left = jn.at("left").get<std::int32_t>();
          n.right = jn.at("right").get<std::int32_t>();
          n.gain = jn.at("gain").get<double>();
          if (static_cast<std::size_t>(n.feature) >= m.bins.edges.size()) {
            throw InvariantError("tree node references unknown feature");
          }
          const auto& edges = m.bins.edges[static_cast<std::size_t>(n.feature)];
          n.threshold = n.bin < edges.size() ? edges[n.bin] : std::numeric_limits<double>::infinity();
        } else {
          n.value = jn.at("value").get<double>();
        }
        if (jn.contains("cover")) {
          n.cover = jn.at("cover").get<double>();
        } else {
          m.has_cover = false;
        }
        t.nodes.push_back(n);
      }
      m.trees.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model file: ") + e.what());
  }
  m.check();
  return m;
}

void save_model(const ModelArtifact& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file '" + path.string() + "'");
  out << serialize(model);
}

ModelArtifact load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open model file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

}  // namespace sepsis::gbdt
