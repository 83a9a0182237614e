#include "grbb/model_file.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace grbb {
namespace {

using json = nlohmann::json;

constexpr const char* kFormatName = "grbb-model";

json config_to_json(const TrainConfig& cfg) {
  json j;
  j["learning_rate"] = cfg.learning_rate;
  j["num_trees"] = cfg.num_trees;
  j["max_depth"] = cfg.max_depth;
  j["mu"] = cfg.mu;
  j["lambda"] = cfg.lambda;
  j["neighbor_count"] = cfg.neighbor_count;
  j["kernel"] = cfg.kernel.kind == KernelSpec::Kind::binary ? "binary" : "heat";
  j["bandwidth"] = cfg.kernel.bandwidth ? json(*cfg.kernel.bandwidth) : json(nullptr);
  j["metric"] = cfg.metric.kind == MetricSpec::Kind::euclidean ? "euclidean" : "standardized";
  j["ridge"] = cfg.ridge;
  j["charging"] = to_string(cfg.charging);
  j["seed"] = cfg.seed;
  return j;
}

TrainConfig config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.num_trees = j.at("num_trees").get<std::size_t>();
  cfg.max_depth = j.at("max_depth").get<int>();
  cfg.mu = j.at("mu").get<double>();
  cfg.lambda = j.at("lambda").get<double>();
  cfg.neighbor_count = j.at("neighbor_count").get<std::size_t>();
  const auto kernel = j.at("kernel").get<std::string>();
  if (kernel != "binary" && kernel != "heat") throw std::invalid_argument("unknown kernel '" + kernel + "'");
  cfg.kernel.kind = kernel == "binary" ? KernelSpec::Kind::binary : KernelSpec::Kind::heat;
  if (!j.at("bandwidth").is_null()) cfg.kernel.bandwidth = j.at("bandwidth").get<double>();
  const auto metric = j.at("metric").get<std::string>();
  if (metric != "euclidean" && metric != "standardized") throw std::invalid_argument("unknown metric '" + metric + "'");
  cfg.metric.kind = metric == "euclidean" ? MetricSpec::Kind::euclidean : MetricSpec::Kind::standardized;
  cfg.ridge = j.at("ridge").get<double>();
  cfg.charging = parse_charging_mode(j.at("charging").get<std::string>());
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

json tree_to_json(const RegressionTree& tree) {
  json feature = json::array();
  json threshold = json::array();
  json left = json::array();
  json right = json::array();
  json value = json::array();
  for (const auto& node : tree.nodes()) {
    feature.push_back(node.feature);
    threshold.push_back(node.threshold);
    left.push_back(node.left);
    right.push_back(node.right);
    value.push_back(node.value);
  }
  return json{{"max_depth", tree.max_depth()}, {"feature", feature}, {"threshold", threshold},
              {"left", left},                  {"right", right},     {"value", value}};
}

RegressionTree tree_from_json(const json& j) {
  const auto feature = j.at("feature").get<std::vector<std::int32_t>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<std::int32_t>>();
  const auto right = j.at("right").get<std::vector<std::int32_t>>();
  const auto value = j.at("value").get<std::vector<double>>();
  const std::size_t count = feature.size();
  if (threshold.size() != count || left.size() != count || right.size() != count || value.size() != count) {
    throw std::invalid_argument("tree node arrays have different lengths");
  }
  std::vector<TreeNode> nodes(count);
  for (std::size_t i = 0; i < count; ++i) nodes[i] = TreeNode{feature[i], threshold[i], left[i], right[i], value[i]};
  return RegressionTree::from_nodes(std::move(nodes), j.at("max_depth").get<int>());
}

}  // namespace

std::string fingerprint_hex(std::uint64_t fingerprint) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fingerprint));
  return buf;
}

std::string serialize_model(const ModelFile& file) {
  json j;
  j["format"] = kFormatName;
  j["version"] = file.version;
  j["trainer"] = to_string(file.model.kind());
  j["config"] = config_to_json(file.config);
  j["bias"] = file.model.bias();
  j["learning_rate"] = file.model.learning_rate();
  j["feature_count"] = file.model.feature_count();
  j["feature_costs"] = file.feature_costs;
  j["training_fingerprint"] = fingerprint_hex(file.training_fingerprint);
  json trees = json::array();
  for (const auto& tree : file.model.trees()) trees.push_back(tree_to_json(tree));
  j["trees"] = std::move(trees);
  return j.dump(1) + "\n";
}

ModelFile deserialize_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model file is not valid JSON: ") + e.what(), 0);
  }
  try {
    if (j.at("format").get<std::string>() != kFormatName) throw ParseError("not a grbb model file", 0);
    ModelFile file;
    file.version = j.at("version").get<int>();
    if (file.version != kModelFormatVersion) {
      throw ParseError("unsupported model format version " + std::to_string(file.version), 0);
    }
    file.config = config_from_json(j.at("config"));
    file.feature_costs = j.at("feature_costs").get<std::vector<double>>();
    const auto hex = j.at("training_fingerprint").get<std::string>();
    file.training_fingerprint = std::stoull(hex, nullptr, 16);
    std::vector<RegressionTree> trees;
    for (const auto& t : j.at("trees")) trees.push_back(tree_from_json(t));
    const auto feature_count = j.at("feature_count").get<std::size_t>();
    for (const auto& tree : trees) {
      if (!tree.used_features().empty() && tree.used_features().back() >= feature_count) {
        throw ParseError("tree references a feature beyond feature_count", 0);
      }
    }
    file.model = Ensemble(std::move(trees), j.at("learning_rate").get<double>(), j.at("bias").get<double>(),
                          parse_trainer_kind(j.at("trainer").get<std::string>()), feature_count);
    return file;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model file: ") + e.what(), 0);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("malformed model file: ") + e.what(), 0);
  }
}

void save_model(const ModelFile& file, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << serialize_model(file);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open model file '" + path + "'", 0);
  std::ostringstream text;
  text << in.rdbuf();
  return deserialize_model(text.str());
}

}  // namespace grbb
