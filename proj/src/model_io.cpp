#include <json.hpp>

#include "labelflip/survival.hpp"

namespace labelflip::survival {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "labelflip-survival-model";
constexpr int kVersion = 1;

json features_json(const std::vector<Feature>& fs) {
  json out = json::array();
  for (const auto f : fs) out.push_back(to_string(f));
  return out;
}

std::vector<Feature> features_from(const json& j) {
  std::vector<Feature> out;
  for (const auto& f : j) out.push_back(parse_feature(f.get<std::string>()));
  return out;
}

}  // namespace

std::string serialize_model(const FusionModel& m) {
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["bins"] = {{"short_below", m.bins.short_below}, {"long_above", m.bins.long_above}};
  j["override_prob"] = m.override_prob;
  j["override_days"] = m.override_days;
  j["ols"] = {{"features", features_json(m.ols.features)},
              {"coefficients", m.ols.coefficients},
              {"cap_days", m.ols.cap_days}};

  const auto& cfg = m.forest.config;
  json trees = json::array();
  for (const auto& t : m.forest.trees) {
    // Node layout: [feature, threshold, left, right, p_short, p_mid, p_long].
    json nodes = json::array();
    for (const auto& n : t.nodes) {
      nodes.push_back({n.feature, n.threshold, n.left, n.right, n.proportions[0], n.proportions[1],
                       n.proportions[2]});
    }
    trees.push_back(std::move(nodes));
  }
  j["forest"] = {{"seed", cfg.seed},
                 {"tree_count", cfg.trees},
                 {"max_depth", cfg.max_depth},
                 {"features", features_json(cfg.features)},
                 {"trees", std::move(trees)}};
  return j.dump(1) + "\n";
}

FusionModel deserialize_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("survival model is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat) throw Error("not a survival model file");
    if (j.at("version").get<int>() != kVersion)
      throw Error("unsupported survival model version " + j.at("version").dump());

    FusionModel m;
    m.bins.short_below = j.at("bins").at("short_below").get<double>();
    m.bins.long_above = j.at("bins").at("long_above").get<double>();
    m.override_prob = j.at("override_prob").get<double>();
    m.override_days = j.at("override_days").get<std::array<double, 3>>();

    const auto& o = j.at("ols");
    m.ols.features = features_from(o.at("features"));
    m.ols.coefficients = o.at("coefficients").get<std::vector<double>>();
    m.ols.cap_days = o.at("cap_days").get<double>();
    if (m.ols.coefficients.size() != m.ols.features.size() + 1)
      throw Error("OLS coefficient count does not match its feature list");

    const auto& f = j.at("forest");
    auto& cfg = m.forest.config;
    cfg.seed = f.at("seed").get<std::uint64_t>();
    cfg.trees = f.at("tree_count").get<std::size_t>();
    cfg.max_depth = f.at("max_depth").get<int>();
    cfg.features = features_from(f.at("features"));
    for (const auto& jt : f.at("trees")) {
      DecisionTree t;
      for (const auto& jn : jt) {
        TreeNode n;
        n.feature = jn.at(0).get<int>();
        n.threshold = jn.at(1).get<double>();
        n.left = jn.at(2).get<int>();
        n.right = jn.at(3).get<int>();
        n.proportions = {jn.at(4).get<double>(), jn.at(5).get<double>(), jn.at(6).get<double>()};
        // Children always follow their parent, which also rules out cycles.
        const auto count = static_cast<int>(jt.size());
        const auto self = static_cast<int>(t.nodes.size());
        if (n.feature >= static_cast<int>(cfg.features.size()) ||
            (n.feature >= 0 && (n.left <= self || n.right <= self || n.left >= count || n.right >= count)))
          throw Error("corrupt tree node in survival model");
        t.nodes.push_back(n);
      }
      if (t.nodes.empty()) throw Error("empty tree in survival model");
      m.forest.trees.push_back(std::move(t));
    }
    if (m.forest.trees.size() != cfg.trees) throw Error("tree count does not match tree_count");
    return m;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed survival model: ") + e.what());
  }
}

}  // namespace labelflip::survival
