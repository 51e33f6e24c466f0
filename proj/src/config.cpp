#include "labelflip/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace labelflip {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  if (!obj.is_object()) throw Error("config: '" + where + "' must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (known.count(it.key()) == 0) throw Error("config: unknown key '" + where + "." + it.key() + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

std::vector<survival::Feature> read_features(const json& j) {
  std::vector<survival::Feature> out;
  for (const auto& f : j) out.push_back(survival::parse_feature(f.get<std::string>()));
  if (out.empty()) throw Error("config: feature lists must not be empty");
  return out;
}

json features_json(const std::vector<survival::Feature>& fs) {
  json out = json::array();
  for (const auto f : fs) out.push_back(survival::to_string(f));
  return out;
}

void apply_json(const json& j, Config& c) {
  reject_unknown(j, {"threads", "refinement", "loss", "survival", "uncertainty", "metrics", "phantom"}, "");
  read(j, "threads", c.threads);

  if (j.contains("refinement")) {
    const auto& r = j.at("refinement");
    reject_unknown(r,
                   {"base_threshold", "fallback_threshold", "confidence_gate", "min_component_size",
                    "failsafe_min_voxels", "connectivity", "enforce_nesting"},
                   "refinement");
    auto& rc = c.refinement;
    read(r, "base_threshold", rc.base_threshold);
    read(r, "fallback_threshold", rc.fallback_threshold);
    read(r, "min_component_size", rc.min_component_size);
    read(r, "failsafe_min_voxels", rc.failsafe_min_voxels);
    read(r, "enforce_nesting", rc.enforce_nesting);
    if (r.contains("connectivity")) rc.connectivity = parse_connectivity(r.at("connectivity").get<std::string>());
    if (r.contains("confidence_gate")) {
      const auto& g = r.at("confidence_gate");
      reject_unknown(g, {"WT", "TC", "ET"}, "refinement.confidence_gate");
      for (const auto region : refine::kRegions) {
        const auto name = refine::short_name(region);
        if (g.contains(name)) rc.confidence_gate[static_cast<std::size_t>(region)] = g.at(name).get<double>();
      }
    }
  }

  if (j.contains("loss")) {
    const auto& l = j.at("loss");
    reject_unknown(l, {"gamma", "lambda", "kl_variant"}, "loss");
    read(l, "gamma", c.loss.gamma);
    read(l, "lambda", c.loss.lambda);
    if (l.contains("kl_variant")) c.loss.kl_variant = losses::parse_kl_variant(l.at("kl_variant").get<std::string>());
  }

  if (j.contains("survival")) {
    const auto& s = j.at("survival");
    reject_unknown(s,
                   {"ols_features", "cap_days", "short_below_days", "long_above_days", "override_prob",
                    "override_days", "forest", "feature_connectivity"},
                   "survival");
    auto& sc = c.survival;
    if (s.contains("ols_features")) sc.ols_features = read_features(s.at("ols_features"));
    read(s, "cap_days", sc.cap_days);
    read(s, "short_below_days", sc.bins.short_below);
    read(s, "long_above_days", sc.bins.long_above);
    read(s, "override_prob", sc.override_prob);
    if (s.contains("override_days")) {
      const auto& o = s.at("override_days");
      reject_unknown(o, {"short", "mid", "long"}, "survival.override_days");
      read(o, "short", sc.override_days[0]);
      read(o, "mid", sc.override_days[1]);
      read(o, "long", sc.override_days[2]);
    }
    if (s.contains("forest")) {
      const auto& f = s.at("forest");
      reject_unknown(f, {"trees", "max_depth", "seed", "features"}, "survival.forest");
      read(f, "trees", sc.forest.trees);
      read(f, "max_depth", sc.forest.max_depth);
      read(f, "seed", sc.forest.seed);
      if (f.contains("features")) sc.forest.features = read_features(f.at("features"));
    }
    if (s.contains("feature_connectivity"))
      c.feature_connectivity = parse_connectivity(s.at("feature_connectivity").get<std::string>());
  }

  if (j.contains("uncertainty")) {
    const auto& u = j.at("uncertainty");
    reject_unknown(u, {"thresholds"}, "uncertainty");
    read(u, "thresholds", c.uncertainty_thresholds);
  }

  if (j.contains("metrics")) {
    const auto& m = j.at("metrics");
    reject_unknown(m, {"hd95_one_empty_sentinel"}, "metrics");
    if (m.contains("hd95_one_empty_sentinel") && !m.at("hd95_one_empty_sentinel").is_null())
      c.hd95_one_empty_sentinel = m.at("hd95_one_empty_sentinel").get<double>();
  }

  if (j.contains("phantom")) {
    const auto& p = j.at("phantom");
    reject_unknown(p, {"preset", "dims", "seed"}, "phantom");
    read(p, "preset", c.phantom.preset);
    read(p, "seed", c.phantom.seed);
    if (p.contains("dims")) {
      const auto d = p.at("dims").get<std::array<std::size_t, 3>>();
      c.phantom.dims = {d[0], d[1], d[2]};
    }
  }
}

}  // namespace

void Config::validate() const {
  refinement.validate();
  loss.validate();
  survival.validate();
  if (uncertainty_thresholds.empty()) throw Error("config: uncertainty.thresholds must not be empty");
  for (std::size_t i = 0; i < uncertainty_thresholds.size(); ++i) {
    const double t = uncertainty_thresholds[i];
    if (t < 0.0 || t > 100.0 || (i > 0 && !(t > uncertainty_thresholds[i - 1])))
      throw Error("config: uncertainty.thresholds must be strictly ascending within [0, 100]");
  }
  if (survival.forest.trees == 0) throw Error("config: survival.forest.trees must be positive");
  if (survival.forest.max_depth < 0) throw Error("config: survival.forest.max_depth must be >= 0");
  if (threads < 0) throw Error("config: threads must be >= 0");
}

Config parse_config(const std::string& text) {
  Config c;
  try {
    apply_json(json::parse(text), c);
  } catch (const json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

std::string dump_config(const Config& c) {
  json j;
  j["threads"] = c.threads;
  const auto& rc = c.refinement;
  j["refinement"] = {{"base_threshold", rc.base_threshold},
                     {"fallback_threshold", rc.fallback_threshold},
                     {"confidence_gate",
                      {{"WT", rc.confidence_gate[0]}, {"TC", rc.confidence_gate[1]}, {"ET", rc.confidence_gate[2]}}},
                     {"min_component_size", rc.min_component_size},
                     {"failsafe_min_voxels", rc.failsafe_min_voxels},
                     {"connectivity", to_string(rc.connectivity)},
                     {"enforce_nesting", rc.enforce_nesting}};
  j["loss"] = {{"gamma", c.loss.gamma}, {"lambda", c.loss.lambda}, {"kl_variant", losses::to_string(c.loss.kl_variant)}};
  const auto& sc = c.survival;
  j["survival"] = {
      {"ols_features", features_json(sc.ols_features)},
      {"cap_days", sc.cap_days},
      {"short_below_days", sc.bins.short_below},
      {"long_above_days", sc.bins.long_above},
      {"override_prob", sc.override_prob},
      {"override_days", {{"short", sc.override_days[0]}, {"mid", sc.override_days[1]}, {"long", sc.override_days[2]}}},
      {"forest",
       {{"trees", sc.forest.trees},
        {"max_depth", sc.forest.max_depth},
        {"seed", sc.forest.seed},
        {"features", features_json(sc.forest.features)}}},
      {"feature_connectivity", to_string(c.feature_connectivity)}};
  j["uncertainty"] = {{"thresholds", c.uncertainty_thresholds}};
  j["metrics"] = {{"hd95_one_empty_sentinel",
                   c.hd95_one_empty_sentinel ? json(*c.hd95_one_empty_sentinel) : json(nullptr)}};
  j["phantom"] = {{"preset", c.phantom.preset},
                  {"dims", {c.phantom.dims.nx, c.phantom.dims.ny, c.phantom.dims.nz}},
                  {"seed", c.phantom.seed}};
  return j.dump(2) + "\n";
}

Config resolve_config(const std::string& path) {
  if (!path.empty()) return load_config(path);
  if (const char* env = std::getenv(kConfigEnv); env != nullptr && *env != '\0') return load_config(env);
  return Config{};
}

}  // namespace labelflip
