#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "labelflip/losses.hpp"
#include "labelflip/refine.hpp"
#include "labelflip/survival.hpp"
#include "labelflip/uncertainty.hpp"

namespace labelflip {

struct PhantomDefaults {
  std::string preset = "hgg";
  Dims dims{48, 48, 48};
  std::uint64_t seed = 1;
};

/// Every tunable constant of the pipeline. Defaults are the published values.
struct Config {
  int threads = 0;
  refine::RefinementConfig refinement;
  losses::LossConfig loss;
  survival::FusionConfig survival;
  Connectivity feature_connectivity = Connectivity::Corner26;
  std::vector<double> uncertainty_thresholds = uncertainty::kDefaultThresholds;
  std::optional<double> hd95_one_empty_sentinel;
  PhantomDefaults phantom;

  void validate() const;
};

/// JSON text; keys may be omitted (defaults apply) but unknown keys are errors.
Config parse_config(const std::string& text);
Config load_config(const std::string& path);
std::string dump_config(const Config& cfg);

/// Environment variable naming the config file used when none is given.
inline constexpr const char* kConfigEnv = "LABELFLIP_CONFIG";

/// Loads `path` if non-empty, else the file named by LABELFLIP_CONFIG, else defaults.
Config resolve_config(const std::string& path);

}  // namespace labelflip
