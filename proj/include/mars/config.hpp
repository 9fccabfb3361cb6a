#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mars/augment.hpp"
#include "mars/masking.hpp"

namespace mars {

/// Every tunable in one place. Field defaults are the library defaults; a
/// JSON config file overrides them key by key.
struct RunConfig {
  std::uint64_t seed = 13;
  double idf_floor = 0.05;
  AlphaWeights alpha = default_alpha();
  int budget = 1024;
  SelfPlanConfig selfplan;
  int sigma = 3;
  double q = 0.75;
  std::vector<double> ratios = {0.0, 0.2, 0.4, 0.6, 0.8};
  std::string lm_backend = "hash";
  std::string encoder_backend = "hash";
  std::string static_vectors_path;
  std::string pos_tagger = "rule";
};

RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& cfg);

}  // namespace mars
