#pragma once

// Run configuration shared by every subcommand. A JSON config file fills it
// first; command-line flags then override individual fields.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "semicomp/harness.hpp"
#include "semicomp/simulate.hpp"

namespace semicomp::cli {

struct RunConfig {
  std::string command;
  // paths
  std::string data;
  std::string out;
  std::string truth;
  std::string trace;
  std::string model_path;
  std::string preds;
  std::string config;

  ModelKind model = ModelKind::Neural;
  EMConfig em;
  TrainConfig train;
  ParametricOptions parametric;
  SimConfig sim;

  int folds = 5;
  int bootstrap_resamples = 50;
  double horizon = 1.0;
  int n_points = 100;
  std::vector<double> times;
  std::optional<double> grid_max;
  bool grid_search = false;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  StudyOptions study;

  FitOptions fit_options() const;
};

// Applies every key present in j; unknown keys are rejected.
void apply_json(RunConfig& cfg, const nlohmann::json& j);

nlohmann::json to_json(const RunConfig& cfg);

// "0.1,0.5,1" -> {0.1, 0.5, 1}
std::vector<double> parse_number_list(const std::string& s);

}  // namespace semicomp::cli
