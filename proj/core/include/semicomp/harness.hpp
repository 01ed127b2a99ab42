#pragma once

// Orchestration: model fitting behind one interface, cross-validation, grid
// search, bootstrap bands for the baselines and the replication studies.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "semicomp/metrics.hpp"
#include "semicomp/neural.hpp"
#include "semicomp/npmle_em.hpp"
#include "semicomp/parametric.hpp"
#include "semicomp/simulate.hpp"

namespace semicomp {

enum class ModelKind { Neural, Parametric, Linear };

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

struct FitOptions {
  EMConfig em;
  TrainConfig train;
  ParametricOptions parametric;
};

class FittedModel {
 public:
  ModelKind kind = ModelKind::Parametric;
  ModelState state;
  std::optional<ParametricModel> parametric;
  std::vector<TraceRow> trace;
  double initial_theta = 0.0;
  bool converged = true;

  // pi_i(t) for each row of x.
  Eigen::VectorXd predict(const Eigen::MatrixXd& x, double t) const;
  SurvivalPredictor predictor(const Eigen::MatrixXd& x) const;

  nlohmann::json to_json() const;
  static FittedModel from_json(const nlohmann::json& j);
};

FittedModel fit_model(const Dataset& data, ModelKind kind, const FitOptions& options);

// Runs fn(i) for i in [0, count) on up to `threads` workers; results must be
// written to per-index slots so the outcome does not depend on scheduling.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

// Seed of independent unit `index` derived from a base seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Balanced random fold labels in [0, folds).
std::vector<int> assign_folds(std::size_t n, int folds, std::uint64_t seed);

struct CVResult {
  std::vector<int> folds;
  std::vector<double> fold_ibbs;
  double mean = 0.0;
  double sd = 0.0;
};

// Train on k-1 folds, score held-out iBBS with G estimated on the training
// folds only.
CVResult cross_validate(const Dataset& data, ModelKind kind, const FitOptions& options, int folds,
                        double horizon, std::uint64_t seed, unsigned threads = 1);

struct GridSearchResult {
  GridPoint best;
  std::vector<GridPoint> points;
  std::vector<double> scores;  // CV mean iBBS per point
};

// Argmin of CV iBBS; ties go to the smaller network, then the lower learning
// rate.
GridSearchResult grid_search(const Dataset& data, const FitOptions& options, const std::vector<GridPoint>& grid,
                             int folds, double horizon, std::uint64_t seed, unsigned threads = 1);

struct BaselineBand {
  std::vector<double> grid;
  std::array<std::vector<double>, 3> mean;
  std::array<std::vector<double>, 3> lower;  // 2.5th percentile
  std::array<std::vector<double>, 3> upper;  // 97.5th percentile
  int resamples = 0;
  int failures = 0;
};

// Pointwise mean and 2.5/97.5 percentiles of curves[r][k].
void summarize_curves(const std::vector<std::vector<double>>& curves, std::vector<double>& mean,
                      std::vector<double>& lower, std::vector<double>& upper);

// Linear-interpolation quantile of an unsorted sample.
double quantile(std::vector<double> values, double q);

// 100-point grid on (0, grid_max]; grid_max defaults to the largest Y2.
BaselineBand bootstrap_baselines(const Dataset& data, ModelKind kind, const FitOptions& options, int resamples,
                                 std::uint64_t seed, std::optional<double> grid_max = std::nullopt,
                                 unsigned threads = 1);

// Rows of string cells under named columns.
struct StudyTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  const std::string& cell(std::size_t row, const std::string& column) const;
  double number(std::size_t row, const std::string& column) const;
};

struct StudyOptions {
  std::string study = "bbs-validation";
  int replicates = 100;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  double horizon = 1.0;
  FitOptions fit;
  // bbs-validation
  std::size_t bbs_n = 1000;
  std::vector<int> bbs_settings{1, 2, 3, 4};
  // neural-em-validation
  std::vector<std::size_t> sizes{1000};
  std::vector<double> thetas{0.5, 2.0};
  std::vector<RiskKind> risks{RiskKind::Linear, RiskKind::NonLinear, RiskKind::NonMonotonic};
  std::vector<double> censoring{0.0, 0.25, 0.5};
  bool include_neural = true;
};

// Mean and SD of the true and fitted-model iBBS for one bbs-validation
// setting.
struct BBSReplicate {
  double true_ibbs = 0.0;
  double calculated_ibbs = 0.0;
};
BBSReplicate bbs_validation_replicate(int setting, std::size_t n, std::uint64_t seed, double horizon,
                                      const ParametricOptions& options);

StudyTable replicate_study(const StudyOptions& options);

}  // namespace semicomp
