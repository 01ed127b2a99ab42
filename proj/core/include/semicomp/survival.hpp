#pragma once

// Core data model of the gamma-frailty illness-death model: observed records,
// baseline hazards, model state, and the complete-data / observed-data
// likelihoods.
//
// Transition indices used throughout the library:
//   0  event-free -> non-terminal   (time scale: t1)
//   1  event-free -> terminal       (time scale: t2, exposure ends at Y1)
//   2  non-terminal -> terminal     (time scale: sojourn t2 - t1)

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "semicomp/risk_model.hpp"

namespace semicomp {

inline constexpr int kTransitions = 3;

struct ObservedRecord {
  double y1 = 0.0;
  int delta1 = 0;
  double y2 = 0.0;
  int delta2 = 0;
  std::vector<double> covariates;

  double sojourn() const { return y2 - y1; }
};

// Event indicator of transition g: delta1, (1 - delta1) delta2, delta1 delta2.
int transition_event(const ObservedRecord& r, int g);
// Time at which transition g's event (if any) is recorded.
double transition_event_time(const ObservedRecord& r, int g);
// End of exposure to transition g; negative when the subject never enters the
// risk set (transition 2 without a non-terminal event).
double transition_exposure_time(const ObservedRecord& r, int g);

enum class ValidationRule {
  NonFiniteValue,
  NonPositiveTime,
  NonBinaryIndicator,
  WedgeViolation,
  IndicatorInconsistency,
  ZeroSojourn,
  RaggedCovariates,
};

const char* to_string(ValidationRule rule);

struct ValidationIssue {
  std::size_t row = 0;
  ValidationRule rule = ValidationRule::NonFiniteValue;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const { return issues.empty(); }
  std::string summary(std::size_t max_lines = 20) const;
};

ValidationReport validate_dataset(std::span<const ObservedRecord> records);

// Immutable, validated collection of records with a cached n x p covariate
// matrix.
class Dataset {
 public:
  Dataset() = default;
  // Throws ValidationError carrying the full report when any record is invalid.
  explicit Dataset(std::vector<ObservedRecord> records);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  Eigen::Index num_covariates() const { return x_.cols(); }

  const ObservedRecord& operator[](std::size_t i) const { return records_[i]; }
  const std::vector<ObservedRecord>& records() const { return records_; }
  const Eigen::MatrixXd& covariates() const { return x_; }

  Dataset subset(std::span<const std::size_t> rows) const;

  auto begin() const { return records_.begin(); }
  auto end() const { return records_.end(); }

 private:
  std::vector<ObservedRecord> records_;
  Eigen::MatrixXd x_;
};

// Nondecreasing right-continuous step function with jumps at jump_times.
class StepHazard {
 public:
  StepHazard() = default;
  StepHazard(std::vector<double> jump_times, std::vector<double> jump_sizes);

  double cumulative(double t) const;
  // Size of the jump located exactly at t, or 0.
  double jump_at(double t) const;

  const std::vector<double>& jump_times() const { return times_; }
  const std::vector<double>& jump_sizes() const { return sizes_; }
  bool empty() const { return times_.empty(); }

 private:
  std::vector<double> times_;
  std::vector<double> sizes_;
  std::vector<double> cumsum_;
};

// lambda0(s) = phi1 phi2 s^(phi2 - 1), Lambda0(t) = phi1 t^phi2.
struct WeibullHazard {
  double phi1 = 1.0;
  double phi2 = 1.0;

  double cumulative(double t) const;
  double hazard(double t) const;
  double inverse_cumulative(double u) const;
};

using Baseline = std::variant<StepHazard, WeibullHazard>;

double cumulative_hazard(const Baseline& b, double t);
// Jump size for step baselines, hazard density for Weibull baselines.
double event_intensity(const Baseline& b, double t);

struct ModelState {
  std::array<Baseline, 3> baselines{StepHazard{}, StepHazard{}, StepHazard{}};
  double theta = 1.0;
  std::shared_ptr<const RiskModel> risk = make_zero_risk();
};

// Below this frailty variance the no-frailty limit formulas are used.
inline constexpr double kThetaFloor = 1e-12;

// Per-subject exposures Lambda01(Y1)e^h1, Lambda02(Y1)e^h2, delta1 Lambda03(Y2-Y1)e^h3.
struct Exposure {
  std::array<double, 3> by_transition{0.0, 0.0, 0.0};
  double total() const { return by_transition[0] + by_transition[1] + by_transition[2]; }
};

Exposure subject_exposure(const ObservedRecord& r, const std::array<double, 3>& h,
                          const std::array<Baseline, 3>& baselines);

// Log gamma density with mean 1, variance theta.
double log_frailty_density(double gamma, double theta);

// log of the augmented-data likelihood contribution for one subject.
double subject_complete_log_likelihood(const ObservedRecord& r, const std::array<double, 3>& h,
                                       double gamma, const ModelState& state);
// gamma-integrated contribution for one subject.
double subject_observed_log_likelihood(const ObservedRecord& r, const std::array<double, 3>& h,
                                       const ModelState& state);

double complete_data_log_likelihood(const Dataset& data, std::span<const double> gamma,
                                    const ModelState& state);

// Case-by-case product of survival functions and hazards; an independent
// route to the per-subject complete-data term (includes the frailty density).
double case_log_likelihood(const ObservedRecord& r, double gamma, const ModelState& state);

double observed_log_likelihood(const Dataset& data, const ModelState& state);
double observed_log_likelihood(const Dataset& data, const RiskScores& h, const ModelState& state);

// (1 + theta A)^(-1/theta) with A the total first-transition exposure.
double marginal_event_free_survival(double theta, double cumulative_exposure);

double joint_event_free_survival(std::span<const double> covariates, double t,
                                 const ModelState& state);
// pi_i(t) for every row of x.
Eigen::VectorXd joint_event_free_survival(const Eigen::MatrixXd& x, double t,
                                          const ModelState& state);

}  // namespace semicomp
