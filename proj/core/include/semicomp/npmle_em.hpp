#pragma once

// The EM engine: Q-function, closed-form Breslow-type baseline updates,
// Nelson-Aalen seeding and the outer E/M/N loop.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "semicomp/frailty.hpp"
#include "semicomp/neural.hpp"
#include "semicomp/survival.hpp"

namespace semicomp {

struct EMConfig {
  int max_iterations = 200;
  double tolerance = 1e-6;  // relative change of the observed log-likelihood
  int n_step_epochs_per_iteration = 10;
  std::uint64_t seed = 0;
  // Skips the parametric fit that otherwise seeds theta.
  std::optional<double> initial_theta;
};

struct QValue {
  double q1 = 0.0;
  double q2 = 0.0;
  double q3 = 0.0;
  double q4 = 0.0;
  double total = 0.0;
};

QValue q_function(const Dataset& data, std::span<const FrailtyPosterior> post,
                  const RiskScores& h, const ModelState& state);
QValue q_function(const Dataset& data, std::span<const FrailtyPosterior> post,
                  const ModelState& state);

// Q4 as a function of theta only.
double q4_from_moments(std::size_t n, double sum_log_mean, double sum_mean, double theta);
// Brent search of Q4 over log theta in [log 1e-4, log 100].
double maximize_q4(std::size_t n, double sum_log_mean, double sum_mean);

// Jump at each distinct event time t of transition g:
//   (events at t) / sum_i E[gamma_i] exp(h_g,i) I(exposure_g,i >= t).
// Exposure ends at Y1 for transitions 0 and 1 and at the sojourn for
// transition 2 (subjects without a non-terminal event never enter).
std::array<StepHazard, 3> m_step(const Dataset& data, std::span<const FrailtyPosterior> post,
                                  const RiskScores& h);
std::array<StepHazard, 3> m_step(const Dataset& data, std::span<const FrailtyPosterior> post,
                                  const ModelState& state);

// Score of Q with respect to each jump, relative to the event term
// (d/dL - R) / (d/dL); zero at the M-step solution.
std::array<std::vector<double>, 3> m_step_scores(const Dataset& data,
                                                 std::span<const FrailtyPosterior> post,
                                                 const RiskScores& h,
                                                 const std::array<StepHazard, 3>& baselines);

// m_step with unit frailties and zero risk.
std::array<StepHazard, 3> nelson_aalen_seed(const Dataset& data);

// Risk functions and theta held fixed (theta optionally updated through Q4).
struct FixedRiskSpec {
  std::shared_ptr<const RiskModel> risk = make_zero_risk();
  double theta = 1.0;
  bool update_theta = false;
};

// h_g(x) = x' beta_g refit by Newton steps on Q each iteration; theta via Q4.
struct LinearRiskSpec {};

// Three sub-networks and xi = log theta trained in the N-step.
struct NeuralRiskSpec {
  TrainConfig train;
  std::optional<NetworkTriple> initial_networks;
};

using RiskModelSpec = std::variant<FixedRiskSpec, LinearRiskSpec, NeuralRiskSpec>;

struct TraceRow {
  int iter = 0;
  double obs_loglik = 0.0;
  double theta = 0.0;
  QValue q;
};

struct EMResult {
  ModelState state;
  std::vector<TraceRow> trace;
  bool converged = false;
  int iterations = 0;
  double initial_theta = 0.0;
  std::optional<NetworkTriple> networks;
  int diverged_n_steps = 0;
};

EMResult run_em(const Dataset& data, const RiskModelSpec& spec, const EMConfig& config);

}  // namespace semicomp
