#pragma once

// Semi-competing data from the gamma-frailty illness-death model with Weibull
// baselines, three log-risk families and exponential censoring.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semicomp/survival.hpp"

namespace semicomp {

enum class RiskKind { None, Linear, NonLinear, NonMonotonic };

const char* to_string(RiskKind kind);
RiskKind risk_kind_from_string(const std::string& s);

struct SimConfig {
  std::size_t n = 1000;
  double theta = 0.5;
  std::array<WeibullHazard, 3> baselines{WeibullHazard{2.0, 2.25}, WeibullHazard{2.0, 2.25},
                                         WeibullHazard{0.75, 2.0}};
  RiskKind risk_kind = RiskKind::Linear;
  int p = 2;
  // Coefficient shared by every covariate and transition.
  double beta = 1.0;
  // x ~ U(0,1) instead of N(0,1).
  bool uniform_covariate = false;
  // Target fraction of delta2 = 0; overrides censoring_rate when set.
  std::optional<double> censoring_target;
  double censoring_rate = 0.0;  // exponential censoring rate, 0 = none
  std::uint64_t seed = 0;
};

// Latent quantities behind each emitted record.
struct LatentTruth {
  double gamma = 1.0;
  std::array<double, 3> h{0.0, 0.0, 0.0};
  double t1 = 0.0;  // +inf when the terminal event comes first
  double t2 = 0.0;
  double c = 0.0;   // +inf without censoring
};

struct SimulatedData {
  Dataset data;
  std::vector<LatentTruth> truth;
  double censoring_rate = 0.0;
};

SimulatedData simulate(const SimConfig& config);

// Exponential rate giving the requested fraction of delta2 = 0, by bisection
// on a 1e5-draw Monte Carlo estimate; cached per configuration.
double calibrate_censoring_rate(const SimConfig& config, double target);

// Censoring rate simulate() will use for this configuration.
double effective_censoring_rate(const SimConfig& config);

std::array<double, 3> true_risk(const SimConfig& config, std::span<const double> x);

// exp(-gamma A(t)) when conditional, (1 + theta A(t))^(-1/theta) when marginal.
double true_survival(const SimConfig& config, std::span<const double> x, bool gamma_marginalized,
                     double t, double gamma = 1.0);

ModelState true_state(const SimConfig& config);

// Weibull(scale 0.2, shape 1.5), theta = 0.5; settings 1-4 toggle a uniform
// covariate (2, 4) and 50% censoring (3, 4).
SimConfig bbs_study_config(int setting, std::size_t n, std::uint64_t seed);

SimConfig neural_em_config(std::size_t n, double theta, RiskKind kind, double censoring_target,
                           std::uint64_t seed);

}  // namespace semicomp
