#pragma once

// Classical comparator: Weibull baselines, linear log-risks and a gamma
// frailty, fitted by direct maximization of the observed-data likelihood.

#include <array>
#include <cstdint>
#include <span>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "semicomp/survival.hpp"

namespace semicomp {

struct ParametricModel {
  std::array<WeibullHazard, 3> baselines;
  std::array<Eigen::VectorXd, 3> beta;
  double theta = 1.0;
  double log_likelihood = 0.0;
  // Infinity norm of the gradient of the mean log-likelihood at the optimum.
  double gradient_norm = 0.0;
  int iterations = 0;

  ModelState to_state() const;
  nlohmann::json to_json() const;
  static ParametricModel from_json(const nlohmann::json& j);
};

struct ParametricOptions {
  int restarts = 3;
  std::uint64_t seed = 0;
  double jitter = 0.3;
  int max_iterations = 2000;
};

// Unconstrained layout: per transition (log phi1, log phi2, beta), then log theta.
Eigen::VectorXd pack_parametric(const ParametricModel& m);
ParametricModel unpack_parametric(const Eigen::VectorXd& params, Eigen::Index p);

// Observed log-likelihood at the packed parameters; fills the analytic
// gradient when requested.
double parametric_log_likelihood(const Dataset& data, const Eigen::VectorXd& params,
                                 Eigen::VectorXd* gradient = nullptr);

ParametricModel fit_parametric(const Dataset& data, const ParametricOptions& options = {});

// (1 + theta [Lambda01(t) e^{x'b1} + Lambda02(t) e^{x'b2}])^(-1/theta).
double predict_parametric(const ParametricModel& m, std::span<const double> x, double t);

}  // namespace semicomp
