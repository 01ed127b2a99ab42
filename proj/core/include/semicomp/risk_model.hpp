#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <string>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace semicomp {

// One row per subject, one column per transition (h1, h2, h3).
using RiskScores = Eigen::Matrix<double, Eigen::Dynamic, 3>;

// Maps covariates to the three transition log-risks.
class RiskModel {
 public:
  virtual ~RiskModel() = default;

  // x is n x p; returns n x 3.
  virtual RiskScores evaluate(const Eigen::MatrixXd& x) const = 0;

  virtual nlohmann::json to_json() const = 0;

  std::array<double, 3> evaluate_one(std::span<const double> x) const;
};

// h1 = h2 = h3 = 0 for every subject.
class ZeroRisk final : public RiskModel {
 public:
  RiskScores evaluate(const Eigen::MatrixXd& x) const override;
  nlohmann::json to_json() const override;
};

// h_g(x) = x' beta_g, no intercept.
class LinearRisk final : public RiskModel {
 public:
  explicit LinearRisk(std::array<Eigen::VectorXd, 3> beta);
  static LinearRisk zeros(Eigen::Index p);

  RiskScores evaluate(const Eigen::MatrixXd& x) const override;
  nlohmann::json to_json() const override;

  const std::array<Eigen::VectorXd, 3>& beta() const { return beta_; }

 private:
  std::array<Eigen::VectorXd, 3> beta_;
};

// Arbitrary per-subject function; used for simulation ground truth and tests.
class FunctionRisk final : public RiskModel {
 public:
  using Fn = std::function<std::array<double, 3>(std::span<const double>)>;

  explicit FunctionRisk(Fn fn, std::string label = "function");

  RiskScores evaluate(const Eigen::MatrixXd& x) const override;
  nlohmann::json to_json() const override;

 private:
  Fn fn_;
  std::string label_;
};

std::shared_ptr<const RiskModel> make_zero_risk();

}  // namespace semicomp
