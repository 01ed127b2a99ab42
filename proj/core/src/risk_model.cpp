#include "semicomp/risk_model.hpp"

#include <string>
#include <vector>

namespace semicomp {

std::array<double, 3> RiskModel::evaluate_one(std::span<const double> x) const {
  Eigen::MatrixXd row(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j) row(0, static_cast<Eigen::Index>(j)) = x[j];
  const RiskScores h = evaluate(row);
  return {h(0, 0), h(0, 1), h(0, 2)};
}

RiskScores ZeroRisk::evaluate(const Eigen::MatrixXd& x) const {
  return RiskScores::Zero(x.rows(), 3);
}

nlohmann::json ZeroRisk::to_json() const { return {{"type", "zero"}}; }

LinearRisk::LinearRisk(std::array<Eigen::VectorXd, 3> beta) : beta_(std::move(beta)) {}

LinearRisk LinearRisk::zeros(Eigen::Index p) {
  return LinearRisk({Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(p)});
}

RiskScores LinearRisk::evaluate(const Eigen::MatrixXd& x) const {
  RiskScores h(x.rows(), 3);
  for (int g = 0; g < 3; ++g) {
    if (beta_[g].size() == 0) {
      h.col(g).setZero();
    } else {
      h.col(g) = x * beta_[g];
    }
  }
  return h;
}

nlohmann::json LinearRisk::to_json() const {
  nlohmann::json beta = nlohmann::json::array();
  for (const auto& b : beta_) beta.push_back(std::vector<double>(b.data(), b.data() + b.size()));
  return {{"type", "linear"}, {"beta", beta}};
}

FunctionRisk::FunctionRisk(Fn fn, std::string label) : fn_(std::move(fn)), label_(std::move(label)) {}

RiskScores FunctionRisk::evaluate(const Eigen::MatrixXd& x) const {
  RiskScores h(x.rows(), 3);
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) row[static_cast<std::size_t>(j)] = x(i, j);
    const auto v = fn_(row);
    h(i, 0) = v[0];
    h(i, 1) = v[1];
    h(i, 2) = v[2];
  }
  return h;
}

nlohmann::json FunctionRisk::to_json() const { return {{"type", "function"}, {"label", label_}}; }

std::shared_ptr<const RiskModel> make_zero_risk() {
  static const auto zero = std::make_shared<const ZeroRisk>();
  return zero;
}

}  // namespace semicomp
