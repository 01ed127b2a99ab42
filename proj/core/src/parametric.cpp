#include "semicomp/parametric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>

#include "semicomp/errors.hpp"

namespace semicomp {

namespace {

Eigen::Index block_size(Eigen::Index p) { return 2 + p; }

Eigen::Index covariate_count(Eigen::Index n_params) { return (n_params - 1) / 3 - 2; }

// Negative mean log-likelihood for the line-search solver.
class NegativeMeanLogLik final : public ceres::FirstOrderFunction {
 public:
  NegativeMeanLogLik(const Dataset& data, Eigen::Index n_params)
      : data_(data), n_params_(n_params) {}

  bool Evaluate(const double* parameters, double* cost, double* gradient) const override {
    const Eigen::Map<const Eigen::VectorXd> x(parameters, n_params_);
    Eigen::VectorXd g;
    const double ll = parametric_log_likelihood(data_, x, gradient ? &g : nullptr);
    if (!std::isfinite(ll)) return false;
    const double n = static_cast<double>(data_.size());
    *cost = -ll / n;
    if (gradient) {
      if (!g.allFinite()) return false;
      Eigen::Map<Eigen::VectorXd>(gradient, n_params_) = -g / n;
    }
    return true;
  }

  int NumParameters() const override { return static_cast<int>(n_params_); }

 private:
  const Dataset& data_;
  Eigen::Index n_params_;
};

ParametricModel initial_model(const Dataset& data) {
  const Eigen::Index p = data.num_covariates();
  ParametricModel m;
  for (int g = 0; g < 3; ++g) {
    double events = 0.0;
    double exposure = 0.0;
    for (const auto& r : data) {
      events += transition_event(r, g);
      exposure += std::max(0.0, transition_exposure_time(r, g));
    }
    // Exponential MLE; a transition without events gets a small positive rate.
    const double rate = exposure > 0.0 ? std::max(events, 0.5) / exposure : 1.0;
    m.baselines[g] = WeibullHazard{rate, 1.0};
    m.beta[g] = Eigen::VectorXd::Zero(p);
  }
  m.theta = 1.0;
  return m;
}

}  // namespace

ModelState ParametricModel::to_state() const {
  ModelState s;
  s.baselines = {baselines[0], baselines[1], baselines[2]};
  s.theta = theta;
  s.risk = std::make_shared<LinearRisk>(beta);
  return s;
}

nlohmann::json ParametricModel::to_json() const {
  nlohmann::json phi = nlohmann::json::array();
  nlohmann::json b = nlohmann::json::array();
  for (int g = 0; g < 3; ++g) {
    phi.push_back({baselines[g].phi1, baselines[g].phi2});
    b.push_back(std::vector<double>(beta[g].data(), beta[g].data() + beta[g].size()));
  }
  return {{"phi", phi}, {"beta", b}, {"theta", theta}};
}

ParametricModel ParametricModel::from_json(const nlohmann::json& j) {
  ParametricModel m;
  const auto& phi = j.at("phi");
  const auto& b = j.at("beta");
  if (phi.size() != 3 || b.size() != 3) {
    throw std::invalid_argument("ParametricModel::from_json: expected three transitions");
  }
  for (std::size_t g = 0; g < 3; ++g) {
    m.baselines[g] = WeibullHazard{phi[g].at(0).get<double>(), phi[g].at(1).get<double>()};
    const auto v = b[g].get<std::vector<double>>();
    m.beta[g] = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  m.theta = j.at("theta").get<double>();
  return m;
}

Eigen::VectorXd pack_parametric(const ParametricModel& m) {
  const Eigen::Index p = m.beta[0].size();
  Eigen::VectorXd x(3 * block_size(p) + 1);
  for (int g = 0; g < 3; ++g) {
    const Eigen::Index o = g * block_size(p);
    x(o) = std::log(m.baselines[g].phi1);
    x(o + 1) = std::log(m.baselines[g].phi2);
    x.segment(o + 2, p) = m.beta[g];
  }
  x(x.size() - 1) = std::log(m.theta);
  return x;
}

ParametricModel unpack_parametric(const Eigen::VectorXd& params, Eigen::Index p) {
  if (params.size() != 3 * block_size(p) + 1) {
    throw std::invalid_argument("unpack_parametric: size mismatch");
  }
  ParametricModel m;
  for (int g = 0; g < 3; ++g) {
    const Eigen::Index o = g * block_size(p);
    m.baselines[g] = WeibullHazard{std::exp(params(o)), std::exp(params(o + 1))};
    m.beta[g] = params.segment(o + 2, p);
  }
  m.theta = std::exp(params(params.size() - 1));
  return m;
}

double parametric_log_likelihood(const Dataset& data, const Eigen::VectorXd& params,
                                 Eigen::VectorXd* gradient) {
  const Eigen::Index p = covariate_count(params.size());
  if (p != data.num_covariates() && !data.empty()) {
    throw std::invalid_argument("parametric_log_likelihood: parameter size does not match covariates");
  }
  const ParametricModel m = unpack_parametric(params, p);
  const double theta = m.theta;
  const bool frailty = theta >= kThetaFloor;
  if (gradient) gradient->setZero(params.size());

  double total = 0.0;
  for (const auto& r : data) {
    const Eigen::Map<const Eigen::VectorXd> x(r.covariates.data(), p);
    std::array<double, 3> a{0.0, 0.0, 0.0};
    std::array<double, 3> log_s{0.0, 0.0, 0.0};
    std::array<double, 3> eta{};
    double events = 0.0;
    for (int g = 0; g < 3; ++g) {
      const auto& w = m.baselines[g];
      eta[g] = p > 0 ? x.dot(m.beta[g]) : 0.0;
      const double s = transition_exposure_time(r, g);
      if (s > 0.0) {
        log_s[g] = std::log(s);
        a[g] = w.phi1 * std::exp(w.phi2 * log_s[g] + eta[g]);
      }
      if (transition_event(r, g) == 1) {
        const double log_t = std::log(transition_event_time(r, g));
        events += std::log(w.phi1) + std::log(w.phi2) + (w.phi2 - 1.0) * log_t + eta[g];
        if (gradient) {
          const Eigen::Index o = g * block_size(p);
          (*gradient)(o) += 1.0;
          (*gradient)(o + 1) += 1.0 + w.phi2 * log_t;
          if (p > 0) gradient->segment(o + 2, p) += x;
        }
      }
    }
    const double big_a = a[0] + a[1] + a[2];
    const int d = r.delta1 + r.delta2;
    double dl_da = -1.0;
    if (frailty) {
      total += events - (1.0 / theta + d) * std::log1p(theta * big_a);
      if (d == 2) total += std::log1p(theta);
      dl_da = -(1.0 + d * theta) / (1.0 + theta * big_a);
    } else {
      total += events - big_a;
    }
    if (!gradient) continue;
    for (int g = 0; g < 3; ++g) {
      if (a[g] == 0.0) continue;
      const Eigen::Index o = g * block_size(p);
      (*gradient)(o) += dl_da * a[g];
      (*gradient)(o + 1) += dl_da * a[g] * m.baselines[g].phi2 * log_s[g];
      if (p > 0) gradient->segment(o + 2, p) += dl_da * a[g] * x;
    }
    if (frailty) {
      double dxi = std::log1p(theta * big_a) / theta - (1.0 + d * theta) * big_a / (1.0 + theta * big_a);
      if (d == 2) dxi += theta / (1.0 + theta);
      (*gradient)(params.size() - 1) += dxi;
    }
  }
  return total;
}

ParametricModel fit_parametric(const Dataset& data, const ParametricOptions& options) {
  if (data.empty()) throw std::invalid_argument("fit_parametric: empty dataset");
  const Eigen::Index p = data.num_covariates();
  const Eigen::VectorXd start = pack_parametric(initial_model(data));
  const Eigen::Index n_params = start.size();

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> jitter(0.0, options.jitter);

  ceres::GradientProblemSolver::Options solver_options;
  solver_options.line_search_direction_type = ceres::BFGS;
  solver_options.max_num_iterations = options.max_iterations;
  solver_options.function_tolerance = 1e-15;
  solver_options.gradient_tolerance = 1e-11;
  solver_options.parameter_tolerance = 1e-14;
  solver_options.logging_type = ceres::SILENT;

  ParametricModel best;
  bool have_best = false;
  for (int attempt = 0; attempt < std::max(1, options.restarts); ++attempt) {
    Eigen::VectorXd x = start;
    if (attempt > 0) {
      for (Eigen::Index k = 0; k < n_params; ++k) x(k) += jitter(rng);
    }
    ceres::GradientProblem problem(new NegativeMeanLogLik(data, n_params));
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(solver_options, problem, x.data(), &summary);
    if (!summary.IsSolutionUsable() || !x.allFinite()) continue;

    Eigen::VectorXd grad;
    const double ll = parametric_log_likelihood(data, x, &grad);
    if (!std::isfinite(ll)) continue;
    if (!have_best || ll > best.log_likelihood) {
      best = unpack_parametric(x, p);
      best.log_likelihood = ll;
      best.gradient_norm = grad.lpNorm<Eigen::Infinity>() / static_cast<double>(data.size());
      best.iterations = static_cast<int>(summary.iterations.size());
      have_best = true;
    }
  }
  if (!have_best) {
    throw NumericError(NumericFailure::OptimizerFailure, "no restart produced a finite optimum");
  }
  return best;
}

double predict_parametric(const ParametricModel& m, std::span<const double> x, double t) {
  if (t <= 0.0) return 1.0;
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  double a = 0.0;
  for (int g = 0; g < 2; ++g) {
    const double eta = m.beta[g].size() > 0 ? xv.dot(m.beta[g]) : 0.0;
    a += m.baselines[g].cumulative(t) * std::exp(eta);
  }
  return marginal_event_free_survival(m.theta, a);
}

}  // namespace semicomp
