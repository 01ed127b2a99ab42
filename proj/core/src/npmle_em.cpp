#include "semicomp/npmle_em.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <Eigen/Cholesky>
#include <boost/math/tools/minima.hpp>

#include "semicomp/errors.hpp"
#include "semicomp/parametric.hpp"

namespace semicomp {

namespace {

constexpr double kLogThetaMin = -9.210340371976182;  // log 1e-4
constexpr double kLogThetaMax = 4.605170185988092;   // log 100

void check_aligned(const Dataset& data, std::span<const FrailtyPosterior> post, const RiskScores& h) {
  if (post.size() != data.size() || static_cast<std::size_t>(h.rows()) != data.size()) {
    throw std::invalid_argument("posteriors and risk scores must align with the dataset");
  }
}

// Distinct event times and counts of transition g.
std::map<double, double> event_counts(const Dataset& data, int g) {
  std::map<double, double> counts;
  for (const auto& r : data) {
    if (transition_event(r, g) == 1) counts[transition_event_time(r, g)] += 1.0;
  }
  return counts;
}

// Sum of weights over subjects whose exposure is >= t, for each t in times.
std::vector<double> risk_sums(const Dataset& data, int g, std::span<const FrailtyPosterior> post,
                              const RiskScores& h, const std::vector<double>& times) {
  std::vector<std::pair<double, double>> exposures;
  exposures.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double s = transition_exposure_time(data[i], g);
    if (s < 0.0) continue;
    exposures.emplace_back(s, post[i].mean * std::exp(h(static_cast<Eigen::Index>(i), g)));
  }
  std::sort(exposures.begin(), exposures.end());
  std::vector<double> suffix(exposures.size() + 1, 0.0);
  for (std::size_t k = exposures.size(); k-- > 0;) suffix[k] = suffix[k + 1] + exposures[k].second;

  std::vector<double> out(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto it = std::lower_bound(exposures.begin(), exposures.end(), times[k],
                                     [](const auto& e, double t) { return e.first < t; });
    out[k] = suffix[static_cast<std::size_t>(it - exposures.begin())];
  }
  return out;
}

double posterior_sum(std::span<const FrailtyPosterior> post, double FrailtyPosterior::*field) {
  double s = 0.0;
  for (const auto& q : post) s += q.*field;
  return s;
}

}  // namespace

QValue q_function(const Dataset& data, std::span<const FrailtyPosterior> post, const RiskScores& h,
                  const ModelState& state) {
  check_aligned(data, post, h);
  std::array<double, 3> q{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data[i];
    const auto ii = static_cast<Eigen::Index>(i);
    for (int g = 0; g < 3; ++g) {
      if (transition_event(r, g) == 1) {
        const double lam = event_intensity(state.baselines[g], transition_event_time(r, g));
        if (!(lam > 0.0)) {
          throw NumericError(NumericFailure::NonFiniteQ, "zero baseline intensity at an event of transition " +
                                                             std::to_string(g + 1) + ", row " + std::to_string(i));
        }
        q[g] += post[i].log_mean + std::log(lam) + h(ii, g);
      }
      const double s = transition_exposure_time(r, g);
      if (s >= 0.0) q[g] -= post[i].mean * cumulative_hazard(state.baselines[g], s) * std::exp(h(ii, g));
    }
  }
  QValue out;
  out.q1 = q[0];
  out.q2 = q[1];
  out.q3 = q[2];
  out.q4 = q4_from_moments(data.size(), posterior_sum(post, &FrailtyPosterior::log_mean),
                           posterior_sum(post, &FrailtyPosterior::mean), state.theta);
  out.total = out.q1 + out.q2 + out.q3 + out.q4;
  return out;
}

QValue q_function(const Dataset& data, std::span<const FrailtyPosterior> post, const ModelState& state) {
  return q_function(data, post, state.risk->evaluate(data.covariates()), state);
}

double q4_from_moments(std::size_t n, double sum_log_mean, double sum_mean, double theta) {
  const double r = 1.0 / theta;
  return static_cast<double>(n) * (r * std::log(r) - std::lgamma(r)) + (r - 1.0) * sum_log_mean - r * sum_mean;
}

double maximize_q4(std::size_t n, double sum_log_mean, double sum_mean) {
  const auto neg = [&](double xi) { return -q4_from_moments(n, sum_log_mean, sum_mean, std::exp(xi)); };
  const auto [xi, value] = boost::math::tools::brent_find_minima(neg, kLogThetaMin, kLogThetaMax, 40);
  (void)value;
  return std::exp(xi);
}

std::array<StepHazard, 3> m_step(const Dataset& data, std::span<const FrailtyPosterior> post,
                                  const RiskScores& h) {
  check_aligned(data, post, h);
  std::array<StepHazard, 3> out;
  for (int g = 0; g < 3; ++g) {
    const auto counts = event_counts(data, g);
    std::vector<double> times;
    std::vector<double> sizes;
    times.reserve(counts.size());
    for (const auto& [t, c] : counts) times.push_back(t);
    const auto risk = risk_sums(data, g, post, h, times);
    std::size_t k = 0;
    for (const auto& [t, c] : counts) {
      if (!(risk[k] > 0.0)) {
        throw NumericError(NumericFailure::EmptyRiskSet,
                           "transition " + std::to_string(g + 1) + " at t=" + std::to_string(t));
      }
      sizes.push_back(c / risk[k]);
      ++k;
    }
    out[g] = StepHazard(std::move(times), std::move(sizes));
  }
  return out;
}

std::array<StepHazard, 3> m_step(const Dataset& data, std::span<const FrailtyPosterior> post,
                                  const ModelState& state) {
  return m_step(data, post, state.risk->evaluate(data.covariates()));
}

std::array<std::vector<double>, 3> m_step_scores(const Dataset& data,
                                                 std::span<const FrailtyPosterior> post,
                                                 const RiskScores& h,
                                                 const std::array<StepHazard, 3>& baselines) {
  check_aligned(data, post, h);
  std::array<std::vector<double>, 3> out;
  for (int g = 0; g < 3; ++g) {
    const auto counts = event_counts(data, g);
    std::vector<double> times;
    for (const auto& [t, c] : counts) times.push_back(t);
    const auto risk = risk_sums(data, g, post, h, times);
    std::size_t k = 0;
    for (const auto& [t, c] : counts) {
      const double jump = baselines[g].jump_at(t);
      const double event_term = c / jump;
      out[g].push_back((event_term - risk[k]) / event_term);
      ++k;
    }
  }
  return out;
}

std::array<StepHazard, 3> nelson_aalen_seed(const Dataset& data) {
  const std::vector<FrailtyPosterior> unit(data.size());
  return m_step(data, unit, RiskScores::Zero(static_cast<Eigen::Index>(data.size()), 3));
}

namespace {

// Newton ascent on Q_g(beta) = sum e_i x'beta - w_i exp(x'beta) with step halving.
Eigen::VectorXd newton_beta(const Eigen::MatrixXd& x, const Eigen::VectorXd& e, const Eigen::VectorXd& w,
                            Eigen::VectorXd beta) {
  const auto objective = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd eta = x * b;
    return e.dot(eta) - w.dot(eta.array().exp().matrix());
  };
  double current = objective(beta);
  for (int it = 0; it < 50; ++it) {
    const Eigen::VectorXd mu = (w.array() * (x * beta).array().exp()).matrix();
    const Eigen::VectorXd grad = x.transpose() * (e - mu);
    const Eigen::MatrixXd info = x.transpose() * mu.asDiagonal() * x +
                                 1e-10 * Eigen::MatrixXd::Identity(x.cols(), x.cols());
    const Eigen::VectorXd step = info.ldlt().solve(grad);
    double scale = 1.0;
    bool improved = false;
    for (int half = 0; half < 30; ++half) {
      const Eigen::VectorXd trial = beta + scale * step;
      const double value = objective(trial);
      if (std::isfinite(value) && value >= current) {
        improved = value > current;
        beta = trial;
        current = value;
        break;
      }
      scale *= 0.5;
    }
    if (!improved || grad.lpNorm<Eigen::Infinity>() < 1e-10 * static_cast<double>(x.rows())) break;
  }
  return beta;
}

void record(EMResult& result, int iter, const Dataset& data, std::span<const FrailtyPosterior> post,
            const RiskScores& h) {
  TraceRow row;
  row.iter = iter;
  row.obs_loglik = observed_log_likelihood(data, h, result.state);
  row.theta = result.state.theta;
  if (!post.empty()) row.q = q_function(data, post, h, result.state);
  if (!std::isfinite(row.obs_loglik)) {
    throw NumericError(NumericFailure::NonFiniteLikelihood, "observed log-likelihood at iteration " +
                                                                std::to_string(iter));
  }
  result.trace.push_back(row);
}

}  // namespace

EMResult run_em(const Dataset& data, const RiskModelSpec& spec, const EMConfig& config) {
  if (config.max_iterations < 1) throw std::invalid_argument("run_em: max_iterations must be >= 1");
  if (!(config.tolerance > 0.0)) throw std::invalid_argument("run_em: tolerance must be > 0");
  if (data.empty()) throw std::invalid_argument("run_em: empty dataset");

  EMResult result;
  const Eigen::MatrixXd& x = data.covariates();
  const Eigen::Index p = data.num_covariates();

  const auto* fixed = std::get_if<FixedRiskSpec>(&spec);
  const auto* neural = std::get_if<NeuralRiskSpec>(&spec);
  const bool linear = std::holds_alternative<LinearRiskSpec>(spec);

  double theta0 = 1.0;
  if (config.initial_theta) {
    theta0 = *config.initial_theta;
  } else if (fixed) {
    theta0 = fixed->theta;
  } else {
    ParametricOptions opts;
    opts.seed = config.seed;
    theta0 = fit_parametric(data, opts).theta;
  }
  if (!(theta0 > 0.0)) throw std::invalid_argument("run_em: initial theta must be > 0");
  result.initial_theta = theta0;

  auto& state = result.state;
  state.theta = theta0;
  const auto seed = nelson_aalen_seed(data);
  state.baselines = {seed[0], seed[1], seed[2]};

  std::array<Eigen::VectorXd, 3> beta{Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(p),
                                      Eigen::VectorXd::Zero(p)};
  NetworkTriple nets;
  double xi = std::log(theta0);
  TrainConfig train;
  AdamState adam;
  if (fixed) {
    state.risk = fixed->risk ? fixed->risk : make_zero_risk();
  } else if (linear) {
    state.risk = std::make_shared<LinearRisk>(beta);
  } else {
    train = neural->train;
    train.epochs = config.n_step_epochs_per_iteration;
    if (train.seed == 0) train.seed = config.seed;
    nets = neural->initial_networks ? *neural->initial_networks : initialize_networks(p, train, train.seed);
    state.risk = std::make_shared<NeuralRisk>(nets, train.anchored);
  }

  RiskScores h = state.risk->evaluate(x);
  record(result, 0, data, {}, h);
  double previous = result.trace.back().obs_loglik;

  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    // E
    const auto post = posteriors(data, h, state);
    // M
    const auto jumps = m_step(data, post, h);
    state.baselines = {jumps[0], jumps[1], jumps[2]};
    // N
    if (fixed) {
      if (fixed->update_theta) {
        state.theta = maximize_q4(data.size(), posterior_sum(post, &FrailtyPosterior::log_mean),
                                  posterior_sum(post, &FrailtyPosterior::mean));
      }
    } else if (linear) {
      const NStepData d = prepare_n_step(data, post, state.baselines);
      for (int g = 0; g < 3; ++g) {
        if (p > 0) beta[g] = newton_beta(x, d.events.col(g), d.weights.col(g), beta[g]);
      }
      state.risk = std::make_shared<LinearRisk>(beta);
      state.theta = maximize_q4(data.size(), d.sum_log_mean, d.sum_mean);
    } else {
      const NStepData d = prepare_n_step(data, post, state.baselines, train.anchored, train.profile_baselines);
      const TrainResult tr = train_step(d, nets, xi, train, static_cast<std::uint64_t>(iter), &adam);
      if (tr.diverged) ++result.diverged_n_steps;
      nets = tr.networks;
      xi = tr.xi;
      state.risk = std::make_shared<NeuralRisk>(nets, train.anchored);
      state.theta = std::exp(xi);
    }
    h = state.risk->evaluate(x);
    record(result, iter, data, post, h);
    result.iterations = iter;

    const double current = result.trace.back().obs_loglik;
    const double rel = std::abs(current - previous) / std::max(std::abs(previous), 1e-300);
    previous = current;
    if (rel < config.tolerance) {
      result.converged = true;
      break;
    }
  }
  if (neural) result.networks = nets;
  return result;
}

}  // namespace semicomp
