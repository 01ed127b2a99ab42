#include "semicomp/survival.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "semicomp/errors.hpp"

namespace semicomp {

const char* to_string(NumericFailure kind) {
  switch (kind) {
    case NumericFailure::NonFiniteLikelihood: return "NonFiniteLikelihood";
    case NumericFailure::NonFiniteQ: return "NonFiniteQ";
    case NumericFailure::EmptyRiskSet: return "EmptyRiskSet";
    case NumericFailure::NonFiniteLoss: return "NonFiniteLoss";
    case NumericFailure::DivergedLoss: return "DivergedLoss";
    case NumericFailure::OptimizerFailure: return "OptimizerFailure";
    case NumericFailure::ZeroWeight: return "ZeroWeight";
    case NumericFailure::FoldTooSmall: return "FoldTooSmall";
    case NumericFailure::TooManyFailures: return "TooManyFailures";
  }
  return "NumericFailure";
}

int transition_event(const ObservedRecord& r, int g) {
  switch (g) {
    case 0: return r.delta1;
    case 1: return (1 - r.delta1) * r.delta2;
    default: return r.delta1 * r.delta2;
  }
}

double transition_event_time(const ObservedRecord& r, int g) {
  switch (g) {
    case 0: return r.y1;
    case 1: return r.y2;
    default: return r.sojourn();
  }
}

double transition_exposure_time(const ObservedRecord& r, int g) {
  switch (g) {
    case 0:
    case 1: return r.y1;
    default: return r.delta1 == 1 ? r.sojourn() : -1.0;
  }
}

const char* to_string(ValidationRule rule) {
  switch (rule) {
    case ValidationRule::NonFiniteValue: return "NonFiniteValue";
    case ValidationRule::NonPositiveTime: return "NonPositiveTime";
    case ValidationRule::NonBinaryIndicator: return "NonBinaryIndicator";
    case ValidationRule::WedgeViolation: return "WedgeViolation";
    case ValidationRule::IndicatorInconsistency: return "IndicatorInconsistency";
    case ValidationRule::ZeroSojourn: return "ZeroSojourn";
    case ValidationRule::RaggedCovariates: return "RaggedCovariates";
  }
  return "Unknown";
}

std::string ValidationReport::summary(std::size_t max_lines) const {
  std::ostringstream os;
  os << issues.size() << " invalid record issue(s)";
  std::size_t shown = 0;
  for (const auto& issue : issues) {
    if (shown++ == max_lines) {
      os << "\n  ...";
      break;
    }
    os << "\n  row " << issue.row << ": " << to_string(issue.rule);
    if (!issue.detail.empty()) os << " (" << issue.detail << ")";
  }
  return os.str();
}

ValidationReport validate_dataset(std::span<const ObservedRecord> records) {
  ValidationReport report;
  auto flag = [&](std::size_t row, ValidationRule rule, std::string detail = {}) {
    report.issues.push_back({row, rule, std::move(detail)});
  };

  const std::size_t p = records.empty() ? 0 : records.front().covariates.size();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!std::isfinite(r.y1) || !std::isfinite(r.y2) ||
        std::any_of(r.covariates.begin(), r.covariates.end(),
                    [](double v) { return !std::isfinite(v); })) {
      flag(i, ValidationRule::NonFiniteValue);
      continue;
    }
    if (r.y1 <= 0.0 || r.y2 <= 0.0) flag(i, ValidationRule::NonPositiveTime);
    if ((r.delta1 != 0 && r.delta1 != 1) || (r.delta2 != 0 && r.delta2 != 1)) {
      flag(i, ValidationRule::NonBinaryIndicator);
      continue;
    }
    if (r.y1 > r.y2) {
      flag(i, ValidationRule::WedgeViolation, "y1 > y2");
    } else if (r.delta1 == 0 && r.y1 != r.y2) {
      flag(i, ValidationRule::IndicatorInconsistency, "delta1 = 0 requires y1 = y2");
    } else if (r.delta1 == 1 && r.delta2 == 1 && r.y1 == r.y2) {
      flag(i, ValidationRule::ZeroSojourn);
    }
    if (r.covariates.size() != p) {
      flag(i, ValidationRule::RaggedCovariates,
           "expected " + std::to_string(p) + " covariates, got " +
               std::to_string(r.covariates.size()));
    }
  }
  return report;
}

Dataset::Dataset(std::vector<ObservedRecord> records) : records_(std::move(records)) {
  auto report = validate_dataset(records_);
  if (!report.ok()) throw ValidationError(report.summary());
  const Eigen::Index p = records_.empty() ? 0 : static_cast<Eigen::Index>(records_[0].covariates.size());
  x_.resize(static_cast<Eigen::Index>(records_.size()), p);
  for (std::size_t i = 0; i < records_.size(); ++i) {
    for (Eigen::Index j = 0; j < p; ++j) x_(static_cast<Eigen::Index>(i), j) = records_[i].covariates[j];
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<ObservedRecord> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(records_.at(r));
  return Dataset(std::move(out));
}

StepHazard::StepHazard(std::vector<double> jump_times, std::vector<double> jump_sizes)
    : times_(std::move(jump_times)), sizes_(std::move(jump_sizes)) {
  if (times_.size() != sizes_.size()) {
    throw std::invalid_argument("StepHazard: jump_times and jump_sizes differ in length");
  }
  cumsum_.resize(sizes_.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (k > 0 && !(times_[k] > times_[k - 1])) {
      throw std::invalid_argument("StepHazard: jump times must be strictly increasing");
    }
    if (!(sizes_[k] > 0.0) || !std::isfinite(sizes_[k])) {
      throw std::invalid_argument("StepHazard: jump sizes must be positive and finite");
    }
    acc += sizes_[k];
    cumsum_[k] = acc;
  }
}

double StepHazard::cumulative(double t) const {
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 0.0;
  return cumsum_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

double StepHazard::jump_at(double t) const {
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.end() || *it != t) return 0.0;
  return sizes_[static_cast<std::size_t>(it - times_.begin())];
}

double WeibullHazard::cumulative(double t) const {
  return t <= 0.0 ? 0.0 : phi1 * std::pow(t, phi2);
}

double WeibullHazard::hazard(double t) const {
  if (t <= 0.0) return phi2 < 1.0 ? INFINITY : (phi2 == 1.0 ? phi1 : 0.0);
  return phi1 * phi2 * std::pow(t, phi2 - 1.0);
}

double WeibullHazard::inverse_cumulative(double u) const {
  return u <= 0.0 ? 0.0 : std::pow(u / phi1, 1.0 / phi2);
}

double cumulative_hazard(const Baseline& b, double t) {
  return std::visit([t](const auto& h) { return h.cumulative(t); }, b);
}

double event_intensity(const Baseline& b, double t) {
  if (const auto* step = std::get_if<StepHazard>(&b)) return step->jump_at(t);
  return std::get<WeibullHazard>(b).hazard(t);
}

Exposure subject_exposure(const ObservedRecord& r, const std::array<double, 3>& h,
                          const std::array<Baseline, 3>& baselines) {
  Exposure e;
  e.by_transition[0] = cumulative_hazard(baselines[0], r.y1) * std::exp(h[0]);
  e.by_transition[1] = cumulative_hazard(baselines[1], r.y1) * std::exp(h[1]);
  if (r.delta1 == 1) {
    e.by_transition[2] = cumulative_hazard(baselines[2], r.sojourn()) * std::exp(h[2]);
  }
  return e;
}

double log_frailty_density(double gamma, double theta) {
  const double r = 1.0 / theta;
  return -r * std::log(theta) - std::lgamma(r) + (r - 1.0) * std::log(gamma) - r * gamma;
}

namespace {

// Sum of e_g (log intensity_g + h_g) over the three transitions.
double event_terms(const ObservedRecord& r, const std::array<double, 3>& h,
                   const std::array<Baseline, 3>& baselines) {
  double out = 0.0;
  for (int g = 0; g < kTransitions; ++g) {
    if (transition_event(r, g) == 0) continue;
    const double t = transition_event_time(r, g);
    const double lam = event_intensity(baselines[g], t);
    if (!(lam > 0.0) || !std::isfinite(lam)) {
      throw NumericError(NumericFailure::NonFiniteLikelihood,
                         "baseline " + std::to_string(g + 1) + " has no mass at event time " +
                             std::to_string(t));
    }
    out += std::log(lam) + h[g];
  }
  return out;
}

}  // namespace

double subject_complete_log_likelihood(const ObservedRecord& r, const std::array<double, 3>& h,
                                       double gamma, const ModelState& state) {
  const Exposure e = subject_exposure(r, h, state.baselines);
  double ll = (r.delta1 + r.delta2) * std::log(gamma) + event_terms(r, h, state.baselines) -
              gamma * e.total();
  if (state.theta >= kThetaFloor) ll += log_frailty_density(gamma, state.theta);
  return ll;
}

double subject_observed_log_likelihood(const ObservedRecord& r, const std::array<double, 3>& h,
                                       const ModelState& state) {
  const Exposure e = subject_exposure(r, h, state.baselines);
  const double events = event_terms(r, h, state.baselines);
  const double a = e.total();
  if (state.theta < kThetaFloor) return events - a;

  // log[Gamma(r+d)/Gamma(r)] - r log(theta) - (r+d) log(r + A), rearranged so
  // that no large terms cancel when theta is small.
  const int d = r.delta1 + r.delta2;
  const double inv = 1.0 / state.theta;
  double ll = events - (inv + d) * std::log1p(a * state.theta);
  if (d == 2) ll += std::log1p(state.theta);
  return ll;
}

double complete_data_log_likelihood(const Dataset& data, std::span<const double> gamma,
                                    const ModelState& state) {
  if (gamma.size() != data.size()) {
    throw std::invalid_argument("complete_data_log_likelihood: gamma length mismatch");
  }
  const RiskScores h = state.risk->evaluate(data.covariates());
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    total += subject_complete_log_likelihood(data[i], {h(ii, 0), h(ii, 1), h(ii, 2)}, gamma[i],
                                             state);
  }
  return total;
}

double case_log_likelihood(const ObservedRecord& r, double gamma, const ModelState& state) {
  const auto h = state.risk->evaluate_one(r.covariates);
  const auto& b = state.baselines;

  auto log_hazard = [&](int g, double t) {
    const double lam = event_intensity(b[g], t);
    if (!(lam > 0.0) || !std::isfinite(lam)) {
      throw NumericError(NumericFailure::NonFiniteLikelihood,
                         "baseline " + std::to_string(g + 1) + " has no mass at " +
                             std::to_string(t));
    }
    return std::log(gamma) + std::log(lam) + h[g];
  };
  // log S(Y1, Y1 | gamma) and log S_{2|1}(Y2 | Y1, gamma)
  const double log_s11 = -gamma * (cumulative_hazard(b[0], r.y1) * std::exp(h[0]) +
                                   cumulative_hazard(b[1], r.y1) * std::exp(h[1]));
  auto log_s21 = [&] { return -gamma * cumulative_hazard(b[2], r.sojourn()) * std::exp(h[2]); };

  double ll = 0.0;
  if (r.delta1 == 1 && r.delta2 == 1) {
    ll = log_s11 + log_hazard(0, r.y1) + log_s21() + log_hazard(2, r.sojourn());
  } else if (r.delta1 == 0 && r.delta2 == 1) {
    ll = log_s11 + log_hazard(1, r.y2);
  } else if (r.delta1 == 1 && r.delta2 == 0) {
    ll = log_s11 + log_hazard(0, r.y1) + log_s21();
  } else {
    ll = log_s11;
  }
  if (state.theta >= kThetaFloor) ll += log_frailty_density(gamma, state.theta);
  return ll;
}

double observed_log_likelihood(const Dataset& data, const RiskScores& h, const ModelState& state) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    total += subject_observed_log_likelihood(data[i], {h(ii, 0), h(ii, 1), h(ii, 2)}, state);
  }
  return total;
}

double observed_log_likelihood(const Dataset& data, const ModelState& state) {
  if (!(state.theta > 0.0)) throw std::invalid_argument("observed_log_likelihood: theta must be > 0");
  return observed_log_likelihood(data, state.risk->evaluate(data.covariates()), state);
}

double marginal_event_free_survival(double theta, double cumulative_exposure) {
  if (theta < kThetaFloor) return std::exp(-cumulative_exposure);
  return std::exp(-std::log1p(theta * cumulative_exposure) / theta);
}

double joint_event_free_survival(std::span<const double> covariates, double t,
                                 const ModelState& state) {
  if (t <= 0.0) return 1.0;
  const auto h = state.risk->evaluate_one(covariates);
  const double a = cumulative_hazard(state.baselines[0], t) * std::exp(h[0]) +
                   cumulative_hazard(state.baselines[1], t) * std::exp(h[1]);
  return marginal_event_free_survival(state.theta, a);
}

Eigen::VectorXd joint_event_free_survival(const Eigen::MatrixXd& x, double t,
                                          const ModelState& state) {
  Eigen::VectorXd out = Eigen::VectorXd::Ones(x.rows());
  if (t <= 0.0) return out;
  const RiskScores h = state.risk->evaluate(x);
  const double l1 = cumulative_hazard(state.baselines[0], t);
  const double l2 = cumulative_hazard(state.baselines[1], t);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out(i) = marginal_event_free_survival(state.theta,
                                          l1 * std::exp(h(i, 0)) + l2 * std::exp(h(i, 1)));
  }
  return out;
}

}  // namespace semicomp
