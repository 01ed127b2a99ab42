#include "semicomp/frailty.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/digamma.hpp>

namespace semicomp {

double digamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("digamma: argument must be positive");
  return boost::math::digamma(x);
}

FrailtyPosterior posterior_from_exposure(int events, double exposure, double theta) {
  FrailtyPosterior p;
  if (theta < kThetaFloor) {
    // Degenerate prior: gamma == 1 almost surely.
    p.a_tilde = 1.0 / kThetaFloor + events;
    p.b_tilde = 1.0 / kThetaFloor + exposure;
    p.mean = 1.0;
    p.log_mean = 0.0;
    return p;
  }
  p.a_tilde = 1.0 / theta + events;
  p.b_tilde = 1.0 / theta + exposure;
  p.mean = p.a_tilde / p.b_tilde;
  p.log_mean = digamma(p.a_tilde) - std::log(p.b_tilde);
  return p;
}

FrailtyPosterior posterior(const ObservedRecord& r, const std::array<double, 3>& h,
                           const ModelState& state) {
  const Exposure e = subject_exposure(r, h, state.baselines);
  return posterior_from_exposure(r.delta1 + r.delta2, e.total(), state.theta);
}

FrailtyPosterior posterior(const ObservedRecord& r, const ModelState& state) {
  return posterior(r, state.risk->evaluate_one(r.covariates), state);
}

std::vector<FrailtyPosterior> posteriors(const Dataset& data, const RiskScores& h,
                                         const ModelState& state) {
  std::vector<FrailtyPosterior> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out[i] = posterior(data[i], {h(ii, 0), h(ii, 1), h(ii, 2)}, state);
  }
  return out;
}

std::vector<FrailtyPosterior> posteriors(const Dataset& data, const ModelState& state) {
  return posteriors(data, state.risk->evaluate(data.covariates()), state);
}

}  // namespace semicomp
