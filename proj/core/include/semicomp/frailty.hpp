#pragma once

#include <array>
#include <span>
#include <vector>

#include "semicomp/survival.hpp"

namespace semicomp {

// Posterior Gamma(a_tilde, rate b_tilde) of one subject's frailty.
struct FrailtyPosterior {
  double a_tilde = 1.0;
  double b_tilde = 1.0;
  double mean = 1.0;      // E[gamma | D]
  double log_mean = 0.0;  // E[log gamma | D]
};

// Digamma via upward recurrence to x >= 6 and the Bernoulli asymptotic series.
// Throws std::domain_error for x <= 0.
double digamma(double x);

FrailtyPosterior posterior_from_exposure(int events, double exposure, double theta);

FrailtyPosterior posterior(const ObservedRecord& r, const std::array<double, 3>& h,
                           const ModelState& state);
FrailtyPosterior posterior(const ObservedRecord& r, const ModelState& state);

std::vector<FrailtyPosterior> posteriors(const Dataset& data, const RiskScores& h,
                                         const ModelState& state);
std::vector<FrailtyPosterior> posteriors(const Dataset& data, const ModelState& state);

}  // namespace semicomp
