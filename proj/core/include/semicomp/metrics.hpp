#pragma once

// Reverse Kaplan-Meier censoring curve and the IPCW bivariate Brier score.

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "semicomp/survival.hpp"

namespace semicomp {

// Right-continuous product-limit step function; 1 before the first time.
class CensoringCurve {
 public:
  CensoringCurve() = default;
  CensoringCurve(std::vector<double> times, std::vector<double> values);

  double operator()(double t) const;
  // G(t-)
  double left_limit(double t) const;

  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> times_;
  std::vector<double> values_;
};

// Product-limit estimator of P(T > t) with at-risk set {time >= t}.
CensoringCurve kaplan_meier(std::span<const double> times, std::span<const int> events);

// Censoring (delta2 = 0 at Y2) is the event.
CensoringCurve reverse_km(const Dataset& data);

// Censoring survival used for the weights; left limits weight event times.
struct CensoringWeights {
  std::function<double(double)> value;
  std::function<double(double)> left_limit;
};

CensoringWeights weights_from(const CensoringCurve& g);
// Known exponential censoring, exp(-rate t); rate 0 means no censoring.
CensoringWeights exponential_censoring(double rate);

// Mean over subjects of the three IPCW terms at time t. Throws ZeroWeight
// when a needed weight is 0.
double bbs(const Dataset& data, std::span<const double> pi, const CensoringWeights& g, double t);
double bbs(const Dataset& data, std::span<const double> pi, const CensoringCurve& g, double t);

struct BBSCurve {
  std::vector<double> grid;
  std::vector<double> values;
  double integrated = 0.0;    // trapezoidal time-average
  double raw_integral = 0.0;  // trapezoidal integral
  double horizon = 0.0;       // last grid point actually used
  int n_points = 0;
  bool truncated = false;
};

// pi_i(t) for every subject at time t.
using SurvivalPredictor = std::function<Eigen::VectorXd(double)>;

// Grid horizon k / n_points, k = 1..n_points, cut at the last point with
// G(t) > 0.
BBSCurve integrated_bbs(const Dataset& data, const SurvivalPredictor& predict, const CensoringWeights& g,
                        double horizon, int n_points = 100);
BBSCurve integrated_bbs(const Dataset& data, const SurvivalPredictor& predict, const CensoringCurve& g,
                        double horizon, int n_points = 100);

// Time-average of precomputed values over a grid.
double trapezoid_average(std::span<const double> grid, std::span<const double> values);

}  // namespace semicomp
