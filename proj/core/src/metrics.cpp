#include "semicomp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "semicomp/errors.hpp"

namespace semicomp {

CensoringCurve::CensoringCurve(std::vector<double> times, std::vector<double> values)
    : times_(std::move(times)), values_(std::move(values)) {
  if (times_.size() != values_.size()) throw std::invalid_argument("CensoringCurve: size mismatch");
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (k > 0 && !(times_[k] > times_[k - 1])) throw std::invalid_argument("CensoringCurve: times must increase");
    if (!(values_[k] >= 0.0 && values_[k] <= 1.0)) throw std::invalid_argument("CensoringCurve: values outside [0,1]");
    if (k > 0 && values_[k] > values_[k - 1]) throw std::invalid_argument("CensoringCurve: values must not increase");
  }
}

double CensoringCurve::operator()(double t) const {
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 1.0;
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

double CensoringCurve::left_limit(double t) const {
  const auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 1.0;
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

CensoringCurve kaplan_meier(std::span<const double> times, std::span<const int> events) {
  if (times.size() != events.size()) throw std::invalid_argument("kaplan_meier: size mismatch");
  if (times.empty()) throw std::invalid_argument("kaplan_meier: empty sample");
  // time -> (events, leaving)
  std::map<double, std::pair<double, double>> table;
  for (std::size_t i = 0; i < times.size(); ++i) {
    auto& row = table[times[i]];
    row.first += events[i];
    row.second += 1.0;
  }
  std::vector<double> t;
  std::vector<double> s;
  double at_risk = static_cast<double>(times.size());
  double surv = 1.0;
  for (const auto& [time, row] : table) {
    if (row.first > 0.0) {
      surv *= 1.0 - row.first / at_risk;
      t.push_back(time);
      s.push_back(surv);
    }
    at_risk -= row.second;
  }
  return CensoringCurve(std::move(t), std::move(s));
}

CensoringCurve reverse_km(const Dataset& data) {
  std::vector<double> times;
  std::vector<int> events;
  times.reserve(data.size());
  events.reserve(data.size());
  for (const auto& r : data) {
    times.push_back(r.y2);
    events.push_back(1 - r.delta2);
  }
  return kaplan_meier(times, events);
}

CensoringWeights weights_from(const CensoringCurve& g) {
  return {[g](double t) { return g(t); }, [g](double t) { return g.left_limit(t); }};
}

CensoringWeights exponential_censoring(double rate) {
  const auto f = [rate](double t) { return std::exp(-rate * t); };
  return {f, f};
}

double bbs(const Dataset& data, std::span<const double> pi, const CensoringWeights& g, double t) {
  if (pi.size() != data.size()) throw std::invalid_argument("bbs: prediction count mismatch");
  if (data.empty()) throw std::invalid_argument("bbs: empty dataset");
  const auto weight = [](double w, double at) {
    if (!(w > 0.0)) throw NumericError(NumericFailure::ZeroWeight, "censoring survival is 0 at t=" + std::to_string(at));
    return w;
  };
  double total = 0.0;
  double g_t = -1.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data[i];
    const double p = pi[i];
    if (r.delta1 == 1 && r.y1 <= t) {
      total += p * p / weight(g.left_limit(r.y1), r.y1);
    } else if (r.delta1 == 0 && r.delta2 == 1 && r.y2 <= t) {
      total += p * p / weight(g.left_limit(r.y2), r.y2);
    } else if (r.y1 > t && r.y2 > t) {
      if (g_t < 0.0) g_t = weight(g.value(t), t);
      total += (1.0 - p) * (1.0 - p) / g_t;
    }
  }
  return total / static_cast<double>(data.size());
}

double bbs(const Dataset& data, std::span<const double> pi, const CensoringCurve& g, double t) {
  return bbs(data, pi, weights_from(g), t);
}

double trapezoid_average(std::span<const double> grid, std::span<const double> values) {
  if (grid.size() != values.size() || grid.empty()) throw std::invalid_argument("trapezoid_average: bad grid");
  if (grid.size() == 1) return values[0];
  double area = 0.0;
  for (std::size_t k = 1; k < grid.size(); ++k) area += 0.5 * (values[k] + values[k - 1]) * (grid[k] - grid[k - 1]);
  return area / (grid.back() - grid.front());
}

BBSCurve integrated_bbs(const Dataset& data, const SurvivalPredictor& predict, const CensoringWeights& g,
                        double horizon, int n_points) {
  if (!(horizon > 0.0)) throw std::invalid_argument("integrated_bbs: horizon must be > 0");
  if (n_points < 1) throw std::invalid_argument("integrated_bbs: n_points must be >= 1");
  BBSCurve curve;
  for (int k = 1; k <= n_points; ++k) {
    const double t = horizon * k / n_points;
    if (!(g.value(t) > 0.0)) {
      curve.truncated = true;
      break;
    }
    const Eigen::VectorXd pi = predict(t);
    curve.grid.push_back(t);
    curve.values.push_back(bbs(data, std::span<const double>(pi.data(), static_cast<std::size_t>(pi.size())), g, t));
  }
  if (curve.grid.empty()) {
    throw NumericError(NumericFailure::ZeroWeight, "censoring survival is 0 before the first grid point");
  }
  curve.n_points = static_cast<int>(curve.grid.size());
  curve.horizon = curve.grid.back();
  curve.integrated = trapezoid_average(curve.grid, curve.values);
  curve.raw_integral = curve.integrated * (curve.grid.back() - curve.grid.front());
  return curve;
}

BBSCurve integrated_bbs(const Dataset& data, const SurvivalPredictor& predict, const CensoringCurve& g,
                        double horizon, int n_points) {
  return integrated_bbs(data, predict, weights_from(g), horizon, n_points);
}

}  // namespace semicomp
