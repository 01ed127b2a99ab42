#pragma once

// Test-side data generators. They draw illness-death records directly from
// latent exponential times so that tests do not lean on the simulator.

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <random>
#include <set>
#include <vector>

#include "semicomp/risk_model.hpp"
#include "semicomp/survival.hpp"

namespace semicomp::testing {

// Random valid records covering all four observation patterns.
inline Dataset random_dataset(std::size_t n, int p, std::uint64_t seed, double censor_rate = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> norm(0.0, 1.0);
  std::exponential_distribution<double> e1(1.0), e2(0.7), e3(1.2), ec(censor_rate > 0 ? censor_rate : 1.0);
  std::vector<ObservedRecord> rows;
  for (std::size_t i = 0; i < n; ++i) {
    ObservedRecord r;
    for (int j = 0; j < p; ++j) r.covariates.push_back(norm(rng));
    const double t1 = e1(rng);
    const double t2 = e2(rng);
    const double c = censor_rate > 0 ? ec(rng) : INFINITY;
    if (t1 < t2) {
      const double death = t1 + e3(rng);
      r.y2 = std::min(death, c);
      r.delta2 = death <= c ? 1 : 0;
      r.y1 = std::min(t1, r.y2);
      r.delta1 = t1 <= r.y2 ? 1 : 0;
      if (r.delta1 && r.y2 == r.y1) r.y2 = r.y1 + 1e-3;
    } else {
      r.y2 = std::min(t2, c);
      r.delta2 = t2 <= c ? 1 : 0;
      r.y1 = r.y2;
      r.delta1 = 0;
    }
    rows.push_back(std::move(r));
  }
  return Dataset(std::move(rows));
}

// Step baselines with a positive random jump at every event time of each
// transition, so every event has a defined intensity.
inline std::array<Baseline, 3> random_step_baselines(const Dataset& data, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> size(0.01, 0.2);
  std::array<Baseline, 3> out;
  for (int g = 0; g < 3; ++g) {
    std::set<double> times;
    for (const auto& r : data) {
      if (transition_event(r, g)) times.insert(transition_event_time(r, g));
    }
    std::vector<double> t(times.begin(), times.end());
    std::vector<double> s;
    for (std::size_t k = 0; k < t.size(); ++k) s.push_back(size(rng));
    out[g] = StepHazard(std::move(t), std::move(s));
  }
  return out;
}

inline std::shared_ptr<const RiskModel> random_linear_risk(int p, std::uint64_t seed, double scale = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> norm(0.0, scale);
  std::array<Eigen::VectorXd, 3> beta;
  for (auto& b : beta) {
    b.resize(p);
    for (int j = 0; j < p; ++j) b(j) = norm(rng);
  }
  return std::make_shared<const LinearRisk>(std::move(beta));
}

inline double sample_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double standard_error(const std::vector<double>& v) {
  const double m = sample_mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace semicomp::testing
