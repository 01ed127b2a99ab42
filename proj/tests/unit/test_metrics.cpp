#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "semicomp/errors.hpp"
#include "semicomp/metrics.hpp"
#include "semicomp/simulate.hpp"
#include "test_util.hpp"

namespace semicomp {
namespace {

ObservedRecord rec(double y1, int d1, double y2, int d2) { return ObservedRecord{y1, d1, y2, d2, {}}; }

std::vector<double> grid_of(std::initializer_list<double> v) { return v; }

TEST(ReverseKM, NoCensoringIsOne) {
  const Dataset data(std::vector<ObservedRecord>{rec(1.0, 1, 2.0, 1), rec(3.0, 0, 3.0, 1)});
  const auto g = reverse_km(data);
  for (double t : {0.0, 1.0, 2.5, 10.0}) EXPECT_EQ(g(t), 1.0);
}

TEST(ReverseKM, SingleCensoredSubject) {
  const Dataset data(std::vector<ObservedRecord>{rec(2.0, 0, 2.0, 0)});
  const auto g = reverse_km(data);
  EXPECT_EQ(g(1.999), 1.0);
  EXPECT_EQ(g(2.0), 0.0);
  EXPECT_EQ(g.left_limit(2.0), 1.0);
  EXPECT_EQ(g(3.0), 0.0);
}

TEST(ReverseKM, TracksExponentialCensoring) {
  SimConfig c = neural_em_config(10000, 0.5, RiskKind::Linear, 0.0, 1);
  c.censoring_rate = 0.8;
  const SimulatedData s = simulate(c);
  const auto g = reverse_km(s.data);
  std::vector<double> y;
  for (const auto& r : s.data) y.push_back(r.y2);
  std::sort(y.begin(), y.end());
  const double t80 = y[8000];
  double sup = 0.0;
  for (int k = 0; k <= 400; ++k) {
    const double t = t80 * k / 400.0;
    sup = std::max(sup, std::abs(g(t) - std::exp(-0.8 * t)));
  }
  EXPECT_LT(sup, 0.03);
}

TEST(KaplanMeier, HandComputed) {
  const std::vector<double> t{1, 2, 2, 3, 4};
  const std::vector<int> e{1, 1, 0, 1, 0};
  const auto km = kaplan_meier(t, e);
  EXPECT_NEAR(km(1.0), 0.8, 1e-15);
  EXPECT_NEAR(km(2.0), 0.8 * 0.75, 1e-15);
  EXPECT_NEAR(km(3.0), 0.8 * 0.75 * 0.5, 1e-15);
}

TEST(BBS, PerfectPredictionsScoreZero) {
  const Dataset data(std::vector<ObservedRecord>{rec(0.5, 1, 0.8, 1), rec(3.0, 0, 3.0, 1)});
  const std::vector<double> pi{0.0, 1.0};
  EXPECT_EQ(bbs(data, pi, exponential_censoring(0.0), 1.0), 0.0);
}

TEST(BBS, ConfidentWrongPredictionScoresOne) {
  const Dataset data(std::vector<ObservedRecord>{rec(0.5, 1, 0.8, 1)});
  const std::vector<double> pi{1.0};
  EXPECT_EQ(bbs(data, pi, exponential_censoring(0.0), 1.0), 1.0);
}

TEST(BBS, CensoredBeforeTContributesNothing) {
  const Dataset data(std::vector<ObservedRecord>{rec(0.5, 0, 0.5, 0), rec(0.5, 1, 0.7, 0)});
  const std::vector<double> pi{0.3, 0.2};
  const CensoringWeights g{[](double) { return 0.5; }, [](double) { return 0.5; }};
  EXPECT_NEAR(bbs(data, pi, g, 1.0), 0.5 * (0.2 * 0.2 / 0.5), 1e-15);
}

TEST(BBS, ZeroWeightIsNumericError) {
  const Dataset data(std::vector<ObservedRecord>{rec(1.0, 0, 1.0, 1), rec(3.0, 0, 3.0, 1)});
  const std::vector<double> pi{0.5, 0.5};
  const auto step = [](double t) { return t < 2.0 ? 1.0 : 0.0; };
  const CensoringWeights g{step, step};
  EXPECT_NO_THROW(bbs(data, pi, g, 1.5));
  EXPECT_THROW(bbs(data, pi, g, 2.5), NumericError);
}

TEST(IntegratedBBS, ConstantCurveAveragesToItself) {
  const auto g = grid_of({0.1, 0.4, 0.5, 1.0});
  const std::vector<double> v(4, 0.37);
  EXPECT_NEAR(trapezoid_average(g, v), 0.37, 1e-15);
}

TEST(IntegratedBBS, GridAndTruncation) {
  const Dataset data(std::vector<ObservedRecord>{rec(0.5, 1, 0.8, 1), rec(0.6, 0, 0.6, 0), rec(2.0, 0, 2.0, 1)});
  const SurvivalPredictor predict = [](double) { return Eigen::VectorXd::Constant(3, 0.5); };
  const SurvivalPredictor predict_cut = [](double) { return Eigen::VectorXd::Constant(2, 0.5); };
  const auto curve = integrated_bbs(data, predict, reverse_km(data), 1.0, 10);
  EXPECT_FALSE(curve.truncated);
  EXPECT_EQ(curve.n_points, 10);
  EXPECT_DOUBLE_EQ(curve.grid.front(), 0.1);
  EXPECT_DOUBLE_EQ(curve.horizon, 1.0);
  const Dataset cut(std::vector<ObservedRecord>{rec(0.5, 1, 0.8, 1), rec(0.9, 0, 0.9, 0)});
  const auto truncated = integrated_bbs(cut, predict_cut, reverse_km(cut), 1.0, 10);
  EXPECT_TRUE(truncated.truncated);
  EXPECT_DOUBLE_EQ(truncated.horizon, 0.8);
}

// With known G, the IPCW score is unbiased for the uncensored Brier score,
// whose mean is MSE(t) + mean S(1 - S).
TEST(BBS, DecompositionHoldsInExpectation) {
  const std::size_t n = 300;
  const double theta = 0.5;
  const double rate = 0.5;
  const double t = 0.6;
  const WeibullHazard b1{0.6, 1.5};
  const WeibullHazard b2{0.4, 1.2};
  const WeibullHazard b3{0.8, 1.0};
  std::mt19937_64 rng(11);
  std::normal_distribution<double> norm(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = norm(rng);

  std::vector<double> s(n);
  std::vector<double> pi(n);
  double expected = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = (b1.cumulative(t) + b2.cumulative(t)) * std::exp(0.5 * x[i]);
    s[i] = std::pow(1.0 + theta * a, -1.0 / theta);
    pi[i] = std::pow(s[i], 1.3);
    expected += (pi[i] - s[i]) * (pi[i] - s[i]) + s[i] * (1 - s[i]);
  }
  expected /= static_cast<double>(n);

  std::gamma_distribution<double> frailty(1.0 / theta, theta);
  std::exponential_distribution<double> e(1.0);
  std::exponential_distribution<double> cens(rate);
  std::vector<double> scores;
  for (int rep = 0; rep < 500; ++rep) {
    std::vector<ObservedRecord> rows;
    for (std::size_t i = 0; i < n; ++i) {
      const double g = frailty(rng);
      const double scale = g * std::exp(0.5 * x[i]);
      const double t1 = b1.inverse_cumulative(e(rng) / scale);
      const double t2 = b2.inverse_cumulative(e(rng) / scale);
      const double c = cens(rng);
      ObservedRecord r;
      if (t1 < t2) {
        const double death = t1 + b3.inverse_cumulative(e(rng) / scale);
        r.y2 = std::min(death, c);
        r.delta2 = death <= c;
        r.y1 = std::min(t1, r.y2);
        r.delta1 = t1 <= r.y2;
        if (r.delta1 && r.y1 == r.y2) r.delta1 = 0;
      } else {
        r.y2 = std::min(t2, c);
        r.delta2 = t2 <= c;
        r.y1 = r.y2;
        r.delta1 = 0;
      }
      r.covariates = {x[i]};
      rows.push_back(std::move(r));
    }
    const Dataset data(std::move(rows));
    scores.push_back(bbs(data, pi, exponential_censoring(rate), t));
  }
  EXPECT_LT(std::abs(testing::sample_mean(scores) - expected), 3 * testing::standard_error(scores));
}

}  // namespace
}  // namespace semicomp
