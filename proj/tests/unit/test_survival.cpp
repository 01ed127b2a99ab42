#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <random>

#include "semicomp/errors.hpp"
#include "semicomp/survival.hpp"
#include "test_util.hpp"

namespace semicomp {
namespace {

ObservedRecord rec(double y1, int d1, double y2, int d2, std::vector<double> x = {0.1}) {
  return ObservedRecord{y1, d1, y2, d2, std::move(x)};
}

TEST(Validation, AcceptsWedgeRecords) {
  const std::vector<ObservedRecord> ok{rec(1.0, 1, 2.0, 1), rec(2.0, 0, 2.0, 0)};
  EXPECT_TRUE(validate_dataset(ok).ok());
  EXPECT_NO_THROW(Dataset{ok});
}

TEST(Validation, RejectsWedgeViolation) {
  const std::vector<ObservedRecord> bad{rec(3.0, 1, 2.0, 1)};
  const auto report = validate_dataset(bad);
  ASSERT_FALSE(report.ok());
  EXPECT_EQ(report.issues.front().row, 0u);
  EXPECT_EQ(report.issues.front().rule, ValidationRule::WedgeViolation);
  EXPECT_THROW(Dataset{bad}, ValidationError);
}

TEST(Validation, RejectsOtherRuleBreaks) {
  EXPECT_EQ(validate_dataset(std::vector<ObservedRecord>{rec(1.0, 0, 2.0, 1)}).issues.front().rule,
            ValidationRule::IndicatorInconsistency);
  EXPECT_EQ(validate_dataset(std::vector<ObservedRecord>{rec(0.0, 0, 0.0, 1)}).issues.front().rule, ValidationRule::NonPositiveTime);
  EXPECT_EQ(validate_dataset(std::vector<ObservedRecord>{rec(1.0, 2, 2.0, 1)}).issues.front().rule,
            ValidationRule::NonBinaryIndicator);
  EXPECT_EQ(validate_dataset(std::vector<ObservedRecord>{rec(1.0, 1, 1.0, 1)}).issues.front().rule, ValidationRule::ZeroSojourn);
  EXPECT_EQ(validate_dataset(std::vector<ObservedRecord>{rec(1.0, 0, 1.0, 1, {0.1}), rec(1.0, 0, 1.0, 1, {0.1, 0.2})})
                .issues.front()
                .rule,
            ValidationRule::RaggedCovariates);
  EXPECT_EQ(validate_dataset(std::vector<ObservedRecord>{rec(NAN, 0, 1.0, 1)}).issues.front().rule, ValidationRule::NonFiniteValue);
}

TEST(StepHazardTest, CumulativeIsRightContinuous) {
  const StepHazard s({1.0, 2.0}, {0.5, 0.25});
  EXPECT_DOUBLE_EQ(s.cumulative(0.999), 0.0);
  EXPECT_DOUBLE_EQ(s.cumulative(1.0), 0.5);
  EXPECT_DOUBLE_EQ(s.cumulative(5.0), 0.75);
  EXPECT_DOUBLE_EQ(s.jump_at(2.0), 0.25);
  EXPECT_DOUBLE_EQ(s.jump_at(1.5), 0.0);
}

TEST(CompleteLikelihood, SingleCensoredSubjectUnitFrailty) {
  ModelState state;
  state.theta = 1.0;
  const auto r = rec(1.0, 0, 1.0, 0);
  EXPECT_NEAR(subject_complete_log_likelihood(r, {0, 0, 0}, 1.0, state), -1.0, 1e-15);
}

TEST(CompleteLikelihood, CaseFourAndCaseTwoTerms) {
  ModelState state;
  state.baselines = {WeibullHazard{0.2, 1.5}, WeibullHazard{0.3, 1.2}, WeibullHazard{0.5, 2.0}};
  state.theta = 0.7;
  state.risk = testing::random_linear_risk(1, 11);
  const double gamma = 1.3;
  const auto r4 = rec(1.5, 0, 1.5, 0, {0.4});
  const auto h = state.risk->evaluate_one(r4.covariates);
  const double s11 = -gamma * (0.2 * std::pow(1.5, 1.5) * std::exp(h[0]) + 0.3 * std::pow(1.5, 1.2) * std::exp(h[1]));
  EXPECT_NEAR(case_log_likelihood(r4, gamma, state) - log_frailty_density(gamma, 0.7), s11, 1e-12);

  const auto r2 = rec(1.5, 0, 1.5, 1, {0.4});
  const double lam02 = 0.3 * 1.2 * std::pow(1.5, 0.2);
  EXPECT_NEAR(case_log_likelihood(r2, gamma, state) - case_log_likelihood(r4, gamma, state),
              std::log(gamma * lam02 * std::exp(h[1])), 1e-12);
}

TEST(CompleteLikelihood, MatchesCaseBasedOnThousandSubjects) {
  const Dataset data = testing::random_dataset(1000, 2, 5);
  ModelState state;
  state.baselines = testing::random_step_baselines(data, 6);
  state.theta = 0.8;
  state.risk = testing::random_linear_risk(2, 7);
  std::mt19937_64 rng(8);
  std::gamma_distribution<double> g(2.0, 0.5);
  std::vector<double> gamma(data.size());
  double case_total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    gamma[i] = g(rng);
    const double c = case_log_likelihood(data[i], gamma[i], state);
    const double s = subject_complete_log_likelihood(data[i], state.risk->evaluate_one(data[i].covariates), gamma[i], state);
    EXPECT_NEAR(s, c, 1e-10) << "subject " << i;
    case_total += c;
  }
  EXPECT_NEAR(complete_data_log_likelihood(data, gamma, state), case_total, 1e-10 * data.size());
}

TEST(ObservedLikelihood, NoInformationSubjectContributesZero) {
  ModelState state;
  state.theta = 1.0;
  EXPECT_NEAR(subject_observed_log_likelihood(rec(1.0, 0, 1.0, 0), {0, 0, 0}, state), 0.0, 1e-15);
}

TEST(ObservedLikelihood, MatchesGammaQuadrature) {
  const Dataset data = testing::random_dataset(40, 1, 21);
  for (double theta : {0.05, 0.5, 2.0}) {
    ModelState state;
    state.baselines = testing::random_step_baselines(data, 22);
    state.theta = theta;
    state.risk = testing::random_linear_risk(1, 23);
    boost::math::quadrature::exp_sinh<double> integrator;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto h = state.risk->evaluate_one(data[i].covariates);
      const auto f = [&](double g) { return std::exp(subject_complete_log_likelihood(data[i], h, g, state)); };
      const double q = integrator.integrate(f, 1e-14);
      const double closed = std::exp(subject_observed_log_likelihood(data[i], h, state));
      EXPECT_NEAR(closed / q, 1.0, 1e-8) << "theta " << theta << " subject " << i;
    }
  }
}

TEST(ObservedLikelihood, SmallThetaApproachesNoFrailty) {
  const Dataset data = testing::random_dataset(50, 1, 31);
  ModelState state;
  state.baselines = testing::random_step_baselines(data, 32);
  state.risk = testing::random_linear_risk(1, 33);
  state.theta = 1e-9;
  const double near = observed_log_likelihood(data, state);
  state.theta = kThetaFloor / 10;
  EXPECT_NEAR(near, observed_log_likelihood(data, state), 1e-6);
}

TEST(ObservedLikelihood, MissingJumpAtEventIsNumericError) {
  const Dataset data(std::vector<ObservedRecord>{rec(1.0, 1, 2.0, 1)});
  ModelState state;
  state.baselines = {StepHazard({0.5}, {0.1}), StepHazard{}, StepHazard({1.0}, {0.1})};
  EXPECT_THROW(observed_log_likelihood(data, state), NumericError);
}

TEST(JointSurvival, ClosedFormValues) {
  ModelState state;
  state.theta = 0.5;
  state.baselines = {WeibullHazard{0.3, 1.0}, WeibullHazard{0.2, 1.0}, WeibullHazard{1.0, 1.0}};
  const std::vector<double> x{0.0};
  EXPECT_DOUBLE_EQ(joint_event_free_survival(x, 0.0, state), 1.0);
  EXPECT_NEAR(joint_event_free_survival(x, 1.0, state), 0.64, 1e-14);
  EXPECT_NEAR(marginal_event_free_survival(0.5, 0.5), 0.64, 1e-14);
}

TEST(JointSurvival, MatchesMonteCarloOverFrailty) {
  std::mt19937_64 rng(41);
  std::gamma_distribution<double> g(2.0, 0.5);  // mean 1, variance 0.5
  std::vector<double> draws(1000000);
  for (auto& d : draws) d = std::exp(-g(rng) * 0.5);
  const double m = testing::sample_mean(draws);
  const double se = testing::standard_error(draws);
  EXPECT_LT(std::abs(m - marginal_event_free_survival(0.5, 0.5)), 3 * se);
}

}  // namespace
}  // namespace semicomp
