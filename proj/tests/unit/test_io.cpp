#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "semicomp/errors.hpp"
#include "semicomp/harness.hpp"
#include "semicomp/io.hpp"
#include "semicomp/simulate.hpp"

namespace semicomp {
namespace {

TEST(DatasetCsv, RoundTripIsExact) {
  const Dataset data = simulate(neural_em_config(100, 0.5, RiskKind::NonLinear, 0.25, 1)).data;
  std::stringstream ss;
  write_dataset_csv(ss, data);
  const Dataset back = read_dataset_csv(ss);
  ASSERT_EQ(back.size(), data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(back[i].y1, data[i].y1);
    EXPECT_EQ(back[i].y2, data[i].y2);
    EXPECT_EQ(back[i].delta1, data[i].delta1);
    EXPECT_EQ(back[i].delta2, data[i].delta2);
    EXPECT_EQ(back[i].covariates, data[i].covariates);
  }
}

TEST(DatasetCsv, MalformedInputIsValidationError) {
  for (const char* text : {"y1,delta1,y2\n1,0,1\n", "y1,delta1,y2,delta2\n1,0,abc,1\n",
                           "y1,delta1,y2,delta2,x1\n1,0,1,1\n", "y1,delta1,y2,delta2\n2,1,1,1\n",
                           "y1,delta1,y2,delta2\n1,0.5,1,1\n", "y1,delta1,y2,delta2\n"}) {
    std::stringstream ss(text);
    EXPECT_THROW(read_dataset_csv(ss), ValidationError) << text;
  }
}

TEST(DatasetCsv, ToleratesCrlfAndBlankLines) {
  std::stringstream ss("y1,delta1,y2,delta2,x1\r\n1.0,1,2.0,1,0.5\r\n\r\n2.0,0,2.0,0,-1\r\n");
  const Dataset d = read_dataset_csv(ss);
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(d[1].covariates, std::vector<double>{-1.0});
}

TEST(PredictionsCsv, RoundTrip) {
  Eigen::MatrixXd pi(3, 2);
  pi << 0.9, 0.5, 0.8, 0.4, 1.0, 0.1;
  std::stringstream ss;
  write_predictions_csv(ss, {0.5, 1.0}, pi);
  const auto back = read_predictions_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.at(0.5), pi.col(0));
  EXPECT_EQ(back.at(1.0), pi.col(1));
}

TEST(TraceCsv, Header) {
  std::stringstream ss;
  write_trace_csv(ss, {TraceRow{0, -10.0, 0.5, QValue{1, 2, 3, 4, 10}}});
  EXPECT_EQ(ss.str(), "iter,obs_loglik,theta,q1,q2,q3,q4\n0,-10,0.5,1,2,3,4\n");
}

TEST(ModelJson, RoundTripPreservesPredictions) {
  const Dataset data = simulate(neural_em_config(200, 0.5, RiskKind::Linear, 0.0, 2)).data;
  FitOptions opts;
  opts.em.max_iterations = 3;
  opts.em.initial_theta = 0.5;
  for (ModelKind kind : {ModelKind::Parametric, ModelKind::Linear, ModelKind::Neural}) {
    const FittedModel m = fit_model(data, kind, opts);
    const nlohmann::json j = m.to_json();
    EXPECT_TRUE(j.contains("theta"));
    EXPECT_TRUE(j.contains("baselines"));
    EXPECT_TRUE(j.contains("risk_model"));
    const FittedModel back = FittedModel::from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(back.kind, kind);
    for (double t : {0.2, 0.7}) {
      EXPECT_LT((back.predict(data.covariates(), t) - m.predict(data.covariates(), t)).cwiseAbs().maxCoeff(), 1e-15)
          << to_string(kind);
    }
  }
}

TEST(StepBaselinesJson, RoundTrip) {
  const std::array<Baseline, 3> b{StepHazard({1.0, 2.0}, {0.1, 0.2}), StepHazard{}, WeibullHazard{0.5, 2.0}};
  const auto back = baselines_from_json(baselines_to_json(b));
  EXPECT_EQ(std::get<StepHazard>(back[0]).jump_sizes(), std::get<StepHazard>(b[0]).jump_sizes());
  EXPECT_TRUE(std::get<StepHazard>(back[1]).empty());
  EXPECT_EQ(std::get<WeibullHazard>(back[2]).phi2, 2.0);
}

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125}) EXPECT_EQ(std::stod(format_double(v)), v);
  EXPECT_EQ(format_double(INFINITY), "inf");
}

}  // namespace
}  // namespace semicomp
