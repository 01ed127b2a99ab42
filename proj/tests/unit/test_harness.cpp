#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "semicomp/errors.hpp"
#include "semicomp/harness.hpp"
#include "semicomp/io.hpp"
#include "semicomp/simulate.hpp"

namespace semicomp {
namespace {

Dataset linear_data(std::size_t n, std::uint64_t seed, double cens = 0.25) {
  return simulate(neural_em_config(n, 0.5, RiskKind::Linear, cens, seed)).data;
}

TEST(Folds, TwoFoldsPartitionTenSubjects) {
  const auto folds = assign_folds(10, 2, 3);
  std::set<std::size_t> a;
  std::set<std::size_t> b;
  for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == 0 ? a : b).insert(i);
  EXPECT_EQ(a.size() + b.size(), 10u);
  EXPECT_EQ(a.size(), 5u);
  for (auto i : a) EXPECT_FALSE(b.count(i));
}

TEST(Folds, TooFewSubjects) {
  try {
    assign_folds(3, 5, 1);
    FAIL() << "expected FoldTooSmall";
  } catch (const NumericError& e) {
    EXPECT_EQ(e.kind(), NumericFailure::FoldTooSmall);
  }
}

TEST(CrossValidate, DeterministicUnderSeed) {
  const Dataset data = linear_data(300, 1);
  FitOptions opts;
  const auto a = cross_validate(data, ModelKind::Parametric, opts, 5, 1.0, 9);
  const auto b = cross_validate(data, ModelKind::Parametric, opts, 5, 1.0, 9);
  EXPECT_EQ(a.folds, b.folds);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.fold_ibbs.size(), 5u);
  const auto threaded = cross_validate(data, ModelKind::Parametric, opts, 5, 1.0, 9, 4);
  EXPECT_EQ(threaded.fold_ibbs, a.fold_ibbs);
}

TEST(ParallelFor, PropagatesExceptionsAndCoversIndices) {
  std::vector<int> hit(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { hit[i] += 1; });
  EXPECT_EQ(std::count(hit.begin(), hit.end(), 1), 100);
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
                 if (i == 7) throw std::runtime_error("x");
               }),
               std::runtime_error);
}

TEST(DeriveSeed, DistinctStreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(42, i));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(derive_seed(42, 3), derive_seed(42, 3));
}

TEST(Quantile, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(quantile({3, 1, 2, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({5}, 0.975), 5.0);
}

TEST(Bootstrap, SingleResampleCollapses) {
  const Dataset data = linear_data(300, 2);
  const auto band = bootstrap_baselines(data, ModelKind::Parametric, {}, 1, 5);
  ASSERT_EQ(band.grid.size(), 100u);
  for (int g = 0; g < 3; ++g) {
    for (std::size_t k = 0; k < band.grid.size(); ++k) {
      EXPECT_EQ(band.lower[g][k], band.mean[g][k]);
      EXPECT_EQ(band.upper[g][k], band.mean[g][k]);
    }
  }
}

TEST(Bootstrap, DeterministicUnderSeed) {
  const Dataset data = linear_data(300, 3);
  const auto a = bootstrap_baselines(data, ModelKind::Parametric, {}, 6, 7);
  const auto b = bootstrap_baselines(data, ModelKind::Parametric, {}, 6, 7, std::nullopt, 3);
  for (int g = 0; g < 3; ++g) {
    EXPECT_EQ(a.mean[g], b.mean[g]);
    EXPECT_EQ(a.lower[g], b.lower[g]);
  }
}

TEST(FittedModel, PredictorMatchesPredict) {
  const Dataset data = linear_data(300, 4);
  FitOptions opts;
  opts.em.max_iterations = 5;
  const FittedModel m = fit_model(data, ModelKind::Linear, opts);
  const auto predictor = m.predictor(data.covariates());
  for (double t : {0.0, 0.3, 0.9}) {
    EXPECT_LT((predictor(t) - m.predict(data.covariates(), t)).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(ReplicateStudy, BbsValidationTableShapeAndRoundTrip) {
  StudyOptions o;
  o.study = "bbs-validation";
  o.replicates = 3;
  o.bbs_n = 200;
  o.bbs_settings = {1, 3};
  const StudyTable t = replicate_study(o);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_GT(t.number(0, "true_ibbs_mean"), 0.0);
  std::stringstream ss;
  write_study_csv(ss, t);
  const StudyTable back = read_study_csv(ss);
  EXPECT_EQ(back.columns, t.columns);
  EXPECT_EQ(back.rows, t.rows);
}

TEST(ReplicateStudy, NeuralEmTableWithoutNeural) {
  StudyOptions o;
  o.study = "neural-em-validation";
  o.replicates = 2;
  o.sizes = {200};
  o.thetas = {0.5};
  o.risks = {RiskKind::Linear};
  o.censoring = {0.0};
  o.include_neural = false;
  const StudyTable t = replicate_study(o);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_GT(t.number(0, "theta_parametric_mean"), 0.0);
  EXPECT_EQ(t.cell(0, "theta_neural_mean"), "nan");
}

TEST(ReplicateStudy, UnknownStudyRejected) {
  StudyOptions o;
  o.study = "nope";
  EXPECT_THROW(replicate_study(o), std::invalid_argument);
}

}  // namespace
}  // namespace semicomp
