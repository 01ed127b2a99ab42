// Acceptance checks. Usage: semicomp_acceptance <criterion 1-6> [threads]
// Prints one PASS/FAIL line per check; exit status is nonzero on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "semicomp/harness.hpp"
#include "semicomp/metrics.hpp"
#include "semicomp/simulate.hpp"

namespace {

using namespace semicomp;

int failures = 0;
unsigned threads = 1;

void report(bool pass, const std::string& label, const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << " " << label << ": " << detail << std::endl;
  if (!pass) ++failures;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Seconds elapsed while running fn.
template <class F>
double timed(F&& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Eigen::MatrixXd true_scores(const SimConfig& cfg, const Dataset& data) {
  const Eigen::MatrixXd& x = data.covariates();
  Eigen::MatrixXd h(x.rows(), 3);
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) row[static_cast<std::size_t>(j)] = x(i, j);
    const auto r = true_risk(cfg, row);
    for (int g = 0; g < 3; ++g) h(i, g) = r[static_cast<std::size_t>(g)];
  }
  return h;
}

// Criterion 1: iBBS of settings 1 (truth-based) and 3 (fitted model), 200
// replicates of n = 1000.
void criterion1() {
  constexpr double kTol = 0.002;
  StudyOptions o;
  o.study = "bbs-validation";
  o.replicates = 200;
  o.bbs_n = 1000;
  o.bbs_settings = {1, 3};
  o.seed = 20240101;
  o.threads = 1;
  StudyTable t;
  const double seconds = timed([&] { t = replicate_study(o); });
  const double s1 = t.number(0, "true_ibbs_mean");
  const double s3 = t.number(1, "calculated_ibbs_mean");
  report(std::abs(s1 - 0.0187) <= kTol, "criterion1.setting1",
         "mean true iBBS " + num(s1) + " (sd " + num(t.number(0, "true_ibbs_sd")) + "), target 0.0187 +- 0.002");
  report(std::abs(s3 - 0.0219) <= kTol, "criterion1.setting3",
         "mean fitted-model iBBS " + num(s3) + " (sd " + num(t.number(1, "calculated_ibbs_sd")) +
             "; truth-based " + num(t.number(1, "true_ibbs_mean")) + "), target 0.0219 +- 0.002");
  report(seconds < 600.0, "criterion1.runtime", num(seconds) + " s single-threaded, target < 600 s");
}

// Criterion 2: theta recovery on linear data, n = 2000, no censoring.
void criterion2() {
  StudyOptions o;
  o.study = "neural-em-validation";
  o.replicates = 50;
  o.sizes = {2000};
  o.thetas = {0.5};
  o.risks = {RiskKind::Linear};
  o.censoring = {0.0};
  o.seed = 777;
  o.threads = threads;
  const StudyTable t = replicate_study(o);
  const double tp = t.number(0, "theta_parametric_mean");
  const double tn = t.number(0, "theta_neural_mean");
  report(tp >= 0.44 && tp <= 0.54, "criterion2.parametric",
         "mean theta " + num(tp) + " (sd " + num(t.number(0, "theta_parametric_sd")) + "), target [0.44, 0.54]");
  report(tn >= 0.40 && tn <= 0.60, "criterion2.neural",
         "mean theta " + num(tn) + " (sd " + num(t.number(0, "theta_neural_sd")) + "), target [0.40, 0.60]");
  report(t.number(0, "failures") == 0.0, "criterion2.failures", t.cell(0, "failures") + " failed replicates");
}

// Criterion 3: MISE ordering on non-monotonic data, parametric MISE on
// linear data.
void criterion3() {
  constexpr int kSeeds = 10;
  std::vector<std::array<double, 3>> par(kSeeds);
  std::vector<std::array<double, 3>> neu(kSeeds);
  std::vector<std::array<double, 3>> lin(kSeeds);
  parallel_for(kSeeds, threads, [&](std::size_t s) {
    FitOptions opts;
    opts.em.seed = derive_seed(31, s);
    {
      const SimConfig cfg = neural_em_config(1000, 0.5, RiskKind::NonMonotonic, 0.0, derive_seed(3, s));
      const Dataset data = simulate(cfg).data;
      const Eigen::MatrixXd truth = true_scores(cfg, data);
      const FittedModel pm = fit_model(data, ModelKind::Parametric, opts);
      FitOptions nopts = opts;
      nopts.em.initial_theta = pm.state.theta;
      const FittedModel nm = fit_model(data, ModelKind::Neural, nopts);
      const RiskScores hp = pm.state.risk->evaluate(data.covariates());
      const RiskScores hn = nm.state.risk->evaluate(data.covariates());
      for (int g = 0; g < 3; ++g) {
        par[s][g] = mise(truth.col(g), hp.col(g));
        neu[s][g] = mise(truth.col(g), hn.col(g));
      }
    }
    {
      const SimConfig cfg = neural_em_config(1000, 0.5, RiskKind::Linear, 0.0, derive_seed(4, s));
      const Dataset data = simulate(cfg).data;
      const Eigen::MatrixXd truth = true_scores(cfg, data);
      const RiskScores hp = fit_model(data, ModelKind::Parametric, opts).state.risk->evaluate(data.covariates());
      for (int g = 0; g < 3; ++g) lin[s][g] = mise(truth.col(g), hp.col(g));
    }
  });
  for (int g = 0; g < 3; ++g) {
    int par_hits = 0;
    int neu_hits = 0;
    std::vector<double> pv;
    std::vector<double> nv;
    std::vector<double> lv;
    for (int s = 0; s < kSeeds; ++s) {
      par_hits += par[s][g] > 1.0;
      neu_hits += neu[s][g] < 0.5;
      pv.push_back(par[s][g]);
      nv.push_back(neu[s][g]);
      lv.push_back(lin[s][g]);
    }
    const std::string tr = std::to_string(g + 1);
    report(par_hits >= 8, "criterion3.parametric_nonmonotonic.transition" + tr,
           std::to_string(par_hits) + "/10 seeds with MISE > 1.0 (mean " + num(mean_of(pv)) + ")");
    report(neu_hits >= 8, "criterion3.neural_nonmonotonic.transition" + tr,
           std::to_string(neu_hits) + "/10 seeds with MISE < 0.5 (mean " + num(mean_of(nv)) + ")");
    report(mean_of(lv) < 0.05, "criterion3.parametric_linear.transition" + tr,
           "mean MISE " + num(mean_of(lv)) + ", target < 0.05");
  }
}

// Criterion 4: pointwise envelope of fitted neural baselines over 20
// replicates brackets the true Weibull cumulative hazards.
void criterion4() {
  constexpr int kReps = 20;
  constexpr int kGrid = 100;
  constexpr double kCoverage = 0.85;
  std::vector<std::array<Baseline, 3>> fitted(kReps);
  std::vector<std::array<std::vector<double>, 3>> event_times(kReps);
  SimConfig base = neural_em_config(2000, 0.5, RiskKind::NonMonotonic, 0.25, 0);
  parallel_for(kReps, threads, [&](std::size_t r) {
    const SimConfig cfg = neural_em_config(2000, 0.5, RiskKind::NonMonotonic, 0.25, derive_seed(4000, r));
    const Dataset data = simulate(cfg).data;
    FitOptions opts;
    opts.em.seed = derive_seed(4001, r);
    opts.em.initial_theta = fit_model(data, ModelKind::Parametric, opts).state.theta;
    fitted[r] = fit_model(data, ModelKind::Neural, opts).state.baselines;
    for (const auto& rec : data) {
      for (int g = 0; g < 3; ++g) {
        if (transition_event(rec, g)) event_times[r][g].push_back(transition_event_time(rec, g));
      }
    }
  });
  for (int g = 0; g < 3; ++g) {
    std::vector<double> pooled;
    for (const auto& e : event_times) pooled.insert(pooled.end(), e[g].begin(), e[g].end());
    const double upper_t = quantile(pooled, 0.8);
    std::vector<std::vector<double>> curves(kReps, std::vector<double>(kGrid));
    std::vector<double> grid(kGrid);
    for (int k = 0; k < kGrid; ++k) grid[k] = upper_t * (k + 1) / kGrid;
    for (int r = 0; r < kReps; ++r) {
      for (int k = 0; k < kGrid; ++k) curves[r][k] = cumulative_hazard(fitted[r][g], grid[k]);
    }
    std::vector<double> mean;
    std::vector<double> lower;
    std::vector<double> upper;
    summarize_curves(curves, mean, lower, upper);
    int inside = 0;
    for (int k = 0; k < kGrid; ++k) {
      const double truth = base.baselines[g].cumulative(grid[k]);
      inside += truth >= lower[k] && truth <= upper[k];
    }
    const double frac = static_cast<double>(inside) / kGrid;
    report(frac >= kCoverage, "criterion4.transition" + std::to_string(g + 1),
           "truth inside envelope at " + num(100 * frac) + "% of grid points on (0, " + num(upper_t) +
               "], target >= 85%");
  }
}

// Criterion 5: property suite, each item mapped to its unit tests.
void criterion5() {
  const std::vector<std::pair<std::string, std::string>> items{
      {"a.gradient_vs_finite_differences", "Gradient.*"},
      {"b.em_monotonicity", "RunEM.ObservedLikelihoodNondecreasingWithFixedRisk"},
      {"c.m_step_stationarity", "MStep.ScoresVanishAtSolution"},
      {"d.complete_vs_case_likelihood", "CompleteLikelihood.MatchesCaseBasedOnThousandSubjects"},
      {"e.observed_likelihood_vs_quadrature", "ObservedLikelihood.MatchesGammaQuadrature"},
      {"f.posterior_moments_vs_monte_carlo",
       "Posterior.LogMeanMatchesMonteCarlo:Posterior.MomentsMatchRejectionSampling"},
      {"g.bbs_decomposition", "BBS.DecompositionHoldsInExpectation"},
      {"h.simulator_validity", "Simulate.OutputsPassValidationAndRespectWedge"},
  };
  for (const auto& [label, filter] : items) {
    const std::string cmd =
        std::string("\"") + SEMICOMP_UNIT_TEST_BINARY + "\" --gtest_brief=1 --gtest_filter=" + filter + " > /dev/null";
    const int rc = std::system(cmd.c_str());
    report(rc == 0, "criterion5." + label, "unit tests " + filter + (rc == 0 ? " passed" : " failed"));
  }
}

// Criterion 6: 5-fold CV iBBS, neural against parametric, 10 seeds.
void criterion6() {
  constexpr int kSeeds = 10;
  std::vector<double> neural(kSeeds);
  std::vector<double> parametric(kSeeds);
  parallel_for(kSeeds, threads, [&](std::size_t s) {
    const SimConfig cfg = neural_em_config(1000, 0.5, RiskKind::NonMonotonic, 0.25, derive_seed(6000, s));
    const Dataset data = simulate(cfg).data;
    FitOptions opts;
    opts.em.seed = derive_seed(6001, s);
    const std::uint64_t fold_seed = derive_seed(6002, s);
    parametric[s] = cross_validate(data, ModelKind::Parametric, opts, 5, 1.0, fold_seed).mean;
    neural[s] = cross_validate(data, ModelKind::Neural, opts, 5, 1.0, fold_seed).mean;
  });
  int wins = 0;
  for (int s = 0; s < kSeeds; ++s) wins += neural[s] < parametric[s];
  report(wins >= 8, "criterion6",
         std::to_string(wins) + "/10 seeds with neural CV iBBS below parametric (means " + num(mean_of(neural)) +
             " vs " + num(mean_of(parametric)) + ")");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: semicomp_acceptance <criterion 1-6> [threads]\n";
    return 2;
  }
  const int which = std::atoi(argv[1]);
  if (argc > 2) threads = static_cast<unsigned>(std::max(1, std::atoi(argv[2])));
  try {
    switch (which) {
      case 1: criterion1(); break;
      case 2: criterion2(); break;
      case 3: criterion3(); break;
      case 4: criterion4(); break;
      case 5: criterion5(); break;
      case 6: criterion6(); break;
      default:
        std::cerr << "unknown criterion " << which << "\n";
        return 2;
    }
  } catch (const std::exception& e) {
    report(false, "criterion" + std::to_string(which), std::string("exception: ") + e.what());
  }
  return failures == 0 ? 0 : 1;
}
