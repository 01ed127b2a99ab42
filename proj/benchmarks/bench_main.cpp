// Microbenchmarks for the E-step, M-step, network loss and gradient, and BBS.

#include <benchmark/benchmark.h>

#include "semicomp/frailty.hpp"
#include "semicomp/metrics.hpp"
#include "semicomp/neural.hpp"
#include "semicomp/npmle_em.hpp"
#include "semicomp/simulate.hpp"

namespace {

using namespace semicomp;

struct Fixture {
  SimConfig config;
  SimulatedData sim;
  ModelState state;
  std::vector<FrailtyPosterior> post;
  RiskScores h;

  explicit Fixture(std::size_t n)
      : config(neural_em_config(n, 0.5, RiskKind::NonMonotonic, 0.25, 1)),
        sim(simulate(config)),
        state(true_state(config)),
        post(posteriors(sim.data, state)),
        h(RiskScores::Zero(static_cast<Eigen::Index>(n), 3)) {}
};

void BM_EStep(benchmark::State& st) {
  const Fixture f(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(posteriors(f.sim.data, f.state));
  st.SetComplexityN(st.range(0));
}
BENCHMARK(BM_EStep)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

void BM_MStep(benchmark::State& st) {
  const Fixture f(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(m_step(f.sim.data, f.post, f.h));
  st.SetComplexityN(st.range(0));
}
BENCHMARK(BM_MStep)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

void BM_NetworkLossAndGradient(benchmark::State& st) {
  const Fixture f(static_cast<std::size_t>(st.range(0)));
  const auto seed = nelson_aalen_seed(f.sim.data);
  const std::array<Baseline, 3> baselines{seed[0], seed[1], seed[2]};
  const NStepData d = prepare_n_step(f.sim.data, f.post, baselines, true, st.range(1) != 0);
  TrainConfig tc;
  const NetworkTriple nets = initialize_networks(f.sim.data.covariates().cols(), tc, 3);
  for (auto _ : st) benchmark::DoNotOptimize(loss_and_gradient(d, nets, 0.0, tc.l2_rate));
  st.SetComplexityN(st.range(0));
}
BENCHMARK(BM_NetworkLossAndGradient)->ArgsProduct({{256, 1024, 4096}, {0, 1}});

void BM_IntegratedBBS(benchmark::State& st) {
  const Fixture f(static_cast<std::size_t>(st.range(0)));
  const CensoringCurve g = reverse_km(f.sim.data);
  const auto n = static_cast<Eigen::Index>(f.sim.data.size());
  const SurvivalPredictor predict = [n](double t) { return Eigen::VectorXd::Constant(n, std::exp(-t)); };
  for (auto _ : st) benchmark::DoNotOptimize(integrated_bbs(f.sim.data, predict, g, 1.0));
  st.SetComplexityN(st.range(0));
}
BENCHMARK(BM_IntegratedBBS)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

}  // namespace

BENCHMARK_MAIN();
