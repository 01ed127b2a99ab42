#include "semicomp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "semicomp/errors.hpp"
#include "semicomp/io.hpp"

namespace semicomp {

namespace {

double sample_mean(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = sample_mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

SurvivalPredictor truth_predictor(const SimConfig& cfg, const Dataset& data) {
  return [cfg, &data](double t) {
    Eigen::VectorXd pi(static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) {
      pi(static_cast<Eigen::Index>(i)) = true_survival(cfg, data[i].covariates, true, t);
    }
    return pi;
  };
}

RiskScores true_scores(const SimConfig& cfg, const Dataset& data) {
  RiskScores h(static_cast<Eigen::Index>(data.size()), 3);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto v = true_risk(cfg, data[i].covariates);
    h.row(static_cast<Eigen::Index>(i)) << v[0], v[1], v[2];
  }
  return h;
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Neural: return "neural";
    case ModelKind::Parametric: return "parametric";
    case ModelKind::Linear: return "linear";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "neural") return ModelKind::Neural;
  if (s == "parametric") return ModelKind::Parametric;
  if (s == "linear") return ModelKind::Linear;
  throw std::invalid_argument("unknown model kind '" + s + "'");
}

Eigen::VectorXd FittedModel::predict(const Eigen::MatrixXd& x, double t) const {
  return joint_event_free_survival(x, t, state);
}

SurvivalPredictor FittedModel::predictor(const Eigen::MatrixXd& x) const {
  const RiskScores h = state.risk->evaluate(x);
  const Eigen::ArrayXd e1 = h.col(0).array().exp();
  const Eigen::ArrayXd e2 = h.col(1).array().exp();
  return [e1, e2, s = state](double t) {
    Eigen::VectorXd pi = Eigen::VectorXd::Ones(e1.size());
    if (t <= 0.0) return pi;
    const double l1 = cumulative_hazard(s.baselines[0], t);
    const double l2 = cumulative_hazard(s.baselines[1], t);
    for (Eigen::Index i = 0; i < pi.size(); ++i) pi(i) = marginal_event_free_survival(s.theta, l1 * e1(i) + l2 * e2(i));
    return pi;
  };
}

nlohmann::json FittedModel::to_json() const {
  nlohmann::json j{{"model", to_string(kind)},
                   {"theta", state.theta},
                   {"baselines", baselines_to_json(state.baselines)},
                   {"risk_model", state.risk->to_json()}};
  if (kind == ModelKind::Neural) j["xi"] = std::log(state.theta);
  if (parametric) {
    const auto pj = parametric->to_json();
    j["phi"] = pj["phi"];
    j["beta"] = pj["beta"];
  }
  return j;
}

FittedModel FittedModel::from_json(const nlohmann::json& j) {
  FittedModel m;
  m.kind = model_kind_from_string(j.value("model", std::string("neural")));
  if (j.contains("xi") && !j.contains("theta")) {
    m.state.theta = std::exp(j.at("xi").get<double>());
  } else {
    m.state.theta = j.at("theta").get<double>();
  }
  if (!(m.state.theta > 0.0)) throw std::invalid_argument("model snapshot: theta must be > 0");
  if (j.contains("baselines")) {
    const auto b = baselines_from_json(j.at("baselines"));
    m.state.baselines = b;
  } else if (j.contains("phi")) {
    const auto pm = ParametricModel::from_json(j);
    m.state = pm.to_state();
  }
  m.state.risk = risk_model_from_json(j.at("risk_model"));
  if (j.contains("phi") && j.contains("beta")) m.parametric = ParametricModel::from_json(j);
  return m;
}

FittedModel fit_model(const Dataset& data, ModelKind kind, const FitOptions& options) {
  FittedModel m;
  m.kind = kind;
  if (kind == ModelKind::Parametric) {
    ParametricOptions po = options.parametric;
    if (po.seed == 0) po.seed = options.em.seed;
    const auto pm = fit_parametric(data, po);
    m.state = pm.to_state();
    m.parametric = pm;
    m.initial_theta = pm.theta;
    return m;
  }
  EMResult r;
  if (kind == ModelKind::Linear) {
    r = run_em(data, LinearRiskSpec{}, options.em);
  } else {
    NeuralRiskSpec spec;
    spec.train = options.train;
    r = run_em(data, spec, options.em);
  }
  m.state = r.state;
  m.trace = std::move(r.trace);
  m.initial_theta = r.initial_theta;
  m.converged = r.converged;
  return m;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over the pair
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<int> assign_folds(std::size_t n, int folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("assign_folds: folds must be >= 2");
  if (n < static_cast<std::size_t>(folds)) {
    throw NumericError(NumericFailure::FoldTooSmall,
                       std::to_string(n) + " subjects cannot fill " + std::to_string(folds) + " folds");
  }
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % static_cast<std::size_t>(folds));
  std::mt19937_64 rng(seed);
  std::shuffle(labels.begin(), labels.end(), rng);
  return labels;
}

CVResult cross_validate(const Dataset& data, ModelKind kind, const FitOptions& options, int folds, double horizon,
                        std::uint64_t seed, unsigned threads) {
  CVResult result;
  result.folds = assign_folds(data.size(), folds, seed);
  result.fold_ibbs.assign(static_cast<std::size_t>(folds), 0.0);
  parallel_for(static_cast<std::size_t>(folds), threads, [&](std::size_t k) {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    for (std::size_t i = 0; i < data.size(); ++i) {
      (result.folds[i] == static_cast<int>(k) ? test : train).push_back(i);
    }
    if (train.size() + test.size() != data.size() || test.empty() || train.empty()) {
      throw std::logic_error("cross_validate: folds are not a partition");
    }
    const Dataset train_data = data.subset(train);
    const Dataset test_data = data.subset(test);
    const CensoringCurve g = reverse_km(train_data);
    FitOptions opts = options;
    opts.em.seed = derive_seed(seed, k);
    opts.train.seed = derive_seed(seed ^ 0x7f4a7c15ULL, k);
    const FittedModel model = fit_model(train_data, kind, opts);
    result.fold_ibbs[k] = integrated_bbs(test_data, model.predictor(test_data.covariates()), g, horizon).integrated;
  });
  result.mean = sample_mean(result.fold_ibbs);
  result.sd = sample_sd(result.fold_ibbs);
  return result;
}

GridSearchResult grid_search(const Dataset& data, const FitOptions& options, const std::vector<GridPoint>& grid,
                             int folds, double horizon, std::uint64_t seed, unsigned threads) {
  if (grid.empty()) throw std::invalid_argument("grid_search: empty grid");
  GridSearchResult out;
  out.points = grid;
  out.scores.assign(grid.size(), 0.0);
  parallel_for(grid.size(), threads, [&](std::size_t k) {
    FitOptions opts = options;
    opts.train = options.train.with(grid[k]);
    out.scores[k] = cross_validate(data, ModelKind::Neural, opts, folds, horizon, seed).mean;
  });
  const auto size = [](const GridPoint& p) { return p.hidden_layers * p.nodes_per_layer; };
  std::size_t best = 0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double a = out.scores[k];
    const double b = out.scores[best];
    const bool tie = std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b));
    if (!tie) {
      if (a < b) best = k;
    } else if (size(grid[k]) != size(grid[best])) {
      if (size(grid[k]) < size(grid[best])) best = k;
    } else if (grid[k].learning_rate < grid[best].learning_rate) {
      best = k;
    }
  }
  out.best = grid[best];
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

void summarize_curves(const std::vector<std::vector<double>>& curves, std::vector<double>& mean,
                      std::vector<double>& lower, std::vector<double>& upper) {
  if (curves.empty()) throw std::invalid_argument("summarize_curves: no curves");
  const std::size_t m = curves.front().size();
  mean.assign(m, 0.0);
  lower.assign(m, 0.0);
  upper.assign(m, 0.0);
  std::vector<double> column(curves.size());
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t r = 0; r < curves.size(); ++r) column[r] = curves[r][k];
    mean[k] = sample_mean(column);
    lower[k] = quantile(column, 0.025);
    upper[k] = quantile(column, 0.975);
  }
}

BaselineBand bootstrap_baselines(const Dataset& data, ModelKind kind, const FitOptions& options, int resamples,
                                 std::uint64_t seed, std::optional<double> grid_max, unsigned threads) {
  if (resamples < 1) throw std::invalid_argument("bootstrap_baselines: resamples must be >= 1");
  if (data.empty()) throw std::invalid_argument("bootstrap_baselines: empty dataset");
  BaselineBand band;
  band.resamples = resamples;
  double top = 0.0;
  for (const auto& r : data) top = std::max(top, r.y2);
  if (grid_max) top = *grid_max;
  for (int k = 1; k <= 100; ++k) band.grid.push_back(top * k / 100.0);

  std::vector<std::array<std::vector<double>, 3>> curves(static_cast<std::size_t>(resamples));
  std::vector<char> ok(static_cast<std::size_t>(resamples), 0);
  parallel_for(static_cast<std::size_t>(resamples), threads, [&](std::size_t r) {
    std::mt19937_64 rng(derive_seed(seed, r));
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    std::vector<std::size_t> rows(data.size());
    for (auto& i : rows) i = pick(rng);
    FitOptions opts = options;
    opts.em.seed = derive_seed(seed ^ 0xb0075ULL, r);
    try {
      const FittedModel m = fit_model(data.subset(rows), kind, opts);
      for (int g = 0; g < 3; ++g) {
        for (double t : band.grid) curves[r][g].push_back(cumulative_hazard(m.state.baselines[g], t));
      }
      ok[r] = 1;
    } catch (const NumericError&) {
      ok[r] = 0;
    }
  });
  band.failures = static_cast<int>(std::count(ok.begin(), ok.end(), 0));
  if (band.failures > resamples / 5) {
    throw NumericError(NumericFailure::TooManyFailures, std::to_string(band.failures) + " of " +
                                                            std::to_string(resamples) + " bootstrap refits failed");
  }
  for (int g = 0; g < 3; ++g) {
    std::vector<std::vector<double>> good;
    for (std::size_t r = 0; r < curves.size(); ++r) {
      if (ok[r]) good.push_back(curves[r][g]);
    }
    summarize_curves(good, band.mean[g], band.lower[g], band.upper[g]);
  }
  return band;
}

const std::string& StudyTable::cell(std::size_t row, const std::string& column) const {
  const auto it = std::find(columns.begin(), columns.end(), column);
  if (it == columns.end()) throw std::out_of_range("StudyTable: no column '" + column + "'");
  return rows.at(row).at(static_cast<std::size_t>(it - columns.begin()));
}

double StudyTable::number(std::size_t row, const std::string& column) const {
  return std::stod(cell(row, column));
}

BBSReplicate bbs_validation_replicate(int setting, std::size_t n, std::uint64_t seed, double horizon,
                                      const ParametricOptions& options) {
  const SimConfig cfg = bbs_study_config(setting, n, seed);
  const SimulatedData sim = simulate(cfg);
  const CensoringCurve g = reverse_km(sim.data);
  BBSReplicate out;
  out.true_ibbs = integrated_bbs(sim.data, truth_predictor(cfg, sim.data), g, horizon).integrated;
  ParametricOptions po = options;
  po.seed = seed;
  FittedModel m;
  m.kind = ModelKind::Parametric;
  m.state = fit_parametric(sim.data, po).to_state();
  out.calculated_ibbs = integrated_bbs(sim.data, m.predictor(sim.data.covariates()), g, horizon).integrated;
  return out;
}

namespace {

StudyTable bbs_validation_study(const StudyOptions& o) {
  StudyTable table;
  table.columns = {"setting", "covariates", "censoring", "replicates", "true_ibbs_mean", "true_ibbs_sd",
                   "calculated_ibbs_mean", "calculated_ibbs_sd", "failures"};
  for (int setting : o.bbs_settings) {
    const auto count = static_cast<std::size_t>(o.replicates);
    std::vector<double> truth(count, std::nan(""));
    std::vector<double> calc(count, std::nan(""));
    std::vector<char> ok(count, 0);
    parallel_for(count, o.threads, [&](std::size_t r) {
      try {
        const auto rep = bbs_validation_replicate(setting, o.bbs_n, derive_seed(o.seed + static_cast<std::uint64_t>(setting), r),
                                                  o.horizon, o.fit.parametric);
        truth[r] = rep.true_ibbs;
        calc[r] = rep.calculated_ibbs;
        ok[r] = 1;
      } catch (const NumericError&) {
        ok[r] = 0;
      }
    });
    std::vector<double> t_ok;
    std::vector<double> c_ok;
    for (std::size_t r = 0; r < count; ++r) {
      if (!ok[r]) continue;
      t_ok.push_back(truth[r]);
      c_ok.push_back(calc[r]);
    }
    const bool cov = setting == 2 || setting == 4;
    const bool cens = setting == 3 || setting == 4;
    table.rows.push_back({std::to_string(setting), cov ? "yes" : "no", cens ? "yes" : "no",
                          std::to_string(t_ok.size()), fmt(sample_mean(t_ok)), fmt(sample_sd(t_ok)),
                          fmt(sample_mean(c_ok)), fmt(sample_sd(c_ok)),
                          std::to_string(count - t_ok.size())});
  }
  return table;
}

StudyTable neural_em_study(const StudyOptions& o) {
  StudyTable table;
  table.columns = {"n", "risk", "censoring", "theta", "replicates"};
  const std::vector<std::string> metrics{"theta_parametric", "theta_neural", "ibbs_truth", "ibbs_parametric",
                                         "ibbs_neural", "mise_parametric_1", "mise_parametric_2",
                                         "mise_parametric_3", "mise_neural_1", "mise_neural_2", "mise_neural_3"};
  for (const auto& m : metrics) {
    table.columns.push_back(m + "_mean");
    table.columns.push_back(m + "_sd");
  }
  table.columns.push_back("failures");

  std::uint64_t setting_index = 0;
  for (std::size_t n : o.sizes) {
    for (RiskKind risk : o.risks) {
      for (double cens : o.censoring) {
        for (double theta : o.thetas) {
          ++setting_index;
          const auto count = static_cast<std::size_t>(o.replicates);
          std::vector<std::vector<double>> values(metrics.size(), std::vector<double>(count, std::nan("")));
          std::vector<char> ok(count, 0);
          parallel_for(count, o.threads, [&](std::size_t r) {
            const std::uint64_t seed = derive_seed(o.seed + 1000 * setting_index, r);
            try {
              const SimConfig cfg = neural_em_config(n, theta, risk, cens, seed);
              const SimulatedData sim = simulate(cfg);
              const CensoringCurve g = reverse_km(sim.data);
              const RiskScores truth = true_scores(cfg, sim.data);
              const Eigen::MatrixXd& x = sim.data.covariates();
              values[2][r] = integrated_bbs(sim.data, truth_predictor(cfg, sim.data), g, o.horizon).integrated;

              FitOptions opts = o.fit;
              opts.em.seed = seed;
              opts.train.seed = seed;
              const FittedModel pm = fit_model(sim.data, ModelKind::Parametric, opts);
              values[0][r] = pm.state.theta;
              values[3][r] = integrated_bbs(sim.data, pm.predictor(x), g, o.horizon).integrated;
              const RiskScores hp = pm.state.risk->evaluate(x);
              for (int k = 0; k < 3; ++k) values[5 + static_cast<std::size_t>(k)][r] = mise(truth.col(k), hp.col(k));

              if (o.include_neural) {
                opts.em.initial_theta = pm.state.theta;
                const FittedModel nm = fit_model(sim.data, ModelKind::Neural, opts);
                values[1][r] = nm.state.theta;
                values[4][r] = integrated_bbs(sim.data, nm.predictor(x), g, o.horizon).integrated;
                const RiskScores hn = nm.state.risk->evaluate(x);
                for (int k = 0; k < 3; ++k) values[8 + static_cast<std::size_t>(k)][r] = mise(truth.col(k), hn.col(k));
              }
              ok[r] = 1;
            } catch (const NumericError&) {
              ok[r] = 0;
            }
          });
          std::vector<std::string> row{std::to_string(n), to_string(risk), fmt(cens), fmt(theta)};
          std::size_t good = 0;
          for (char c : ok) good += c ? 1 : 0;
          row.push_back(std::to_string(good));
          for (const auto& column : values) {
            std::vector<double> kept;
            for (std::size_t r = 0; r < count; ++r) {
              if (ok[r] && std::isfinite(column[r])) kept.push_back(column[r]);
            }
            row.push_back(kept.empty() ? "nan" : fmt(sample_mean(kept)));
            row.push_back(kept.empty() ? "nan" : fmt(sample_sd(kept)));
          }
          row.push_back(std::to_string(count - good));
          table.rows.push_back(std::move(row));
        }
      }
    }
  }
  return table;
}

}  // namespace

StudyTable replicate_study(const StudyOptions& options) {
  if (options.replicates < 1) throw std::invalid_argument("replicate_study: replicates must be >= 1");
  if (options.study == "bbs-validation") return bbs_validation_study(options);
  if (options.study == "neural-em-validation") return neural_em_study(options);
  throw std::invalid_argument("unknown study '" + options.study + "'");
}

}  // namespace semicomp
