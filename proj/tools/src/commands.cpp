#include "semicomp_cli/commands.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "semicomp/errors.hpp"
#include "semicomp/harness.hpp"
#include "semicomp/io.hpp"
#include "semicomp/metrics.hpp"
#include "semicomp/simulate.hpp"

namespace semicomp::cli {

namespace {

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ValidationError(std::string("missing required ") + flag);
}

// Writes to `path`, or to `out` when path is empty.
template <class Fn>
void emit(const std::string& path, std::ostream& out, Fn fn) {
  if (path.empty()) {
    fn(out);
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  fn(f);
}

void cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  require(cfg.out, "--out");
  SimConfig sim = cfg.sim;
  if (sim.seed == 0) sim.seed = cfg.seed;
  const SimulatedData s = simulate(sim);
  write_dataset_csv(cfg.out, s.data);
  if (!cfg.truth.empty()) write_truth_csv(cfg.truth, s.truth);
  std::size_t censored = 0;
  for (const auto& r : s.data) censored += r.delta2 == 0 ? 1 : 0;
  out << "simulated " << s.data.size() << " subjects, censoring rate " << format_double(s.censoring_rate)
      << ", delta2=0 fraction " << format_double(static_cast<double>(censored) / static_cast<double>(s.data.size()))
      << '\n';
}

void cmd_fit(const RunConfig& cfg, std::ostream& out) {
  require(cfg.data, "--data");
  require(cfg.out, "--out");
  const Dataset data = read_dataset_csv(cfg.data);
  FitOptions opts = cfg.fit_options();
  if (cfg.grid_search && cfg.model == ModelKind::Neural) {
    const auto grid = cfg.train.grid.empty() ? default_grid() : cfg.train.grid;
    const auto gs = grid_search(data, opts, grid, cfg.folds, cfg.horizon, cfg.seed, cfg.threads);
    opts.train = opts.train.with(gs.best);
  }
  const FittedModel m = fit_model(data, cfg.model, opts);
  write_json(cfg.out, m.to_json());
  if (!cfg.trace.empty()) write_trace_csv(cfg.trace, m.trace);
  out << "fitted " << to_string(cfg.model) << " model: theta " << format_double(m.state.theta);
  if (!m.trace.empty()) {
    out << ", " << (m.trace.size() - 1) << " EM iterations" << (m.converged ? "" : " (not converged)")
        << ", observed log-likelihood " << format_double(m.trace.back().obs_loglik);
  }
  out << '\n';
}

std::vector<double> prediction_times(const RunConfig& cfg) {
  if (!cfg.times.empty()) return cfg.times;
  if (!(cfg.horizon > 0.0) || cfg.n_points < 1) throw ValidationError("--horizon must be > 0 and --n-points >= 1");
  std::vector<double> t;
  for (int k = 1; k <= cfg.n_points; ++k) t.push_back(cfg.horizon * k / cfg.n_points);
  return t;
}

void cmd_predict(const RunConfig& cfg, std::ostream& out) {
  require(cfg.model_path, "--model");
  require(cfg.data, "--data");
  require(cfg.out, "--out");
  FittedModel m;
  try {
    m = FittedModel::from_json(read_json(cfg.model_path));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model snapshot: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("model snapshot: ") + e.what());
  }
  const Dataset data = read_dataset_csv(cfg.data);
  const auto times = prediction_times(cfg);
  for (double t : times) {
    if (!(t >= 0.0)) throw ValidationError("prediction times must be >= 0");
  }
  const auto predict = m.predictor(data.covariates());
  Eigen::MatrixXd pi(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(times.size()));
  for (std::size_t k = 0; k < times.size(); ++k) pi.col(static_cast<Eigen::Index>(k)) = predict(times[k]);
  write_predictions_csv(cfg.out, times, pi);
  out << "wrote " << pi.rows() << " x " << pi.cols() << " predictions\n";
}

void cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
  require(cfg.data, "--data");
  require(cfg.preds, "--preds");
  const Dataset data = read_dataset_csv(cfg.data);
  const auto preds = read_predictions_csv(cfg.preds);
  const CensoringCurve g = reverse_km(data);
  BBSCurve curve;
  for (const auto& [t, pi] : preds) {
    if (t <= 0.0 || t > cfg.horizon * (1.0 + 1e-12)) continue;
    if (static_cast<std::size_t>(pi.size()) != data.size()) {
      throw ValidationError("predictions cover " + std::to_string(pi.size()) + " subjects, dataset has " +
                            std::to_string(data.size()));
    }
    if (!(g(t) > 0.0)) {
      curve.truncated = true;
      break;
    }
    curve.grid.push_back(t);
    curve.values.push_back(bbs(data, std::span<const double>(pi.data(), static_cast<std::size_t>(pi.size())), g, t));
  }
  if (curve.grid.empty()) throw ValidationError("no prediction times in (0, horizon] with positive censoring survival");
  curve.n_points = static_cast<int>(curve.grid.size());
  curve.horizon = curve.grid.back();
  curve.integrated = trapezoid_average(curve.grid, curve.values);
  curve.raw_integral = curve.integrated * (curve.grid.back() - curve.grid.front());
  emit(cfg.out, out, [&](std::ostream& o) { write_bbs_csv(o, curve); });
  out << bbs_summary_json(curve).dump() << '\n';
}

void cmd_cv(const RunConfig& cfg, std::ostream& out) {
  require(cfg.data, "--data");
  const Dataset data = read_dataset_csv(cfg.data);
  FitOptions opts = cfg.fit_options();
  nlohmann::json report;
  if (cfg.grid_search && cfg.model == ModelKind::Neural) {
    const auto grid = cfg.train.grid.empty() ? default_grid() : cfg.train.grid;
    const auto gs = grid_search(data, opts, grid, cfg.folds, cfg.horizon, cfg.seed, cfg.threads);
    opts.train = opts.train.with(gs.best);
    report["selected"] = {{"hidden_layers", gs.best.hidden_layers},
                          {"nodes_per_layer", gs.best.nodes_per_layer},
                          {"learning_rate", gs.best.learning_rate},
                          {"dropout_fraction", gs.best.dropout_fraction},
                          {"l2_rate", gs.best.l2_rate}};
  }
  const CVResult r = cross_validate(data, cfg.model, opts, cfg.folds, cfg.horizon, cfg.seed, cfg.threads);
  report["model"] = to_string(cfg.model);
  report["folds"] = cfg.folds;
  report["fold_ibbs"] = r.fold_ibbs;
  report["mean"] = r.mean;
  report["sd"] = r.sd;
  if (!cfg.out.empty()) write_json(cfg.out, report);
  out << report.dump() << '\n';
}

void cmd_bootstrap(const RunConfig& cfg, std::ostream& out) {
  require(cfg.data, "--data");
  if (cfg.bootstrap_resamples < 1) throw ValidationError("--resamples must be >= 1");
  const Dataset data = read_dataset_csv(cfg.data);
  const BaselineBand band = bootstrap_baselines(data, cfg.model, cfg.fit_options(), cfg.bootstrap_resamples,
                                                cfg.seed, cfg.grid_max, cfg.threads);
  emit(cfg.out, out, [&](std::ostream& o) { write_band_csv(o, band); });
  if (!cfg.out.empty()) {
    out << "bootstrap: " << band.resamples << " resamples, " << band.failures << " failed\n";
  }
}

void cmd_replicate(const RunConfig& cfg, std::ostream& out) {
  StudyOptions s = cfg.study;
  s.seed = cfg.seed;
  s.threads = cfg.threads;
  s.horizon = cfg.horizon;
  s.fit = cfg.fit_options();
  const StudyTable table = replicate_study(s);
  emit(cfg.out, out, [&](std::ostream& o) { write_study_csv(o, table); });
}

// Values given on the command line; unset ones leave the config untouched.
struct Flags {
  std::optional<std::string> data, out, truth, trace, model_path, preds, model, times, study, sizes, settings,
      risks;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<int> folds, resamples, n_points, max_iterations, epochs, hidden_layers, nodes, replicates, p;
  std::optional<double> horizon, grid_max, tolerance, lr, dropout, l2, theta, censoring, censoring_rate,
      initial_theta;
  std::optional<std::size_t> n;
  std::optional<std::string> risk;
  bool grid_search = false;
  bool uniform = false;
  bool no_neural = false;
  bool frozen_baselines = false;
};

void add_fit_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--max-iterations", f.max_iterations, "EM iteration cap");
  sub->add_option("--tolerance", f.tolerance, "relative log-likelihood change for EM convergence");
  sub->add_option("--epochs", f.epochs, "N-step epochs per EM iteration");
  sub->add_option("--lr", f.lr, "Adam learning rate");
  sub->add_option("--dropout", f.dropout, "dropout fraction");
  sub->add_option("--l2", f.l2, "L2 penalty rate");
  sub->add_option("--hidden-layers", f.hidden_layers, "hidden layers per sub-network");
  sub->add_option("--nodes", f.nodes, "nodes per hidden layer");
  sub->add_option("--initial-theta", f.initial_theta, "starting frailty variance (skips the parametric warm start)");
  sub->add_flag("--frozen-baselines", f.frozen_baselines, "hold baseline jumps fixed inside the N-step loss");
}

void apply_flags(RunConfig& cfg, const Flags& f) {
  if (f.data) cfg.data = *f.data;
  if (f.out) cfg.out = *f.out;
  if (f.truth) cfg.truth = *f.truth;
  if (f.trace) cfg.trace = *f.trace;
  if (f.preds) cfg.preds = *f.preds;
  if (f.seed) cfg.seed = *f.seed;
  if (f.threads) cfg.threads = std::max(1u, *f.threads);
  if (f.folds) cfg.folds = *f.folds;
  if (f.resamples) cfg.bootstrap_resamples = *f.resamples;
  if (f.horizon) cfg.horizon = *f.horizon;
  if (f.n_points) cfg.n_points = *f.n_points;
  if (f.grid_max) cfg.grid_max = *f.grid_max;
  if (f.times) cfg.times = parse_number_list(*f.times);
  if (f.grid_search) cfg.grid_search = true;
  if (f.max_iterations) cfg.em.max_iterations = *f.max_iterations;
  if (f.tolerance) cfg.em.tolerance = *f.tolerance;
  if (f.epochs) cfg.em.n_step_epochs_per_iteration = *f.epochs;
  if (f.initial_theta) cfg.em.initial_theta = *f.initial_theta;
  if (f.lr) cfg.train.learning_rate = *f.lr;
  if (f.dropout) cfg.train.dropout_fraction = *f.dropout;
  if (f.l2) cfg.train.l2_rate = *f.l2;
  if (f.hidden_layers) cfg.train.hidden_layers = *f.hidden_layers;
  if (f.nodes) cfg.train.nodes_per_layer = *f.nodes;
  if (f.frozen_baselines) cfg.train.profile_baselines = false;
  if (f.n) cfg.sim.n = *f.n;
  if (f.theta) cfg.sim.theta = *f.theta;
  if (f.p) cfg.sim.p = *f.p;
  if (f.risk) cfg.sim.risk_kind = risk_kind_from_string(*f.risk);
  if (f.censoring) cfg.sim.censoring_target = *f.censoring;
  if (f.censoring_rate) {
    cfg.sim.censoring_rate = *f.censoring_rate;
    cfg.sim.censoring_target.reset();
  }
  if (f.uniform) cfg.sim.uniform_covariate = true;
  if (f.study) cfg.study.study = *f.study;
  if (f.replicates) cfg.study.replicates = *f.replicates;
  if (f.no_neural) cfg.study.include_neural = false;
  if (f.sizes) {
    cfg.study.sizes.clear();
    for (double v : parse_number_list(*f.sizes)) cfg.study.sizes.push_back(static_cast<std::size_t>(v));
    if (!cfg.study.sizes.empty()) cfg.study.bbs_n = cfg.study.sizes.front();
  }
  if (f.settings) {
    cfg.study.bbs_settings.clear();
    for (double v : parse_number_list(*f.settings)) cfg.study.bbs_settings.push_back(static_cast<int>(v));
  }
  if (f.risks) {
    cfg.study.risks.clear();
    std::stringstream ss(*f.risks);
    std::string item;
    while (std::getline(ss, item, ',')) cfg.study.risks.push_back(risk_kind_from_string(item));
  }
}

}  // namespace

void run_command(const RunConfig& cfg, std::ostream& out) {
  if (cfg.command == "simulate") return cmd_simulate(cfg, out);
  if (cfg.command == "fit") return cmd_fit(cfg, out);
  if (cfg.command == "predict") return cmd_predict(cfg, out);
  if (cfg.command == "evaluate") return cmd_evaluate(cfg, out);
  if (cfg.command == "cv") return cmd_cv(cfg, out);
  if (cfg.command == "bootstrap") return cmd_bootstrap(cfg, out);
  if (cfg.command == "replicate-study") return cmd_replicate(cfg, out);
  throw ValidationError("unknown command '" + cfg.command + "'");
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gamma-frailty illness-death models for semi-competing risks"};
  app.require_subcommand(1);
  // Global flags may follow the subcommand.
  app.fallthrough();
  std::string config_path;
  Flags f;
  app.add_option("--config", config_path, "JSON run configuration; flags override its values");
  app.add_option("--seed", f.seed, "base random seed");
  app.add_option("--threads", f.threads, "worker threads for folds, resamples and replicates");

  auto* sim = app.add_subcommand("simulate", "simulate a semi-competing risks dataset");
  sim->add_option("--out", f.out, "dataset CSV");
  sim->add_option("--truth", f.truth, "latent truth CSV");
  sim->add_option("--n", f.n, "subjects");
  sim->add_option("--theta", f.theta, "frailty variance");
  sim->add_option("--risk", f.risk, "none|linear|nonlinear|nonmonotonic");
  sim->add_option("--p", f.p, "covariates");
  sim->add_option("--censoring", f.censoring, "target fraction with delta2 = 0");
  sim->add_option("--censoring-rate", f.censoring_rate, "exponential censoring rate");
  sim->add_flag("--uniform", f.uniform, "x ~ U(0,1) instead of N(0,1)");

  auto* fit = app.add_subcommand("fit", "fit a neural, linear or parametric model");
  fit->add_option("--data", f.data, "dataset CSV");
  fit->add_option("--model", f.model, "neural|linear|parametric");
  fit->add_option("--out", f.out, "model snapshot JSON");
  fit->add_option("--trace", f.trace, "EM iteration trace CSV");
  fit->add_flag("--grid-search", f.grid_search, "choose network settings by cross-validated iBBS first");
  fit->add_option("--folds", f.folds, "folds for --grid-search");
  fit->add_option("--horizon", f.horizon, "iBBS horizon for --grid-search");
  add_fit_flags(fit, f);

  auto* predict = app.add_subcommand("predict", "joint event-free survival predictions");
  predict->add_option("--model", f.model_path, "model snapshot JSON");
  predict->add_option("--data", f.data, "dataset CSV");
  predict->add_option("--times", f.times, "comma-separated prediction times");
  predict->add_option("--horizon", f.horizon, "grid horizon when --times is absent");
  predict->add_option("--n-points", f.n_points, "grid size when --times is absent");
  predict->add_option("--out", f.out, "predictions CSV");

  auto* evaluate = app.add_subcommand("evaluate", "bivariate Brier score of predictions");
  evaluate->add_option("--data", f.data, "dataset CSV");
  evaluate->add_option("--preds", f.preds, "predictions CSV");
  evaluate->add_option("--horizon", f.horizon, "last evaluation time");
  evaluate->add_option("--out", f.out, "BBS curve CSV (stdout when omitted)");

  auto* cv = app.add_subcommand("cv", "k-fold cross-validated iBBS");
  cv->add_option("--data", f.data, "dataset CSV");
  cv->add_option("--model", f.model, "neural|linear|parametric");
  cv->add_option("--folds", f.folds, "number of folds");
  cv->add_option("--horizon", f.horizon, "iBBS horizon");
  cv->add_option("--out", f.out, "JSON report");
  cv->add_flag("--grid-search", f.grid_search, "select network settings by nested grid search");
  add_fit_flags(cv, f);

  auto* boot = app.add_subcommand("bootstrap", "bootstrap bands for the cumulative baseline hazards");
  boot->add_option("--data", f.data, "dataset CSV");
  boot->add_option("--model", f.model, "neural|linear|parametric");
  boot->add_option("--resamples", f.resamples, "bootstrap resamples");
  boot->add_option("--grid-max", f.grid_max, "right end of the evaluation grid (default: largest y2)");
  boot->add_option("--out", f.out, "band CSV (stdout when omitted)");
  add_fit_flags(boot, f);

  auto* rep = app.add_subcommand("replicate-study", "simulation study tables");
  rep->add_option("--study", f.study, "bbs-validation|neural-em-validation");
  rep->add_option("--replicates", f.replicates, "replicates per setting");
  rep->add_option("--horizon", f.horizon, "iBBS horizon");
  rep->add_option("--sizes", f.sizes, "comma-separated sample sizes");
  rep->add_option("--settings", f.settings, "bbs-validation settings, e.g. 1,3");
  rep->add_option("--risks", f.risks, "comma-separated risk kinds for neural-em-validation");
  rep->add_flag("--no-neural", f.no_neural, "skip the neural fits");
  rep->add_option("--out", f.out, "results CSV (stdout when omitted)");
  add_fit_flags(rep, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) apply_json(cfg, read_json(config_path));
    cfg.command = app.get_subcommands().front()->get_name();
    if (f.model_path) cfg.model_path = *f.model_path;
    try {
      if (f.model) cfg.model = model_kind_from_string(*f.model);
      apply_flags(cfg, f);
    } catch (const std::invalid_argument& e) {
      throw ValidationError(e.what());
    }
    run_command(cfg, out);
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace semicomp::cli
