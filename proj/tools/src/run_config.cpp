#include "semicomp_cli/run_config.hpp"

#include <set>
#include <sstream>
#include <stdexcept>

#include "semicomp/errors.hpp"

namespace semicomp::cli {

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ValidationError("config: unknown key '" + where + key + "'");
  }
}

template <class T>
void take(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

void apply_sim(SimConfig& s, const nlohmann::json& j) {
  reject_unknown(j,
                 {"n", "theta", "baselines", "risk_kind", "p", "beta", "uniform_covariate", "censoring_target",
                  "censoring_rate", "seed"},
                 "sim.");
  take(j, "n", s.n);
  take(j, "theta", s.theta);
  take(j, "p", s.p);
  take(j, "beta", s.beta);
  take(j, "uniform_covariate", s.uniform_covariate);
  take(j, "censoring_rate", s.censoring_rate);
  take(j, "seed", s.seed);
  if (j.contains("risk_kind")) s.risk_kind = risk_kind_from_string(j.at("risk_kind").get<std::string>());
  if (j.contains("censoring_target")) {
    if (j.at("censoring_target").is_null()) {
      s.censoring_target.reset();
    } else {
      s.censoring_target = j.at("censoring_target").get<double>();
    }
  }
  if (j.contains("baselines")) {
    const auto& b = j.at("baselines");
    if (b.size() != 3) throw ValidationError("config: sim.baselines needs three [phi1, phi2] pairs");
    for (std::size_t g = 0; g < 3; ++g) s.baselines[g] = WeibullHazard{b[g].at(0).get<double>(), b[g].at(1).get<double>()};
  }
}

void apply_em(EMConfig& e, const nlohmann::json& j) {
  reject_unknown(j, {"max_iterations", "tolerance", "n_step_epochs_per_iteration", "seed", "initial_theta"}, "em.");
  take(j, "max_iterations", e.max_iterations);
  take(j, "tolerance", e.tolerance);
  take(j, "n_step_epochs_per_iteration", e.n_step_epochs_per_iteration);
  take(j, "seed", e.seed);
  if (j.contains("initial_theta")) e.initial_theta = j.at("initial_theta").get<double>();
}

void apply_train(TrainConfig& t, const nlohmann::json& j) {
  reject_unknown(j,
                 {"learning_rate", "dropout_fraction", "l2_rate", "epochs", "hidden_layers", "nodes_per_layer",
                  "seed", "anchored", "profile_baselines"},
                 "train.");
  take(j, "learning_rate", t.learning_rate);
  take(j, "dropout_fraction", t.dropout_fraction);
  take(j, "l2_rate", t.l2_rate);
  take(j, "epochs", t.epochs);
  take(j, "hidden_layers", t.hidden_layers);
  take(j, "nodes_per_layer", t.nodes_per_layer);
  take(j, "seed", t.seed);
  take(j, "anchored", t.anchored);
  take(j, "profile_baselines", t.profile_baselines);
}

void apply_study(StudyOptions& s, const nlohmann::json& j) {
  reject_unknown(j, {"study", "replicates", "bbs_n", "bbs_settings", "sizes", "thetas", "risks", "censoring",
                     "include_neural"},
                 "study.");
  take(j, "study", s.study);
  take(j, "replicates", s.replicates);
  take(j, "bbs_n", s.bbs_n);
  take(j, "bbs_settings", s.bbs_settings);
  take(j, "sizes", s.sizes);
  take(j, "thetas", s.thetas);
  take(j, "censoring", s.censoring);
  take(j, "include_neural", s.include_neural);
  if (j.contains("risks")) {
    s.risks.clear();
    for (const auto& r : j.at("risks")) s.risks.push_back(risk_kind_from_string(r.get<std::string>()));
  }
}

}  // namespace

FitOptions RunConfig::fit_options() const {
  FitOptions f;
  f.em = em;
  f.train = train;
  f.parametric = parametric;
  if (f.em.seed == 0) f.em.seed = seed;
  if (f.train.seed == 0) f.train.seed = seed;
  if (f.parametric.seed == 0) f.parametric.seed = seed;
  return f;
}

void apply_json(RunConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("config: expected a JSON object");
  try {
    reject_unknown(j,
                   {"command", "data", "out", "truth", "trace", "model_path", "preds", "model", "em", "train",
                    "parametric", "sim", "folds", "bootstrap_resamples", "horizon", "n_points", "times",
                    "grid_max", "grid_search", "seed", "threads", "study"},
                   "");
    take(j, "command", cfg.command);
    take(j, "data", cfg.data);
    take(j, "out", cfg.out);
    take(j, "truth", cfg.truth);
    take(j, "trace", cfg.trace);
    take(j, "model_path", cfg.model_path);
    take(j, "preds", cfg.preds);
    if (j.contains("model")) cfg.model = model_kind_from_string(j.at("model").get<std::string>());
    if (j.contains("em")) apply_em(cfg.em, j.at("em"));
    if (j.contains("train")) apply_train(cfg.train, j.at("train"));
    if (j.contains("parametric")) {
      const auto& p = j.at("parametric");
      reject_unknown(p, {"restarts", "seed", "jitter", "max_iterations"}, "parametric.");
      take(p, "restarts", cfg.parametric.restarts);
      take(p, "seed", cfg.parametric.seed);
      take(p, "jitter", cfg.parametric.jitter);
      take(p, "max_iterations", cfg.parametric.max_iterations);
    }
    if (j.contains("sim")) apply_sim(cfg.sim, j.at("sim"));
    take(j, "folds", cfg.folds);
    take(j, "bootstrap_resamples", cfg.bootstrap_resamples);
    take(j, "horizon", cfg.horizon);
    take(j, "n_points", cfg.n_points);
    take(j, "times", cfg.times);
    if (j.contains("grid_max")) cfg.grid_max = j.at("grid_max").get<double>();
    take(j, "grid_search", cfg.grid_search);
    take(j, "seed", cfg.seed);
    take(j, "threads", cfg.threads);
    if (j.contains("study")) apply_study(cfg.study, j.at("study"));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json baselines = nlohmann::json::array();
  for (const auto& b : cfg.sim.baselines) baselines.push_back({b.phi1, b.phi2});
  nlohmann::json risks = nlohmann::json::array();
  for (auto r : cfg.study.risks) risks.push_back(to_string(r));
  nlohmann::json j{
      {"command", cfg.command},
      {"model", to_string(cfg.model)},
      {"em",
       {{"max_iterations", cfg.em.max_iterations},
        {"tolerance", cfg.em.tolerance},
        {"n_step_epochs_per_iteration", cfg.em.n_step_epochs_per_iteration},
        {"seed", cfg.em.seed}}},
      {"train",
       {{"learning_rate", cfg.train.learning_rate},
        {"dropout_fraction", cfg.train.dropout_fraction},
        {"l2_rate", cfg.train.l2_rate},
        {"epochs", cfg.train.epochs},
        {"hidden_layers", cfg.train.hidden_layers},
        {"nodes_per_layer", cfg.train.nodes_per_layer},
        {"seed", cfg.train.seed},
        {"anchored", cfg.train.anchored},
        {"profile_baselines", cfg.train.profile_baselines}}},
      {"parametric",
       {{"restarts", cfg.parametric.restarts},
        {"seed", cfg.parametric.seed},
        {"jitter", cfg.parametric.jitter},
        {"max_iterations", cfg.parametric.max_iterations}}},
      {"sim",
       {{"n", cfg.sim.n},
        {"theta", cfg.sim.theta},
        {"baselines", baselines},
        {"risk_kind", to_string(cfg.sim.risk_kind)},
        {"p", cfg.sim.p},
        {"beta", cfg.sim.beta},
        {"uniform_covariate", cfg.sim.uniform_covariate},
        {"censoring_rate", cfg.sim.censoring_rate},
        {"seed", cfg.sim.seed}}},
      {"folds", cfg.folds},
      {"bootstrap_resamples", cfg.bootstrap_resamples},
      {"horizon", cfg.horizon},
      {"n_points", cfg.n_points},
      {"times", cfg.times},
      {"grid_search", cfg.grid_search},
      {"seed", cfg.seed},
      {"threads", cfg.threads},
      {"study",
       {{"study", cfg.study.study},
        {"replicates", cfg.study.replicates},
        {"bbs_n", cfg.study.bbs_n},
        {"bbs_settings", cfg.study.bbs_settings},
        {"sizes", cfg.study.sizes},
        {"thetas", cfg.study.thetas},
        {"risks", risks},
        {"censoring", cfg.study.censoring},
        {"include_neural", cfg.study.include_neural}}},
  };
  j["sim"]["censoring_target"] = cfg.sim.censoring_target ? nlohmann::json(*cfg.sim.censoring_target) : nlohmann::json(nullptr);
  if (cfg.em.initial_theta) j["em"]["initial_theta"] = *cfg.em.initial_theta;
  if (cfg.grid_max) j["grid_max"] = *cfg.grid_max;
  const std::pair<const char*, const std::string*> paths[] = {{"data", &cfg.data},   {"out", &cfg.out},
                                                              {"truth", &cfg.truth}, {"trace", &cfg.trace},
                                                              {"model_path", &cfg.model_path}, {"preds", &cfg.preds}};
  for (const auto& [key, value] : paths) {
    if (!value->empty()) j[key] = *value;
  }
  return j;
}

std::vector<double> parse_number_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ValidationError("'" + item + "' is not a number");
    }
    if (item.find_first_not_of(" \t", used) != std::string::npos) throw ValidationError("'" + item + "' is not a number");
    out.push_back(v);
  }
  return out;
}

}  // namespace semicomp::cli
