#include "semicomp/simulate.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <stdexcept>
#include <tuple>

namespace semicomp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kCalibrationDraws = 100000;
constexpr std::uint64_t kCalibrationSeed = 0x5eedca1bULL;

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

void validate_config(const SimConfig& c) {
  if (c.n < 1) throw std::invalid_argument("SimConfig: n must be >= 1");
  if (!(c.theta >= 0.0)) throw std::invalid_argument("SimConfig: theta must be >= 0");
  if (c.p < 0) throw std::invalid_argument("SimConfig: p must be >= 0");
  for (const auto& w : c.baselines) {
    if (!(w.phi1 > 0.0) || !(w.phi2 > 0.0)) throw std::invalid_argument("SimConfig: Weibull parameters must be > 0");
  }
  if (c.censoring_target && !(*c.censoring_target >= 0.0 && *c.censoring_target < 1.0)) {
    throw std::invalid_argument("SimConfig: censoring_target must be in [0, 1)");
  }
  if (!(c.censoring_rate >= 0.0)) throw std::invalid_argument("SimConfig: censoring_rate must be >= 0");
}

// One subject's covariates, frailty and uncensored event times.
struct Draw {
  std::vector<double> x;
  LatentTruth truth;
};

Draw draw_subject(const SimConfig& c, std::mt19937_64& rng) {
  Draw d;
  d.x.resize(static_cast<std::size_t>(c.p));
  if (c.uniform_covariate) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& v : d.x) v = u(rng);
  } else {
    std::normal_distribution<double> z(0.0, 1.0);
    for (auto& v : d.x) v = z(rng);
  }
  auto& t = d.truth;
  if (c.theta > 0.0) {
    std::gamma_distribution<double> g(1.0 / c.theta, c.theta);
    t.gamma = g(rng);
  }
  t.h = true_risk(c, d.x);
  std::exponential_distribution<double> e(1.0);
  const auto latent = [&](int g) {
    return c.baselines[g].inverse_cumulative(e(rng) / (t.gamma * std::exp(t.h[g])));
  };
  const double t1 = latent(0);
  const double t2 = latent(1);
  if (t1 < t2) {
    t.t1 = t1;
    t.t2 = t1 + latent(2);
    if (!(t.t2 > t.t1)) t.t2 = std::nextafter(t.t1, kInf);
  } else {
    t.t1 = kInf;
    t.t2 = t2;
  }
  return d;
}

using CacheKey = std::tuple<double, double, double, double, double, double, double, int, int, double, bool, double>;

}  // namespace

const char* to_string(RiskKind kind) {
  switch (kind) {
    case RiskKind::None: return "none";
    case RiskKind::Linear: return "linear";
    case RiskKind::NonLinear: return "nonlinear";
    case RiskKind::NonMonotonic: return "nonmonotonic";
  }
  return "unknown";
}

RiskKind risk_kind_from_string(const std::string& s) {
  if (s == "none") return RiskKind::None;
  if (s == "linear") return RiskKind::Linear;
  if (s == "nonlinear" || s == "non-linear") return RiskKind::NonLinear;
  if (s == "nonmonotonic" || s == "non-monotonic") return RiskKind::NonMonotonic;
  throw std::invalid_argument("unknown risk kind '" + s + "'");
}

std::array<double, 3> true_risk(const SimConfig& config, std::span<const double> x) {
  double lin = 0.0;
  double cubic = 0.0;
  for (double v : x) {
    lin += config.beta * v;
    cubic += config.beta * v * v * v;
  }
  double h = 0.0;
  switch (config.risk_kind) {
    case RiskKind::None: h = 0.0; break;
    case RiskKind::Linear: h = lin; break;
    case RiskKind::NonLinear: h = cubic; break;
    case RiskKind::NonMonotonic: h = std::log(std::abs(lin) + 1.0); break;
  }
  return {h, h, h};
}

double calibrate_censoring_rate(const SimConfig& config, double target) {
  validate_config(config);
  if (!(target >= 0.0 && target < 1.0)) throw std::invalid_argument("censoring target must be in [0, 1)");
  if (target == 0.0) return 0.0;

  static std::mutex mutex;
  static std::map<CacheKey, double> cache;
  const CacheKey key{config.theta,
                     config.baselines[0].phi1, config.baselines[0].phi2,
                     config.baselines[1].phi1, config.baselines[1].phi2,
                     config.baselines[2].phi1, config.baselines[2].phi2,
                     static_cast<int>(config.risk_kind), config.p, config.beta,
                     config.uniform_covariate, target};
  {
    std::lock_guard<std::mutex> lock(mutex);
    if (const auto it = cache.find(key); it != cache.end()) return it->second;
  }

  auto rng = make_rng(kCalibrationSeed, 0);
  std::vector<double> t2(kCalibrationDraws);
  for (auto& v : t2) v = draw_subject(config, rng).truth.t2;

  // P(C < T2) = E[1 - exp(-rate T2)], increasing in rate.
  const auto fraction = [&](double rate) {
    double s = 0.0;
    for (double v : t2) s += -std::expm1(-rate * v);
    return s / static_cast<double>(t2.size());
  };
  double lo = -20.0;
  double hi = 20.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (fraction(std::exp(mid)) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double rate = std::exp(0.5 * (lo + hi));
  std::lock_guard<std::mutex> lock(mutex);
  cache[key] = rate;
  return rate;
}

double effective_censoring_rate(const SimConfig& config) {
  if (config.censoring_target) return calibrate_censoring_rate(config, *config.censoring_target);
  return config.censoring_rate;
}

SimulatedData simulate(const SimConfig& config) {
  validate_config(config);
  SimulatedData out;
  out.censoring_rate = effective_censoring_rate(config);

  auto rng = make_rng(config.seed, 1);
  std::exponential_distribution<double> cens(out.censoring_rate > 0.0 ? out.censoring_rate : 1.0);
  std::vector<ObservedRecord> records;
  records.reserve(config.n);
  out.truth.reserve(config.n);
  for (std::size_t i = 0; i < config.n; ++i) {
    Draw d = draw_subject(config, rng);
    auto& t = d.truth;
    t.c = out.censoring_rate > 0.0 ? cens(rng) : kInf;

    ObservedRecord r;
    r.y2 = std::min(t.t2, t.c);
    r.delta2 = t.t2 <= t.c ? 1 : 0;
    r.y1 = std::min(t.t1, r.y2);
    r.delta1 = t.t1 <= r.y2 ? 1 : 0;
    r.covariates = std::move(d.x);
    records.push_back(std::move(r));
    out.truth.push_back(t);
  }
  out.data = Dataset(std::move(records));
  return out;
}

double true_survival(const SimConfig& config, std::span<const double> x, bool gamma_marginalized, double t,
                     double gamma) {
  if (t <= 0.0) return 1.0;
  const auto h = true_risk(config, x);
  const double a = config.baselines[0].cumulative(t) * std::exp(h[0]) +
                   config.baselines[1].cumulative(t) * std::exp(h[1]);
  if (gamma_marginalized) return marginal_event_free_survival(config.theta, a);
  return std::exp(-gamma * a);
}

ModelState true_state(const SimConfig& config) {
  ModelState s;
  s.baselines = {config.baselines[0], config.baselines[1], config.baselines[2]};
  s.theta = config.theta;
  s.risk = std::make_shared<FunctionRisk>(
      [config](std::span<const double> x) { return true_risk(config, x); },
      std::string("truth:") + to_string(config.risk_kind));
  return s;
}

SimConfig bbs_study_config(int setting, std::size_t n, std::uint64_t seed) {
  if (setting < 1 || setting > 4) throw std::invalid_argument("bbs study setting must be 1-4");
  SimConfig c;
  c.n = n;
  c.theta = 0.5;
  c.baselines = {WeibullHazard{0.2, 1.5}, WeibullHazard{0.2, 1.5}, WeibullHazard{0.2, 1.5}};
  const bool covariate = setting == 2 || setting == 4;
  const bool censored = setting == 3 || setting == 4;
  c.p = covariate ? 1 : 0;
  c.uniform_covariate = covariate;
  c.risk_kind = covariate ? RiskKind::Linear : RiskKind::None;
  if (censored) c.censoring_target = 0.5;
  c.seed = seed;
  return c;
}

SimConfig neural_em_config(std::size_t n, double theta, RiskKind kind, double censoring_target,
                           std::uint64_t seed) {
  SimConfig c;
  c.n = n;
  c.theta = theta;
  c.risk_kind = kind;
  c.p = 2;
  if (censoring_target > 0.0) c.censoring_target = censoring_target;
  c.seed = seed;
  return c;
}

}  // namespace semicomp
