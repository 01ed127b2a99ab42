#include "semicomp/neural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "semicomp/errors.hpp"

namespace semicomp {

struct NetworkAccess {
  static std::vector<DenseLayer>& layers(RiskNetwork& net) { return net.layers_; }
};

namespace {

constexpr double kXiMin = -20.0;
constexpr double kXiMax = 10.0;

Eigen::MatrixXd relu(const Eigen::MatrixXd& z) { return z.cwiseMax(0.0); }

Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, const DropoutContext& ctx) {
  const double keep = 1.0 - ctx.fraction;
  std::bernoulli_distribution coin(keep);
  Eigen::MatrixXd mask(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) mask(i, j) = coin(*ctx.rng) ? 1.0 / keep : 0.0;
  return mask;
}

bool dropout_active(const DropoutContext* ctx) {
  return ctx != nullptr && ctx->fraction > 0.0 && ctx->rng != nullptr;
}

// Activations of one batch forward pass, kept for backprop.
struct ForwardTrace {
  std::vector<Eigen::MatrixXd> inputs;  // input to each layer
  std::vector<Eigen::MatrixXd> pre;     // pre-activation of each hidden layer
  std::vector<Eigen::MatrixXd> masks;   // dropout masks (empty when inactive)
  Eigen::VectorXd output;
};

ForwardTrace forward_trace(const RiskNetwork& net, const Eigen::MatrixXd& x,
                           const DropoutContext* dropout) {
  ForwardTrace tr;
  const auto& layers = net.layers();
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    const auto& layer = layers[l];
    tr.inputs.push_back(a);
    Eigen::MatrixXd z = a * layer.weights.transpose();
    z.rowwise() += layer.bias.transpose();
    a = relu(z);
    tr.pre.push_back(std::move(z));
    if (dropout_active(dropout)) {
      Eigen::MatrixXd m = dropout_mask(a.rows(), a.cols(), *dropout);
      a.array() *= m.array();
      tr.masks.push_back(std::move(m));
    }
  }
  tr.inputs.push_back(a);
  tr.output = a * layers.back().weights.transpose();
  return tr;
}

RiskSetIndex build_risk_set(const Dataset& data, int g) {
  RiskSetIndex rs;
  std::vector<double> times;
  for (const auto& r : data) {
    if (transition_event(r, g) == 1) times.push_back(transition_event_time(r, g));
  }
  std::sort(times.begin(), times.end());
  std::vector<double> unique;
  for (double t : times) {
    if (unique.empty() || t != unique.back()) {
      unique.push_back(t);
      rs.event_counts.push_back(1.0);
    } else {
      rs.event_counts.back() += 1.0;
    }
  }
  std::vector<std::pair<double, Eigen::Index>> exposed;
  rs.events_up_to.assign(data.size(), 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double s = transition_exposure_time(data[i], g);
    if (s < 0.0) continue;
    exposed.emplace_back(s, static_cast<Eigen::Index>(i));
    rs.events_up_to[i] = static_cast<std::size_t>(std::upper_bound(unique.begin(), unique.end(), s) - unique.begin());
  }
  std::sort(exposed.begin(), exposed.end());
  for (const auto& e : exposed) rs.order.push_back(e.second);
  for (double t : unique) {
    const auto it = std::lower_bound(exposed.begin(), exposed.end(), t,
                                     [](const auto& e, double v) { return e.first < v; });
    rs.risk_start.push_back(static_cast<std::size_t>(it - exposed.begin()));
  }
  return rs;
}

double squared_norm(const NetworkTriple& nets) {
  double s = 0.0;
  for (const auto& n : nets) s += n.squared_weight_norm();
  return s;
}

void check_finite_loss(double value) {
  if (!std::isfinite(value)) throw NumericError(NumericFailure::NonFiniteLoss, "loss is not finite");
}

}  // namespace

RiskNetwork::RiskNetwork(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw std::invalid_argument("RiskNetwork: no layers");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.bias.size() != layer.weights.rows()) {
      throw std::invalid_argument("RiskNetwork: bias length must match weight rows");
    }
    if (l > 0 && layer.weights.cols() != layers_[l - 1].weights.rows()) {
      throw std::invalid_argument("RiskNetwork: layer dimensions do not chain");
    }
    const bool last = l + 1 == layers_.size();
    if (last != (layer.activation == Activation::Linear)) {
      throw std::invalid_argument("RiskNetwork: hidden layers are ReLU, the output layer is linear");
    }
  }
  const auto& out = layers_.back();
  if (out.weights.rows() != 1) throw std::invalid_argument("RiskNetwork: output must be scalar");
  if (out.bias(0) != 0.0) throw std::invalid_argument("RiskNetwork: output bias must be zero");
}

RiskNetwork RiskNetwork::initialize(Eigen::Index input_dim, int hidden_layers, int nodes_per_layer,
                                    std::mt19937_64& rng) {
  std::vector<DenseLayer> layers;
  Eigen::Index fan_in = input_dim;
  auto make = [&](Eigen::Index fan_out, Activation act) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    DenseLayer layer;
    layer.weights.resize(fan_out, fan_in);
    for (Eigen::Index j = 0; j < fan_in; ++j)
      for (Eigen::Index i = 0; i < fan_out; ++i) layer.weights(i, j) = u(rng);
    layer.bias = Eigen::VectorXd::Zero(fan_out);
    layer.activation = act;
    layers.push_back(std::move(layer));
    fan_in = fan_out;
  };
  for (int l = 0; l < hidden_layers; ++l) make(nodes_per_layer, Activation::ReLU);
  make(1, Activation::Linear);
  return RiskNetwork(std::move(layers));
}

double RiskNetwork::forward(std::span<const double> x, const DropoutContext* dropout) const {
  Eigen::MatrixXd row(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j) row(0, static_cast<Eigen::Index>(j)) = x[j];
  return forward(row, dropout)(0);
}

Eigen::VectorXd RiskNetwork::forward(const Eigen::MatrixXd& x, const DropoutContext* dropout) const {
  if (x.cols() != input_dim()) {
    throw std::invalid_argument("RiskNetwork::forward: expected " + std::to_string(input_dim()) +
                                " covariates, got " + std::to_string(x.cols()));
  }
  if (!dropout_active(dropout)) {
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
      Eigen::MatrixXd z = a * layers_[l].weights.transpose();
      z.rowwise() += layers_[l].bias.transpose();
      a = relu(z);
    }
    return a * layers_.back().weights.transpose();
  }
  return forward_trace(*this, x, dropout).output;
}

Eigen::Index RiskNetwork::input_dim() const {
  return layers_.empty() ? 0 : layers_.front().weights.cols();
}

Eigen::Index RiskNetwork::parameter_count() const {
  Eigen::Index count = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    count += layers_[l].weights.size();
    if (l + 1 < layers_.size()) count += layers_[l].bias.size();
  }
  return count;
}

double RiskNetwork::squared_weight_norm() const {
  double s = 0.0;
  for (const auto& layer : layers_) s += layer.weights.squaredNorm();
  return s;
}

nlohmann::json RiskNetwork::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& layer : layers_) {
    nlohmann::json w = nlohmann::json::array();
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(layer.weights.cols()));
      for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) row[static_cast<std::size_t>(j)] = layer.weights(i, j);
      w.push_back(row);
    }
    out.push_back({{"W", w},
                   {"b", std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size())},
                   {"activation", layer.activation == Activation::ReLU ? "relu" : "linear"}});
  }
  return out;
}

RiskNetwork RiskNetwork::from_json(const nlohmann::json& j) {
  std::vector<DenseLayer> layers;
  for (const auto& lj : j) {
    const auto rows = lj.at("W");
    DenseLayer layer;
    const auto n_out = static_cast<Eigen::Index>(rows.size());
    const auto n_in = n_out == 0 ? 0 : static_cast<Eigen::Index>(rows[0].size());
    layer.weights.resize(n_out, n_in);
    for (Eigen::Index i = 0; i < n_out; ++i)
      for (Eigen::Index k = 0; k < n_in; ++k) layer.weights(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
    const auto b = lj.at("b").get<std::vector<double>>();
    layer.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
    const auto act = lj.at("activation").get<std::string>();
    if (act == "relu") {
      layer.activation = Activation::ReLU;
    } else if (act == "linear") {
      layer.activation = Activation::Linear;
    } else {
      throw std::invalid_argument("RiskNetwork::from_json: unknown activation '" + act + "'");
    }
    layers.push_back(std::move(layer));
  }
  return RiskNetwork(std::move(layers));
}

Eigen::VectorXd network_scores(const RiskNetwork& net, const Eigen::MatrixXd& x, bool anchored) {
  Eigen::VectorXd h = net.forward(x);
  if (anchored) h.array() -= net.forward(Eigen::MatrixXd::Zero(1, net.input_dim()))(0);
  return h;
}

RiskScores NeuralRisk::evaluate(const Eigen::MatrixXd& x) const {
  RiskScores h(x.rows(), 3);
  for (int g = 0; g < 3; ++g) h.col(g) = network_scores(networks_[g], x, anchored_);
  return h;
}

nlohmann::json NeuralRisk::to_json() const {
  nlohmann::json nets = nlohmann::json::array();
  for (const auto& n : networks_) nets.push_back(n.to_json());
  return {{"type", "neural"}, {"networks", nets}, {"anchored", anchored_}};
}

NeuralRisk NeuralRisk::from_json(const nlohmann::json& j) {
  const auto& nets = j.at("networks");
  if (nets.size() != 3) throw std::invalid_argument("NeuralRisk::from_json: expected 3 networks");
  return NeuralRisk({RiskNetwork::from_json(nets[0]), RiskNetwork::from_json(nets[1]),
                     RiskNetwork::from_json(nets[2])},
                    j.value("anchored", true));
}

TrainConfig TrainConfig::with(const GridPoint& p) const {
  TrainConfig c = *this;
  c.nodes_per_layer = p.nodes_per_layer;
  c.hidden_layers = p.hidden_layers;
  c.learning_rate = p.learning_rate;
  c.dropout_fraction = p.dropout_fraction;
  c.l2_rate = p.l2_rate;
  return c;
}

GridPoint TrainConfig::point() const {
  return {nodes_per_layer, hidden_layers, learning_rate, dropout_fraction, l2_rate};
}

std::vector<GridPoint> default_grid() {
  std::vector<GridPoint> grid;
  for (int layers : {1, 2})
    for (int nodes : {16, 32, 64})
      for (double lr : {1e-2, 1e-3})
        for (double dropout : {0.0, 0.1, 0.3})
          for (double l2 : {0.0, 1e-4, 1e-3}) grid.push_back({nodes, layers, lr, dropout, l2});
  return grid;
}

double FrailtyVarianceParam::theta() const { return std::exp(xi); }

FrailtyVarianceParam FrailtyVarianceParam::from_theta(double theta) {
  if (!(theta > 0.0)) throw std::invalid_argument("FrailtyVarianceParam: theta must be > 0");
  return {std::log(theta)};
}

NetworkTriple initialize_networks(Eigen::Index input_dim, const TrainConfig& config,
                                  std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x6e65u};
  std::mt19937_64 rng(seq);
  NetworkTriple nets;
  for (auto& n : nets) n = RiskNetwork::initialize(input_dim, config.hidden_layers, config.nodes_per_layer, rng);
  return nets;
}

NStepData prepare_n_step(const Dataset& data, std::span<const FrailtyPosterior> post,
                         const std::array<Baseline, 3>& baselines, bool anchored, bool profile) {
  if (post.size() != data.size()) throw std::invalid_argument("prepare_n_step: posterior count mismatch");
  NStepData d;
  d.n = data.size();
  d.anchored = anchored;
  if (profile) {
    d.profile = true;
    d.frailty_means.resize(static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) {
      d.frailty_means(static_cast<Eigen::Index>(i)) = post[i].mean;
      d.event_log_mean += (data[i].delta1 + data[i].delta2) * post[i].log_mean;
    }
    for (int g = 0; g < 3; ++g) d.risk_sets[g] = build_risk_set(data, g);
  }
  d.x = data.covariates();
  const auto n = static_cast<Eigen::Index>(data.size());
  d.events.resize(n, 3);
  d.weights.resize(n, 3);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data[i];
    const auto ii = static_cast<Eigen::Index>(i);
    d.constant += (r.delta1 + r.delta2) * post[i].log_mean;
    d.sum_log_mean += post[i].log_mean;
    d.sum_mean += post[i].mean;
    for (int g = 0; g < 3; ++g) {
      const int e = transition_event(r, g);
      d.events(ii, g) = e;
      const double exposure = transition_exposure_time(r, g);
      if (profile) continue;
      d.weights(ii, g) = exposure < 0.0 ? 0.0 : post[i].mean * cumulative_hazard(baselines[g], exposure);
      if (e == 1) {
        const double lam = event_intensity(baselines[g], transition_event_time(r, g));
        if (!(lam > 0.0)) {
          throw NumericError(NumericFailure::NonFiniteQ,
                             "zero baseline intensity at an event of transition " + std::to_string(g + 1));
        }
        d.constant += std::log(lam);
      }
    }
  }
  return d;
}

double q4_value(const NStepData& d, double theta) {
  const double r = 1.0 / theta;
  return static_cast<double>(d.n) * (r * std::log(r) - std::lgamma(r)) + (r - 1.0) * d.sum_log_mean -
         r * d.sum_mean;
}

void profile_terms(const NStepData& d, const RiskScores& h,
                   Eigen::Matrix<double, Eigen::Dynamic, 3>& weights, double& constant) {
  const Eigen::Index n = h.rows();
  weights.setZero(n, 3);
  constant = d.event_log_mean;
  for (int g = 0; g < 3; ++g) {
    const auto& rs = d.risk_sets[g];
    const std::size_t m = rs.order.size();
    std::vector<double> suffix(m + 1, 0.0);
    for (std::size_t k = m; k-- > 0;) {
      const Eigen::Index i = rs.order[k];
      suffix[k] = suffix[k + 1] + d.frailty_means(i) * std::exp(h(i, g));
    }
    // cumulative[k] = Lambda0g just after the k-th event time
    std::vector<double> cumulative(rs.event_counts.size() + 1, 0.0);
    for (std::size_t k = 0; k < rs.event_counts.size(); ++k) {
      const double risk = suffix[rs.risk_start[k]];
      const double jump = rs.event_counts[k] / risk;
      constant += rs.event_counts[k] * std::log(jump);
      cumulative[k + 1] = cumulative[k] + jump;
    }
    for (Eigen::Index i : rs.order) {
      weights(i, g) = d.frailty_means(i) * cumulative[rs.events_up_to[static_cast<std::size_t>(i)]];
    }
  }
}

double q_total(const NStepData& d, const RiskScores& h, double theta) {
  if (d.profile) {
    Eigen::Matrix<double, Eigen::Dynamic, 3> w;
    double constant = 0.0;
    profile_terms(d, h, w, constant);
    const double risk_terms = (d.events.array() * h.array() - w.array() * h.array().exp()).sum();
    return constant + risk_terms + q4_value(d, theta);
  }
  const double risk_terms =
      (d.events.array() * h.array() - d.weights.array() * h.array().exp()).sum();
  return d.constant + risk_terms + q4_value(d, theta);
}

double loss(const NStepData& d, const NetworkTriple& nets, double xi, double l2_rate) {
  RiskScores h(d.x.rows(), 3);
  for (int g = 0; g < 3; ++g) h.col(g) = network_scores(nets[g], d.x, d.anchored);
  const double value = -q_total(d, h, std::exp(xi)) / static_cast<double>(d.n) + l2_rate * squared_norm(nets);
  check_finite_loss(value);
  return value;
}

double loss(const Dataset& data, std::span<const FrailtyPosterior> post,
            const std::array<Baseline, 3>& baselines, const NetworkTriple& nets, double xi,
            double l2_rate, bool anchored, bool profile) {
  return loss(prepare_n_step(data, post, baselines, anchored, profile), nets, xi, l2_rate);
}

Eigen::VectorXd pack_parameters(const NetworkTriple& nets, double xi) {
  Eigen::Index total = 1;
  for (const auto& n : nets) total += n.parameter_count();
  Eigen::VectorXd out(total);
  Eigen::Index k = 0;
  for (const auto& n : nets) {
    const auto& layers = n.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& w = layers[l].weights;
      out.segment(k, w.size()) = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
      k += w.size();
      if (l + 1 < layers.size()) {
        out.segment(k, layers[l].bias.size()) = layers[l].bias;
        k += layers[l].bias.size();
      }
    }
  }
  out(k) = xi;
  return out;
}

void unpack_parameters(const Eigen::VectorXd& params, NetworkTriple& nets, double& xi) {
  Eigen::Index k = 0;
  for (auto& n : nets) {
    auto& layers = NetworkAccess::layers(n);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto& w = layers[l].weights;
      Eigen::Map<Eigen::VectorXd>(w.data(), w.size()) = params.segment(k, w.size());
      k += w.size();
      if (l + 1 < layers.size()) {
        layers[l].bias = params.segment(k, layers[l].bias.size());
        k += layers[l].bias.size();
      }
    }
  }
  if (k + 1 != params.size()) throw std::invalid_argument("unpack_parameters: size mismatch");
  xi = params(k);
}

LossGradient loss_and_gradient(const NStepData& d, const NetworkTriple& nets, double xi,
                               double l2_rate, const DropoutContext* dropout) {
  const double nd = static_cast<double>(d.n);
  const double theta = std::exp(xi);

  LossGradient out;
  Eigen::Index total = 1;
  for (const auto& n : nets) total += n.parameter_count();
  out.gradient.resize(total);

  // The anchor F(0) rides along as an extra row.
  const Eigen::Index n = d.x.rows();
  Eigen::MatrixXd x = d.x;
  if (d.anchored) {
    x.conservativeResize(n + 1, Eigen::NoChange);
    x.row(n).setZero();
  }
  RiskScores h(n, 3);
  std::array<ForwardTrace, 3> traces;
  for (int g = 0; g < 3; ++g) {
    traces[g] = forward_trace(nets[g], x, dropout);
    h.col(g) = traces[g].output.head(n);
    if (d.anchored) h.col(g).array() -= traces[g].output(n);
  }
  out.loss = -q_total(d, h, theta) / nd + l2_rate * squared_norm(nets);
  check_finite_loss(out.loss);
  // Profile form: the jumps maximize Q for this h, so their own derivative
  // terms vanish and only the weights change.
  Eigen::Matrix<double, Eigen::Dynamic, 3> profile_w;
  if (d.profile) {
    double unused = 0.0;
    profile_terms(d, h, profile_w, unused);
  }
  const auto& weights = d.profile ? profile_w : d.weights;

  Eigen::Index k = 0;
  for (int g = 0; g < 3; ++g) {
    const auto& layers = nets[g].layers();
    const auto& tr = traces[g];
    // d loss / d h_g,i
    Eigen::VectorXd dout(x.rows());
    dout.head(n) = -(d.events.col(g).array() - weights.col(g).array() * h.col(g).array().exp()).matrix() / nd;
    if (d.anchored) dout(n) = -dout.head(n).sum();

    std::vector<Eigen::MatrixXd> grad_w(layers.size());
    std::vector<Eigen::VectorXd> grad_b(layers.size());
    const std::size_t last = layers.size() - 1;
    grad_w[last] = dout.transpose() * tr.inputs[last];
    Eigen::MatrixXd delta = dout * layers[last].weights;  // n x k_last
    for (std::size_t l = last; l-- > 0;) {
      if (!tr.masks.empty()) delta.array() *= tr.masks[l].array();
      delta.array() *= (tr.pre[l].array() > 0.0).cast<double>();
      grad_w[l] = delta.transpose() * tr.inputs[l];
      grad_b[l] = delta.colwise().sum().transpose();
      if (l > 0) delta = delta * layers[l].weights;
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
      Eigen::MatrixXd gw = grad_w[l] + 2.0 * l2_rate * layers[l].weights;
      out.gradient.segment(k, gw.size()) = Eigen::Map<const Eigen::VectorXd>(gw.data(), gw.size());
      k += gw.size();
      if (l < last) {
        out.gradient.segment(k, grad_b[l].size()) = grad_b[l];
        k += grad_b[l].size();
      }
    }
  }
  // d(-Q4/n)/d xi with r = exp(-xi)
  const double r = 1.0 / theta;
  const double dq4_dr = nd * (std::log(r) + 1.0 - digamma(r)) + d.sum_log_mean - d.sum_mean;
  out.gradient(k) = r * dq4_dr / nd;
  return out;
}

TrainResult train_step(const NStepData& d, const NetworkTriple& nets, double xi,
                       const TrainConfig& config, std::uint64_t stream, AdamState* adam) {
  TrainResult res;
  res.networks = nets;
  res.xi = xi;
  res.initial_loss = loss(d, nets, xi, config.l2_rate);
  res.best_loss = res.initial_loss;
  res.loss_history.push_back(res.initial_loss);

  std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::mt19937_64 rng(seq);
  DropoutContext ctx{config.dropout_fraction, &rng};

  Eigen::VectorXd params = pack_parameters(nets, xi);
  AdamState local;
  AdamState& opt = adam ? *adam : local;
  if (opt.m.size() != params.size()) {
    opt.m = Eigen::VectorXd::Zero(params.size());
    opt.v = Eigen::VectorXd::Zero(params.size());
    opt.step = 0;
  }
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  NetworkTriple work = nets;
  double work_xi = xi;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    LossGradient lg;
    try {
      lg = loss_and_gradient(d, work, work_xi, config.l2_rate, &ctx);
    } catch (const NumericError&) {
      res.diverged = true;
      break;
    }
    ++opt.step;
    opt.m = beta1 * opt.m + (1.0 - beta1) * lg.gradient;
    opt.v = beta2 * opt.v + (1.0 - beta2) * lg.gradient.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1, opt.step);
    const double c2 = 1.0 - std::pow(beta2, opt.step);
    params.array() -= config.learning_rate * (opt.m.array() / c1) / ((opt.v.array() / c2).sqrt() + eps);
    params(params.size() - 1) = std::clamp(params(params.size() - 1), kXiMin, kXiMax);
    unpack_parameters(params, work, work_xi);

    double current = std::numeric_limits<double>::quiet_NaN();
    try {
      current = loss(d, work, work_xi, config.l2_rate);
    } catch (const NumericError&) {
      res.diverged = true;
      break;
    }
    res.loss_history.push_back(current);
    if (current < res.best_loss) {
      res.best_loss = current;
      res.networks = work;
      res.xi = work_xi;
    }
  }
  return res;
}

TrainResult train_step(const Dataset& data, std::span<const FrailtyPosterior> post,
                       const std::array<Baseline, 3>& baselines, const NetworkTriple& nets,
                       double xi, const TrainConfig& config, std::uint64_t stream) {
  return train_step(prepare_n_step(data, post, baselines, config.anchored, config.profile_baselines), nets, xi,
                    config, stream);
}

double mise(const CovariateFunction& truth, const CovariateFunction& fitted,
            const Eigen::MatrixXd& covariates) {
  if (covariates.rows() == 0) throw std::invalid_argument("mise: empty covariate sample");
  double acc = 0.0;
  std::vector<double> row(static_cast<std::size_t>(covariates.cols()));
  for (Eigen::Index i = 0; i < covariates.rows(); ++i) {
    for (Eigen::Index j = 0; j < covariates.cols(); ++j) row[static_cast<std::size_t>(j)] = covariates(i, j);
    const double diff = truth(row) - fitted(row);
    acc += diff * diff;
  }
  return acc / static_cast<double>(covariates.rows());
}

double mise(const Eigen::VectorXd& truth, const Eigen::VectorXd& fitted) {
  if (truth.size() == 0 || truth.size() != fitted.size()) throw std::invalid_argument("mise: size mismatch");
  return (truth - fitted).squaredNorm() / static_cast<double>(truth.size());
}

}  // namespace semicomp
