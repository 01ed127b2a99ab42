#pragma once

// The N-step: three fully-connected sub-networks producing h1, h2, h3, a
// trainable log frailty variance xi = log(theta), the negative expected
// complete-data log-likelihood loss, and its reverse-mode gradient.

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "semicomp/frailty.hpp"
#include "semicomp/risk_model.hpp"
#include "semicomp/survival.hpp"

namespace semicomp {

enum class Activation { ReLU, Linear };

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
  Activation activation = Activation::ReLU;
};

// Inverted dropout applied to hidden activations during training.
struct DropoutContext {
  double fraction = 0.0;
  std::mt19937_64* rng = nullptr;
};

// Feed-forward ReLU network with a single linear output whose bias is pinned
// at zero.
class RiskNetwork {
 public:
  RiskNetwork() = default;
  // Validates dimensions; the last layer must be a 1-unit linear layer with
  // zero bias.
  explicit RiskNetwork(std::vector<DenseLayer> layers);

  // Uniform +-sqrt(6/(fan_in + fan_out)) weights, zero biases.
  static RiskNetwork initialize(Eigen::Index input_dim, int hidden_layers, int nodes_per_layer,
                                std::mt19937_64& rng);

  double forward(std::span<const double> x, const DropoutContext* dropout = nullptr) const;
  Eigen::VectorXd forward(const Eigen::MatrixXd& x, const DropoutContext* dropout = nullptr) const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  Eigen::Index input_dim() const;
  // Trainable scalars (the output bias is excluded).
  Eigen::Index parameter_count() const;
  double squared_weight_norm() const;

  nlohmann::json to_json() const;
  static RiskNetwork from_json(const nlohmann::json& j);

 private:
  friend struct NetworkAccess;
  std::vector<DenseLayer> layers_;
};

using NetworkTriple = std::array<RiskNetwork, 3>;

// Three network outputs as log-risks. When anchored, h_g(x) = F_g(x) - F_g(0)
// so that a shift of h cannot trade off against the baseline scale.
class NeuralRisk final : public RiskModel {
 public:
  explicit NeuralRisk(NetworkTriple networks, bool anchored = true)
      : networks_(std::move(networks)), anchored_(anchored) {}

  RiskScores evaluate(const Eigen::MatrixXd& x) const override;
  nlohmann::json to_json() const override;
  static NeuralRisk from_json(const nlohmann::json& j);

  const NetworkTriple& networks() const { return networks_; }
  bool anchored() const { return anchored_; }

 private:
  NetworkTriple networks_;
  bool anchored_ = true;
};

// F(x) for every row, minus F(0) when anchored.
Eigen::VectorXd network_scores(const RiskNetwork& net, const Eigen::MatrixXd& x, bool anchored);

struct GridPoint {
  int nodes_per_layer = 32;
  int hidden_layers = 2;
  double learning_rate = 1e-3;
  double dropout_fraction = 0.1;
  double l2_rate = 1e-4;

  bool operator==(const GridPoint&) const = default;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  double dropout_fraction = 0.1;
  double l2_rate = 1e-4;
  int epochs = 10;
  bool full_batch = true;
  int hidden_layers = 2;
  int nodes_per_layer = 32;
  std::vector<GridPoint> grid;
  std::uint64_t seed = 0;
  // h_g(0) = 0 convention.
  bool anchored = true;
  // Re-maximize Q over the baseline jumps inside the loss (profile form).
  bool profile_baselines = true;

  TrainConfig with(const GridPoint& point) const;
  GridPoint point() const;
};

// {1,2} layers x {16,32,64} nodes x lr {1e-2,1e-3} x dropout {0,0.1,0.3} x l2 {0,1e-4,1e-3}.
std::vector<GridPoint> default_grid();

struct FrailtyVarianceParam {
  double xi = 0.0;
  double theta() const;
  static FrailtyVarianceParam from_theta(double theta);
};

NetworkTriple initialize_networks(Eigen::Index input_dim, const TrainConfig& config,
                                  std::uint64_t seed);

// Sorted risk-set bookkeeping for one transition.
struct RiskSetIndex {
  std::vector<double> event_counts;       // per distinct event time
  std::vector<Eigen::Index> order;        // exposed subjects by exposure time
  std::vector<std::size_t> risk_start;    // first position in order at risk at each event time
  std::vector<std::size_t> events_up_to;  // per subject: event times <= its exposure
};

// Everything in Q that is frozen during an N-step.
struct NStepData {
  Eigen::MatrixXd x;
  Eigen::Matrix<double, Eigen::Dynamic, 3> events;   // e_g,i
  Eigen::Matrix<double, Eigen::Dynamic, 3> weights;  // E[gamma_i] Lambda0g(exposure_i)
  bool anchored = true;
  double constant = 0.0;  // log-jump and E[log gamma] event terms
  double sum_log_mean = 0.0;
  double sum_mean = 0.0;
  std::size_t n = 0;

  // Profile form: weights and log-jumps follow the Breslow update for the
  // current h instead of the frozen baselines.
  bool profile = false;
  Eigen::VectorXd frailty_means;
  double event_log_mean = 0.0;
  std::array<RiskSetIndex, 3> risk_sets;
};

NStepData prepare_n_step(const Dataset& data, std::span<const FrailtyPosterior> post,
                         const std::array<Baseline, 3>& baselines, bool anchored = true,
                         bool profile = false);

// Breslow weights E[gamma_i] Lambda0g(exposure_i) and the event-term constant
// for the given log-risks.
void profile_terms(const NStepData& d, const RiskScores& h,
                   Eigen::Matrix<double, Eigen::Dynamic, 3>& weights, double& constant);

// Q1 + Q2 + Q3 + Q4 for the given log-risks and theta.
double q_total(const NStepData& d, const RiskScores& h, double theta);
// n (r log r - lgamma r) + (r - 1) sum E[log gamma] - r sum E[gamma], r = 1/theta.
double q4_value(const NStepData& d, double theta);

// -Q/n + l2_rate * sum of squared weights.
double loss(const NStepData& d, const NetworkTriple& nets, double xi, double l2_rate);
double loss(const Dataset& data, std::span<const FrailtyPosterior> post,
            const std::array<Baseline, 3>& baselines, const NetworkTriple& nets, double xi,
            double l2_rate, bool anchored = true, bool profile = false);

// Flattened trainable parameters: per network, per layer W (column-major) then
// b for hidden layers and W only for the output layer; xi last.
Eigen::VectorXd pack_parameters(const NetworkTriple& nets, double xi);
void unpack_parameters(const Eigen::VectorXd& params, NetworkTriple& nets, double& xi);

struct LossGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;  // same layout as pack_parameters
};

LossGradient loss_and_gradient(const NStepData& d, const NetworkTriple& nets, double xi,
                               double l2_rate, const DropoutContext* dropout = nullptr);

// Adam moments carried from one N-step to the next.
struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  int step = 0;
};

struct TrainResult {
  NetworkTriple networks;
  double xi = 0.0;
  double initial_loss = 0.0;
  double best_loss = 0.0;
  std::vector<double> loss_history;  // deterministic loss before each epoch, then final
  bool diverged = false;
};

// Full-batch Adam (0.9, 0.999, 1e-8) for config.epochs; returns the parameters
// with the lowest deterministic loss seen. `stream` selects the dropout RNG
// stream; `adam`, when given, continues from and updates the moments.
TrainResult train_step(const NStepData& d, const NetworkTriple& nets, double xi,
                       const TrainConfig& config, std::uint64_t stream = 0,
                       AdamState* adam = nullptr);
TrainResult train_step(const Dataset& data, std::span<const FrailtyPosterior> post,
                       const std::array<Baseline, 3>& baselines, const NetworkTriple& nets,
                       double xi, const TrainConfig& config, std::uint64_t stream = 0);

using CovariateFunction = std::function<double(std::span<const double>)>;

double mise(const CovariateFunction& truth, const CovariateFunction& fitted,
            const Eigen::MatrixXd& covariates);
double mise(const Eigen::VectorXd& truth, const Eigen::VectorXd& fitted);

}  // namespace semicomp
