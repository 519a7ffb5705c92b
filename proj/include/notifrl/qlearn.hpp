#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "notifrl/mdp.hpp"

namespace notifrl::qlearn {

enum class Algorithm { DQN, DoubleDQN };

std::string algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);

// Per-feature shift/scale applied before the first layer. Fitted once on
// the training batch and frozen; never re-fitted at serving time.
struct FeatureNormalizer {
  std::array<double, 4> mean{0.0, 0.0, 0.0, 0.0};
  std::array<double, 4> stddev{1.0, 1.0, 1.0, 1.0};

  std::array<double, 4> apply(const State& s) const;
  // Population mean/stddev over the batch's observed states s_t. Features
  // with (near-)zero spread keep stddev 1 so they pass through shifted only.
  static FeatureNormalizer fit(const TrajectoryBatch& batch);
};

// Fully-connected ReLU network mapping a state to one Q-value per action.
// Parameters live in a single flat vector (per layer: row-major weights,
// then biases) so optimizers and finite-difference checks can treat the
// model as a plain coordinate vector.
class QNetwork {
 public:
  QNetwork() = default;
  // Layer sizes, input first; e.g. {4, 32, 32, 2}. Weights are drawn
  // uniformly from +-sqrt(6 / (fan_in + fan_out)); biases start at zero.
  QNetwork(std::vector<int> layer_dims, std::uint64_t seed);

  std::array<double, 2> forward(const State& state) const;
  double q_value(const State& state, Action a) const;
  // Argmax action; ties resolve to NotSend.
  Action greedy_action(const State& state) const;

  const std::vector<int>& layer_dims() const { return dims_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  FeatureNormalizer& normalizer() { return norm_; }
  const FeatureNormalizer& normalizer() const { return norm_; }

  nlohmann::json to_json() const;
  static QNetwork from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static QNetwork load(const std::string& path);

 private:
  friend std::vector<double> batch_loss_gradient(const QNetwork&,
                                                 std::span<const Transition>,
                                                 std::span<const double>);
  friend double batch_loss(const QNetwork&, std::span<const Transition>,
                           std::span<const double>);

  struct LayerView {
    std::size_t w_off = 0;
    std::size_t b_off = 0;
    int in = 0;
    int out = 0;
  };

  void build_views();
  // Forward pass keeping pre-activations for backprop.
  void trace(const State& s, std::vector<std::vector<double>>& acts,
             std::vector<std::vector<double>>& pres) const;

  std::vector<int> dims_;
  std::vector<double> params_;
  std::vector<LayerView> views_;
  FeatureNormalizer norm_;
};

// One-step TD target y = r + gamma * max_a Q(s', a; target_net); just r at
// the horizon. The target network is the only function of s' used here, so
// updating the online network between syncs leaves targets unchanged.
double dqn_target(const Transition& tr, const QNetwork& target_net,
                  double gamma);

// Double-DQN target: the online network picks argmax_a Q(s', a), the target
// network scores it. Collapses to dqn_target when the two nets are equal.
double double_dqn_target(const Transition& tr, const QNetwork& online_net,
                         const QNetwork& target_net, double gamma);

// Mean squared error (and its gradient w.r.t. the flat parameter vector)
// between fixed targets and Q(s_i, a_i) over a mini-batch.
double batch_loss(const QNetwork& net, std::span<const Transition> batch,
                  std::span<const double> targets);
std::vector<double> batch_loss_gradient(const QNetwork& net,
                                        std::span<const Transition> batch,
                                        std::span<const double> targets);

struct TrainConfig {
  double gamma = 0.95;
  double learning_rate = 1e-3;
  int batch_size = 64;
  int target_update_period = 100;
  int n_updates = 2000;
  int hidden_width = 32;
  Algorithm algorithm = Algorithm::DoubleDQN;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainReport {
  // (update index, mini-batch loss before the step), one entry per update.
  std::vector<std::pair<int, double>> loss_curve;
  QNetwork final_network;
  TrainConfig config;
};

// Training produced a non-finite loss; carries everything learned so far.
struct DivergenceError : std::runtime_error {
  DivergenceError(const std::string& what, TrainReport partial);
  TrainReport partial_report;
};

// Offline (Double) DQN on a fixed batch: uniform mini-batches with
// replacement, plain SGD, target network synced every
// target_update_period updates. Deterministic given (batch, config).
TrainReport train_offline(const TrajectoryBatch& batch,
                          const TrainConfig& config);

}  // namespace notifrl::qlearn
