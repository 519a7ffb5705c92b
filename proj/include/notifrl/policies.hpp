#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "notifrl/mdp.hpp"
#include "notifrl/qlearn.hpp"
#include "notifrl/sim.hpp"

namespace notifrl::policies {

class UniformRandomPolicy final : public Policy {
 public:
  double action_prob(const State&, Action) const override { return 0.5; }
};

// P(visit | badge_count, activeness); defaults to the simulator's model.
using VisitModel = std::function<double(int badge_count, double activeness)>;

// Deterministic uplift-threshold rule: send when the relative visit-rate
// lift of one more notification, (p_send - p_not) / p_not, exceeds tau.
// An empty queue always yields NotSend. The denominator is floored to keep
// near-zero visit rates from spiking the lift.
class BaselinePolicy final : public Policy {
 public:
  explicit BaselinePolicy(double tau, sim::VisitWeights weights = {},
                          double denom_floor = 1e-6);
  BaselinePolicy(double tau, VisitModel model, double denom_floor = 1e-6);

  Action decide(const State& state) const;
  double action_prob(const State& state, Action a) const override {
    return decide(state) == a ? 1.0 : 0.0;
  }
  double tau() const { return tau_; }

 private:
  double tau_;
  VisitModel visit_model_;
  double denom_floor_;
};

// Mixes a base policy with a coin flip: with probability epsilon the action
// is uniform over the two choices, otherwise the base decides. For a
// deterministic base this gives propensities epsilon/2 and 1 - epsilon/2,
// so every action stays reachable whenever epsilon > 0.
class EpsilonGreedyPolicy final : public Policy {
 public:
  EpsilonGreedyPolicy(std::shared_ptr<const Policy> base, double epsilon);

  double action_prob(const State& state, Action a) const override;
  double epsilon() const { return epsilon_; }

 private:
  std::shared_ptr<const Policy> base_;
  double epsilon_;
};

// Greedy argmax over a trained Q-network; ties resolve to NotSend.
class GreedyQPolicy final : public Policy {
 public:
  explicit GreedyQPolicy(qlearn::QNetwork net) : net_(std::move(net)) {}

  double action_prob(const State& state, Action a) const override {
    return net_.greedy_action(state) == a ? 1.0 : 0.0;
  }
  const qlearn::QNetwork& network() const { return net_; }

 private:
  qlearn::QNetwork net_;
};

// Convenience wrapper for the threshold rule with the default visit model.
Action baseline_decide(const State& state, double tau);

// Runs n_trajectories episodes of the simulator under `policy` and returns
// the logged batch. Episode i uses env seed (seed + i); the whole
// collection is reproducible from (policy, config, n, seed). Refuses
// behavior policies that give any action zero probability at a visited
// state, since such logs cannot support off-policy reweighting.
TrajectoryBatch collect_batch(const Policy& policy, const sim::SimConfig& config,
                              int n_trajectories, std::uint64_t seed,
                              const std::string& behavior_descriptor = "");

}  // namespace notifrl::policies
