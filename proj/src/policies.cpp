#include "notifrl/policies.hpp"

#include <algorithm>
#include <utility>

#include "notifrl/rng.hpp"

namespace notifrl::policies {

BaselinePolicy::BaselinePolicy(double tau, sim::VisitWeights weights,
                               double denom_floor)
    : BaselinePolicy(
          tau,
          [weights](int badge, double act) {
            return sim::visit_probability(badge, act, weights);
          },
          denom_floor) {}

BaselinePolicy::BaselinePolicy(double tau, VisitModel model, double denom_floor)
    : tau_(tau), visit_model_(std::move(model)), denom_floor_(denom_floor) {
  if (!(tau_ >= 0.0)) throw ValidationError("tau must be >= 0");
  if (!(denom_floor_ > 0.0)) throw ValidationError("denom_floor must be > 0");
  if (!visit_model_) throw ValidationError("visit model must be callable");
}

Action BaselinePolicy::decide(const State& state) const {
  if (state.queue_size <= 0) return Action::NotSend;
  const double p_send = visit_model_(state.badge_count + 1, state.activeness);
  const double p_not = visit_model_(state.badge_count, state.activeness);
  const double lift = (p_send - p_not) / std::max(p_not, denom_floor_);
  return lift > tau_ ? Action::Send : Action::NotSend;
}

Action baseline_decide(const State& state, double tau) {
  return BaselinePolicy(tau).decide(state);
}

EpsilonGreedyPolicy::EpsilonGreedyPolicy(std::shared_ptr<const Policy> base,
                                         double epsilon)
    : base_(std::move(base)), epsilon_(epsilon) {
  if (!base_) throw ValidationError("base policy must be non-null");
  if (!(epsilon_ >= 0.0 && epsilon_ <= 1.0)) {
    throw ValidationError("epsilon must lie in [0, 1]");
  }
}

double EpsilonGreedyPolicy::action_prob(const State& state, Action a) const {
  return (1.0 - epsilon_) * base_->action_prob(state, a) + epsilon_ / 2.0;
}

TrajectoryBatch collect_batch(const Policy& policy, const sim::SimConfig& config,
                              int n_trajectories, std::uint64_t seed,
                              const std::string& behavior_descriptor) {
  config.validate();
  if (n_trajectories < 1) {
    throw ValidationError("n_trajectories must be >= 1");
  }
  TrajectoryBatch batch;
  batch.horizon = config.horizon;
  batch.metadata.behavior_policy = behavior_descriptor;
  batch.metadata.collection_seed = seed;
  batch.trajectories.reserve(n_trajectories);
  sim::Environment env;
  for (int i = 0; i < n_trajectories; ++i) {
    const std::uint64_t ep_seed = seed + static_cast<std::uint64_t>(i);
    Trajectory traj =
        sim::run_episode(env, policy, config, ep_seed, mix_seed(ep_seed, 1));
    for (const Transition& tr : traj.steps) {
      // Zero-probability actions make the log useless off-policy; refuse
      // early rather than produce a dataset estimators must reject.
      if (!(policy.action_prob(tr.state, Action::Send) > 0.0) ||
          !(policy.action_prob(tr.state, Action::NotSend) > 0.0)) {
        throw PropensityError(
            "behavior policy assigns zero probability to an action; "
            "collected data would not support off-policy estimation");
      }
    }
    batch.trajectories.push_back(std::move(traj));
  }
  batch.validate();
  return batch;
}

}  // namespace notifrl::policies
