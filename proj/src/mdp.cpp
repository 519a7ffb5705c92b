#include "notifrl/mdp.hpp"

#include <cmath>

namespace notifrl {

Action action_from_index(int index) {
  if (index != 0 && index != 1) {
    throw ValidationError("action index must be 0 or 1, got " +
                          std::to_string(index));
  }
  return static_cast<Action>(index);
}

namespace {

void check_state(const State& s, int horizon, bool is_next, std::size_t traj,
                 std::size_t step) {
  auto fail = [&](const std::string& what) {
    throw ValidationError("trajectory " + std::to_string(traj) + " step " +
                          std::to_string(step) + ": " + what);
  };
  if (s.badge_count < 0) fail("badge_count is negative");
  if (s.queue_size < 0) fail("queue_size is negative");
  if (!(s.activeness >= 0.0 && s.activeness <= 1.0)) {
    fail("activeness outside [0, 1]");
  }
  // The observation after the final step may sit at time_index == horizon;
  // every acted-on state must lie strictly inside the episode.
  const int hi = is_next ? horizon : horizon - 1;
  if (s.time_index < 0 || s.time_index > hi) fail("time_index out of range");
}

}  // namespace

void TrajectoryBatch::validate() const {
  if (horizon < 1) throw ValidationError("batch horizon must be >= 1");
  if (trajectories.empty()) throw ValidationError("batch has no trajectories");
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto& steps = trajectories[i].steps;
    if (static_cast<int>(steps.size()) != horizon) {
      throw ValidationError("trajectory " + std::to_string(i) + " has " +
                            std::to_string(steps.size()) + " steps, expected " +
                            std::to_string(horizon));
    }
    for (std::size_t t = 0; t < steps.size(); ++t) {
      const Transition& tr = steps[t];
      check_state(tr.state, horizon, false, i, t);
      check_state(tr.next_state, horizon, true, i, t);
      if (!(tr.behavior_prob > 0.0) || tr.behavior_prob > 1.0) {
        throw PropensityError("trajectory " + std::to_string(i) + " step " +
                              std::to_string(t) +
                              ": behavior_prob outside (0, 1]");
      }
      if (tr.reward != 0.0 && tr.reward != 1.0) {
        throw ValidationError("trajectory " + std::to_string(i) + " step " +
                              std::to_string(t) +
                              ": reward must be 0 or 1 in logged data");
      }
      const bool should_terminate = (t + 1 == steps.size());
      if (tr.terminal != should_terminate) {
        throw ValidationError("trajectory " + std::to_string(i) + " step " +
                              std::to_string(t) + ": terminal flag must be " +
                              "set exactly at the final step");
      }
      if (t + 1 < steps.size() && !(tr.next_state == steps[t + 1].state)) {
        throw ValidationError("trajectory " + std::to_string(i) + " step " +
                              std::to_string(t) +
                              ": next_state does not chain to the next step");
      }
    }
  }
}

double discounted_return(const std::vector<double>& rewards, double gamma) {
  if (!(gamma > 0.0) || gamma > 1.0) {
    throw ValidationError("gamma must lie in (0, 1]");
  }
  double acc = 0.0;
  double disc = 1.0;
  for (double r : rewards) {
    acc += disc * r;
    disc *= gamma;
  }
  return acc;
}

double undiscounted_value(const TrajectoryBatch& batch) {
  if (batch.trajectories.empty()) {
    throw ValidationError("undiscounted_value: batch has no trajectories");
  }
  double total = 0.0;
  for (const Trajectory& traj : batch.trajectories) {
    double ep = 0.0;
    for (const Transition& tr : traj.steps) ep += tr.reward;
    total += ep;
  }
  return total / static_cast<double>(batch.trajectories.size());
}

Action Policy::sample(const State& state, std::mt19937_64& rng) const {
  const double p_send = action_prob(state, Action::Send);
  const double p_not = action_prob(state, Action::NotSend);
  if (!(p_send >= 0.0) || !(p_not >= 0.0) ||
      std::abs(p_send + p_not - 1.0) > 1e-9) {
    throw ValidationError("action_prob does not form a distribution");
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng) < p_send ? Action::Send : Action::NotSend;
}

}  // namespace notifrl
