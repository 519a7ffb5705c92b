// Shared test fixtures and independent oracles. The oracles here compute
// expected values by direct probability arithmetic or exhaustive dynamic
// programming, never by calling the estimators or trainers under test.
#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "notifrl/mdp.hpp"
#include "notifrl/rng.hpp"

namespace fixtures {

using namespace notifrl;

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Always plays one fixed action (propensity 1 / 0).
struct ConstantPolicy final : Policy {
  Action choice = Action::Send;
  explicit ConstantPolicy(Action a) : choice(a) {}
  double action_prob(const State&, Action a) const override {
    return a == choice ? 1.0 : 0.0;
  }
};

// State-indexed send probabilities; the tabular state id lives in
// badge_count. Used as behavior and target policies on tabular fixtures.
struct TablePolicy final : Policy {
  std::vector<double> send_prob;
  explicit TablePolicy(std::vector<double> p) : send_prob(std::move(p)) {}
  double action_prob(const State& s, Action a) const override {
    const double p = send_prob.at(static_cast<std::size_t>(s.badge_count));
    return a == Action::Send ? p : 1.0 - p;
  }
};

// ---------------------------------------------------------------------------
// Small stochastic MDP with enumerable dynamics. States are encoded in
// badge_count; time lives in time_index. Rewards are Bernoulli in {0, 1}.
struct TabularMdp {
  int n_states = 3;
  int horizon = 4;
  int start_state = 0;
  // trans[s][a][s'], reward_p[s][a] = P(reward = 1 | s, a)
  std::vector<std::array<std::vector<double>, 2>> trans;
  std::vector<std::array<double, 2>> reward_p;

  static TabularMdp standard() {
    TabularMdp m;
    m.n_states = 3;
    m.horizon = 4;
    m.trans.resize(3);
    // NOT_SEND drifts down, SEND drifts up; mass clamps at the ends.
    m.trans[0][0] = {0.9, 0.1, 0.0};
    m.trans[1][0] = {0.7, 0.2, 0.1};
    m.trans[2][0] = {0.0, 0.7, 0.3};
    m.trans[0][1] = {0.3, 0.7, 0.0};
    m.trans[1][1] = {0.1, 0.2, 0.7};
    m.trans[2][1] = {0.0, 0.1, 0.9};
    m.reward_p = {{0.1, 0.2}, {0.3, 0.5}, {0.6, 0.9}};
    return m;
  }

  State make_state(int s, int t) const {
    return State{s, 0, t, 0.0};
  }

  // Exact theta(pi) by forward enumeration of the state distribution.
  double exact_value(const Policy& pi) const {
    std::vector<double> d(n_states, 0.0);
    d[start_state] = 1.0;
    double value = 0.0;
    for (int t = 0; t < horizon; ++t) {
      std::vector<double> next(n_states, 0.0);
      for (int s = 0; s < n_states; ++s) {
        if (d[s] == 0.0) continue;
        const State st = make_state(s, t);
        for (int a = 0; a < 2; ++a) {
          const double pa = pi.action_prob(st, action_from_index(a));
          if (pa == 0.0) continue;
          value += d[s] * pa * reward_p[s][a];
          for (int s2 = 0; s2 < n_states; ++s2) {
            next[s2] += d[s] * pa * trans[s][a][s2];
          }
        }
      }
      d = std::move(next);
    }
    return value;
  }

  TrajectoryBatch sample_batch(const Policy& behavior, int n,
                               std::uint64_t seed) const {
    TrajectoryBatch batch;
    batch.horizon = horizon;
    std::mt19937_64 rng = make_rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
      Trajectory traj;
      traj.episode_seed = static_cast<std::int64_t>(seed) + i;
      int s = start_state;
      for (int t = 0; t < horizon; ++t) {
        const State st = make_state(s, t);
        const Action a = behavior.sample(st, rng);
        const int ai = action_index(a);
        const double bp = behavior.action_prob(st, a);
        const double r = u(rng) < reward_p[s][ai] ? 1.0 : 0.0;
        double acc = 0.0;
        const double roll = u(rng);
        int s2 = n_states - 1;
        for (int cand = 0; cand < n_states; ++cand) {
          acc += trans[s][ai][cand];
          if (roll < acc) {
            s2 = cand;
            break;
          }
        }
        traj.steps.push_back(Transition{st, a, bp, r, make_state(s2, t + 1),
                                        t + 1 == horizon});
        s = s2;
      }
      batch.trajectories.push_back(std::move(traj));
    }
    return batch;
  }
};

// ---------------------------------------------------------------------------
// Deterministic chain MDP: SEND climbs, NOT_SEND descends, rewards are a
// fixed 0/1 function of (state, action). Oracle Q-values come from exact
// backward induction (value iteration on the finite horizon).
struct ChainMdp {
  int n_states = 5;
  int horizon = 8;
  double gamma = 0.9;

  static ChainMdp five_state() { return ChainMdp{5, 8, 0.9}; }
  static ChainMdp two_state() { return ChainMdp{2, 6, 0.9}; }

  int next_state(int s, int a) const {
    return a == 1 ? std::min(s + 1, n_states - 1) : std::max(s - 1, 0);
  }

  double reward(int s, int a) const {
    if (n_states == 2) {
      // state 0 pays for holding, state 1 pays for sending
      return (s == 0 && a == 0) || (s == 1 && a == 1) ? 1.0 : 0.0;
    }
    // top of the chain pays for sending, bottom pays for holding
    if (a == 1) return s >= n_states - 2 ? 1.0 : 0.0;
    return s == 0 ? 1.0 : 0.0;
  }

  State make_state(int s, int t) const { return State{s, 0, t, 0.0}; }

  // q[t][s][a] for t in [0, horizon)
  std::vector<std::vector<std::array<double, 2>>> oracle_q() const {
    std::vector<std::vector<std::array<double, 2>>> q(
        horizon, std::vector<std::array<double, 2>>(
                     n_states, std::array<double, 2>{0.0, 0.0}));
    for (int t = horizon - 1; t >= 0; --t) {
      for (int s = 0; s < n_states; ++s) {
        for (int a = 0; a < 2; ++a) {
          double v = reward(s, a);
          if (t + 1 < horizon) {
            const auto& nq = q[t + 1][next_state(s, a)];
            v += gamma * std::max(nq[0], nq[1]);
          }
          q[t][s][a] = v;
        }
      }
    }
    return q;
  }

  // Uniform-random behavior, episode starts cycling over all states.
  TrajectoryBatch sample_batch(int n, std::uint64_t seed) const {
    TrajectoryBatch batch;
    batch.horizon = horizon;
    std::mt19937_64 rng = make_rng(seed);
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < n; ++i) {
      Trajectory traj;
      traj.episode_seed = static_cast<std::int64_t>(seed) + i;
      int s = i % n_states;
      for (int t = 0; t < horizon; ++t) {
        const int a = coin(rng) ? 1 : 0;
        const int s2 = next_state(s, a);
        traj.steps.push_back(Transition{make_state(s, t), action_from_index(a),
                                        0.5, reward(s, a), make_state(s2, t + 1),
                                        t + 1 == horizon});
        s = s2;
      }
      batch.trajectories.push_back(std::move(traj));
    }
    return batch;
  }
};

// ---------------------------------------------------------------------------
// One observable state, two actions, zero-mean +-1 rewards: the classic
// maximization-bias setting. Every step except the last bootstraps from the
// same state, so max-operator noise can inflate vanilla targets.
inline TrajectoryBatch noisy_reward_batch(int n_trajectories, int horizon,
                                          std::uint64_t seed) {
  TrajectoryBatch batch;
  batch.horizon = horizon;
  std::mt19937_64 rng = make_rng(seed);
  std::bernoulli_distribution coin(0.5);
  const State s{0, 0, 0, 0.0};
  for (int i = 0; i < n_trajectories; ++i) {
    Trajectory traj;
    traj.episode_seed = static_cast<std::int64_t>(seed) + i;
    for (int t = 0; t < horizon; ++t) {
      const Action a = coin(rng) ? Action::Send : Action::NotSend;
      const double r = coin(rng) ? 1.0 : -1.0;
      traj.steps.push_back(Transition{s, a, 0.5, r, s, t + 1 == horizon});
    }
    batch.trajectories.push_back(std::move(traj));
  }
  return batch;
}

}  // namespace fixtures
