#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace notifrl {

// Raised when an input violates a documented contract: bad config values,
// malformed datasets, out-of-range parameters. The CLI maps it to exit 2.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Logged data (or a behavior policy) lacks the action coverage required
// for off-policy work: some logged action has propensity <= 0.
struct PropensityError : ValidationError {
  using ValidationError::ValidationError;
};

enum class Action : int { NotSend = 0, Send = 1 };

inline constexpr int kNumActions = 2;

inline constexpr int action_index(Action a) { return static_cast<int>(a); }

Action action_from_index(int index);

// Observation fed to policies and value networks. For the notification
// simulator the fields mean: pending badge count on the device, number of
// queued candidate notifications, 4-hour step index within the week, and
// the member's long-run activeness in [0, 1].
struct State {
  int badge_count = 0;
  int queue_size = 0;
  int time_index = 0;
  double activeness = 0.0;

  bool operator==(const State&) const = default;
};

struct Transition {
  State state;
  Action action = Action::NotSend;
  // Propensity of the logged action under the behavior policy, in (0, 1].
  double behavior_prob = 1.0;
  double reward = 0.0;
  State next_state;
  bool terminal = false;
};

struct Trajectory {
  std::int64_t episode_seed = 0;
  std::vector<Transition> steps;
};

struct BatchMetadata {
  std::string behavior_policy;  // free-form descriptor, e.g. "eps_greedy(0.2)"
  std::uint64_t collection_seed = 0;
};

// A fixed-horizon batch of logged episodes. All trajectories have exactly
// `horizon` steps and chain consistently; validate() enforces the full
// logged-data contract.
struct TrajectoryBatch {
  int horizon = 0;
  std::vector<Trajectory> trajectories;
  BatchMetadata metadata;

  std::size_t size() const { return trajectories.size(); }
  void validate() const;
};

// Sum of gamma^t * rewards[t]. gamma must lie in (0, 1].
double discounted_return(const std::vector<double>& rewards, double gamma);

// Mean undiscounted episode return over the batch. Empty batch is an error.
double undiscounted_value(const TrajectoryBatch& batch);

// Stochastic two-action policy. action_prob must return a probability
// distribution over {NotSend, Send} for every state. sample() draws from
// exactly that distribution, so the two surfaces cannot drift apart.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual double action_prob(const State& state, Action action) const = 0;
  Action sample(const State& state, std::mt19937_64& rng) const;
};

}  // namespace notifrl
