#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "notifrl/mdp.hpp"

namespace notifrl::sim {

struct BetaParams {
  double alpha = 2.0;
  double beta = 5.0;
};

// Logistic visit model: P(visit) = sigmoid(w0 + w1*activeness +
// w2*ln(1 + badge_count)).
struct VisitWeights {
  double w0 = -2.0;
  double w1 = 2.0;
  double w2 = 0.8;
};

double visit_probability(int badge_count, double activeness,
                         const VisitWeights& w = {});

struct SimConfig {
  int horizon = 42;  // one week of 4-hour steps
  double base_arrival_rate = 0.5;
  // Per-step multiplier on the arrival rate, cycled over the horizon.
  // Default repeats a six-step daily shape with daytime peaks.
  std::vector<double> weekly_profile = default_weekly_profile();
  double realtime_rate = 0.1;
  VisitWeights visit_weights;
  // Candidates that expire un-sent leave the queue; each is delivered with
  // this probability on the way out. Fixed at 0.5 by the queue contract.
  double expiry_send_prob = 0.5;
  BetaParams activeness_dist;

  static std::vector<double> default_weekly_profile();
  void validate() const;
};

void to_json(nlohmann::json& j, const SimConfig& c);
void from_json(const nlohmann::json& j, SimConfig& c);
SimConfig load_sim_config(const std::string& path);
void save_sim_config(const SimConfig& c, const std::string& path);

struct NotificationCandidate {
  double relevance = 0.0;
  int expiry_step = 0;
};

struct StepResult {
  State next_state;
  double reward = 0.0;
  bool done = false;
};

// Bookkeeping for the most recent step; used by conservation and rate
// checks that cannot be reconstructed from observations alone.
struct StepEvents {
  int sent_from_queue = 0;
  int realtime_count = 0;
  bool visited = false;
  int queue_arrivals = 0;
  int expired_sent = 0;
  int expired_dropped = 0;
};

// Single-member notification week. All randomness comes from the seed
// passed to reset(); identical (config, seed, action sequence) yields an
// identical episode on every run.
class Environment {
 public:
  State reset(const SimConfig& config, std::uint64_t seed);
  StepResult step(Action action);

  State observation() const;
  bool done() const { return done_; }
  const StepEvents& last_events() const { return events_; }
  const std::vector<NotificationCandidate>& queue() const { return queue_; }

 private:
  int draw_poisson(double rate);

  SimConfig config_;
  std::vector<NotificationCandidate> queue_;
  int badge_ = 0;
  int time_ = 0;
  double activeness_ = 0.0;
  bool done_ = true;  // step() before reset() is an error
  StepEvents events_;
  std::mt19937_64 rng_;
};

// One full episode under `policy`. Environment randomness is seeded with
// env_seed, action sampling with policy_seed; both derive from the caller.
Trajectory run_episode(Environment& env, const Policy& policy,
                       const SimConfig& config, std::uint64_t env_seed,
                       std::uint64_t policy_seed);

struct RolloutStats {
  double mean_return = 0.0;
  double std_error = 0.0;
};

// Monte-Carlo on-policy value over n_episodes episodes. Episode i uses
// env seed (seed + i), so estimates are reproducible and two calls with
// the same arguments agree exactly.
RolloutStats rollout_value(const Policy& policy, const SimConfig& config,
                           int n_episodes, std::uint64_t seed,
                           double gamma = 1.0);

}  // namespace notifrl::sim
