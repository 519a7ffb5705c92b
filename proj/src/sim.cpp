#include "notifrl/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "notifrl/rng.hpp"

namespace notifrl::sim {

double visit_probability(int badge_count, double activeness,
                         const VisitWeights& w) {
  if (badge_count < 0) throw ValidationError("badge_count must be >= 0");
  if (!(activeness >= 0.0 && activeness <= 1.0)) {
    throw ValidationError("activeness must lie in [0, 1]");
  }
  const double z = w.w0 + w.w1 * activeness +
                   w.w2 * std::log1p(static_cast<double>(badge_count));
  return 1.0 / (1.0 + std::exp(-z));
}

std::vector<double> SimConfig::default_weekly_profile() {
  static const std::vector<double> day = {0.5, 1.0, 1.5, 1.5, 1.0, 0.5};
  std::vector<double> profile;
  for (int d = 0; d < 7; ++d) profile.insert(profile.end(), day.begin(), day.end());
  return profile;
}

void SimConfig::validate() const {
  if (horizon < 1) throw ValidationError("horizon must be >= 1");
  if (!(base_arrival_rate >= 0.0)) {
    throw ValidationError("base_arrival_rate must be >= 0");
  }
  if (weekly_profile.empty()) {
    throw ValidationError("weekly_profile must be non-empty");
  }
  for (double m : weekly_profile) {
    if (!(m >= 0.0)) throw ValidationError("weekly_profile entries must be >= 0");
  }
  if (!(realtime_rate >= 0.0)) {
    throw ValidationError("realtime_rate must be >= 0");
  }
  if (expiry_send_prob != 0.5) {
    throw ValidationError("expiry_send_prob is fixed at 0.5");
  }
  if (!(activeness_dist.alpha > 0.0) || !(activeness_dist.beta > 0.0)) {
    throw ValidationError("activeness Beta parameters must be > 0");
  }
}

void to_json(nlohmann::json& j, const SimConfig& c) {
  j = nlohmann::json{
      {"horizon", c.horizon},
      {"base_arrival_rate", c.base_arrival_rate},
      {"weekly_profile", c.weekly_profile},
      {"realtime_rate", c.realtime_rate},
      {"visit_weights", {c.visit_weights.w0, c.visit_weights.w1, c.visit_weights.w2}},
      {"expiry_send_prob", c.expiry_send_prob},
      {"activeness_beta", {c.activeness_dist.alpha, c.activeness_dist.beta}},
  };
}

void from_json(const nlohmann::json& j, SimConfig& c) {
  c = SimConfig{};
  if (j.contains("horizon")) j.at("horizon").get_to(c.horizon);
  if (j.contains("base_arrival_rate")) {
    j.at("base_arrival_rate").get_to(c.base_arrival_rate);
  }
  if (j.contains("weekly_profile")) {
    j.at("weekly_profile").get_to(c.weekly_profile);
  }
  if (j.contains("realtime_rate")) j.at("realtime_rate").get_to(c.realtime_rate);
  if (j.contains("visit_weights")) {
    const auto& w = j.at("visit_weights");
    if (!w.is_array() || w.size() != 3) {
      throw ValidationError("visit_weights must be [w0, w1, w2]");
    }
    c.visit_weights = {w[0].get<double>(), w[1].get<double>(), w[2].get<double>()};
  }
  if (j.contains("expiry_send_prob")) {
    j.at("expiry_send_prob").get_to(c.expiry_send_prob);
  }
  if (j.contains("activeness_beta")) {
    const auto& b = j.at("activeness_beta");
    if (!b.is_array() || b.size() != 2) {
      throw ValidationError("activeness_beta must be [alpha, beta]");
    }
    c.activeness_dist = {b[0].get<double>(), b[1].get<double>()};
  }
  c.validate();
}

SimConfig load_sim_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": bad JSON: " + e.what());
  }
  return j.get<SimConfig>();
}

void save_sim_config(const SimConfig& c, const std::string& path) {
  c.validate();
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  out << nlohmann::json(c).dump(2) << '\n';
}

int Environment::draw_poisson(double rate) {
  // std::poisson_distribution is undefined for mean <= 0.
  if (!(rate > 0.0)) return 0;
  std::poisson_distribution<int> dist(rate);
  return dist(rng_);
}

State Environment::observation() const {
  return State{badge_, static_cast<int>(queue_.size()), time_, activeness_};
}

State Environment::reset(const SimConfig& config, std::uint64_t seed) {
  config.validate();
  config_ = config;
  rng_ = make_rng(seed);
  // Beta(a, b) via two gamma draws.
  std::gamma_distribution<double> ga(config_.activeness_dist.alpha, 1.0);
  std::gamma_distribution<double> gb(config_.activeness_dist.beta, 1.0);
  const double x = ga(rng_);
  const double y = gb(rng_);
  activeness_ = (x + y > 0.0) ? x / (x + y)
                              : config_.activeness_dist.alpha /
                                    (config_.activeness_dist.alpha +
                                     config_.activeness_dist.beta);
  badge_ = 0;
  time_ = 0;
  queue_.clear();
  done_ = false;
  events_ = StepEvents{};
  return observation();
}

StepResult Environment::step(Action action) {
  if (done_) {
    throw std::logic_error("Environment::step called on a finished episode");
  }
  events_ = StepEvents{};
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  // 1. Deliver the most relevant queued candidate on SEND.
  if (action == Action::Send && !queue_.empty()) {
    auto best = std::max_element(
        queue_.begin(), queue_.end(),
        [](const NotificationCandidate& a, const NotificationCandidate& b) {
          return a.relevance < b.relevance;
        });
    queue_.erase(best);
    ++badge_;
    events_.sent_from_queue = 1;
  }

  // 2. Real-time notifications bypass the queue.
  const int realtime = draw_poisson(config_.realtime_rate);
  badge_ += realtime;
  events_.realtime_count = realtime;

  // 3. Visit draw against the current badge; a visit clears the badge.
  double reward = 0.0;
  const double p_visit =
      visit_probability(badge_, activeness_, config_.visit_weights);
  if (u01(rng_) < p_visit) {
    reward = 1.0;
    badge_ = 0;
    events_.visited = true;
  }

  // 4. New queue candidates arrive at the time-of-week rate.
  const double rate =
      config_.base_arrival_rate *
      config_.weekly_profile[time_ % config_.weekly_profile.size()];
  const int arrivals = draw_poisson(rate);
  events_.queue_arrivals = arrivals;
  std::uniform_int_distribution<int> offset(1, 18);
  for (int k = 0; k < arrivals; ++k) {
    queue_.push_back(NotificationCandidate{u01(rng_), time_ + offset(rng_)});
  }

  // 5. Flush candidates expiring at the upcoming step; each is sent with
  // probability expiry_send_prob, otherwise dropped.
  std::vector<NotificationCandidate> kept;
  kept.reserve(queue_.size());
  for (const NotificationCandidate& c : queue_) {
    if (c.expiry_step == time_ + 1) {
      if (u01(rng_) < config_.expiry_send_prob) {
        ++badge_;
        ++events_.expired_sent;
      } else {
        ++events_.expired_dropped;
      }
    } else {
      kept.push_back(c);
    }
  }
  queue_ = std::move(kept);

  // 6. Advance time.
  ++time_;
  done_ = time_ >= config_.horizon;
  return StepResult{observation(), reward, done_};
}

Trajectory run_episode(Environment& env, const Policy& policy,
                       const SimConfig& config, std::uint64_t env_seed,
                       std::uint64_t policy_seed) {
  Trajectory traj;
  traj.episode_seed = static_cast<std::int64_t>(env_seed);
  traj.steps.reserve(config.horizon);
  std::mt19937_64 policy_rng = make_rng(policy_seed);
  State s = env.reset(config, env_seed);
  bool done = false;
  while (!done) {
    const Action a = policy.sample(s, policy_rng);
    const double bp = policy.action_prob(s, a);
    const StepResult res = env.step(a);
    traj.steps.push_back(Transition{s, a, bp, res.reward, res.next_state, res.done});
    s = res.next_state;
    done = res.done;
  }
  return traj;
}

RolloutStats rollout_value(const Policy& policy, const SimConfig& config,
                           int n_episodes, std::uint64_t seed, double gamma) {
  config.validate();
  if (n_episodes < 1) throw ValidationError("n_episodes must be >= 1");
  Environment env;
  std::vector<double> returns;
  returns.reserve(n_episodes);
  std::vector<double> rewards;
  for (int i = 0; i < n_episodes; ++i) {
    const std::uint64_t ep_seed = seed + static_cast<std::uint64_t>(i);
    const Trajectory traj =
        run_episode(env, policy, config, ep_seed, mix_seed(ep_seed, 1));
    rewards.clear();
    for (const Transition& tr : traj.steps) rewards.push_back(tr.reward);
    returns.push_back(discounted_return(rewards, gamma));
  }
  double total = 0.0;
  for (double r : returns) total += r;
  const double mean = total / static_cast<double>(n_episodes);
  double ss = 0.0;
  for (double r : returns) ss += (r - mean) * (r - mean);
  const double se = n_episodes > 1
                        ? std::sqrt(ss / (static_cast<double>(n_episodes) - 1.0) /
                                    static_cast<double>(n_episodes))
                        : 0.0;
  return RolloutStats{mean, se};
}

}  // namespace notifrl::sim
