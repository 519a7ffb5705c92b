#include "notifrl/qlearn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "notifrl/rng.hpp"

namespace notifrl::qlearn {

std::string algorithm_name(Algorithm a) {
  return a == Algorithm::DQN ? "dqn" : "double_dqn";
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "dqn") return Algorithm::DQN;
  if (name == "double_dqn") return Algorithm::DoubleDQN;
  throw ValidationError("unknown algorithm: " + name);
}

std::array<double, 4> FeatureNormalizer::apply(const State& s) const {
  const std::array<double, 4> raw{
      static_cast<double>(s.badge_count), static_cast<double>(s.queue_size),
      static_cast<double>(s.time_index), s.activeness};
  std::array<double, 4> out{};
  for (int i = 0; i < 4; ++i) out[i] = (raw[i] - mean[i]) / stddev[i];
  return out;
}

FeatureNormalizer FeatureNormalizer::fit(const TrajectoryBatch& batch) {
  if (batch.trajectories.empty()) {
    throw ValidationError("cannot fit normalizer on an empty batch");
  }
  std::array<double, 4> sum{0, 0, 0, 0};
  std::array<double, 4> sumsq{0, 0, 0, 0};
  std::size_t n = 0;
  for (const Trajectory& traj : batch.trajectories) {
    for (const Transition& tr : traj.steps) {
      const std::array<double, 4> x{static_cast<double>(tr.state.badge_count),
                                    static_cast<double>(tr.state.queue_size),
                                    static_cast<double>(tr.state.time_index),
                                    tr.state.activeness};
      for (int i = 0; i < 4; ++i) {
        sum[i] += x[i];
        sumsq[i] += x[i] * x[i];
      }
      ++n;
    }
  }
  FeatureNormalizer norm;
  for (int i = 0; i < 4; ++i) {
    norm.mean[i] = sum[i] / static_cast<double>(n);
    const double var =
        std::max(0.0, sumsq[i] / static_cast<double>(n) - norm.mean[i] * norm.mean[i]);
    const double sd = std::sqrt(var);
    norm.stddev[i] = sd > 1e-12 ? sd : 1.0;
  }
  return norm;
}

void QNetwork::build_views() {
  views_.clear();
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    LayerView v;
    v.in = dims_[l];
    v.out = dims_[l + 1];
    v.w_off = off;
    off += static_cast<std::size_t>(v.in) * v.out;
    v.b_off = off;
    off += v.out;
    views_.push_back(v);
  }
  params_.resize(off, 0.0);
}

QNetwork::QNetwork(std::vector<int> layer_dims, std::uint64_t seed)
    : dims_(std::move(layer_dims)) {
  if (dims_.size() < 2) throw ValidationError("need at least two layer dims");
  if (dims_.front() != 4 || dims_.back() != 2) {
    throw ValidationError("network must map 4 features to 2 action values");
  }
  for (int d : dims_) {
    if (d < 1) throw ValidationError("layer dims must be >= 1");
  }
  build_views();
  std::mt19937_64 rng = make_rng(seed);
  for (const LayerView& v : views_) {
    const double bound = std::sqrt(6.0 / (v.in + v.out));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (int i = 0; i < v.in * v.out; ++i) {
      params_[v.w_off + i] = u(rng);
    }
    // biases stay zero
  }
}

void QNetwork::trace(const State& s, std::vector<std::vector<double>>& acts,
                     std::vector<std::vector<double>>& pres) const {
  const std::array<double, 4> x = norm_.apply(s);
  acts.assign(views_.size() + 1, {});
  pres.assign(views_.size(), {});
  acts[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < views_.size(); ++l) {
    const LayerView& v = views_[l];
    pres[l].assign(v.out, 0.0);
    for (int o = 0; o < v.out; ++o) {
      double z = params_[v.b_off + o];
      const std::size_t row = v.w_off + static_cast<std::size_t>(o) * v.in;
      for (int i = 0; i < v.in; ++i) z += params_[row + i] * acts[l][i];
      pres[l][o] = z;
    }
    const bool hidden = l + 1 < views_.size();
    acts[l + 1].assign(v.out, 0.0);
    for (int o = 0; o < v.out; ++o) {
      acts[l + 1][o] = hidden ? std::max(0.0, pres[l][o]) : pres[l][o];
    }
  }
}

std::array<double, 2> QNetwork::forward(const State& s) const {
  if (dims_.empty()) throw ValidationError("forward() on an empty network");
  thread_local std::vector<std::vector<double>> acts, pres;
  trace(s, acts, pres);
  return {acts.back()[0], acts.back()[1]};
}

double QNetwork::q_value(const State& s, Action a) const {
  return forward(s)[action_index(a)];
}

Action QNetwork::greedy_action(const State& s) const {
  const std::array<double, 2> q = forward(s);
  return q[1] > q[0] ? Action::Send : Action::NotSend;
}

nlohmann::json QNetwork::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const LayerView& v : views_) {
    nlohmann::json layer;
    layer["weights"] = std::vector<double>(
        params_.begin() + v.w_off,
        params_.begin() + v.w_off + static_cast<std::size_t>(v.in) * v.out);
    layer["biases"] = std::vector<double>(params_.begin() + v.b_off,
                                          params_.begin() + v.b_off + v.out);
    layers.push_back(std::move(layer));
  }
  return nlohmann::json{
      {"layer_dims", dims_},
      {"layers", std::move(layers)},
      {"normalizer",
       {{"mean", norm_.mean}, {"stddev", norm_.stddev}}},
  };
}

QNetwork QNetwork::from_json(const nlohmann::json& j) {
  QNetwork net;
  try {
    net.dims_ = j.at("layer_dims").get<std::vector<int>>();
    if (net.dims_.size() < 2) {
      throw ValidationError("layer_dims must list at least two sizes");
    }
    net.build_views();
    const auto& layers = j.at("layers");
    if (layers.size() != net.views_.size()) {
      throw ValidationError("layer count does not match layer_dims");
    }
    for (std::size_t l = 0; l < net.views_.size(); ++l) {
      const LayerView& v = net.views_[l];
      const auto w = layers[l].at("weights").get<std::vector<double>>();
      const auto b = layers[l].at("biases").get<std::vector<double>>();
      if (static_cast<int>(w.size()) != v.in * v.out ||
          static_cast<int>(b.size()) != v.out) {
        throw ValidationError("layer shape mismatch in network file");
      }
      std::copy(w.begin(), w.end(), net.params_.begin() + v.w_off);
      std::copy(b.begin(), b.end(), net.params_.begin() + v.b_off);
    }
    const auto& nj = j.at("normalizer");
    const auto mean = nj.at("mean").get<std::vector<double>>();
    const auto sd = nj.at("stddev").get<std::vector<double>>();
    if (mean.size() != 4 || sd.size() != 4) {
      throw ValidationError("normalizer must carry 4 means and 4 stddevs");
    }
    std::copy(mean.begin(), mean.end(), net.norm_.mean.begin());
    std::copy(sd.begin(), sd.end(), net.norm_.stddev.begin());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad network JSON: ") + e.what());
  }
  return net;
}

void QNetwork::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  out << to_json().dump(2) << '\n';
}

QNetwork QNetwork::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open network file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": bad JSON: " + e.what());
  }
  return from_json(j);
}

double dqn_target(const Transition& tr, const QNetwork& target_net,
                  double gamma) {
  if (tr.terminal) return tr.reward;
  const std::array<double, 2> q = target_net.forward(tr.next_state);
  return tr.reward + gamma * std::max(q[0], q[1]);
}

double double_dqn_target(const Transition& tr, const QNetwork& online_net,
                         const QNetwork& target_net, double gamma) {
  if (tr.terminal) return tr.reward;
  const Action best = online_net.greedy_action(tr.next_state);
  return tr.reward + gamma * target_net.forward(tr.next_state)[action_index(best)];
}

double batch_loss(const QNetwork& net, std::span<const Transition> batch,
                  std::span<const double> targets) {
  if (batch.empty() || batch.size() != targets.size()) {
    throw ValidationError("batch and targets must be non-empty and equal-sized");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double q = net.q_value(batch[i].state, batch[i].action);
    const double d = q - targets[i];
    loss += d * d;
  }
  return loss / static_cast<double>(batch.size());
}

std::vector<double> batch_loss_gradient(const QNetwork& net,
                                        std::span<const Transition> batch,
                                        std::span<const double> targets) {
  if (batch.empty() || batch.size() != targets.size()) {
    throw ValidationError("batch and targets must be non-empty and equal-sized");
  }
  std::vector<double> grad(net.params_.size(), 0.0);
  std::vector<std::vector<double>> acts, pres;
  const double scale = 2.0 / static_cast<double>(batch.size());
  std::vector<double> delta, prev_delta;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    net.trace(batch[i].state, acts, pres);
    const int ai = action_index(batch[i].action);
    // dL/dq for the taken action; the other head gets no signal.
    delta.assign(net.views_.back().out, 0.0);
    delta[ai] = scale * (acts.back()[ai] - targets[i]);
    for (std::size_t l = net.views_.size(); l-- > 0;) {
      const QNetwork::LayerView& v = net.views_[l];
      for (int o = 0; o < v.out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        const std::size_t row = v.w_off + static_cast<std::size_t>(o) * v.in;
        for (int in = 0; in < v.in; ++in) grad[row + in] += d * acts[l][in];
        grad[v.b_off + o] += d;
      }
      if (l == 0) break;
      prev_delta.assign(v.in, 0.0);
      for (int in = 0; in < v.in; ++in) {
        if (pres[l - 1][in] <= 0.0) continue;  // ReLU gate
        double acc = 0.0;
        for (int o = 0; o < v.out; ++o) {
          acc += delta[o] * net.params_[v.w_off + static_cast<std::size_t>(o) * v.in + in];
        }
        prev_delta[in] = acc;
      }
      delta = prev_delta;
    }
  }
  return grad;
}

void TrainConfig::validate() const {
  if (!(gamma > 0.0) || gamma > 1.0) throw ValidationError("gamma must be in (0, 1]");
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (target_update_period < 1) {
    throw ValidationError("target_update_period must be >= 1");
  }
  if (n_updates < 0) throw ValidationError("n_updates must be >= 0");
  if (hidden_width < 1) throw ValidationError("hidden_width must be >= 1");
}

DivergenceError::DivergenceError(const std::string& what, TrainReport partial)
    : std::runtime_error(what), partial_report(std::move(partial)) {}

TrainReport train_offline(const TrajectoryBatch& batch,
                          const TrainConfig& config) {
  config.validate();
  if (batch.trajectories.empty()) {
    throw ValidationError("train_offline: batch has no trajectories");
  }
  std::vector<const Transition*> pool;
  for (const Trajectory& traj : batch.trajectories) {
    for (const Transition& tr : traj.steps) pool.push_back(&tr);
  }
  if (pool.empty()) throw ValidationError("train_offline: batch has no steps");

  TrainReport report;
  report.config = config;
  report.final_network =
      QNetwork({4, config.hidden_width, config.hidden_width, 2},
               mix_seed(config.seed, 0xA110));
  report.final_network.normalizer() = FeatureNormalizer::fit(batch);
  QNetwork& net = report.final_network;
  QNetwork target = net;

  std::mt19937_64 rng = make_rng(config.seed, 0x5A3D);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<Transition> mb(config.batch_size);
  std::vector<double> targets(config.batch_size);

  for (int u = 0; u < config.n_updates; ++u) {
    for (int k = 0; k < config.batch_size; ++k) mb[k] = *pool[pick(rng)];
    for (int k = 0; k < config.batch_size; ++k) {
      targets[k] = config.algorithm == Algorithm::DoubleDQN
                       ? double_dqn_target(mb[k], net, target, config.gamma)
                       : dqn_target(mb[k], target, config.gamma);
    }
    const double loss = batch_loss(net, mb, targets);
    if (!std::isfinite(loss)) {
      throw DivergenceError(
          "training diverged at update " + std::to_string(u) +
              ": non-finite loss",
          std::move(report));
    }
    report.loss_curve.emplace_back(u, loss);
    const std::vector<double> grad = batch_loss_gradient(net, mb, targets);
    std::vector<double>& params = net.params();
    for (std::size_t p = 0; p < params.size(); ++p) {
      params[p] -= config.learning_rate * grad[p];
    }
    if ((u + 1) % config.target_update_period == 0) target = net;
  }
  return report;
}

}  // namespace notifrl::qlearn
