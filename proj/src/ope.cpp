#include "notifrl/ope.hpp"

#include <algorithm>
#include <cmath>

namespace notifrl::ope {

std::string method_name(Method m) {
  switch (m) {
    case Method::OneStep:
      return "onestep";
    case Method::Trajectory:
      return "trajectory";
    case Method::StateMarginalized:
      return "statemarg";
  }
  throw ValidationError("unknown method");
}

Method method_from_name(const std::string& name) {
  if (name == "onestep") return Method::OneStep;
  if (name == "trajectory") return Method::Trajectory;
  if (name == "statemarg") return Method::StateMarginalized;
  throw ValidationError("unknown estimator: " + name +
                        " (expected onestep|trajectory|statemarg)");
}

namespace {

double feature_value(const State& s, StateFeature f) {
  switch (f) {
    case StateFeature::BadgeCount:
      return static_cast<double>(s.badge_count);
    case StateFeature::QueueSize:
      return static_cast<double>(s.queue_size);
    case StateFeature::TimeIndex:
      return static_cast<double>(s.time_index);
    case StateFeature::Activeness:
      return s.activeness;
  }
  throw ValidationError("unknown state feature");
}

double checked_ratio(const Policy& target, const Transition& tr) {
  if (!(tr.behavior_prob > 0.0)) {
    throw PropensityError("logged propensity must be > 0");
  }
  return target.action_prob(tr.state, tr.action) / tr.behavior_prob;
}

// Shared tail: per-step weighted reward means, self-normalization,
// discounting, and weight diagnostics.
PolicyValueEstimate finalize(Method method, const TrajectoryBatch& batch,
                             const std::vector<std::vector<double>>& weights,
                             bool self_normalize, double gamma,
                             long empty_bin_samples) {
  if (!(gamma > 0.0) || gamma > 1.0) {
    throw ValidationError("gamma must lie in (0, 1]");
  }
  const std::size_t n = batch.size();
  const int horizon = batch.horizon;
  PolicyValueEstimate est;
  est.method = method;
  est.self_normalized = self_normalize;
  est.empty_bin_samples = empty_bin_samples;
  est.per_step_values.resize(horizon, 0.0);
  est.diagnostics.resize(horizon);
  double disc = 1.0;
  for (int t = 0; t < horizon; ++t) {
    const std::vector<double>& w = weights[t];
    double sum_w = 0.0, sum_w2 = 0.0, sum_rw = 0.0, max_w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum_w += w[i];
      sum_w2 += w[i] * w[i];
      sum_rw += batch.trajectories[i].steps[t].reward * w[i];
      max_w = std::max(max_w, w[i]);
    }
    double step_value;
    if (self_normalize) {
      // Dividing each weight by the step mean turns the sum into
      // sum(r*w)/sum(w); a step whose weights all vanish contributes 0.
      step_value = sum_w > 0.0 ? sum_rw / sum_w : 0.0;
      est.diagnostics[t].max_weight =
          sum_w > 0.0 ? max_w * static_cast<double>(n) / sum_w : 0.0;
    } else {
      step_value = sum_rw / static_cast<double>(n);
      est.diagnostics[t].max_weight = max_w;
    }
    est.diagnostics[t].effective_sample_size =
        sum_w2 > 0.0 ? sum_w * sum_w / sum_w2 : 0.0;
    est.per_step_values[t] = disc * step_value;
    disc *= gamma;
  }
  for (double v : est.per_step_values) est.value += v;
  return est;
}

void check_batch(const TrajectoryBatch& batch) {
  if (batch.trajectories.empty()) {
    throw ValidationError("estimator requires a non-empty batch");
  }
  if (batch.horizon < 1) throw ValidationError("batch horizon must be >= 1");
  for (const Trajectory& traj : batch.trajectories) {
    if (static_cast<int>(traj.steps.size()) != batch.horizon) {
      throw ValidationError("all trajectories must have horizon steps");
    }
  }
}

}  // namespace

void DiscretizationSpec::fit(const TrajectoryBatch& batch) {
  check_batch(batch);
  if (bins_per_feature < 1) {
    throw ValidationError("bins_per_feature must be >= 1");
  }
  if (reduced_features.empty()) {
    throw ValidationError("reduced_features must be non-empty");
  }
  bin_edges.clear();
  std::vector<double> values;
  for (StateFeature f : reduced_features) {
    values.clear();
    for (const Trajectory& traj : batch.trajectories) {
      for (const Transition& tr : traj.steps) {
        values.push_back(feature_value(tr.state, f));
      }
    }
    std::sort(values.begin(), values.end());
    std::vector<double> edges;
    const std::size_t m = values.size();
    for (int k = 1; k < bins_per_feature; ++k) {
      edges.push_back(values[static_cast<std::size_t>(k) * m / bins_per_feature]);
    }
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    bin_edges.push_back(std::move(edges));
  }
}

int DiscretizationSpec::joint_bins() const {
  if (!fitted()) throw ValidationError("discretization spec is not fitted");
  int total = 1;
  for (const auto& edges : bin_edges) {
    total *= static_cast<int>(edges.size()) + 1;
  }
  return total;
}

int reduce_state(const State& state, const DiscretizationSpec& spec) {
  if (!spec.fitted()) throw ValidationError("discretization spec is not fitted");
  if (spec.bin_edges.size() != spec.reduced_features.size()) {
    throw ValidationError("bin edges do not match reduced features");
  }
  int index = 0;
  for (std::size_t f = 0; f < spec.reduced_features.size(); ++f) {
    const std::vector<double>& edges = spec.bin_edges[f];
    const double v = feature_value(state, spec.reduced_features[f]);
    // Right-closed bins: bin k collects values in (edge[k-1], edge[k]], so
    // the smallest observed value always falls in bin 0.
    const int bin = static_cast<int>(
        std::lower_bound(edges.begin(), edges.end(), v) - edges.begin());
    index = index * (static_cast<int>(edges.size()) + 1) + bin;
  }
  return index;
}

nlohmann::json PolicyValueEstimate::to_json() const {
  nlohmann::json diag = nlohmann::json::array();
  for (const StepDiagnostics& d : diagnostics) {
    diag.push_back({{"effective_sample_size", d.effective_sample_size},
                    {"max_weight", d.max_weight}});
  }
  return nlohmann::json{
      {"method", method_name(method)},
      {"value", value},
      {"per_step_values", per_step_values},
      {"self_normalized", self_normalized},
      {"diagnostics", std::move(diag)},
      {"empty_bin_samples", empty_bin_samples},
  };
}

PolicyValueEstimate one_step_estimate(const TrajectoryBatch& batch,
                                      const Policy& target,
                                      bool self_normalize, double gamma) {
  check_batch(batch);
  const std::size_t n = batch.size();
  std::vector<std::vector<double>> weights(batch.horizon,
                                           std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (int t = 0; t < batch.horizon; ++t) {
      weights[t][i] = checked_ratio(target, batch.trajectories[i].steps[t]);
    }
  }
  return finalize(Method::OneStep, batch, weights, self_normalize, gamma, 0);
}

PolicyValueEstimate trajectory_estimate(const TrajectoryBatch& batch,
                                        const Policy& target,
                                        bool self_normalize, double gamma) {
  check_batch(batch);
  const std::size_t n = batch.size();
  std::vector<std::vector<double>> weights(batch.horizon,
                                           std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    double cum = 1.0;
    for (int t = 0; t < batch.horizon; ++t) {
      cum *= checked_ratio(target, batch.trajectories[i].steps[t]);
      weights[t][i] = cum;
    }
  }
  return finalize(Method::Trajectory, batch, weights, self_normalize, gamma, 0);
}

PolicyValueEstimate state_marginalized_estimate(const TrajectoryBatch& batch,
                                                const Policy& target,
                                                const DiscretizationSpec& spec,
                                                bool self_normalize, double gamma,
                                                double smoothing_lambda) {
  check_batch(batch);
  if (!spec.fitted()) {
    throw ValidationError("discretization spec must be fitted before use");
  }
  if (smoothing_lambda < 0.0) {
    throw ValidationError("smoothing_lambda must be >= 0");
  }
  const std::size_t n = batch.size();
  const int horizon = batch.horizon;
  const int k = spec.joint_bins();
  const double dn = static_cast<double>(n);
  const double denom = dn + smoothing_lambda * static_cast<double>(k);

  std::vector<std::vector<double>> weights(horizon, std::vector<double>(n, 0.0));
  std::vector<int> bins(n, 0);
  std::vector<double> rho(n, 1.0);  // running weight from the previous step
  std::vector<double> p_behavior(k, 0.0);
  std::vector<double> p_target(k, 0.0);
  long empty_bin_samples = 0;

  for (int t = 0; t < horizon; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      bins[i] = reduce_state(batch.trajectories[i].steps[t].state, spec);
    }
    std::fill(p_behavior.begin(), p_behavior.end(), smoothing_lambda);
    for (std::size_t i = 0; i < n; ++i) p_behavior[bins[i]] += 1.0;
    double behavior_total = 0.0;
    for (double& p : p_behavior) {
      p /= denom;
      behavior_total += p;
    }
    if (std::abs(behavior_total - 1.0) > 1e-12) {
      throw std::logic_error("occupancy estimate is not a probability vector");
    }

    if (t == 0) {
      // Both policies share the start distribution, so the state ratio at
      // the first step is exactly one.
      p_target = p_behavior;
    } else {
      std::fill(p_target.begin(), p_target.end(), smoothing_lambda);
      for (std::size_t i = 0; i < n; ++i) p_target[bins[i]] += rho[i];
      double total = 0.0;
      for (double& p : p_target) {
        p /= denom;
        total += p;
      }
      if (total > 0.0) {
        for (double& p : p_target) p /= total;
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      const Transition& tr = batch.trajectories[i].steps[t];
      const double action_ratio = checked_ratio(target, tr);
      double w = 0.0;
      if (p_behavior[bins[i]] > 0.0) {
        w = p_target[bins[i]] / p_behavior[bins[i]] * action_ratio;
      } else {
        ++empty_bin_samples;
      }
      weights[t][i] = w;
      rho[i] = w;
    }
  }
  return finalize(Method::StateMarginalized, batch, weights, self_normalize,
                  gamma, empty_bin_samples);
}

}  // namespace notifrl::ope
