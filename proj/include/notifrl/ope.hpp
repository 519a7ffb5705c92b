#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "notifrl/mdp.hpp"

namespace notifrl::ope {

enum class Method { OneStep, Trajectory, StateMarginalized };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

enum class StateFeature { BadgeCount, QueueSize, TimeIndex, Activeness };

// Coarse state abstraction for the marginalized estimator: keep only the
// features the action can influence, then quantile-bin each one on the
// evaluation batch. Bin boundaries are right-closed, so the smallest
// observed value always lands in bin 0.
struct DiscretizationSpec {
  std::vector<StateFeature> reduced_features{StateFeature::BadgeCount,
                                             StateFeature::QueueSize};
  int bins_per_feature = 10;
  // Fitted per retained feature; duplicates from heavily repeated values
  // are merged, so a feature may end up with fewer than bins_per_feature
  // occupied bins.
  std::vector<std::vector<double>> bin_edges;

  bool fitted() const { return !bin_edges.empty(); }
  void fit(const TrajectoryBatch& batch);
  int joint_bins() const;
};

// Joint bin index of a state under a fitted spec.
int reduce_state(const State& state, const DiscretizationSpec& spec);

struct StepDiagnostics {
  double effective_sample_size = 0.0;
  double max_weight = 0.0;
};

struct PolicyValueEstimate {
  Method method = Method::OneStep;
  double value = 0.0;
  std::vector<double> per_step_values;
  bool self_normalized = true;
  std::vector<StepDiagnostics> diagnostics;
  // Evaluation-time states that fell in a bin the fit never populated
  // (possible only when the binning was fitted on different data).
  long empty_bin_samples = 0;

  nlohmann::json to_json() const;
};

// All estimators share the same skeleton: a per-step importance weight
// w[t][i] per trajectory, a per-step weighted reward average, and the sum
// of per-step averages as the value. With self_normalize the weights at
// each step are divided by their mean across trajectories (a step whose
// weights all vanish contributes zero). gamma discounts step t by gamma^t;
// the default 1 matches the undiscounted session-count objective.

// Ignores the sequential structure: w = pi(a_t|s_t) / bp_t at each step.
PolicyValueEstimate one_step_estimate(const TrajectoryBatch& batch,
                                      const Policy& target,
                                      bool self_normalize = true,
                                      double gamma = 1.0);

// Cumulative action-probability ratios up to t (the initial-state ratio
// drops out because both policies share the start distribution).
PolicyValueEstimate trajectory_estimate(const TrajectoryBatch& batch,
                                        const Policy& target,
                                        bool self_normalize = true,
                                        double gamma = 1.0);

// Replaces the cumulative product with a ratio of estimated marginal
// state-occupancy distributions over the binned state, rebuilt step by
// step from the previous step's weights. smoothing_lambda > 0 adds
// lambda to every bin count before normalizing.
PolicyValueEstimate state_marginalized_estimate(const TrajectoryBatch& batch,
                                                const Policy& target,
                                                const DiscretizationSpec& spec,
                                                bool self_normalize = true,
                                                double gamma = 1.0,
                                                double smoothing_lambda = 0.0);

}  // namespace notifrl::ope
