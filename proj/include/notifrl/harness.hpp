#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "notifrl/mdp.hpp"
#include "notifrl/ope.hpp"
#include "notifrl/qlearn.hpp"
#include "notifrl/sim.hpp"

namespace notifrl::harness {

// Settings for `collect`: behavior policy (threshold rule wrapped in
// epsilon-exploration) plus split sizes. Validation episodes continue the
// seed sequence after the training episodes, so the two splits never share
// an episode seed.
struct CollectConfig {
  sim::SimConfig sim;
  double epsilon = 0.2;
  double tau = 0.1;
  int n_train = 5000;
  int n_val = 5000;
  std::uint64_t seed = 1;

  void validate() const;
};

void to_json(nlohmann::json& j, const CollectConfig& c);
void from_json(const nlohmann::json& j, CollectConfig& c);
CollectConfig load_collect_config(const std::string& path);

// Sidecar written next to each dataset (<path>.meta.json). Records how the
// data was generated; the sweep uses it to rebuild the behavior policy and
// the simulator for online evaluation.
struct DatasetMeta {
  std::string behavior_policy;
  double epsilon = 0.0;
  double tau = 0.0;
  std::uint64_t seed = 0;
  int n_trajectories = 0;
  sim::SimConfig sim;
};

void to_json(nlohmann::json& j, const DatasetMeta& m);
void from_json(const nlohmann::json& j, DatasetMeta& m);
void save_dataset_meta(const DatasetMeta& meta, const std::string& dataset_path);
DatasetMeta load_dataset_meta(const std::string& dataset_path);

struct GridSpec {
  std::vector<double> learning_rates{1e-3};
  std::vector<int> batch_sizes{64};
  std::vector<int> target_update_periods{100};
  std::vector<int> hidden_widths{32};
  std::vector<qlearn::Algorithm> algorithms{qlearn::Algorithm::DQN,
                                            qlearn::Algorithm::DoubleDQN};

  std::size_t size() const;
};

struct EvalSettings {
  int n_rollout_episodes = 2000;
  int bins = 10;
  bool self_normalize = true;
  std::vector<ope::Method> methods{ope::Method::OneStep, ope::Method::Trajectory,
                                   ope::Method::StateMarginalized};
};

struct SweepConfig {
  std::string train_dataset;
  std::string val_dataset;
  GridSpec grid;
  int n_updates = 2000;
  double gamma = 0.95;
  int n_policies_cap = 0;  // 0 = run the full grid
  EvalSettings eval;
  std::uint64_t master_seed = 0;
  int n_workers = 0;  // 0 = hardware concurrency

  void validate() const;
  std::size_t n_policies() const;
  // Training configuration of grid point k; its seed depends only on
  // (master_seed, k), so results are independent of scheduling order.
  qlearn::TrainConfig point(std::size_t k) const;
};

void to_json(nlohmann::json& j, const SweepConfig& c);
void from_json(const nlohmann::json& j, SweepConfig& c);
SweepConfig load_sweep_config(const std::string& path);

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct PolicyRow {
  int policy_id = 0;
  qlearn::TrainConfig train;
  std::string status = "ok";  // "ok" or "diverged"
  double online_mean = kMissing;
  double online_se = kMissing;
  double ope_onestep = kMissing;
  double ope_traj = kMissing;
  double ope_statemarg = kMissing;

  double estimate(ope::Method m) const;
};

struct MethodStats {
  double mean_error = kMissing;      // mean of (estimate - online_mean)
  double mean_abs_error = kMissing;  // |mean error|, the empirical bias size
  double variance = kMissing;        // variance of estimates across policies
};

struct StudyReport {
  double behavior_online_mean = kMissing;
  double behavior_online_se = kMissing;
  std::vector<PolicyRow> rows;
  double fraction_beating_behavior = kMissing;
  MethodStats stats_onestep;
  MethodStats stats_traj;
  MethodStats stats_statemarg;

  nlohmann::json to_json() const;
  static StudyReport from_json(const nlohmann::json& j);
  void save(const std::string& dir) const;  // report.csv + report.json
  static StudyReport load(const std::string& json_path);
};

void write_report_csv(const StudyReport& report, const std::string& path);

// Trains and evaluates every grid point (worker pool, deterministic
// per-point seeds), writes policies/policy_<id>.json under out_dir plus
// report.csv/report.json, and returns the report. Grid points whose
// training diverges are kept as status "diverged" rows; if every point
// diverges the sweep itself fails with DivergenceError.
StudyReport run_sweep(const SweepConfig& config, const std::string& out_dir);

struct Selection {
  ope::Method method = ope::Method::OneStep;
  int policy_id = 0;
  double estimated_value = kMissing;
  double online_mean = kMissing;
  // Gap to the best realized online value in the study; 0 when the
  // estimator picked the true best policy.
  double regret = kMissing;
};

// Best policy per estimation method, by estimated value over "ok" rows.
std::vector<Selection> select_best(const StudyReport& report);
nlohmann::json selections_to_json(const std::vector<Selection>& selections);

// Per-method CSVs of (estimate - online_mean) errors for bias/variance
// studies: onestep_errors.csv, trajectory_errors.csv, statemarg_errors.csv.
void write_error_csvs(const StudyReport& report, const std::string& dir);

}  // namespace notifrl::harness
