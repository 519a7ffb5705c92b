// notifrl: collect exploratory notification logs from the simulator, train
// offline Q-learning policies over a hyperparameter grid, and compare
// off-policy value estimates against online rollouts.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "json.hpp"
#include "notifrl/dataset.hpp"
#include "notifrl/harness.hpp"
#include "notifrl/ope.hpp"
#include "notifrl/policies.hpp"
#include "notifrl/qlearn.hpp"
#include "notifrl/sim.hpp"

namespace fs = std::filesystem;
using namespace notifrl;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitDivergence = 3;

sim::SimConfig sim_config_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": bad JSON: " + e.what());
  }
  // Accept either a bare simulator config or a collect config with "sim".
  if (j.contains("sim")) return j.at("sim").get<sim::SimConfig>();
  return j.get<sim::SimConfig>();
}

int run_collect(const std::string& config_path, const std::string& out_dir,
                const double* epsilon, const double* tau,
                const std::uint64_t* seed) {
  harness::CollectConfig cfg = config_path.empty()
                                   ? harness::CollectConfig{}
                                   : harness::load_collect_config(config_path);
  if (epsilon) cfg.epsilon = *epsilon;
  if (tau) cfg.tau = *tau;
  if (seed) cfg.seed = *seed;
  cfg.validate();

  const auto baseline =
      std::make_shared<policies::BaselinePolicy>(cfg.tau, cfg.sim.visit_weights);
  const policies::EpsilonGreedyPolicy behavior(baseline, cfg.epsilon);
  char desc[96];
  std::snprintf(desc, sizeof(desc), "epsilon_greedy(epsilon=%g, tau=%g)",
                cfg.epsilon, cfg.tau);

  fs::create_directories(out_dir);
  const std::uint64_t val_seed = cfg.seed + static_cast<std::uint64_t>(cfg.n_train);
  const struct {
    const char* name;
    int n;
    std::uint64_t seed;
  } splits[] = {{"train.jsonl", cfg.n_train, cfg.seed},
                {"val.jsonl", cfg.n_val, val_seed}};

  nlohmann::json out_summary;
  for (const auto& split : splits) {
    const TrajectoryBatch batch =
        policies::collect_batch(behavior, cfg.sim, split.n, split.seed, desc);
    const std::string path = (fs::path(out_dir) / split.name).string();
    save_batch(batch, path);
    harness::DatasetMeta meta;
    meta.behavior_policy = desc;
    meta.epsilon = cfg.epsilon;
    meta.tau = cfg.tau;
    meta.seed = split.seed;
    meta.n_trajectories = split.n;
    meta.sim = cfg.sim;
    harness::save_dataset_meta(meta, path);
    out_summary[split.name] = {{"path", path},
                               {"n_trajectories", split.n},
                               {"behavior_value", undiscounted_value(batch)}};
  }
  out_summary["behavior_policy"] = desc;
  std::cout << out_summary.dump(2) << std::endl;
  return 0;
}

int run_sweep_cmd(const std::string& config_path, const std::string& out_dir,
                  const std::uint64_t* seed) {
  harness::SweepConfig cfg = harness::load_sweep_config(config_path);
  if (seed) cfg.master_seed = *seed;
  const harness::StudyReport report = harness::run_sweep(cfg, out_dir);
  nlohmann::json summary = report.to_json()["summary"];
  summary["behavior_online_mean"] = report.behavior_online_mean;
  summary["n_policies"] = report.rows.size();
  summary["report"] = (fs::path(out_dir) / "report.json").string();
  std::cout << summary.dump(2) << std::endl;
  return 0;
}

int run_select(const std::string& report_path, const std::string& out_path) {
  const harness::StudyReport report = harness::StudyReport::load(report_path);
  const nlohmann::json j = harness::selections_to_json(harness::select_best(report));
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw ValidationError("cannot open for writing: " + out_path);
    out << j.dump(2) << '\n';
  }
  std::cout << j.dump(2) << std::endl;
  return 0;
}

int run_report(const std::string& report_path, const std::string& out_dir) {
  const harness::StudyReport report = harness::StudyReport::load(report_path);
  harness::write_error_csvs(report, out_dir);
  std::cout << "wrote onestep_errors.csv, trajectory_errors.csv, "
               "statemarg_errors.csv to "
            << out_dir << std::endl;
  return 0;
}

int run_eval_online(const std::string& policy_path, const std::string& config_path,
                    std::uint64_t seed, int episodes, double gamma) {
  const sim::SimConfig cfg = sim_config_from_file(config_path);
  const policies::GreedyQPolicy policy(qlearn::QNetwork::load(policy_path));
  const sim::RolloutStats stats =
      sim::rollout_value(policy, cfg, episodes, seed, gamma);
  std::cout << nlohmann::json{{"mean_return", stats.mean_return},
                              {"std_error", stats.std_error},
                              {"n_episodes", episodes},
                              {"gamma", gamma}}
                   .dump(2)
            << std::endl;
  return 0;
}

int run_eval_offline(const std::string& dataset_path, const std::string& policy_path,
                     const std::string& method_name, int bins, bool self_normalize,
                     const double* epsilon, const double* tau) {
  const TrajectoryBatch batch = load_batch(dataset_path);
  std::shared_ptr<const Policy> target;
  if (!policy_path.empty()) {
    target = std::make_shared<policies::GreedyQPolicy>(
        qlearn::QNetwork::load(policy_path));
  } else if (tau) {
    // Threshold-rule target, optionally epsilon-smoothed; lets the logged
    // behavior policy itself be re-evaluated from its own data.
    std::shared_ptr<const Policy> base;
    try {
      const harness::DatasetMeta meta = harness::load_dataset_meta(dataset_path);
      base = std::make_shared<policies::BaselinePolicy>(*tau, meta.sim.visit_weights);
    } catch (const ValidationError&) {
      base = std::make_shared<policies::BaselinePolicy>(*tau);
    }
    target = epsilon ? std::make_shared<policies::EpsilonGreedyPolicy>(base, *epsilon)
                     : base;
  } else {
    throw ValidationError("eval-offline needs --policy, or --tau (with "
                          "optional --epsilon) for a threshold-rule target");
  }

  const ope::Method method = ope::method_from_name(method_name);
  ope::PolicyValueEstimate est;
  switch (method) {
    case ope::Method::OneStep:
      est = ope::one_step_estimate(batch, *target, self_normalize);
      break;
    case ope::Method::Trajectory:
      est = ope::trajectory_estimate(batch, *target, self_normalize);
      break;
    case ope::Method::StateMarginalized: {
      ope::DiscretizationSpec spec;
      spec.bins_per_feature = bins;
      spec.fit(batch);
      est = ope::state_marginalized_estimate(batch, *target, spec, self_normalize);
      break;
    }
  }
  std::cout << est.to_json().dump(2) << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline RL workbench for notification delivery timing"};
  app.require_subcommand(1);

  std::string config_path, out_path, dataset_path, policy_path, report_path;
  std::string method = "onestep";
  double epsilon = 0.0, tau = 0.0, gamma = 1.0;
  std::uint64_t seed = 0;
  int bins = 10, episodes = 2000;
  bool no_self_normalize = false;

  auto* collect = app.add_subcommand("collect", "Generate exploratory logs");
  collect->add_option("--config", config_path, "Collect config JSON");
  collect->add_option("--out", out_path, "Output directory")->required();
  auto* c_eps = collect->add_option("--epsilon", epsilon, "Exploration rate override");
  auto* c_tau = collect->add_option("--tau", tau, "Threshold override");
  auto* c_seed = collect->add_option("--seed", seed, "Collection seed override");

  auto* sweep = app.add_subcommand("sweep", "Train and evaluate a policy grid");
  sweep->add_option("--config", config_path, "Sweep config JSON")->required();
  sweep->add_option("--out", out_path, "Output directory")->required();
  auto* s_seed = sweep->add_option("--seed", seed, "Master seed override");

  auto* select = app.add_subcommand("select", "Pick the best policy per estimator");
  select->add_option("--report", report_path, "report.json from a sweep")->required();
  select->add_option("--out", out_path, "Optional output JSON path");

  auto* report_cmd = app.add_subcommand("report", "Write per-estimator error CSVs");
  report_cmd->add_option("--report", report_path, "report.json from a sweep")->required();
  report_cmd->add_option("--out", out_path, "Output directory")->required();

  auto* eval_on = app.add_subcommand("eval-online", "Roll a policy in the simulator");
  eval_on->add_option("--policy", policy_path, "Q-network JSON")->required();
  eval_on->add_option("--config", config_path, "Simulator (or collect) config JSON")
      ->required();
  eval_on->add_option("--seed", seed, "Rollout seed");
  eval_on->add_option("--episodes", episodes, "Number of episodes");
  eval_on->add_option("--gamma", gamma, "Discount factor");

  auto* eval_off = app.add_subcommand("eval-offline", "Off-policy value estimate");
  eval_off->add_option("--dataset", dataset_path, "JSONL evaluation dataset")
      ->required();
  eval_off->add_option("--policy", policy_path, "Q-network JSON target policy");
  eval_off->add_option("--method", method, "onestep|trajectory|statemarg");
  eval_off->add_option("--bins", bins, "Quantile bins per feature");
  eval_off->add_flag("--no-self-normalize", no_self_normalize,
                     "Use raw importance weights");
  auto* e_eps = eval_off->add_option("--epsilon", epsilon,
                                     "Epsilon for a threshold-rule target");
  auto* e_tau = eval_off->add_option("--tau", tau, "Threshold-rule target tau");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (collect->parsed()) {
      return run_collect(config_path, out_path, c_eps->count() ? &epsilon : nullptr,
                         c_tau->count() ? &tau : nullptr,
                         c_seed->count() ? &seed : nullptr);
    }
    if (sweep->parsed()) {
      return run_sweep_cmd(config_path, out_path, s_seed->count() ? &seed : nullptr);
    }
    if (select->parsed()) return run_select(report_path, out_path);
    if (report_cmd->parsed()) return run_report(report_path, out_path);
    if (eval_on->parsed()) {
      return run_eval_online(policy_path, config_path, seed, episodes, gamma);
    }
    if (eval_off->parsed()) {
      return run_eval_offline(dataset_path, policy_path, method, bins,
                              !no_self_normalize, e_eps->count() ? &epsilon : nullptr,
                              e_tau->count() ? &tau : nullptr);
    }
  } catch (const qlearn::DivergenceError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitDivergence;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
