#include "notifrl/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <thread>

#include "notifrl/dataset.hpp"
#include "notifrl/policies.hpp"
#include "notifrl/rng.hpp"

namespace notifrl::harness {

namespace fs = std::filesystem;

void CollectConfig::validate() const {
  sim.validate();
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw ValidationError("epsilon must lie in [0, 1]");
  }
  if (!(tau >= 0.0)) throw ValidationError("tau must be >= 0");
  if (n_train < 1 || n_val < 1) {
    throw ValidationError("n_train and n_val must be >= 1");
  }
}

void to_json(nlohmann::json& j, const CollectConfig& c) {
  j = nlohmann::json{{"sim", c.sim},       {"epsilon", c.epsilon},
                     {"tau", c.tau},       {"n_train", c.n_train},
                     {"n_val", c.n_val},   {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, CollectConfig& c) {
  c = CollectConfig{};
  if (j.contains("sim")) j.at("sim").get_to(c.sim);
  if (j.contains("epsilon")) j.at("epsilon").get_to(c.epsilon);
  if (j.contains("tau")) j.at("tau").get_to(c.tau);
  if (j.contains("n_train")) j.at("n_train").get_to(c.n_train);
  if (j.contains("n_val")) j.at("n_val").get_to(c.n_val);
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
  c.validate();
}

namespace {

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": bad JSON: " + e.what());
  }
  return j;
}

void save_json_file(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

CollectConfig load_collect_config(const std::string& path) {
  return load_json_file(path).get<CollectConfig>();
}

void to_json(nlohmann::json& j, const DatasetMeta& m) {
  j = nlohmann::json{{"epsilon", m.epsilon},
                     {"tau", m.tau},
                     {"config", m.sim},
                     {"seed", m.seed},
                     {"n", m.n_trajectories},
                     {"behavior_policy", m.behavior_policy}};
}

void from_json(const nlohmann::json& j, DatasetMeta& m) {
  m = DatasetMeta{};
  j.at("epsilon").get_to(m.epsilon);
  j.at("tau").get_to(m.tau);
  j.at("config").get_to(m.sim);
  j.at("seed").get_to(m.seed);
  j.at("n").get_to(m.n_trajectories);
  if (j.contains("behavior_policy")) {
    j.at("behavior_policy").get_to(m.behavior_policy);
  }
}

void save_dataset_meta(const DatasetMeta& meta, const std::string& dataset_path) {
  save_json_file(nlohmann::json(meta), dataset_path + ".meta.json");
}

DatasetMeta load_dataset_meta(const std::string& dataset_path) {
  const std::string path = dataset_path + ".meta.json";
  if (!fs::exists(path)) {
    throw ValidationError("dataset metadata not found: " + path +
                          " (collect writes it next to each dataset)");
  }
  return load_json_file(path).get<DatasetMeta>();
}

std::size_t GridSpec::size() const {
  return learning_rates.size() * batch_sizes.size() *
         target_update_periods.size() * hidden_widths.size() *
         algorithms.size();
}

void SweepConfig::validate() const {
  if (train_dataset.empty() || val_dataset.empty()) {
    throw ValidationError("train_dataset and val_dataset are required");
  }
  if (grid.size() == 0) throw ValidationError("grid is empty");
  if (n_updates < 0) throw ValidationError("n_updates must be >= 0");
  if (!(gamma > 0.0) || gamma > 1.0) {
    throw ValidationError("gamma must lie in (0, 1]");
  }
  if (n_policies_cap < 0) throw ValidationError("n_policies_cap must be >= 0");
  if (eval.n_rollout_episodes < 1) {
    throw ValidationError("n_rollout_episodes must be >= 1");
  }
  if (eval.bins < 1) throw ValidationError("bins must be >= 1");
  if (n_workers < 0) throw ValidationError("n_workers must be >= 0");
}

std::size_t SweepConfig::n_policies() const {
  const std::size_t full = grid.size();
  if (n_policies_cap > 0) {
    return std::min(full, static_cast<std::size_t>(n_policies_cap));
  }
  return full;
}

qlearn::TrainConfig SweepConfig::point(std::size_t k) const {
  const std::size_t point_index = k;
  const std::size_t na = grid.algorithms.size();
  const std::size_t nh = grid.hidden_widths.size();
  const std::size_t nt = grid.target_update_periods.size();
  const std::size_t nb = grid.batch_sizes.size();
  qlearn::TrainConfig t;
  t.algorithm = grid.algorithms[k % na];
  k /= na;
  t.hidden_width = grid.hidden_widths[k % nh];
  k /= nh;
  t.target_update_period = grid.target_update_periods[k % nt];
  k /= nt;
  t.batch_size = grid.batch_sizes[k % nb];
  k /= nb;
  t.learning_rate = grid.learning_rates.at(k);
  t.n_updates = n_updates;
  t.gamma = gamma;
  t.seed = mix_seed(master_seed, 0x6000 + static_cast<std::uint64_t>(point_index));
  return t;
}

void to_json(nlohmann::json& j, const SweepConfig& c) {
  std::vector<std::string> algos;
  for (auto a : c.grid.algorithms) algos.push_back(qlearn::algorithm_name(a));
  std::vector<std::string> methods;
  for (auto m : c.eval.methods) methods.push_back(ope::method_name(m));
  j = nlohmann::json{
      {"train_dataset", c.train_dataset},
      {"val_dataset", c.val_dataset},
      {"grid",
       {{"learning_rate", c.grid.learning_rates},
        {"batch_size", c.grid.batch_sizes},
        {"target_update_period", c.grid.target_update_periods},
        {"hidden_width", c.grid.hidden_widths},
        {"algorithm", algos}}},
      {"n_updates", c.n_updates},
      {"gamma", c.gamma},
      {"n_policies_cap", c.n_policies_cap},
      {"eval",
       {{"n_rollout_episodes", c.eval.n_rollout_episodes},
        {"bins", c.eval.bins},
        {"self_normalize", c.eval.self_normalize},
        {"methods", methods}}},
      {"master_seed", c.master_seed},
      {"n_workers", c.n_workers}};
}

void from_json(const nlohmann::json& j, SweepConfig& c) {
  c = SweepConfig{};
  j.at("train_dataset").get_to(c.train_dataset);
  j.at("val_dataset").get_to(c.val_dataset);
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    if (g.contains("learning_rate")) g.at("learning_rate").get_to(c.grid.learning_rates);
    if (g.contains("batch_size")) g.at("batch_size").get_to(c.grid.batch_sizes);
    if (g.contains("target_update_period")) {
      g.at("target_update_period").get_to(c.grid.target_update_periods);
    }
    if (g.contains("hidden_width")) g.at("hidden_width").get_to(c.grid.hidden_widths);
    if (g.contains("algorithm")) {
      c.grid.algorithms.clear();
      for (const auto& a : g.at("algorithm")) {
        c.grid.algorithms.push_back(qlearn::algorithm_from_name(a.get<std::string>()));
      }
    }
  }
  if (j.contains("n_updates")) j.at("n_updates").get_to(c.n_updates);
  if (j.contains("gamma")) j.at("gamma").get_to(c.gamma);
  if (j.contains("n_policies_cap")) j.at("n_policies_cap").get_to(c.n_policies_cap);
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    if (e.contains("n_rollout_episodes")) {
      e.at("n_rollout_episodes").get_to(c.eval.n_rollout_episodes);
    }
    if (e.contains("bins")) e.at("bins").get_to(c.eval.bins);
    if (e.contains("self_normalize")) e.at("self_normalize").get_to(c.eval.self_normalize);
    if (e.contains("methods")) {
      c.eval.methods.clear();
      for (const auto& m : e.at("methods")) {
        c.eval.methods.push_back(ope::method_from_name(m.get<std::string>()));
      }
    }
  }
  if (j.contains("master_seed")) j.at("master_seed").get_to(c.master_seed);
  if (j.contains("n_workers")) j.at("n_workers").get_to(c.n_workers);
  c.validate();
}

SweepConfig load_sweep_config(const std::string& path) {
  return load_json_file(path).get<SweepConfig>();
}

double PolicyRow::estimate(ope::Method m) const {
  switch (m) {
    case ope::Method::OneStep:
      return ope_onestep;
    case ope::Method::Trajectory:
      return ope_traj;
    case ope::Method::StateMarginalized:
      return ope_statemarg;
  }
  throw ValidationError("unknown method");
}

namespace {

nlohmann::json row_to_json(const PolicyRow& r) {
  auto opt = [](double v) {
    return std::isnan(v) ? nlohmann::json() : nlohmann::json(v);
  };
  return nlohmann::json{{"policy_id", r.policy_id},
                        {"learning_rate", r.train.learning_rate},
                        {"batch_size", r.train.batch_size},
                        {"target_update_period", r.train.target_update_period},
                        {"hidden_width", r.train.hidden_width},
                        {"algorithm", qlearn::algorithm_name(r.train.algorithm)},
                        {"status", r.status},
                        {"online_mean", opt(r.online_mean)},
                        {"online_se", opt(r.online_se)},
                        {"ope_onestep", opt(r.ope_onestep)},
                        {"ope_traj", opt(r.ope_traj)},
                        {"ope_statemarg", opt(r.ope_statemarg)}};
}

PolicyRow row_from_json(const nlohmann::json& j) {
  auto opt = [&](const char* key) {
    return (!j.contains(key) || j.at(key).is_null()) ? kMissing
                                                     : j.at(key).get<double>();
  };
  PolicyRow r;
  j.at("policy_id").get_to(r.policy_id);
  j.at("learning_rate").get_to(r.train.learning_rate);
  j.at("batch_size").get_to(r.train.batch_size);
  j.at("target_update_period").get_to(r.train.target_update_period);
  j.at("hidden_width").get_to(r.train.hidden_width);
  r.train.algorithm = qlearn::algorithm_from_name(j.at("algorithm").get<std::string>());
  j.at("status").get_to(r.status);
  r.online_mean = opt("online_mean");
  r.online_se = opt("online_se");
  r.ope_onestep = opt("ope_onestep");
  r.ope_traj = opt("ope_traj");
  r.ope_statemarg = opt("ope_statemarg");
  return r;
}

nlohmann::json stats_to_json(const MethodStats& s) {
  auto opt = [](double v) {
    return std::isnan(v) ? nlohmann::json() : nlohmann::json(v);
  };
  return nlohmann::json{{"mean_error", opt(s.mean_error)},
                        {"mean_abs_error", opt(s.mean_abs_error)},
                        {"variance", opt(s.variance)}};
}

MethodStats stats_from_json(const nlohmann::json& j) {
  auto opt = [&](const char* key) {
    return (!j.contains(key) || j.at(key).is_null()) ? kMissing
                                                     : j.at(key).get<double>();
  };
  MethodStats s;
  s.mean_error = opt("mean_error");
  s.mean_abs_error = opt("mean_abs_error");
  s.variance = opt("variance");
  return s;
}

MethodStats compute_stats(const StudyReport& report, ope::Method m) {
  std::vector<double> errors;
  std::vector<double> estimates;
  for (const PolicyRow& r : report.rows) {
    if (r.status != "ok") continue;
    const double est = r.estimate(m);
    if (std::isnan(est) || std::isnan(r.online_mean)) continue;
    errors.push_back(est - r.online_mean);
    estimates.push_back(est);
  }
  MethodStats s;
  if (errors.empty()) return s;
  double sum = 0.0;
  for (double e : errors) sum += e;
  s.mean_error = sum / static_cast<double>(errors.size());
  s.mean_abs_error = std::abs(s.mean_error);
  double mean_est = 0.0;
  for (double e : estimates) mean_est += e;
  mean_est /= static_cast<double>(estimates.size());
  double ss = 0.0;
  for (double e : estimates) ss += (e - mean_est) * (e - mean_est);
  s.variance = estimates.size() > 1
                   ? ss / (static_cast<double>(estimates.size()) - 1.0)
                   : 0.0;
  return s;
}

}  // namespace

nlohmann::json StudyReport::to_json() const {
  auto opt = [](double v) {
    return std::isnan(v) ? nlohmann::json() : nlohmann::json(v);
  };
  nlohmann::json rows_json = nlohmann::json::array();
  for (const PolicyRow& r : rows) rows_json.push_back(row_to_json(r));
  return nlohmann::json{
      {"behavior_online_mean", opt(behavior_online_mean)},
      {"behavior_online_se", opt(behavior_online_se)},
      {"rows", std::move(rows_json)},
      {"summary",
       {{"fraction_beating_behavior", opt(fraction_beating_behavior)},
        {"onestep", stats_to_json(stats_onestep)},
        {"trajectory", stats_to_json(stats_traj)},
        {"statemarg", stats_to_json(stats_statemarg)}}}};
}

StudyReport StudyReport::from_json(const nlohmann::json& j) {
  StudyReport report;
  auto opt = [](const nlohmann::json& v) {
    return v.is_null() ? kMissing : v.get<double>();
  };
  report.behavior_online_mean = opt(j.at("behavior_online_mean"));
  report.behavior_online_se = opt(j.at("behavior_online_se"));
  for (const auto& r : j.at("rows")) report.rows.push_back(row_from_json(r));
  const auto& s = j.at("summary");
  report.fraction_beating_behavior = opt(s.at("fraction_beating_behavior"));
  report.stats_onestep = stats_from_json(s.at("onestep"));
  report.stats_traj = stats_from_json(s.at("trajectory"));
  report.stats_statemarg = stats_from_json(s.at("statemarg"));
  return report;
}

void write_report_csv(const StudyReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  out << "policy_id,learning_rate,batch_size,target_update_period,"
         "hidden_width,algorithm,status,online_mean,online_se,"
         "ope_onestep,ope_traj,ope_statemarg\n";
  for (const PolicyRow& r : report.rows) {
    out << r.policy_id << ',' << format_double(r.train.learning_rate) << ','
        << r.train.batch_size << ',' << r.train.target_update_period << ','
        << r.train.hidden_width << ',' << qlearn::algorithm_name(r.train.algorithm)
        << ',' << r.status << ',' << format_double(r.online_mean) << ','
        << format_double(r.online_se) << ',' << format_double(r.ope_onestep)
        << ',' << format_double(r.ope_traj) << ','
        << format_double(r.ope_statemarg) << '\n';
  }
  if (!out) throw ValidationError("write failed: " + path);
}

void StudyReport::save(const std::string& dir) const {
  fs::create_directories(dir);
  write_report_csv(*this, (fs::path(dir) / "report.csv").string());
  save_json_file(to_json(), (fs::path(dir) / "report.json").string());
}

StudyReport StudyReport::load(const std::string& json_path) {
  try {
    return from_json(load_json_file(json_path));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(json_path + ": bad report: " + e.what());
  }
}

StudyReport run_sweep(const SweepConfig& config, const std::string& out_dir) {
  config.validate();
  const TrajectoryBatch train_batch = load_batch(config.train_dataset);
  const TrajectoryBatch val_batch = load_batch(config.val_dataset);
  const DatasetMeta meta = load_dataset_meta(config.train_dataset);

  fs::create_directories(fs::path(out_dir) / "policies");

  // One spec fitted on the evaluation batch, shared read-only by workers.
  ope::DiscretizationSpec spec;
  spec.bins_per_feature = config.eval.bins;
  spec.fit(val_batch);

  const auto baseline = std::make_shared<policies::BaselinePolicy>(
      meta.tau, meta.sim.visit_weights);
  const policies::EpsilonGreedyPolicy behavior(baseline, meta.epsilon);
  // Common evaluation episodes for the behavior policy and every learned
  // policy, so online comparisons are paired.
  const std::uint64_t eval_seed = mix_seed(config.master_seed, 0xE7A1);
  const sim::RolloutStats behavior_online = sim::rollout_value(
      behavior, meta.sim, config.eval.n_rollout_episodes, eval_seed, 1.0);

  const std::size_t n_points = config.n_policies();
  std::vector<PolicyRow> rows(n_points);

  auto run_point = [&](std::size_t k) {
    PolicyRow row;
    row.policy_id = static_cast<int>(k);
    row.train = config.point(k);
    try {
      const qlearn::TrainReport trained = qlearn::train_offline(train_batch, row.train);
      trained.final_network.save(
          (fs::path(out_dir) / "policies" /
           ("policy_" + std::to_string(k) + ".json")).string());
      const policies::GreedyQPolicy greedy(trained.final_network);
      const sim::RolloutStats online = sim::rollout_value(
          greedy, meta.sim, config.eval.n_rollout_episodes, eval_seed, 1.0);
      row.online_mean = online.mean_return;
      row.online_se = online.std_error;
      for (ope::Method m : config.eval.methods) {
        double value = kMissing;
        switch (m) {
          case ope::Method::OneStep:
            value = ope::one_step_estimate(val_batch, greedy,
                                           config.eval.self_normalize).value;
            row.ope_onestep = value;
            break;
          case ope::Method::Trajectory:
            value = ope::trajectory_estimate(val_batch, greedy,
                                             config.eval.self_normalize).value;
            row.ope_traj = value;
            break;
          case ope::Method::StateMarginalized:
            value = ope::state_marginalized_estimate(
                        val_batch, greedy, spec, config.eval.self_normalize).value;
            row.ope_statemarg = value;
            break;
        }
      }
    } catch (const qlearn::DivergenceError&) {
      row.status = "diverged";
    }
    rows[k] = std::move(row);
  };

  unsigned workers = config.n_workers > 0
                         ? static_cast<unsigned>(config.n_workers)
                         : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(n_points));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t k = next.fetch_add(1);
        if (k >= n_points) break;
        run_point(k);
      }
    });
  }
  for (std::thread& t : pool) t.join();

  StudyReport report;
  report.behavior_online_mean = behavior_online.mean_return;
  report.behavior_online_se = behavior_online.std_error;
  report.rows = std::move(rows);

  std::size_t ok = 0, beating = 0;
  for (const PolicyRow& r : report.rows) {
    if (r.status != "ok") continue;
    ++ok;
    if (r.online_mean > report.behavior_online_mean) ++beating;
  }
  if (ok == 0) {
    report.save(out_dir);
    throw qlearn::DivergenceError("every grid point diverged during training",
                                  qlearn::TrainReport{});
  }
  report.fraction_beating_behavior =
      static_cast<double>(beating) / static_cast<double>(ok);
  report.stats_onestep = compute_stats(report, ope::Method::OneStep);
  report.stats_traj = compute_stats(report, ope::Method::Trajectory);
  report.stats_statemarg = compute_stats(report, ope::Method::StateMarginalized);
  report.save(out_dir);
  return report;
}

std::vector<Selection> select_best(const StudyReport& report) {
  double best_online = kMissing;
  for (const PolicyRow& r : report.rows) {
    if (r.status != "ok" || std::isnan(r.online_mean)) continue;
    if (std::isnan(best_online) || r.online_mean > best_online) {
      best_online = r.online_mean;
    }
  }
  if (std::isnan(best_online)) {
    throw ValidationError("report has no successful rows to select from");
  }
  std::vector<Selection> out;
  for (ope::Method m : {ope::Method::OneStep, ope::Method::Trajectory,
                        ope::Method::StateMarginalized}) {
    const PolicyRow* best = nullptr;
    for (const PolicyRow& r : report.rows) {
      if (r.status != "ok" || std::isnan(r.estimate(m))) continue;
      if (best == nullptr || r.estimate(m) > best->estimate(m)) best = &r;
    }
    if (best == nullptr) continue;  // method not evaluated in this study
    Selection sel;
    sel.method = m;
    sel.policy_id = best->policy_id;
    sel.estimated_value = best->estimate(m);
    sel.online_mean = best->online_mean;
    sel.regret = best_online - best->online_mean;
    out.push_back(sel);
  }
  return out;
}

nlohmann::json selections_to_json(const std::vector<Selection>& selections) {
  nlohmann::json j = nlohmann::json::array();
  for (const Selection& s : selections) {
    j.push_back({{"method", ope::method_name(s.method)},
                 {"policy_id", s.policy_id},
                 {"estimated_value", s.estimated_value},
                 {"online_mean", s.online_mean},
                 {"regret", s.regret}});
  }
  return j;
}

void write_error_csvs(const StudyReport& report, const std::string& dir) {
  fs::create_directories(dir);
  const struct {
    ope::Method method;
    const char* filename;
  } files[] = {
      {ope::Method::OneStep, "onestep_errors.csv"},
      {ope::Method::Trajectory, "trajectory_errors.csv"},
      {ope::Method::StateMarginalized, "statemarg_errors.csv"},
  };
  for (const auto& f : files) {
    std::ofstream out((fs::path(dir) / f.filename).string());
    if (!out) {
      throw ValidationError(std::string("cannot open for writing: ") + f.filename);
    }
    out << "policy_id,error\n";
    for (const PolicyRow& r : report.rows) {
      if (r.status != "ok") continue;
      const double est = r.estimate(f.method);
      if (std::isnan(est) || std::isnan(r.online_mean)) continue;
      out << r.policy_id << ',' << format_double(est - r.online_mean) << '\n';
    }
  }
}

}  // namespace notifrl::harness
