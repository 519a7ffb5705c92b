#include "notifrl/dataset.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

namespace notifrl {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json state_to_json(const State& s) {
  return ordered_json::array(
      {s.badge_count, s.queue_size, s.time_index, s.activeness});
}

State state_from_json(const ordered_json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw ValidationError("state must be a 4-element array");
  }
  State s;
  s.badge_count = j[0].get<int>();
  s.queue_size = j[1].get<int>();
  s.time_index = j[2].get<int>();
  s.activeness = j[3].get<double>();
  return s;
}

}  // namespace

void save_batch(const TrajectoryBatch& batch, const std::string& path) {
  batch.validate();
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  for (const Trajectory& traj : batch.trajectories) {
    ordered_json line;
    line["episode_seed"] = traj.episode_seed;
    ordered_json steps = ordered_json::array();
    for (const Transition& tr : traj.steps) {
      ordered_json step;
      step["s"] = state_to_json(tr.state);
      step["a"] = action_index(tr.action);
      step["bp"] = tr.behavior_prob;
      step["r"] = static_cast<int>(std::lround(tr.reward));
      step["s2"] = state_to_json(tr.next_state);
      step["done"] = tr.terminal;
      steps.push_back(std::move(step));
    }
    line["steps"] = std::move(steps);
    out << line.dump() << '\n';
  }
  if (!out) throw ValidationError("write failed: " + path);
}

TrajectoryBatch load_batch(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset: " + path);
  TrajectoryBatch batch;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) +
                            ": bad JSON: " + e.what());
    }
    try {
      Trajectory traj;
      traj.episode_seed = j.at("episode_seed").get<std::int64_t>();
      for (const auto& sj : j.at("steps")) {
        Transition tr;
        tr.state = state_from_json(sj.at("s"));
        tr.action = action_from_index(sj.at("a").get<int>());
        tr.behavior_prob = sj.at("bp").get<double>();
        tr.reward = sj.at("r").get<double>();
        tr.next_state = state_from_json(sj.at("s2"));
        tr.terminal = sj.at("done").get<bool>();
        traj.steps.push_back(tr);
      }
      batch.trajectories.push_back(std::move(traj));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) +
                            ": bad record: " + e.what());
    }
  }
  if (batch.trajectories.empty()) {
    throw ValidationError(path + ": dataset is empty");
  }
  batch.horizon = static_cast<int>(batch.trajectories.front().steps.size());
  batch.validate();
  return batch;
}

}  // namespace notifrl
