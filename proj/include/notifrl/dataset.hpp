#pragma once

#include <string>

#include "notifrl/mdp.hpp"

namespace notifrl {

// JSON-Lines dataset, one episode per line:
//   {"episode_seed": 17, "steps": [{"s": [badge, queue, time, activeness],
//    "a": 0|1, "bp": 0.9, "r": 0|1, "s2": [...], "done": false}, ...]}
// save_batch validates before writing; load_batch validates after reading,
// so a round trip through disk is loss-free for valid batches.
void save_batch(const TrajectoryBatch& batch, const std::string& path);
TrajectoryBatch load_batch(const std::string& path);

}  // namespace notifrl
