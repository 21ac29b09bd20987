#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "swie/model.hpp"

namespace swie {

// Optimizer moments and position, serialized with checkpoints so a resumed
// run replays the interrupted trajectory exactly.
struct AdamState {
  int64_t step = 0;
  std::map<std::string, std::vector<real>> m;
  std::map<std::string, std::vector<real>> v;
};

struct TrainerState {
  size_t stage_index = 0;
  size_t step_in_stage = 0;
  uint64_t data_seed = 0;
  AdamState adam;
};

// JSON container: version + model config + named parameter tensors, plus an
// optional trainer section for resumable checkpoints. Values round-trip
// bit-exactly.
void save_checkpoint(const std::string& path, const ModelParams& params,
                     const TrainerState* trainer = nullptr);
ModelParams load_checkpoint(const std::string& path,
                            std::optional<TrainerState>* trainer = nullptr);

}  // namespace swie
