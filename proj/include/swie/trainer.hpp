#pragma once

#include <set>
#include <string>
#include <vector>

#include "swie/checkpoint.hpp"
#include "swie/model.hpp"
#include "swie/segment.hpp"

namespace swie {

struct StageConfig {
  std::string name;
  std::vector<std::string> dataset_paths;  // equal concatenation
  size_t steps = 100;
};

struct TrainConfig {
  real learning_rate = real(1e-3);
  size_t batch_size = 8;
  uint64_t seed = 1;
  bool freeze_embeddings = true;
  real grad_clip_norm = real(1.0);
  bool carry_optimizer_state = false;  // reset at stage boundaries by default
  real adam_beta1 = real(0.9);
  real adam_beta2 = real(0.999);
  real adam_eps = real(1e-8);
  std::vector<StageConfig> stages;

  void validate() const;
};

// One structured line of the training log; serialized as JSON-Lines. No wall
// clock anywhere: logs are byte-stable across reruns.
struct TrainLogEntry {
  std::string event;  // "stage_start" | "step" | "stage_end"
  std::string stage;
  size_t step = 0;  // 1-based within stage, 0 for boundary events
  real loss = 0;
  real learning_rate = 0;
  std::string to_json_line() const;
};

struct TrainLog {
  std::vector<TrainLogEntry> entries;
  void stage_start(const std::string& stage);
  void step(const std::string& stage, size_t step, real loss, real lr);
  void stage_end(const std::string& stage, real mean_loss);
  void save(const std::string& path) const;
  std::vector<real> losses() const;
};

// Deterministic data order: epoch permutations are a pure function of
// (seed, stage, epoch), so any step's batch can be reconstructed from the
// step index alone.
std::vector<size_t> batch_indices(uint64_t seed, size_t stage_index, size_t n_records,
                                  size_t batch_size, size_t step);

// frozen parameter names under the current config ("tok_embed", "pos_embed")
std::set<std::string> frozen_param_names(const TrainConfig& config);

// Forward + masked MLE + backward + clipped adaptive-moment update over one
// batch. Sequences are processed at their own lengths; the batch loss is the
// mean over all unmasked response positions, identical to a padded batch.
// Returns that mean loss.
real train_step(const std::vector<EncodedSample>& batch, ModelParams& params, AdamState& adam,
                const TrainConfig& config);

// mean per-token response loss without touching gradients
real mean_response_loss(const ModelParams& params, const std::vector<EncodedSample>& samples);

struct CurriculumResult {
  real final_loss = 0;
  TrainerState state;
};

// Runs the configured stages in order. Optimizer state resets at stage
// boundaries unless carry_optimizer_state is set. If `resume` is non-null the
// run continues from that state and reproduces the uninterrupted trajectory.
// If checkpoint_dir is non-empty, writes <stage>.ckpt.json after each stage.
CurriculumResult run_curriculum(const TrainConfig& config,
                                const std::vector<std::vector<EncodedSample>>& stage_data,
                                ModelParams& params, TrainLog& log,
                                const TrainerState* resume = nullptr,
                                const std::string& checkpoint_dir = "");

}  // namespace swie
