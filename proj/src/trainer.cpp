#include "swie/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <json.hpp>

#include "swie/ops.hpp"

namespace swie {

using nlohmann::json;

void TrainConfig::validate() const {
  ensure(learning_rate > 0, "TrainConfig: learning rate must be positive");
  ensure(batch_size >= 1, "TrainConfig: batch size must be >= 1");
  ensure(!stages.empty(), "TrainConfig: at least one stage required");
  ensure(grad_clip_norm > 0, "TrainConfig: grad clip norm must be positive");
  for (const auto& s : stages) {
    ensure(!s.name.empty(), "TrainConfig: stage without a name");
    ensure(s.steps >= 1, "TrainConfig: stage '" + s.name + "' has no steps");
  }
}

std::string TrainLogEntry::to_json_line() const {
  json j;
  j["event"] = event;
  j["stage"] = stage;
  if (event == "step") {
    j["step"] = step;
    j["loss"] = loss;
    j["lr"] = learning_rate;
  } else if (event == "stage_end") {
    j["mean_loss"] = loss;
  }
  return j.dump();
}

void TrainLog::stage_start(const std::string& stage) {
  entries.push_back({"stage_start", stage, 0, 0, 0});
}

void TrainLog::step(const std::string& stage, size_t step, real loss, real lr) {
  entries.push_back({"step", stage, step, loss, lr});
}

void TrainLog::stage_end(const std::string& stage, real mean_loss) {
  entries.push_back({"stage_end", stage, 0, mean_loss, 0});
}

void TrainLog::save(const std::string& path) const {
  std::string out;
  for (const auto& e : entries) {
    out += e.to_json_line();
    out += '\n';
  }
  write_text_file(path, out);
}

std::vector<real> TrainLog::losses() const {
  std::vector<real> out;
  for (const auto& e : entries)
    if (e.event == "step") out.push_back(e.loss);
  return out;
}

std::vector<size_t> batch_indices(uint64_t seed, size_t stage_index, size_t n_records,
                                  size_t batch_size, size_t step) {
  ensure(n_records > 0, "batch_indices: empty dataset");
  ensure(batch_size > 0, "batch_indices: batch size must be positive");
  const size_t batches_per_epoch = (n_records + batch_size - 1) / batch_size;
  const size_t epoch = step / batches_per_epoch;
  const size_t slot = step % batches_per_epoch;
  Rng rng(mix_seed(mix_seed(seed, 0xda7a5eedULL), mix_seed(stage_index, epoch)));
  const auto perm = rng.permutation(n_records);
  const size_t first = slot * batch_size;
  const size_t last = std::min(n_records, first + batch_size);
  return std::vector<size_t>(perm.begin() + static_cast<long>(first),
                             perm.begin() + static_cast<long>(last));
}

std::set<std::string> frozen_param_names(const TrainConfig& config) {
  if (!config.freeze_embeddings) return {};
  return {"tok_embed", "pos_embed"};
}

// Next-token shift: the logits row at position i scores the token at i+1, so
// targets are the input shifted left and the mask marks positions whose
// successor is a response token.
static void shifted_targets(const EncodedSample& s, std::vector<int>& targets,
                            std::vector<uint8_t>& mask) {
  const size_t t = s.tokens.size();
  ensure(t >= 2, "train: sample too short for next-token prediction");
  targets.assign(t, 0);
  mask.assign(t, 0);
  for (size_t i = 0; i + 1 < t; ++i) {
    targets[i] = s.tokens[i + 1];
    mask[i] = s.loss_mask[i + 1];
  }
}

static size_t masked_count(const std::vector<uint8_t>& mask) {
  size_t n = 0;
  for (uint8_t m : mask) n += m ? 1 : 0;
  return n;
}

static real global_grad_norm(ModelParams& params, const std::set<std::string>& frozen) {
  real sum = 0;
  params.for_each_param([&](const std::string& name, Tensor& t) {
    if (frozen.count(name) || !t.requires_grad() || !t.has_grad()) return;
    for (real gv : t.grad()) sum += gv * gv;
  });
  return std::sqrt(sum);
}

static void adam_update(ModelParams& params, AdamState& adam, const TrainConfig& cfg,
                        const std::set<std::string>& frozen, real clip_scale) {
  adam.step += 1;
  const real b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const real bias1 = real(1) - std::pow(b1, static_cast<real>(adam.step));
  const real bias2 = real(1) - std::pow(b2, static_cast<real>(adam.step));
  params.for_each_param([&](const std::string& name, Tensor& t) {
    if (frozen.count(name) || !t.requires_grad() || !t.has_grad()) return;
    auto& m = adam.m[name];
    auto& v = adam.v[name];
    if (m.empty()) m.assign(t.size(), 0);
    if (v.empty()) v.assign(t.size(), 0);
    auto& values = t.values();
    const auto& grad = t.grad();
    for (size_t i = 0; i < values.size(); ++i) {
      const real gv = grad[i] * clip_scale;
      m[i] = b1 * m[i] + (real(1) - b1) * gv;
      v[i] = b2 * v[i] + (real(1) - b2) * gv * gv;
      const real mhat = m[i] / bias1;
      const real vhat = v[i] / bias2;
      values[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
  });
}

real train_step(const std::vector<EncodedSample>& batch, ModelParams& params, AdamState& adam,
                const TrainConfig& config) {
  ensure(!batch.empty(), "train_step: empty batch");
  const std::set<std::string> frozen = frozen_param_names(config);

  Graph graph;
  std::vector<Tensor> sample_losses;
  std::vector<real> sample_weights;
  size_t total_masked = 0;
  std::vector<std::vector<int>> targets(batch.size());
  std::vector<std::vector<uint8_t>> masks(batch.size());
  for (size_t s = 0; s < batch.size(); ++s) {
    shifted_targets(batch[s], targets[s], masks[s]);
    const size_t masked = masked_count(masks[s]);
    ensure(masked > 0, "train_step: sample without response positions");
    total_masked += masked;
  }
  for (size_t s = 0; s < batch.size(); ++s) {
    ForwardOptions opts;
    opts.graph = &graph;
    Tensor logits = model_forward(params, batch[s].tokens, batch[s].layout, opts);
    Tensor loss = cross_entropy_mle(logits, targets[s], masks[s], &graph);
    sample_losses.push_back(loss);
    sample_weights.push_back(real(masked_count(masks[s])) / real(total_masked));
  }
  Tensor batch_loss = scalar_weighted_sum(sample_losses, sample_weights, &graph);
  const real loss_value = batch_loss.item();
  if (!std::isfinite(loss_value)) {
    fail("train_step: non-finite loss " + std::to_string(loss_value));
  }

  graph.backward(batch_loss);

  const real norm = global_grad_norm(params, frozen);
  const real clip_scale =
      norm > config.grad_clip_norm ? config.grad_clip_norm / norm : real(1);
  adam_update(params, adam, config, frozen, clip_scale);
  params.zero_grad();
  return loss_value;
}

real mean_response_loss(const ModelParams& params, const std::vector<EncodedSample>& samples) {
  ensure(!samples.empty(), "mean_response_loss: no samples");
  real total = 0;
  size_t count = 0;
  std::vector<int> targets;
  std::vector<uint8_t> mask;
  for (const auto& s : samples) {
    shifted_targets(s, targets, mask);
    const size_t masked = masked_count(mask);
    if (masked == 0) continue;
    Tensor logits = model_forward(params, s.tokens, s.layout, {});
    const Tensor loss = cross_entropy_mle(logits, targets, mask, nullptr);
    total += loss.item() * real(masked);
    count += masked;
  }
  ensure(count > 0, "mean_response_loss: no response positions");
  return total / real(count);
}

CurriculumResult run_curriculum(const TrainConfig& config,
                                const std::vector<std::vector<EncodedSample>>& stage_data,
                                ModelParams& params, TrainLog& log, const TrainerState* resume,
                                const std::string& checkpoint_dir) {
  config.validate();
  ensure(stage_data.size() == config.stages.size(),
         "run_curriculum: stage data does not match configured stages");
  for (size_t s = 0; s < stage_data.size(); ++s) {
    ensure(!stage_data[s].empty(),
           "run_curriculum: stage '" + config.stages[s].name + "' has an empty dataset");
  }

  if (config.freeze_embeddings) {
    params.tok_embed.set_requires_grad(false);
    params.pos_embed.set_requires_grad(false);
  }

  TrainerState state;
  state.data_seed = config.seed;
  if (resume) {
    state = *resume;
    // a checkpoint written at a stage boundary resumes into the next stage
    while (state.stage_index < config.stages.size() &&
           state.step_in_stage >= config.stages[state.stage_index].steps) {
      state.stage_index += 1;
      state.step_in_stage = 0;
      if (!config.carry_optimizer_state) state.adam = AdamState{};
    }
  }

  CurriculumResult result;
  real last_loss = 0;
  for (size_t stage = state.stage_index; stage < config.stages.size(); ++stage) {
    const StageConfig& sc = config.stages[stage];
    const auto& data = stage_data[stage];
    size_t start_step = 0;
    if (resume && stage == state.stage_index && state.step_in_stage > 0) {
      start_step = state.step_in_stage;
    } else if (stage != state.stage_index || !resume) {
      if (!config.carry_optimizer_state) state.adam = AdamState{};
    }
    if (start_step == 0) log.stage_start(sc.name);

    real stage_loss_sum = 0;
    for (size_t step = start_step; step < sc.steps; ++step) {
      const auto idx =
          batch_indices(state.data_seed, stage, data.size(), config.batch_size, step);
      std::vector<EncodedSample> batch;
      batch.reserve(idx.size());
      for (size_t i : idx) batch.push_back(data[i]);
      try {
        last_loss = train_step(batch, params, state.adam, config);
      } catch (const Error& e) {
        fail("stage '" + sc.name + "' step " + std::to_string(step + 1) + ": " + e.what());
      }
      stage_loss_sum += last_loss;
      log.step(sc.name, step + 1, last_loss, config.learning_rate);
      state.stage_index = stage;
      state.step_in_stage = step + 1;
    }
    if (sc.steps > start_step) {
      log.stage_end(sc.name, stage_loss_sum / real(sc.steps - start_step));
    }
    if (!checkpoint_dir.empty()) {
      std::filesystem::create_directories(checkpoint_dir);
      const std::string path = checkpoint_dir + "/" + sc.name + ".ckpt.json";
      save_checkpoint(path, params, &state);
    }
  }
  result.final_loss = last_loss;
  result.state = state;
  return result;
}

}  // namespace swie
