#include "swie/checkpoint.hpp"

#include <json.hpp>

namespace swie {

using nlohmann::json;

static constexpr int kCheckpointVersion = 1;

static json config_to_json(const ModelConfig& c) {
  json j;
  j["n_layers"] = c.n_layers;
  j["n_heads"] = c.n_heads;
  j["model_dim"] = c.model_dim;
  j["ffn_dim"] = c.ffn_dim;
  j["vocab_size"] = c.vocab_size;
  j["max_seq_len"] = c.max_seq_len;
  j["adapter_dim"] = c.adapter_dim;
  j["swie_enabled"] = c.swie_enabled;
  j["swie_layers"] = c.swie_layers;
  j["layer_norm_eps"] = c.layer_norm_eps;
  return j;
}

static ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.n_layers = j.at("n_layers").get<size_t>();
  c.n_heads = j.at("n_heads").get<size_t>();
  c.model_dim = j.at("model_dim").get<size_t>();
  c.ffn_dim = j.at("ffn_dim").get<size_t>();
  c.vocab_size = j.at("vocab_size").get<size_t>();
  c.max_seq_len = j.at("max_seq_len").get<size_t>();
  c.adapter_dim = j.at("adapter_dim").get<size_t>();
  c.swie_enabled = j.at("swie_enabled").get<bool>();
  c.swie_layers = j.at("swie_layers").get<std::vector<size_t>>();
  c.layer_norm_eps = j.at("layer_norm_eps").get<real>();
  return c;
}

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const TrainerState* trainer) {
  json j;
  j["version"] = kCheckpointVersion;
  j["config"] = config_to_json(params.config);
  json tensors = json::object();
  params.for_each_param([&tensors](const std::string& name, const Tensor& t) {
    json tj;
    tj["shape"] = t.shape();
    tj["values"] = t.values();
    tensors[name] = std::move(tj);
  });
  j["params"] = std::move(tensors);
  if (trainer) {
    json tr;
    tr["stage_index"] = trainer->stage_index;
    tr["step_in_stage"] = trainer->step_in_stage;
    tr["data_seed"] = trainer->data_seed;
    tr["adam_step"] = trainer->adam.step;
    tr["adam_m"] = trainer->adam.m;
    tr["adam_v"] = trainer->adam.v;
    j["trainer"] = std::move(tr);
  }
  write_text_file(path, j.dump());
}

ModelParams load_checkpoint(const std::string& path, std::optional<TrainerState>* trainer) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    fail(path + ": malformed checkpoint: " + e.what());
  }
  ensure(j.contains("version"), path + ": checkpoint missing version field");
  const int version = j.at("version").get<int>();
  ensure(version == kCheckpointVersion,
         path + ": unsupported checkpoint version " + std::to_string(version));
  ModelConfig cfg = config_from_json(j.at("config"));

  // Rebuild the parameter skeleton, then overwrite every tensor from the file.
  Rng rng(0);
  ModelParams params = ModelParams::init(cfg, rng);
  const json& tensors = j.at("params");
  size_t loaded = 0;
  params.for_each_param([&](const std::string& name, Tensor& t) {
    ensure(tensors.contains(name), path + ": checkpoint missing tensor '" + name + "'");
    const json& tj = tensors.at(name);
    const auto shape = tj.at("shape").get<std::vector<size_t>>();
    ensure(shape == t.shape(), path + ": shape mismatch for tensor '" + name + "'");
    t.values() = tj.at("values").get<std::vector<real>>();
    ensure(t.values().size() == t.size(), path + ": value count mismatch for '" + name + "'");
    ++loaded;
  });
  ensure(loaded == tensors.size(),
         path + ": checkpoint holds " + std::to_string(tensors.size()) +
             " tensors, model expects " + std::to_string(loaded));

  if (trainer) {
    trainer->reset();
    if (j.contains("trainer")) {
      TrainerState ts;
      const json& tr = j.at("trainer");
      ts.stage_index = tr.at("stage_index").get<size_t>();
      ts.step_in_stage = tr.at("step_in_stage").get<size_t>();
      ts.data_seed = tr.at("data_seed").get<uint64_t>();
      ts.adam.step = tr.at("adam_step").get<int64_t>();
      ts.adam.m = tr.at("adam_m").get<std::map<std::string, std::vector<real>>>();
      ts.adam.v = tr.at("adam_v").get<std::map<std::string, std::vector<real>>>();
      *trainer = std::move(ts);
    }
  }
  return params;
}

}  // namespace swie
