#pragma once

#include <string>
#include <vector>

#include "swie/llm_client.hpp"
#include "swie/model.hpp"
#include "swie/synthesis.hpp"
#include "swie/trainer.hpp"

namespace swie {

struct ClientSettings {
  ClientConfig base;
  std::string api_key_env = "SWIE_LLM_API_KEY";
};

struct CorpusSettings {
  std::string parallel_path;
  std::string out_dir = "out/synth";
  SynthesisConfig synthesis;
  ClientSettings client;
  RecordTemplates templates;
};

struct TrainerSettings {
  TrainConfig train;
  std::string out_dir = "out/train";
};

struct AlignSettings {
  int em_iterations = 8;
  real link_threshold = real(0.1);
  std::string table_path;  // optional pre-trained table; retrains when empty
};

struct ProbeSettings {
  std::string sample_records;  // JSONL pool the probe sample is drawn from
  bool invert_ratio = false;
};

struct TranslateSettings {
  size_t max_new_tokens = 32;
};

// Unified run configuration. Loaded strictly: unknown keys anywhere are an
// error naming their JSON path. Relative paths are resolved against the
// working directory.
struct RunConfig {
  uint64_t seed = 1;
  ModelConfig model;
  TrainerSettings trainer;
  CorpusSettings corpus;
  AlignSettings align;
  ProbeSettings probe;
  TranslateSettings translate;
};

RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text, const std::string& origin);
// full document with every setting spelled out; used to seed new configs
std::string default_run_config_json();

}  // namespace swie
