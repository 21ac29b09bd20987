#include "swie/config.hpp"

#include <initializer_list>

#include <json.hpp>

namespace swie {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail("config: " + where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) fail("config: unknown key '" + where + "/" + it.key() + "'");
  }
}

template <typename T>
T fetch(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    fail("config: bad value at '" + where + "/" + key + "': " + e.what());
  }
}

std::map<std::string, std::string> fetch_string_map(const json& obj, const char* key,
                                                    std::map<std::string, std::string> fallback,
                                                    const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& m = obj.at(key);
  if (!m.is_object()) fail("config: '" + where + "/" + key + "' must be an object");
  std::map<std::string, std::string> out;
  for (auto it = m.begin(); it != m.end(); ++it) {
    if (!it.value().is_string())
      fail("config: '" + where + "/" + key + "/" + it.key() + "' must be a string");
    out[it.key()] = it.value().get<std::string>();
  }
  return out;
}

ModelConfig parse_model(const json& j) {
  check_keys(j, "model",
             {"n_layers", "n_heads", "model_dim", "ffn_dim", "max_seq_len", "adapter_dim",
              "swie_enabled", "swie_layers", "layer_norm_eps"});
  ModelConfig m;
  m.n_layers = fetch<size_t>(j, "n_layers", m.n_layers, "model");
  m.n_heads = fetch<size_t>(j, "n_heads", m.n_heads, "model");
  m.model_dim = fetch<size_t>(j, "model_dim", m.model_dim, "model");
  m.ffn_dim = fetch<size_t>(j, "ffn_dim", m.ffn_dim, "model");
  m.max_seq_len = fetch<size_t>(j, "max_seq_len", m.max_seq_len, "model");
  m.adapter_dim = fetch<size_t>(j, "adapter_dim", m.adapter_dim, "model");
  m.swie_enabled = fetch<bool>(j, "swie_enabled", m.swie_enabled, "model");
  m.swie_layers = fetch<std::vector<size_t>>(j, "swie_layers", m.swie_layers, "model");
  m.layer_norm_eps = fetch<real>(j, "layer_norm_eps", m.layer_norm_eps, "model");
  return m;
}

TrainerSettings parse_trainer(const json& j, uint64_t seed) {
  check_keys(j, "trainer",
             {"learning_rate", "batch_size", "freeze_embeddings", "grad_clip_norm",
              "carry_optimizer_state", "adam_beta1", "adam_beta2", "adam_eps", "stages",
              "out_dir"});
  TrainerSettings t;
  t.train.seed = seed;
  t.train.learning_rate = fetch<real>(j, "learning_rate", t.train.learning_rate, "trainer");
  t.train.batch_size = fetch<size_t>(j, "batch_size", t.train.batch_size, "trainer");
  t.train.freeze_embeddings =
      fetch<bool>(j, "freeze_embeddings", t.train.freeze_embeddings, "trainer");
  t.train.grad_clip_norm = fetch<real>(j, "grad_clip_norm", t.train.grad_clip_norm, "trainer");
  t.train.carry_optimizer_state =
      fetch<bool>(j, "carry_optimizer_state", t.train.carry_optimizer_state, "trainer");
  t.train.adam_beta1 = fetch<real>(j, "adam_beta1", t.train.adam_beta1, "trainer");
  t.train.adam_beta2 = fetch<real>(j, "adam_beta2", t.train.adam_beta2, "trainer");
  t.train.adam_eps = fetch<real>(j, "adam_eps", t.train.adam_eps, "trainer");
  t.out_dir = fetch<std::string>(j, "out_dir", t.out_dir, "trainer");
  if (j.contains("stages")) {
    const json& stages = j.at("stages");
    if (!stages.is_array()) fail("config: 'trainer/stages' must be an array");
    t.train.stages.clear();
    for (size_t i = 0; i < stages.size(); ++i) {
      const std::string where = "trainer/stages[" + std::to_string(i) + "]";
      check_keys(stages[i], where, {"name", "datasets", "steps"});
      StageConfig sc;
      sc.name = fetch<std::string>(stages[i], "name", "", where);
      ensure(!sc.name.empty(), "config: '" + where + "' needs a name");
      sc.dataset_paths =
          fetch<std::vector<std::string>>(stages[i], "datasets", {}, where);
      sc.steps = fetch<size_t>(stages[i], "steps", 100, where);
      t.train.stages.push_back(std::move(sc));
    }
  }
  return t;
}

std::vector<RecordKind> parse_modes(const json& arr, const std::string& where) {
  if (!arr.is_array()) fail("config: '" + where + "' must be an array");
  std::vector<RecordKind> out;
  for (const auto& v : arr) {
    if (!v.is_string()) fail("config: '" + where + "' entries must be strings");
    out.push_back(record_kind_from_string(v.get<std::string>()));
  }
  return out;
}

CorpusSettings parse_corpus(const json& j, uint64_t seed) {
  check_keys(j, "corpus", {"parallel_path", "out_dir", "synthesis", "client", "templates"});
  CorpusSettings c;
  c.synthesis.seed = seed;
  c.parallel_path = fetch<std::string>(j, "parallel_path", c.parallel_path, "corpus");
  c.out_dir = fetch<std::string>(j, "out_dir", c.out_dir, "corpus");
  if (j.contains("synthesis")) {
    const json& s = j.at("synthesis");
    check_keys(s, "corpus/synthesis",
               {"em_iterations", "link_threshold", "delta", "rho", "modes", "offline",
                "fallback_to_offline", "miss_span_cov_lo", "miss_span_cov_hi",
                "over_insert_min", "over_insert_max", "min_target_tokens"});
    auto& sc = c.synthesis;
    sc.em_iterations = fetch<int>(s, "em_iterations", sc.em_iterations, "corpus/synthesis");
    sc.link_threshold = fetch<real>(s, "link_threshold", sc.link_threshold, "corpus/synthesis");
    sc.filter.delta = fetch<real>(s, "delta", sc.filter.delta, "corpus/synthesis");
    sc.filter.rho = fetch<real>(s, "rho", sc.filter.rho, "corpus/synthesis");
    sc.offline = fetch<bool>(s, "offline", sc.offline, "corpus/synthesis");
    sc.fallback_to_offline =
        fetch<bool>(s, "fallback_to_offline", sc.fallback_to_offline, "corpus/synthesis");
    sc.corrupt.miss_span_cov_lo =
        fetch<real>(s, "miss_span_cov_lo", sc.corrupt.miss_span_cov_lo, "corpus/synthesis");
    sc.corrupt.miss_span_cov_hi =
        fetch<real>(s, "miss_span_cov_hi", sc.corrupt.miss_span_cov_hi, "corpus/synthesis");
    sc.corrupt.over_insert_min =
        fetch<size_t>(s, "over_insert_min", sc.corrupt.over_insert_min, "corpus/synthesis");
    sc.corrupt.over_insert_max =
        fetch<size_t>(s, "over_insert_max", sc.corrupt.over_insert_max, "corpus/synthesis");
    sc.corrupt.min_target_tokens =
        fetch<size_t>(s, "min_target_tokens", sc.corrupt.min_target_tokens, "corpus/synthesis");
    if (s.contains("modes")) sc.modes = parse_modes(s.at("modes"), "corpus/synthesis/modes");
  }
  if (j.contains("client")) {
    const json& cl = j.at("client");
    check_keys(cl, "corpus/client",
               {"endpoint", "model", "api_path", "timeout_seconds", "max_retries",
                "backoff_seconds", "api_key_env"});
    c.client.base.endpoint =
        fetch<std::string>(cl, "endpoint", c.client.base.endpoint, "corpus/client");
    c.client.base.model = fetch<std::string>(cl, "model", c.client.base.model, "corpus/client");
    c.client.base.api_path =
        fetch<std::string>(cl, "api_path", c.client.base.api_path, "corpus/client");
    c.client.base.timeout_seconds =
        fetch<double>(cl, "timeout_seconds", c.client.base.timeout_seconds, "corpus/client");
    c.client.base.max_retries =
        fetch<int>(cl, "max_retries", c.client.base.max_retries, "corpus/client");
    c.client.base.backoff_seconds =
        fetch<double>(cl, "backoff_seconds", c.client.base.backoff_seconds, "corpus/client");
    c.client.api_key_env =
        fetch<std::string>(cl, "api_key_env", c.client.api_key_env, "corpus/client");
  }
  if (j.contains("templates")) {
    const json& t = j.at("templates");
    check_keys(t, "corpus/templates",
               {"base_instruction", "hints", "contrastive_instruction", "contrastive_input",
                "language_names"});
    auto& tp = c.templates;
    tp.base_instruction =
        fetch<std::string>(t, "base_instruction", tp.base_instruction, "corpus/templates");
    tp.hints = fetch_string_map(t, "hints", tp.hints, "corpus/templates");
    tp.contrastive_instruction = fetch<std::string>(
        t, "contrastive_instruction", tp.contrastive_instruction, "corpus/templates");
    tp.contrastive_input =
        fetch<std::string>(t, "contrastive_input", tp.contrastive_input, "corpus/templates");
    tp.language_names =
        fetch_string_map(t, "language_names", tp.language_names, "corpus/templates");
  }
  return c;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const std::string& origin) {
  json j;
  try {
    j = json::parse(json_text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    fail(origin + ": malformed JSON: " + e.what());
  }
  check_keys(j, "(root)", {"seed", "model", "trainer", "corpus", "align", "probe", "translate"});
  RunConfig cfg;
  cfg.seed = fetch<uint64_t>(j, "seed", cfg.seed, "(root)");
  if (j.contains("model")) cfg.model = parse_model(j.at("model"));
  if (j.contains("trainer")) cfg.trainer = parse_trainer(j.at("trainer"), cfg.seed);
  cfg.trainer.train.seed = cfg.seed;
  if (j.contains("corpus")) cfg.corpus = parse_corpus(j.at("corpus"), cfg.seed);
  cfg.corpus.synthesis.seed = cfg.seed;
  if (j.contains("align")) {
    const json& a = j.at("align");
    check_keys(a, "align", {"em_iterations", "link_threshold", "table_path"});
    cfg.align.em_iterations = fetch<int>(a, "em_iterations", cfg.align.em_iterations, "align");
    cfg.align.link_threshold =
        fetch<real>(a, "link_threshold", cfg.align.link_threshold, "align");
    cfg.align.table_path = fetch<std::string>(a, "table_path", cfg.align.table_path, "align");
  }
  if (j.contains("probe")) {
    const json& p = j.at("probe");
    check_keys(p, "probe", {"sample_records", "invert_ratio"});
    cfg.probe.sample_records =
        fetch<std::string>(p, "sample_records", cfg.probe.sample_records, "probe");
    cfg.probe.invert_ratio = fetch<bool>(p, "invert_ratio", cfg.probe.invert_ratio, "probe");
  }
  if (j.contains("translate")) {
    const json& t = j.at("translate");
    check_keys(t, "translate", {"max_new_tokens"});
    cfg.translate.max_new_tokens =
        fetch<size_t>(t, "max_new_tokens", cfg.translate.max_new_tokens, "translate");
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_text_file(path), path);
}

std::string default_run_config_json() {
  const RunConfig d;
  json j;
  j["seed"] = d.seed;
  j["model"] = {{"n_layers", d.model.n_layers},
                {"n_heads", d.model.n_heads},
                {"model_dim", d.model.model_dim},
                {"ffn_dim", d.model.ffn_dim},
                {"max_seq_len", d.model.max_seq_len},
                {"adapter_dim", d.model.adapter_dim},
                {"swie_enabled", d.model.swie_enabled},
                {"swie_layers", d.model.swie_layers},
                {"layer_norm_eps", d.model.layer_norm_eps}};
  j["trainer"] = {{"learning_rate", d.trainer.train.learning_rate},
                  {"batch_size", d.trainer.train.batch_size},
                  {"freeze_embeddings", d.trainer.train.freeze_embeddings},
                  {"grad_clip_norm", d.trainer.train.grad_clip_norm},
                  {"carry_optimizer_state", d.trainer.train.carry_optimizer_state},
                  {"stages", json::array()},
                  {"out_dir", d.trainer.out_dir}};
  j["corpus"] = {{"parallel_path", ""},
                 {"out_dir", d.corpus.out_dir},
                 {"synthesis",
                  {{"em_iterations", d.corpus.synthesis.em_iterations},
                   {"link_threshold", d.corpus.synthesis.link_threshold},
                   {"delta", d.corpus.synthesis.filter.delta},
                   {"rho", d.corpus.synthesis.filter.rho},
                   {"modes", {"plain", "contrastive", "hinted"}},
                   {"offline", true},
                   {"fallback_to_offline", true}}},
                 {"client",
                  {{"endpoint", ""},
                   {"model", ""},
                   {"api_path", d.corpus.client.base.api_path},
                   {"timeout_seconds", d.corpus.client.base.timeout_seconds},
                   {"max_retries", d.corpus.client.base.max_retries},
                   {"backoff_seconds", d.corpus.client.base.backoff_seconds},
                   {"api_key_env", d.corpus.client.api_key_env}}},
                 {"templates",
                  {{"base_instruction", d.corpus.templates.base_instruction},
                   {"hints", d.corpus.templates.hints},
                   {"contrastive_instruction", d.corpus.templates.contrastive_instruction},
                   {"contrastive_input", d.corpus.templates.contrastive_input},
                   {"language_names", d.corpus.templates.language_names}}}};
  j["align"] = {{"em_iterations", d.align.em_iterations},
                {"link_threshold", d.align.link_threshold},
                {"table_path", ""}};
  j["probe"] = {{"sample_records", ""}, {"invert_ratio", d.probe.invert_ratio}};
  j["translate"] = {{"max_new_tokens", d.translate.max_new_tokens}};
  return j.dump(2);
}

}  // namespace swie
