#pragma once

#include <string>
#include <vector>

#include "swie/config.hpp"

namespace swie {

// Command bodies behind the CLI, callable directly from tests. All return a
// process exit code; they throw swie::Error for config/validation problems
// (the CLI maps that to a nonzero exit with the message on stderr).

// offline dataset synthesis: negatives, stage datasets, coverage report,
// aligner table. --dry-run prints counts and writes nothing.
int cmd_synth(const RunConfig& config, bool dry_run, std::ostream& out);

// two-stage curriculum training; writes per-stage and final checkpoints, the
// vocabulary, and the JSONL training log. only_stage is 1-based (0 = all);
// resume_path continues from a trainer checkpoint.
int cmd_train(const RunConfig& config, int only_stage, const std::string& resume_path,
              std::ostream& out);

// greedy translation of one source file (one sentence per line)
int cmd_translate(const RunConfig& config, const std::string& checkpoint_path,
                  const std::string& input_path, const std::string& hint_name,
                  const std::string& out_path, std::ostream& out);

// BLEU + alignment-coverage faithfulness over line-aligned files
int cmd_eval(const RunConfig& config, const std::string& hyps_path,
             const std::string& refs_path, const std::string& sources_path,
             const std::string& out_json_path, std::ostream& out);

// attention accumulation + post-instruction/post-input ratio per checkpoint;
// nonzero exit when any layer ratio is undefined
int cmd_probe(const RunConfig& config, const std::vector<std::string>& checkpoint_paths,
              const std::string& out_csv_path, std::ostream& out);

// long-text transform: merge adjacent sentence groups on both sides
int cmd_concat(const RunConfig& config, const std::string& in_tsv, const std::string& out_tsv,
               size_t k_min, size_t k_max, const std::string& src_lines_out,
               const std::string& ref_lines_out, std::ostream& out);

}  // namespace swie
