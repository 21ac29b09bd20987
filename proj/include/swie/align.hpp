#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "swie/records.hpp"

namespace swie {

// Lexical translation table t(target | source) trained by expectation
// maximization. A virtual empty source word (id 0) absorbs unalignable
// target words. Rows are probability distributions; the table is immutable
// after training and safe to share across threads.
class TranslationTable {
 public:
  static constexpr int null_word_id = 0;

  // EM with uniform initialization over co-occurring words. The corpus
  // log-likelihood is recorded before each update and once after the last;
  // the sequence is nondecreasing.
  static TranslationTable train_ibm1(const std::vector<ParallelPair>& corpus, int iterations,
                                     bool lowercase_input = true);

  real prob(const std::string& source_word, const std::string& target_word) const;
  // most probable target word for a source word, with its probability
  std::pair<std::string, real> argmax_target(const std::string& source_word) const;
  const std::vector<real>& log_likelihoods() const { return log_likelihood_; }
  bool lowercased() const { return lowercase_; }
  size_t source_vocab_size() const { return src_words_.size(); }

  // sorted "source<TAB>target<TAB>prob" lines
  void save(const std::string& path) const;
  static TranslationTable load(const std::string& path);

  // per-source rows sum to 1 within tolerance; used by tests
  real max_row_sum_error() const;

 private:
  friend struct TableBuilder;
  bool lowercase_ = true;
  std::vector<std::string> src_words_, tgt_words_;  // id -> word, sorted
  std::map<std::string, int> src_index_, tgt_index_;
  // rows[src_id][tgt_id] = t(tgt | src); ordered maps keep every reduction
  // order deterministic
  std::vector<std::map<int, real>> rows_;
  std::vector<real> log_likelihood_;

  int src_id(const std::string& w) const;
  int tgt_id(const std::string& w) const;
};

// Word-level links for one sentence pair: source index -> target index.
struct AlignmentLinks {
  std::set<std::pair<size_t, size_t>> links;
  bool source_linked(size_t i) const;
  bool target_linked(size_t j) const;
};

struct CoverageScore {
  real source_coverage = 0;  // fraction of source tokens carrying a link
  real target_coverage = 0;  // fraction of target tokens carrying a link
};

// For each source token, link to the argmax target token when its probability
// clears the threshold; symmetrically target -> source; union of both
// directions.
AlignmentLinks align_pair(const std::vector<std::string>& source_tokens,
                          const std::vector<std::string>& target_tokens,
                          const TranslationTable& table, real threshold);

CoverageScore coverage(const std::vector<std::string>& source_tokens,
                       const std::vector<std::string>& target_tokens,
                       const AlignmentLinks& links);

// convenience: tokenize (honoring the table's case folding), align, score
CoverageScore pair_coverage(const std::string& source, const std::string& target,
                            const TranslationTable& table, real threshold);

// 100 x mean over the test set of (source_coverage + target_coverage) / 2
real faithfulness_score(const std::vector<std::pair<std::string, std::string>>& source_and_hyp,
                        const TranslationTable& table, real threshold);

}  // namespace swie
