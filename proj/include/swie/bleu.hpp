#pragma once

#include <string>
#include <vector>

#include "swie/common.hpp"

namespace swie {

struct BleuBreakdown {
  real score = 0;                     // 0..100
  std::vector<real> precisions;       // modified n-gram precisions, n = 1..max_n
  real brevity_penalty = 1;
  size_t hypothesis_length = 0;
  size_t reference_length = 0;
};

// Corpus-level BLEU: geometric mean of modified n-gram precisions times the
// brevity penalty, one reference per hypothesis, whitespace tokens, no
// smoothing (a zero precision zeroes the score).
BleuBreakdown bleu_breakdown(const std::vector<std::string>& hypotheses,
                             const std::vector<std::string>& references, int max_n = 4);
real bleu(const std::vector<std::string>& hypotheses,
          const std::vector<std::string>& references, int max_n = 4);

}  // namespace swie
