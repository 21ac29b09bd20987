#include "swie/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace swie {

static std::map<std::vector<std::string>, size_t> ngram_counts(
    const std::vector<std::string>& tokens, size_t n) {
  std::map<std::vector<std::string>, size_t> counts;
  if (tokens.size() < n) return counts;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)] += 1;
  }
  return counts;
}

BleuBreakdown bleu_breakdown(const std::vector<std::string>& hypotheses,
                             const std::vector<std::string>& references, int max_n) {
  ensure(!hypotheses.empty(), "bleu: empty hypothesis list");
  ensure(hypotheses.size() == references.size(), "bleu: hypothesis/reference count mismatch");
  ensure(max_n >= 1, "bleu: max_n must be >= 1");

  const size_t order = static_cast<size_t>(max_n);
  std::vector<size_t> matched(order, 0), total(order, 0);
  size_t hyp_len = 0, ref_len = 0;

  for (size_t s = 0; s < hypotheses.size(); ++s) {
    const auto hyp = split_whitespace(hypotheses[s]);
    const auto ref = split_whitespace(references[s]);
    ensure(!ref.empty(), "bleu: empty reference at item " + std::to_string(s + 1));
    hyp_len += hyp.size();
    ref_len += ref.size();
    for (size_t n = 1; n <= order; ++n) {
      const auto hc = ngram_counts(hyp, n);
      const auto rc = ngram_counts(ref, n);
      for (const auto& [gram, count] : hc) {
        total[n - 1] += count;
        auto it = rc.find(gram);
        if (it != rc.end()) matched[n - 1] += std::min(count, it->second);  // clipped
      }
    }
  }

  BleuBreakdown out;
  out.hypothesis_length = hyp_len;
  out.reference_length = ref_len;
  out.precisions.resize(order, 0);
  bool zero = false;
  for (size_t n = 0; n < order; ++n) {
    if (total[n] == 0 || matched[n] == 0) {
      zero = true;
      out.precisions[n] = 0;
    } else {
      out.precisions[n] = real(matched[n]) / real(total[n]);
    }
  }
  out.brevity_penalty =
      (hyp_len == 0) ? real(0)
                     : (hyp_len > ref_len ? real(1)
                                          : std::exp(real(1) - real(ref_len) / real(hyp_len)));
  if (zero || hyp_len == 0) {
    out.score = 0;
    return out;
  }
  real log_sum = 0;
  for (size_t n = 0; n < order; ++n) log_sum += std::log(out.precisions[n]);
  // exact 100.0 when every precision is 1 and the penalty is 1
  if (out.brevity_penalty == real(1) && log_sum == real(0)) {
    out.score = 100;
  } else {
    out.score = real(100) * out.brevity_penalty * std::exp(log_sum / real(order));
  }
  return out;
}

real bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references,
          int max_n) {
  return bleu_breakdown(hypotheses, references, max_n).score;
}

}  // namespace swie
