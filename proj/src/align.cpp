#include "swie/align.hpp"

#include <algorithm>
#include <cmath>

namespace swie {

static std::vector<std::string> fold_tokens(const std::string& text, bool lower) {
  auto toks = split_whitespace(text);
  if (lower) {
    for (auto& t : toks) t = lowercase(t);
  }
  return toks;
}

int TranslationTable::src_id(const std::string& w) const {
  auto it = src_index_.find(w);
  return it == src_index_.end() ? -1 : it->second;
}

int TranslationTable::tgt_id(const std::string& w) const {
  auto it = tgt_index_.find(w);
  return it == tgt_index_.end() ? -1 : it->second;
}

TranslationTable TranslationTable::train_ibm1(const std::vector<ParallelPair>& corpus,
                                              int iterations, bool lowercase_input) {
  ensure(!corpus.empty(), "train_ibm1: empty corpus");
  ensure(iterations >= 1, "train_ibm1: iterations must be >= 1");

  TranslationTable table;
  table.lowercase_ = lowercase_input;

  // tokenize once; build sorted vocabularies (id 0 on the source side is the
  // virtual empty word present in every sentence)
  std::vector<std::vector<int>> src_sents, tgt_sents;
  {
    std::set<std::string> src_set, tgt_set;
    std::vector<std::vector<std::string>> src_raw, tgt_raw;
    for (const auto& p : corpus) {
      src_raw.push_back(fold_tokens(p.source, lowercase_input));
      tgt_raw.push_back(fold_tokens(p.target, lowercase_input));
      ensure(!src_raw.back().empty(), "train_ibm1: empty source sentence");
      ensure(!tgt_raw.back().empty(), "train_ibm1: empty target sentence");
      for (auto& w : src_raw.back()) src_set.insert(w);
      for (auto& w : tgt_raw.back()) tgt_set.insert(w);
    }
    table.src_words_.push_back("<null>");
    table.src_words_.insert(table.src_words_.end(), src_set.begin(), src_set.end());
    table.tgt_words_.assign(tgt_set.begin(), tgt_set.end());
    for (size_t i = 0; i < table.src_words_.size(); ++i)
      table.src_index_[table.src_words_[i]] = static_cast<int>(i);
    for (size_t i = 0; i < table.tgt_words_.size(); ++i)
      table.tgt_index_[table.tgt_words_[i]] = static_cast<int>(i);
    for (size_t s = 0; s < corpus.size(); ++s) {
      std::vector<int> ss{null_word_id};
      for (auto& w : src_raw[s]) ss.push_back(table.src_index_.at(w));
      src_sents.push_back(std::move(ss));
      std::vector<int> ts;
      for (auto& w : tgt_raw[s]) ts.push_back(table.tgt_index_.at(w));
      tgt_sents.push_back(std::move(ts));
    }
  }

  // uniform initialization over co-occurring pairs
  table.rows_.assign(table.src_words_.size(), {});
  for (size_t s = 0; s < src_sents.size(); ++s) {
    for (int e : src_sents[s])
      for (int f : tgt_sents[s]) table.rows_[static_cast<size_t>(e)][f] = real(1);
  }
  for (auto& row : table.rows_) {
    const real u = real(1) / real(row.size());
    for (auto& [f, p] : row) p = u;
  }

  auto log_likelihood = [&]() {
    real ll = 0;
    for (size_t s = 0; s < src_sents.size(); ++s) {
      const auto& es = src_sents[s];
      for (int f : tgt_sents[s]) {
        real sum = 0;
        for (int e : es) {
          const auto& row = table.rows_[static_cast<size_t>(e)];
          auto it = row.find(f);
          if (it != row.end()) sum += it->second;
        }
        ll += std::log(sum / real(es.size()));
      }
    }
    return ll;
  };

  for (int iter = 0; iter < iterations; ++iter) {
    table.log_likelihood_.push_back(log_likelihood());
    std::vector<std::map<int, real>> counts(table.src_words_.size());
    for (size_t s = 0; s < src_sents.size(); ++s) {
      const auto& es = src_sents[s];
      for (int f : tgt_sents[s]) {
        real denom = 0;
        for (int e : es) denom += table.rows_[static_cast<size_t>(e)].at(f);
        for (int e : es) {
          counts[static_cast<size_t>(e)][f] += table.rows_[static_cast<size_t>(e)].at(f) / denom;
        }
      }
    }
    for (size_t e = 0; e < counts.size(); ++e) {
      real total = 0;
      for (const auto& [f, c] : counts[e]) total += c;
      if (total <= 0) continue;
      for (auto& [f, c] : counts[e]) c /= total;
      table.rows_[e] = std::move(counts[e]);
    }
  }
  table.log_likelihood_.push_back(log_likelihood());
  return table;
}

real TranslationTable::prob(const std::string& source_word, const std::string& target_word) const {
  const std::string sw = lowercase_ ? lowercase(source_word) : source_word;
  const std::string tw = lowercase_ ? lowercase(target_word) : target_word;
  const int e = src_id(sw), f = tgt_id(tw);
  if (e < 0 || f < 0) return 0;
  const auto& row = rows_[static_cast<size_t>(e)];
  auto it = row.find(f);
  return it == row.end() ? real(0) : it->second;
}

std::pair<std::string, real> TranslationTable::argmax_target(const std::string& source_word) const {
  const std::string sw = lowercase_ ? lowercase(source_word) : source_word;
  const int e = src_id(sw);
  ensure(e >= 0, "argmax_target: unknown source word '" + source_word + "'");
  const auto& row = rows_[static_cast<size_t>(e)];
  ensure(!row.empty(), "argmax_target: empty row for '" + source_word + "'");
  int best = row.begin()->first;
  real bp = row.begin()->second;
  for (const auto& [f, p] : row) {
    if (p > bp) {
      bp = p;
      best = f;
    }
  }
  return {tgt_words_[static_cast<size_t>(best)], bp};
}

real TranslationTable::max_row_sum_error() const {
  real worst = 0;
  for (const auto& row : rows_) {
    if (row.empty()) continue;
    real sum = 0;
    for (const auto& [f, p] : row) sum += p;
    worst = std::max(worst, std::abs(sum - real(1)));
  }
  return worst;
}

void TranslationTable::save(const std::string& path) const {
  std::string out;
  for (size_t e = 0; e < rows_.size(); ++e) {
    for (const auto& [f, p] : rows_[e]) {
      out += src_words_[e];
      out += '\t';
      out += tgt_words_[static_cast<size_t>(f)];
      out += '\t';
      out += format_real(p);
      out += '\n';
    }
  }
  write_text_file(path, out);
}

TranslationTable TranslationTable::load(const std::string& path) {
  TranslationTable table;
  std::map<std::string, std::map<std::string, real>> entries;
  const auto lines = read_lines(path);
  for (size_t ln = 0; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    const size_t t1 = lines[ln].find('\t');
    const size_t t2 = t1 == std::string::npos ? std::string::npos : lines[ln].find('\t', t1 + 1);
    ensure(t2 != std::string::npos,
           path + ":" + std::to_string(ln + 1) + ": expected 'source\\ttarget\\tprob'");
    const std::string sw = lines[ln].substr(0, t1);
    const std::string tw = lines[ln].substr(t1 + 1, t2 - t1 - 1);
    const real p = static_cast<real>(std::stod(lines[ln].substr(t2 + 1)));
    entries[sw][tw] = p;
  }
  ensure(!entries.empty(), path + ": empty table");
  std::set<std::string> tgt_set;
  for (const auto& [sw, row] : entries)
    for (const auto& [tw, p] : row) tgt_set.insert(tw);
  for (const auto& [sw, row] : entries) table.src_words_.push_back(sw);
  // keep <null> at id 0 if present
  auto null_it = std::find(table.src_words_.begin(), table.src_words_.end(), "<null>");
  if (null_it != table.src_words_.end()) {
    std::iter_swap(table.src_words_.begin(), null_it);
    std::sort(table.src_words_.begin() + 1, table.src_words_.end());
  }
  table.tgt_words_.assign(tgt_set.begin(), tgt_set.end());
  for (size_t i = 0; i < table.src_words_.size(); ++i)
    table.src_index_[table.src_words_[i]] = static_cast<int>(i);
  for (size_t i = 0; i < table.tgt_words_.size(); ++i)
    table.tgt_index_[table.tgt_words_[i]] = static_cast<int>(i);
  table.rows_.assign(table.src_words_.size(), {});
  for (const auto& [sw, row] : entries) {
    auto& r = table.rows_[static_cast<size_t>(table.src_index_.at(sw))];
    for (const auto& [tw, p] : row) r[table.tgt_index_.at(tw)] = p;
  }
  return table;
}

bool AlignmentLinks::source_linked(size_t i) const {
  for (const auto& [s, t] : links)
    if (s == i) return true;
  return false;
}

bool AlignmentLinks::target_linked(size_t j) const {
  for (const auto& [s, t] : links)
    if (t == j) return true;
  return false;
}

AlignmentLinks align_pair(const std::vector<std::string>& source_tokens,
                          const std::vector<std::string>& target_tokens,
                          const TranslationTable& table, real threshold) {
  AlignmentLinks out;
  // source -> best target
  for (size_t i = 0; i < source_tokens.size(); ++i) {
    real best = 0;
    size_t best_j = 0;
    bool found = false;
    for (size_t j = 0; j < target_tokens.size(); ++j) {
      const real p = table.prob(source_tokens[i], target_tokens[j]);
      if (p > best) {
        best = p;
        best_j = j;
        found = true;
      }
    }
    if (found && best >= threshold) out.links.insert({i, best_j});
  }
  // target -> best source
  for (size_t j = 0; j < target_tokens.size(); ++j) {
    real best = 0;
    size_t best_i = 0;
    bool found = false;
    for (size_t i = 0; i < source_tokens.size(); ++i) {
      const real p = table.prob(source_tokens[i], target_tokens[j]);
      if (p > best) {
        best = p;
        best_i = i;
        found = true;
      }
    }
    if (found && best >= threshold) out.links.insert({best_i, j});
  }
  return out;
}

CoverageScore coverage(const std::vector<std::string>& source_tokens,
                       const std::vector<std::string>& target_tokens,
                       const AlignmentLinks& links) {
  ensure(!source_tokens.empty(), "coverage: empty source");
  std::vector<uint8_t> src_hit(source_tokens.size(), 0), tgt_hit(target_tokens.size(), 0);
  for (const auto& [i, j] : links.links) {
    ensure(i < source_tokens.size() && j < target_tokens.size(), "coverage: link out of range");
    src_hit[i] = 1;
    tgt_hit[j] = 1;
  }
  CoverageScore score;
  size_t s = 0;
  for (uint8_t h : src_hit) s += h;
  score.source_coverage = real(s) / real(source_tokens.size());
  if (target_tokens.empty()) {
    score.target_coverage = 0;  // degenerate empty hypothesis
  } else {
    size_t t = 0;
    for (uint8_t h : tgt_hit) t += h;
    score.target_coverage = real(t) / real(target_tokens.size());
  }
  return score;
}

CoverageScore pair_coverage(const std::string& source, const std::string& target,
                            const TranslationTable& table, real threshold) {
  const auto src = fold_tokens(source, table.lowercased());
  const auto tgt = fold_tokens(target, table.lowercased());
  ensure(!src.empty(), "pair_coverage: empty source");
  if (tgt.empty()) {
    CoverageScore s;
    s.source_coverage = 0;
    s.target_coverage = 0;
    return s;
  }
  return coverage(src, tgt, align_pair(src, tgt, table, threshold));
}

real faithfulness_score(const std::vector<std::pair<std::string, std::string>>& source_and_hyp,
                        const TranslationTable& table, real threshold) {
  ensure(!source_and_hyp.empty(), "faithfulness_score: empty test set");
  real total = 0;
  for (const auto& [src, hyp] : source_and_hyp) {
    const CoverageScore c = pair_coverage(src, hyp, table, threshold);
    total += (c.source_coverage + c.target_coverage) / real(2);
  }
  return real(100) * total / real(source_and_hyp.size());
}

}  // namespace swie
