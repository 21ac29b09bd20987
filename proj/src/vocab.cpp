#include "swie/vocab.hpp"

#include <algorithm>
#include <set>

namespace swie {

static const std::string kReservedNames[Vocab::reserved_count] = {"<pad>", "<bos>", "<eos>",
                                                                  "<unk>"};

Vocab Vocab::build(const std::vector<std::string>& texts) {
  std::set<std::string> uniq;
  for (const auto& t : texts) {
    for (auto& w : split_whitespace(t)) uniq.insert(w);
  }
  Vocab v;
  v.tokens_.assign(uniq.begin(), uniq.end());
  for (size_t i = 0; i < v.tokens_.size(); ++i)
    v.index_[v.tokens_[i]] = static_cast<int>(i) + reserved_count;
  return v;
}

Vocab Vocab::load(const std::string& path) {
  Vocab v;
  v.tokens_ = read_lines(path);
  while (!v.tokens_.empty() && v.tokens_.back().empty()) v.tokens_.pop_back();
  for (size_t i = 0; i < v.tokens_.size(); ++i) {
    ensure(!v.tokens_[i].empty(), "Vocab::load: empty token at line " + std::to_string(i + 1));
    auto [it, inserted] = v.index_.emplace(v.tokens_[i], static_cast<int>(i) + reserved_count);
    ensure(inserted, "Vocab::load: duplicate token at line " + std::to_string(i + 1));
  }
  return v;
}

void Vocab::save(const std::string& path) const { write_lines(path, tokens_); }

int Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? unk_id : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id >= 0 && id < reserved_count) return kReservedNames[id];
  const size_t idx = static_cast<size_t>(id) - reserved_count;
  ensure(id >= reserved_count && idx < tokens_.size(),
         "Vocab::token: id out of range: " + std::to_string(id));
  return tokens_[idx];
}

bool Vocab::contains(const std::string& token) const { return index_.count(token) != 0; }

std::vector<int> tokenize(const std::string& text, const Vocab& vocab) {
  std::vector<int> out;
  for (auto& w : split_whitespace(text)) out.push_back(vocab.id(w));
  return out;
}

std::string detokenize(std::span<const int> ids, const Vocab& vocab, bool skip_reserved) {
  std::vector<std::string> words;
  for (int id : ids) {
    if (skip_reserved && id < Vocab::reserved_count) continue;
    words.push_back(vocab.token(id));
  }
  return join(words, " ");
}

}  // namespace swie
