#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "swie/common.hpp"

namespace swie {

// Whitespace word vocabulary with a fixed reserved block. Serialized as one
// token per line; line number = id - reserved_count.
class Vocab {
 public:
  static constexpr int pad_id = 0;
  static constexpr int bos_id = 1;
  static constexpr int eos_id = 2;
  static constexpr int unk_id = 3;
  static constexpr int reserved_count = 4;

  Vocab() = default;

  // collects unique whitespace tokens from all texts, sorted lexicographically
  static Vocab build(const std::vector<std::string>& texts);
  static Vocab load(const std::string& path);
  void save(const std::string& path) const;

  int id(const std::string& token) const;  // unk_id on miss
  const std::string& token(int id) const;
  bool contains(const std::string& token) const;
  size_t size() const { return tokens_.size() + reserved_count; }

 private:
  std::vector<std::string> tokens_;          // non-reserved, index = id - reserved
  std::map<std::string, int> index_;
};

std::vector<int> tokenize(const std::string& text, const Vocab& vocab);
// joins tokens with single spaces; reserved ids are skipped when
// skip_reserved is set
std::string detokenize(std::span<const int> ids, const Vocab& vocab,
                       bool skip_reserved = true);

}  // namespace swie
