#include "swie/records.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace swie {

using nlohmann::json;

std::string to_string(HintType h) {
  switch (h) {
    case HintType::none: return "none";
    case HintType::no_error: return "no-error";
    case HintType::no_over: return "no-over";
    case HintType::no_miss: return "no-miss";
    case HintType::no_over_miss: return "no-over/miss";
  }
  fail("to_string: bad HintType");
}

std::string to_string(RecordKind k) {
  switch (k) {
    case RecordKind::plain: return "plain";
    case RecordKind::contrastive: return "contrastive";
    case RecordKind::hinted: return "hinted";
  }
  fail("to_string: bad RecordKind");
}

const std::vector<std::string>& hint_type_names() {
  static const std::vector<std::string> names = {"none", "no-error", "no-over", "no-miss",
                                                 "no-over/miss"};
  return names;
}

HintType hint_type_from_string(const std::string& s) {
  if (s == "none") return HintType::none;
  if (s == "no-error") return HintType::no_error;
  if (s == "no-over") return HintType::no_over;
  if (s == "no-miss") return HintType::no_miss;
  if (s == "no-over/miss") return HintType::no_over_miss;
  fail("unknown hint type '" + s + "' (valid: " + join(hint_type_names(), ", ") + ")");
}

RecordKind record_kind_from_string(const std::string& s) {
  if (s == "plain") return RecordKind::plain;
  if (s == "contrastive") return RecordKind::contrastive;
  if (s == "hinted") return RecordKind::hinted;
  fail("unknown record kind '" + s + "'");
}

std::vector<InstructionRecord> load_records(const std::string& path) {
  const auto lines = read_lines(path);
  std::vector<InstructionRecord> out;
  static const std::vector<std::string> required = {"instruction", "input", "response"};
  static const std::vector<std::string> allowed = {"instruction", "input", "response",
                                                   "hint_type", "record_kind"};
  for (size_t ln = 0; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    json j;
    try {
      j = json::parse(lines[ln]);
    } catch (const json::exception& e) {
      fail(path + ":" + std::to_string(ln + 1) + ": malformed JSON: " + e.what());
    }
    if (!j.is_object()) fail(path + ":" + std::to_string(ln + 1) + ": record is not an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
        fail(path + ":" + std::to_string(ln + 1) + ": unknown field '" + it.key() + "'");
      }
    }
    for (const auto& k : required) {
      if (!j.contains(k)) {
        fail(path + ":" + std::to_string(ln + 1) + ": missing required field '" + k + "'");
      }
      if (!j[k].is_string()) {
        fail(path + ":" + std::to_string(ln + 1) + ": field '" + k + "' must be a string");
      }
    }
    InstructionRecord rec;
    rec.instruction = j["instruction"].get<std::string>();
    rec.input = j["input"].get<std::string>();
    rec.response = j["response"].get<std::string>();
    try {
      rec.hint_type = hint_type_from_string(j.value("hint_type", "none"));
      rec.kind = record_kind_from_string(j.value("record_kind", "plain"));
    } catch (const Error& e) {
      fail(path + ":" + std::to_string(ln + 1) + ": " + e.what());
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void save_records(const std::string& path, const std::vector<InstructionRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    json j;
    j["instruction"] = r.instruction;
    j["input"] = r.input;
    j["response"] = r.response;
    j["hint_type"] = to_string(r.hint_type);
    j["record_kind"] = to_string(r.kind);
    out += j.dump();
    out += '\n';
  }
  write_text_file(path, out);
}

ParallelCorpus load_parallel_tsv(const std::string& path) {
  const auto lines = read_lines(path);
  ensure(!lines.empty() && !lines[0].empty() && lines[0][0] == '#',
         path + ": missing '#src\\ttgt' language header line");
  ParallelCorpus corpus;
  {
    const std::string header = lines[0].substr(1);
    const size_t tab = header.find('\t');
    ensure(tab != std::string::npos, path + ": header must be '#<src_lang>\\t<tgt_lang>'");
    corpus.src_lang = header.substr(0, tab);
    corpus.tgt_lang = header.substr(tab + 1);
    ensure(!corpus.src_lang.empty() && !corpus.tgt_lang.empty(),
           path + ": empty language tag in header");
  }
  for (size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    const size_t tab = lines[ln].find('\t');
    ensure(tab != std::string::npos,
           path + ":" + std::to_string(ln + 1) + ": expected '<source>\\t<target>'");
    ParallelPair p;
    p.source = lines[ln].substr(0, tab);
    p.target = lines[ln].substr(tab + 1);
    ensure(!p.source.empty() && !p.target.empty(),
           path + ":" + std::to_string(ln + 1) + ": empty side in pair");
    p.src_lang = corpus.src_lang;
    p.tgt_lang = corpus.tgt_lang;
    corpus.pairs.push_back(std::move(p));
  }
  return corpus;
}

void save_parallel_tsv(const std::string& path, const ParallelCorpus& corpus) {
  std::string out = "#" + corpus.src_lang + "\t" + corpus.tgt_lang + "\n";
  for (const auto& p : corpus.pairs) out += p.source + "\t" + p.target + "\n";
  write_text_file(path, out);
}

std::vector<ParallelPair> concat_adjacent(const std::vector<ParallelPair>& pairs, size_t k_min,
                                          size_t k_max, uint64_t seed) {
  ensure(k_min >= 1 && k_min <= k_max, "concat_adjacent: bad k range");
  Rng rng(mix_seed(seed, 0x636f6e636174ULL));
  std::vector<ParallelPair> out;
  size_t i = 0;
  while (i < pairs.size()) {
    size_t k = static_cast<size_t>(rng.range(static_cast<int64_t>(k_min),
                                             static_cast<int64_t>(k_max)));
    k = std::min(k, pairs.size() - i);
    ParallelPair merged = pairs[i];
    std::vector<std::string> src{pairs[i].source}, tgt{pairs[i].target};
    for (size_t j = 1; j < k; ++j) {
      src.push_back(pairs[i + j].source);
      tgt.push_back(pairs[i + j].target);
    }
    merged.source = join(src, " ");
    merged.target = join(tgt, " ");
    out.push_back(std::move(merged));
    i += k;
  }
  return out;
}

}  // namespace swie
