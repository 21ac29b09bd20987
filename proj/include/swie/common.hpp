#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace swie {

#ifdef SWIE_SINGLE_PRECISION
using real = float;
#else
using real = double;
#endif

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline void ensure(bool cond, const std::string& msg) {
  if (!cond) fail(msg);
}

// splitmix64 step; used to derive independent seeds from (seed, salt...) tuples.
uint64_t mix_seed(uint64_t a, uint64_t b);
uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c);

// Deterministic RNG. The std:: distributions are implementation-defined, so
// every draw here is derived from the raw mt19937_64 stream by hand and is
// reproducible across platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }
  // uniform in [0, 1)
  real uniform();
  // uniform integer in [0, n)
  size_t below(size_t n);
  // uniform integer in [lo, hi] inclusive
  int64_t range(int64_t lo, int64_t hi);
  // Box-Muller gaussian
  real normal(real mean, real stddev);
  // Fisher-Yates permutation of 0..n-1
  std::vector<size_t> permutation(size_t n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  real spare_ = 0;
};

// string helpers -------------------------------------------------------------

std::vector<std::string> split_whitespace(const std::string& text);
std::string join(const std::vector<std::string>& parts, const std::string& sep);
std::string lowercase(const std::string& s);
std::string replace_all(std::string text, const std::string& from, const std::string& to);

// file helpers ---------------------------------------------------------------

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path, const std::vector<std::string>& lines);

// shortest decimal form of a real that parses back to the same bits
std::string format_real(real v);

}  // namespace swie
