#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kgbm {

// Raised for unreadable/unwritable files and malformed data files.
// The CLI maps this to exit code 3.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Deterministic random source. Doubles are produced from the raw 64-bit
// stream directly (not through std::uniform_real_distribution, whose output
// is implementation-defined), so a seed yields bit-identical draws on every
// platform we build on.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform on [0,1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform on {0,...,n-1}.
  int uniform_int(int n) {
    return static_cast<int>(gen_() % static_cast<uint64_t>(n));
  }

  bool coin() { return (gen_() & 1u) != 0; }

 private:
  std::mt19937_64 gen_;
};

// Fisher-Yates with our Rng; std::shuffle's draw sequence is
// implementation-defined, which would break bit-reproducible training.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.uniform_int(static_cast<int>(i)));
    std::swap(v[i - 1], v[j]);
  }
}

std::string trim(const std::string& s);

// FNV-1a over the file's bytes; used as the dataset checksum.
uint64_t fnv1a_file(const std::string& path);
uint64_t fnv1a_combine(uint64_t h, uint64_t value);
std::string to_hex(uint64_t v);

// Flat `key = value` text files (configs, sidecars, manifests).
using KvMap = std::map<std::string, std::string>;
using KvList = std::vector<std::pair<std::string, std::string>>;

KvMap read_kv_file(const std::string& path);
// Writes to a temp file in the same directory, then renames over the target.
void write_kv_file_atomic(const std::string& path, const KvList& entries);

}  // namespace kgbm
