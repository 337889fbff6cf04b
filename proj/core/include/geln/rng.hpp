#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace geln {

std::uint64_t splitmix64(std::uint64_t x);

/// Derive an independent stream seed from a root seed and a textual tag.
/// Stable across runs and platforms; used to give every layer / stage its
/// own reproducible stream.
std::uint64_t derive_seed(std::uint64_t root, std::string_view tag);

/// Deterministic random source. Every draw is fully specified here (no
/// implementation-defined standard distributions), so a seed pins the exact
/// stream of values.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1), 53 bits of entropy.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (caches the spare value).
  double gaussian();

  /// Uniform index in [0, n). Modulo bias is negligible for n << 2^64.
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

  /// Fisher-Yates shuffle with draws from this stream.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace geln
