#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace traceqa {

// All randomness in this project flows through the functions below. The
// standard <random> distributions are implementation-defined, so they are
// never used: every draw here is fully specified, which is what makes output
// byte-identical across platforms, reruns, and worker counts.

// splitmix64 finalizer (Steele/Lea/Flood constants).
inline constexpr std::uint64_t kGolden64 = 0x9E3779B97F4A7C15ull;

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += kGolden64;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// The stable seed mixer: derives child seeds from (parent seed, salt).
// Boost-style combine fed through the splitmix64 finalizer.
inline std::uint64_t seed_combine(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (kGolden64 + b + (a << 6) + (a >> 2)));
}

// FNV-1a 64-bit, for folding strings into seeds.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

// Counter-based generator: the stream is splitmix64 applied to successive
// counter values, so any seed gives an independent, reproducible stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() { return splitmix64(state_++); }

  // Uniform in [0, 1), 53 bits of mantissa.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n), unbiased via rejection. n must be > 0.
  std::uint64_t below(std::uint64_t n);

  bool coin() { return (next() & 1u) != 0; }

  // Index drawn proportionally to weights (all >= 0, sum > 0): explicit
  // CDF inversion, deterministic given IEEE doubles.
  std::size_t pick_weighted(const std::vector<double>& weights);

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(v[i - 1], v[j]);
    }
  }

  // Uniform k-subset of {0..n-1}, ascending (Floyd's algorithm).
  std::vector<std::size_t> subset(std::size_t n, std::size_t k);

 private:
  std::uint64_t state_;
};

}  // namespace traceqa
