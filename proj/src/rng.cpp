#include "traceqa/rng.hpp"

#include <cassert>

namespace traceqa {

std::uint64_t Rng::below(std::uint64_t n) {
  assert(n > 0);
  // Modulo rejection: discard the biased tail of the 64-bit range.
  std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    std::uint64_t r = next();
    if (r >= threshold) return r % n;
  }
}

std::size_t Rng::pick_weighted(const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  assert(total > 0.0);
  double r = uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (r < acc) return i;
  }
  return last_positive;  // guards against r landing on total via rounding
}

std::vector<std::size_t> Rng::subset(std::size_t n, std::size_t k) {
  assert(k <= n);
  // Floyd's algorithm: uniform over k-subsets.
  std::vector<bool> in(n, false);
  for (std::size_t j = n - k; j < n; ++j) {
    std::size_t t = static_cast<std::size_t>(below(j + 1));
    if (in[t]) in[j] = true;
    else in[t] = true;
  }
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t i = 0; i < n; ++i) {
    if (in[i]) out.push_back(i);
  }
  return out;
}

}  // namespace traceqa
