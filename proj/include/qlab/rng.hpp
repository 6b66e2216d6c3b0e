#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "qlab/errors.hpp"

namespace qlab {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic random stream. Every consumer derives its own stream from
// (seed, tags...) so that runs are reproducible and trials are independent:
// identical (seed, tags) always yields the identical sequence, on every
// platform (mt19937_64 output is fixed by the standard and all conversions
// below are hand-rolled).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(splitmix64(seed)) {}

  template <typename... Tags>
  static Rng derive(std::uint64_t seed, Tags... tags) {
    std::uint64_t h = splitmix64(seed);
    ((h = splitmix64(h ^ static_cast<std::uint64_t>(tags))), ...);
    Rng r(0);
    r.eng_.seed(h);
    return r;
  }

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [0, n).
  int next_index(int n) {
    if (n <= 0) throw ArgumentError("next_index: n must be positive");
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return static_cast<int>(v % un);
  }

  // Index sampled proportionally to non-negative weights.
  int sample(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw ArgumentError("sample: negative weight");
      total += w;
    }
    if (total <= 0.0) throw ArgumentError("sample: weights sum to zero");
    const double r = next_double() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (r < acc) return static_cast<int>(i);
    }
    for (std::size_t i = weights.size(); i-- > 0;) {
      if (weights[i] > 0.0) return static_cast<int>(i);
    }
    return 0;
  }

  // Uniform point on the probability simplex (Dirichlet(1,...,1)).
  std::vector<double> simplex(int n) {
    if (n <= 0) throw ArgumentError("simplex: n must be positive");
    std::vector<double> v(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double u = next_double();
      v[i] = -std::log1p(-u);
      total += v[i];
    }
    for (int i = 0; i < n; ++i) v[i] /= total;
    return v;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace qlab
