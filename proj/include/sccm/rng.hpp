#pragma once

#include <cstdint>
#include <random>

#include "sccm/normal.hpp"

namespace sccm {

// splitmix64; used to derive independent per-trial seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d649bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic across platforms: raw mt19937_64 bits mapped by hand, normals
// via the inverse CDF instead of std::normal_distribution.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Uniform on [2^-54, 1 - 2^-54]; never returns an exact endpoint so it is
  // safe to feed through norm_ppf.
  double uniform() {
    double u = (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() { return norm_ppf(uniform()); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection keeps the draw exactly uniform.
    std::uint64_t limit = ~0ULL - (~0ULL % n);
    std::uint64_t v;
    do {
      v = eng_();
    } while (v >= limit);
    return v % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace sccm
