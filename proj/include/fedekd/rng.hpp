#pragma once

// Seeded, platform-independent random streams.
//
// Every random decision in the simulator (data generation, partitioning,
// initialization, minibatch order) draws from a SplitMix64 stream whose seed
// is derived from the global seed plus a tuple of integer tags.  The samplers
// below are written out explicitly instead of using <random> distributions,
// whose output is implementation-defined and differs between standard
// libraries.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

namespace fedekd {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1); used where a log is taken.
  double uniform_open() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % n;
  }

  // Standard normal via Marsaglia's polar method.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = 0.0, v = 0.0, s = 0.0;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * scale;
    has_spare_ = true;
    return u * scale;
  }

  // Gamma(shape, 1) by Marsaglia-Tsang; shapes below 1 use the
  // U^(1/shape) boost.
  double gamma(double shape) {
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0);
      return g * std::pow(uniform_open(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = 0.0, v = 0.0;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Mixes a seed with a sequence of tags into an independent stream seed.
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> tags) {
  SplitMix64 mix(seed);
  std::uint64_t h = mix.next();
  for (std::uint64_t t : tags) {
    SplitMix64 step(h ^ (t + 0x632be59bd9b4e019ull));
    h = step.next();
  }
  return h;
}

inline SplitMix64 make_stream(std::uint64_t seed,
                              std::initializer_list<std::uint64_t> tags) {
  return SplitMix64(derive_seed(seed, tags));
}

// Symmetric Dirichlet(alpha * 1_k) via normalized gamma draws.
inline std::vector<double> dirichlet(SplitMix64& rng, std::size_t k,
                                     double alpha) {
  std::vector<double> out(k);
  double total = 0.0;
  for (auto& x : out) {
    x = rng.gamma(alpha);
    total += x;
  }
  if (total <= 0.0 || !std::isfinite(total)) {
    // Every gamma draw underflowed (tiny alpha); put all mass on one bin.
    std::fill(out.begin(), out.end(), 0.0);
    out[rng.below(k)] = 1.0;
    return out;
  }
  for (auto& x : out) x /= total;
  return out;
}

// Fisher-Yates, highest index first.
template <typename T>
void shuffle(SplitMix64& rng, std::span<T> values) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(values[i - 1], values[j]);
  }
}

inline std::vector<std::size_t> permutation(SplitMix64& rng, std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  shuffle(rng, std::span<std::size_t>(idx));
  return idx;
}

}  // namespace fedekd
