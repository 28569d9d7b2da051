#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace gangs {

/// Deterministic random source. Every stochastic routine in the library takes
/// one of these explicitly; none touch global state. The distribution code is
/// fixed here rather than delegated to <random> distributions so that results
/// are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller. Consumes exactly two engine draws.
  double normal() {
    // u1 in (0, 1] keeps the log finite.
    double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Index sampled proportionally to `weights` (nonnegative, positive sum).
  /// A single-element vector short-circuits and consumes no draws.
  int categorical(std::span<const double> weights);

 private:
  std::mt19937_64 engine_;
};

/// Mixes a master seed with a path of identifiers into an independent stream
/// seed. Used to give every cell / iteration / role its own substream so that
/// results do not depend on evaluation order.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

}  // namespace gangs
