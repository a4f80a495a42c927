#pragma once

#include <cstdint>
#include <cmath>
#include <stdexcept>

namespace fpidual {

// Deterministic RNG with explicit stream derivation: every parallel work item
// derives its own stream from (seed, indices), so results never depend on
// scheduling order. Distributions are hand-rolled so output is identical
// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // avoid the all-zero state and decorrelate small seeds
    next_u64();
    next_u64();
  }

  static Rng derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                    std::uint64_t c = 0) {
    std::uint64_t s = seed;
    s = mix(s ^ (0x9e3779b97f4a7c15ULL + a));
    s = mix(s ^ (0xbf58476d1ce4e5b9ULL + b));
    s = mix(s ^ (0x94d049bb133111ebULL + c));
    return Rng(s);
  }

  std::uint64_t next_u64() {
    // splitmix64
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform on (0,1); never returns 0 or 1 exactly
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; one value per call, cached partner
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Pareto with tail index `alpha`: P(X > t) = t^{-alpha} for t >= 1
  double pareto(double alpha) {
    if (alpha <= 0) throw std::invalid_argument("pareto: tail index must be positive");
    return std::pow(uniform(), -1.0 / alpha);
  }

  double rademacher() { return (next_u64() & 1u) ? 1.0 : -1.0; }

  // integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    // rejection-free modulo is fine at desk scale; bias < 2^-53 for n << 2^64
    return next_u64() % n;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace fpidual
