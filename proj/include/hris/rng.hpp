#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace hris {

/// SplitMix64 step; used to derive well-separated child seeds from a root
/// seed plus stream indices (sweep point, trial, purpose tag).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t root, std::uint64_t a,
                              std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = splitmix64(root ^ 0x243f6a8885a308d3ULL);
  s = splitmix64(s ^ a);
  s = splitmix64(s ^ b);
  return splitmix64(s ^ c);
}

/// Deterministic random stream. Normal variates use an explicit Box-Muller
/// so results do not depend on the standard library's distribution choice.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return (gen_() >> 11) * 0x1.0p-53; }

  /// Uniform on [0, 2*pi).
  double angle() { return 2.0 * std::numbers::pi * uniform(); }

  /// Standard normal.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
  std::complex<double> cgaussian(double variance = 1.0) {
    const double s = std::sqrt(variance / 2.0);
    const double re = gaussian();
    const double im = gaussian();
    return {s * re, s * im};
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace hris
