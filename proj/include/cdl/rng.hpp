#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstddef>

namespace cdl {

// splitmix64 finalizer used as a mixing hash. All hierarchical seed
// derivations (master seed -> trial -> block -> matrix -> ...) go through
// this so that streams are decorrelated no matter how callers nest them.
[[nodiscard]] constexpr std::uint64_t mix_seed(std::uint64_t seed,
                                               std::uint64_t index) noexcept {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

namespace detail {

// Ziggurat layer tables for the standard normal (128 layers).
struct ZigguratTables {
  std::array<double, 129> x;    // layer abscissae, x[128] == 0
  std::array<double, 128> ratio;  // x[i+1] / x[i], rectangle accept bound
  static constexpr double kR = 3.442619855899;        // base layer edge
  static constexpr double kV = 9.91256303526217e-3;   // area per layer
  ZigguratTables() noexcept {
    double f = std::exp(-0.5 * kR * kR);
    x[0] = kV / f;
    x[1] = kR;
    x[128] = 0.0;
    for (int i = 2; i < 128; ++i) {
      x[i] = std::sqrt(-2.0 * std::log(kV / x[i - 1] + f));
      f = std::exp(-0.5 * x[i] * x[i]);
    }
    for (int i = 0; i < 128; ++i) ratio[i] = x[i + 1] / x[i];
  }
};

const ZigguratTables& ziggurat() noexcept;

}  // namespace detail

// xoshiro256** seeded by splitmix64 state expansion. Deterministic and
// identical across platforms; every stochastic component in the library
// draws from one of these, seeded via mix_seed chains.
class Rng {
public:
  explicit Rng(std::uint64_t seed) noexcept {
    std::uint64_t z = seed;
    for (auto& w : state_) {
      z += 0x9e3779b97f4a7c15ull;
      std::uint64_t t = z;
      t = (t ^ (t >> 30)) * 0xbf58476d1ce4e5b9ull;
      t = (t ^ (t >> 27)) * 0x94d049bb133111ebull;
      w = t ^ (t >> 31);
    }
  }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() noexcept { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1): never returns an exact endpoint (safe under log()).
  double uniform_pos() noexcept {
    return (double(next_u64() >> 12) + 0.5) * 0x1.0p-52;
  }

  bool coin() noexcept { return (next_u64() >> 63) != 0; }

  // Unbiased integer in [0, bound); bound must be nonzero.
  std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  // Standard normal via the 128-layer ziggurat.
  double normal() noexcept {
    const auto& zt = detail::ziggurat();
    for (;;) {
      const double u = 2.0 * uniform_pos() - 1.0;
      const unsigned i = unsigned(next_u64() & 127u);
      if (std::fabs(u) < zt.ratio[i]) return u * zt.x[i];
      if (i == 0) return normal_tail(u < 0.0);
      const double xx = u * zt.x[i];
      const double f0 = std::exp(-0.5 * (zt.x[i] * zt.x[i] - xx * xx));
      const double f1 = std::exp(-0.5 * (zt.x[i + 1] * zt.x[i + 1] - xx * xx));
      if (f1 + uniform_pos() * (f0 - f1) < 1.0) return xx;
    }
  }

  void fill_normal(double* out, std::size_t n) noexcept {
    for (std::size_t i = 0; i < n; ++i) out[i] = normal();
  }

private:
  static constexpr std::uint64_t rotl(std::uint64_t v, int k) noexcept {
    return (v << k) | (v >> (64 - k));
  }

  // Tail sample beyond the base layer edge (Marsaglia's method).
  double normal_tail(bool negative) noexcept {
    constexpr double r = detail::ZigguratTables::kR;
    double xx, yy;
    do {
      xx = std::log(uniform_pos()) / r;  // <= 0
      yy = std::log(uniform_pos());
    } while (-2.0 * yy < xx * xx);
    return negative ? xx - r : r - xx;
  }

  std::array<std::uint64_t, 4> state_;
};

}  // namespace cdl
