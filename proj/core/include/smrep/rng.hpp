#pragma once

#include <cstdint>
#include <random>

namespace smrep {

/// splitmix64 finalizer; used to derive independent sub-seeds from a master seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Sub-seed for stream `index` under `master`. Distinct (master, index) pairs give
/// unrelated seeds, so streams can be consumed in any order or in parallel.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix_seed(mix_seed(master) ^ mix_seed(index + 0x5851F42D4C957F2DULL));
}

/// Seeded stream with platform-independent conversions. std::mt19937_64 output is
/// fixed by the standard; the std distributions are not, so they are avoided here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  std::uint32_t next_u32() { return static_cast<std::uint32_t>(engine_() >> 32); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform on [lo, hi) restricted to values exactly representable as float.
  float uniform_float(float lo, float hi) {
    const float u = static_cast<float>(engine_() >> 40) * 0x1.0p-24f;
    return lo + (hi - lo) * u;
  }

  /// Uniform integer in [0, n) via Lemire's multiply-shift (bias < 2^-64 * n).
  std::uint64_t below(std::uint64_t n) {
    __extension__ using u128 = unsigned __int128;
    return static_cast<std::uint64_t>((static_cast<u128>(engine_()) * n) >> 64);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace smrep
