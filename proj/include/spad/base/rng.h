#ifndef SPAD_BASE_RNG_H_
#define SPAD_BASE_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace spad {

// 64-bit FNV-1a; used to derive labeled seeds and for stable ids.
uint64_t Fnv1a64(std::string_view bytes, uint64_t basis = 0xcbf29ce484222325ULL);

// SplitMix64 finalizer.
uint64_t Mix64(uint64_t x);

// Seeded random stream. All draws are computed from the raw engine bits so
// results do not depend on the standard library's distribution classes.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // Stream for one purpose ("init", "dropout", "sample", ...) derived from a
  // master seed. Streams with different labels are independent.
  static Rng Derive(uint64_t master_seed, std::string_view label);
  static Rng Derive(uint64_t master_seed, std::string_view label,
                    uint64_t index);

  uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1).
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [0, n). n must be positive.
  uint64_t UniformInt(uint64_t n);

  // Standard normal (Box-Muller, one value per call).
  double Normal();

  bool Bernoulli(double p) { return Uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace spad

#endif  // SPAD_BASE_RNG_H_
