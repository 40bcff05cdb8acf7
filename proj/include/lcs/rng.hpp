#pragma once

#include <cmath>
#include <cstdint>

namespace lcs {

// Counter-based generator (SplitMix64 over a seed/stream/counter triple).
// Unlike the std engines+distributions, every draw is reproducible bit-for-bit
// across platforms and standard libraries, which the determinism contract
// relies on. Cheap to fork: derive_seed() gives independent streams for
// (epoch, patch) style keys.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1))), counter_(0) {}

  std::uint64_t next_u64() { return mix(seed_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  // Uniform in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  float uniform_f() { return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f; }

  // Unbiased-enough integer in [0, n) via 128-bit multiply-shift.
  std::uint32_t below(std::uint32_t n) {
    return static_cast<std::uint32_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Standard normal via Box-Muller; the spare is cached so pairs stay aligned.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  // Deterministic sub-seed for keyed streams, e.g. (run seed, epoch, item).
  static std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    return mix(mix(base ^ 0x2545f4914f6cdd1dULL) + 0x9e3779b97f4a7c15ULL * a) ^ mix(b + 0x6a09e667f3bcc909ULL);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace lcs
