#pragma once

#include <cmath>
#include <cstdint>

namespace goanet::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Counter-based random stream: every draw is a pure function of
// (seed, key_a, key_b, key_c, draw index). Streams for distinct keys are
// independent, and interleaving order across streams never alters draws,
// which makes parallel slot evaluation deterministic.
class Stream {
 public:
  explicit Stream(std::uint64_t seed, std::uint64_t key_a = 0,
                  std::uint64_t key_b = 0, std::uint64_t key_c = 0) {
    state_ = mix64(seed);
    state_ = mix64(state_ ^ mix64(key_a ^ 0x243F6A8885A308D3ull));
    state_ = mix64(state_ ^ mix64(key_b ^ 0x13198A2E03707344ull));
    state_ = mix64(state_ ^ mix64(key_c ^ 0xA4093822299F31D0ull));
  }

  std::uint64_t next_u64() {
    state_ += kGolden;
    return mix64(state_);
  }

  // Uniform on the open interval (0, 1).
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  // Standard normal via Box-Muller (one variate per call).
  double next_normal() {
    const double u1 = next_unit();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Unit-mean exponential.
  double next_exponential() { return -std::log(next_unit()); }

 private:
  std::uint64_t state_;
};

}  // namespace goanet::rng
