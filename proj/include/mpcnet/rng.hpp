#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "mpcnet/field.hpp"

namespace mpcnet {

/// Deterministic randomness stream. Every protocol object that needs
/// randomness takes one of these, so a run is replayable from (seed, config).
class SeededRng {
 public:
  explicit SeededRng(u64 seed) : gen_(seed) {}

  u64 next_u64() { return gen_(); }

  /// Uniform draw in [0, bound) without modulo bias (rejection sampling).
  u64 next_below(u64 bound) {
    // largest multiple of bound that fits in 64 bits
    u64 limit = bound * (UINT64_MAX / bound);
    u64 v;
    do {
      v = gen_();
    } while (v >= limit);
    return v % bound;
  }

  template <class F>
  F next_field() {
    return F::raw(next_below(F::modulus));
  }

  void fill_bytes(std::uint8_t* out, std::size_t len) {
    std::size_t i = 0;
    while (i < len) {
      u64 v = gen_();
      for (int k = 0; k < 8 && i < len; k++, i++) out[i] = (std::uint8_t)(v >> (8 * k));
    }
  }

  std::array<std::uint8_t, 32> next_seed32() {
    std::array<std::uint8_t, 32> s{};
    fill_bytes(s.data(), s.size());
    return s;
  }

  std::array<std::uint8_t, 16> next_nonce16() {
    std::array<std::uint8_t, 16> s{};
    fill_bytes(s.data(), s.size());
    return s;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace mpcnet
