#pragma once

#include <cstdint>
#include <stdexcept>

namespace mpcnet {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

inline constexpr u64 kMersenne61 = 2305843009213693951ULL;  // 2^61 - 1

/// Prime field element with canonical representative in [0, P).
/// P = 2^61 - 1 gets a Mersenne reduction (two shifted adds instead of a
/// 128-bit divide); any other word-sized prime takes the generic path.
template <u64 P>
class Fp {
 public:
  static constexpr u64 modulus = P;

  constexpr Fp() : v_(0) {}
  constexpr explicit Fp(u64 v) : v_(v % P) {}

  constexpr u64 value() const { return v_; }

  constexpr Fp operator+(Fp o) const {
    u64 s = v_ + o.v_;  // no overflow: both < P <= 2^63
    if (s >= P) s -= P;
    return raw(s);
  }
  constexpr Fp operator-(Fp o) const {
    u64 s = v_ >= o.v_ ? v_ - o.v_ : v_ + P - o.v_;
    return raw(s);
  }
  constexpr Fp operator-() const { return raw(v_ == 0 ? 0 : P - v_); }
  constexpr Fp operator*(Fp o) const {
    u128 z = (u128)v_ * o.v_;
    if constexpr (P == kMersenne61) {
      u64 hi = (u64)(z >> 61);
      u64 lo = (u64)z & P;
      u64 s = hi + lo;
      s = (s & P) + (s >> 61);
      if (s >= P) s -= P;
      return raw(s);
    } else {
      return raw((u64)(z % P));
    }
  }
  Fp& operator+=(Fp o) { return *this = *this + o; }
  Fp& operator-=(Fp o) { return *this = *this - o; }
  Fp& operator*=(Fp o) { return *this = *this * o; }
  constexpr bool operator==(Fp o) const { return v_ == o.v_; }
  constexpr bool operator!=(Fp o) const { return v_ != o.v_; }

  Fp pow(u64 e) const {
    Fp acc = raw(1), base = *this;
    while (e) {
      if (e & 1) acc *= base;
      base *= base;
      e >>= 1;
    }
    return acc;
  }

  /// Multiplicative inverse by extended Euclid; rejects zero.
  Fp inv() const {
    if (v_ == 0) throw std::domain_error("field_inv: non-invertible");
    std::int64_t t = 0, new_t = 1;
    std::int64_t r = (std::int64_t)P, new_r = (std::int64_t)v_;
    while (new_r != 0) {
      std::int64_t q = r / new_r;
      std::int64_t tmp = t - q * new_t;
      t = new_t;
      new_t = tmp;
      tmp = r - q * new_r;
      r = new_r;
      new_r = tmp;
    }
    // r == gcd == 1 since P is prime and v_ != 0
    if (t < 0) t += (std::int64_t)P;
    return raw((u64)t);
  }

  static constexpr Fp raw(u64 v) {
    Fp f;
    f.v_ = v;
    return f;
  }

 private:
  u64 v_;
};

using F61 = Fp<kMersenne61>;
using F101 = Fp<101>;  // exhaustive-enumeration test field

}  // namespace mpcnet
