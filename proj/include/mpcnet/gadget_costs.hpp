#pragma once

#include <stdexcept>

#include "mpcnet/field.hpp"

namespace mpcnet {

/// Statistical slack (in bits) added to truncation openings. Correctness is
/// exact for any slack; only the masking quality depends on it, so it is
/// clamped to whatever headroom the field leaves.
inline constexpr int kStatSlack = 40;

/// Largest B with 2^B < p: bounded openings must stay below 2^B.
inline int field_headroom_bits(u64 p) {
  int b = 0;
  while (b < 63 && (u64(1) << (b + 1)) < p) b++;
  return b;
}

inline int stat_slack_for(int k, u64 modulus) {
  // opening bound: 2^k + 2^m + 2^(k+slack) < 2^(k+slack+1) <= 2^B < p
  int room = field_headroom_bits(modulus) - k - 1;
  if (room < 0) throw std::domain_error("gadget domain too wide for field modulus");
  return room < kStatSlack ? room : kStatSlack;
}

/// Deterministic resource usage of one gadget invocation. The engine's
/// consumption counters must match these numbers exactly; cost() sums them.
struct GadgetCost {
  u64 muls = 0;
  u64 bits = 0;
  int depth = 0;

  GadgetCost& operator+=(const GadgetCost& o) {
    muls += o.muls;
    bits += o.bits;
    depth += o.depth;
    return *this;
  }
};

/// trunc(x, k, m): one secure multiplication per scanned bit of the public
/// remainder comparison, m low random bits plus (k-m+slack) masking bits.
inline GadgetCost trunc_cost(int k, int m, u64 modulus) {
  if (m < 1 || m >= k) throw std::domain_error("trunc: need 1 <= m < k");
  int slack = stat_slack_for(k, modulus);
  return {(u64)m, (u64)(m + (k - m + slack)), m};
}

inline GadgetCost lt_pow2_cost(int k, u64 modulus) { return trunc_cost(k, k - 1, modulus); }

inline GadgetCost compare_cost(int l, u64 modulus) { return lt_pow2_cost(l + 1, modulus); }

inline GadgetCost bool_gate_cost() { return {1, 0, 1}; }

inline GadgetCost flmul_cost(int l, u64 modulus) {
  GadgetCost c{1, 0, 1};                     // mantissa product
  c += trunc_cost(2 * l, l - 1, modulus);    // provisional normalization
  c += lt_pow2_cost(l + 1, modulus);         // top-bit test
  c += GadgetCost{1, 0, 1};                  // b*v select
  c += trunc_cost(l + 1, 1, modulus);        // conditional extra 1-bit shift
  c += GadgetCost{2, 0, 1};                  // z=OR and s=XOR in parallel
  c += GadgetCost{1, 0, 1};                  // exponent zero-mask (needs z)
  return c;
}

}  // namespace mpcnet
