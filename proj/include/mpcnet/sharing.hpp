#pragma once

#include <stdexcept>
#include <vector>

#include "mpcnet/field.hpp"
#include "mpcnet/rng.hpp"

namespace mpcnet {

using PartyId = int;

/// Party i's share of the global MAC key alpha = sum alpha_i.
template <class F>
struct MacKeyShare {
  F alpha;
};

/// One party's piece of an authenticated sharing <x>:
/// sum of value shares = x, sum of mac shares = alpha * x.
template <class F>
struct AuthShare {
  F value;
  F mac;
  PartyId owner = 0;
};

enum class PublicOrigin { opened, broadcast_constant };

/// Value every party agrees on after a broadcast round.
template <class F>
struct PublicValue {
  F value;
  PublicOrigin origin = PublicOrigin::opened;
};

/// Split a secret into n additive parts, uniform subject to the sum.
template <class F>
std::vector<F> share(F secret, int n, SeededRng& rng) {
  if (n < 2) throw std::invalid_argument("share: need at least 2 parties");
  std::vector<F> parts(n);
  F acc;
  for (int i = 0; i + 1 < n; i++) {
    parts[i] = rng.template next_field<F>();
    acc += parts[i];
  }
  parts[n - 1] = secret - acc;
  return parts;
}

/// n-of-n reconstruction; anything short of all n parts is an error.
template <class F>
F reconstruct(const std::vector<F>& parts, int n) {
  if ((int)parts.size() != n) throw std::invalid_argument("reconstruct: insufficient shares");
  F acc;
  for (F p : parts) acc += p;
  return acc;
}

template <class F>
AuthShare<F> add_shares(const AuthShare<F>& a, const AuthShare<F>& b) {
  if (a.owner != b.owner) throw std::invalid_argument("add_shares: different owners");
  return {a.value + b.value, a.mac + b.mac, a.owner};
}

template <class F>
AuthShare<F> sub_shares(const AuthShare<F>& a, const AuthShare<F>& b) {
  if (a.owner != b.owner) throw std::invalid_argument("sub_shares: different owners");
  return {a.value - b.value, a.mac - b.mac, a.owner};
}

/// Add a public constant: the designated party (lowest-indexed live party)
/// absorbs c into its value share; everyone adjusts the MAC by c * alpha_i.
template <class F>
AuthShare<F> add_public(const AuthShare<F>& a, F c, F alpha_i, PartyId adjuster = 0) {
  AuthShare<F> r = a;
  if (a.owner == adjuster) r.value += c;
  r.mac += c * alpha_i;
  return r;
}

template <class F>
AuthShare<F> scalar_mul(const AuthShare<F>& a, F k) {
  return {a.value * k, a.mac * k, a.owner};
}

}  // namespace mpcnet
