#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mpcnet/sharing.hpp"

namespace mpcnet {

/// Raised when a session asks for more preprocessed material than the
/// bundle holds (or tries to reuse a bundle across sessions).
struct PreprocError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class F>
struct TripleShare {
  AuthShare<F> a, b, c;
};

/// Dealer view of one triple: all parties' shares. Lives only in the dealer
/// output / test harness; the engine receives a single party's slice.
template <class F>
struct DealerTriple {
  std::vector<AuthShare<F>> a, b, c;
};

/// One party's preprocessed material, handed off whole to its engine party.
/// Consumption is strictly sequential; counters never reset.
template <class F>
class PartyBundle {
 public:
  int n = 0;
  PartyId party = 0;
  F alpha;  // MAC key share
  std::vector<TripleShare<F>> triples;
  std::vector<AuthShare<F>> masks;
  std::vector<AuthShare<F>> singles;
  std::vector<AuthShare<F>> bits;

  /// A bundle serves exactly one session.
  void bind_session(u64 session_id) {
    if (session_id_ && *session_id_ != session_id)
      throw PreprocError("preproc bundle already bound to another session");
    session_id_ = session_id;
  }

  const TripleShare<F>& take_triple() { return take(triples, triples_used_, "triples"); }
  const AuthShare<F>& take_mask() { return take(masks, masks_used_, "masks"); }
  const AuthShare<F>& take_single() { return take(singles, singles_used_, "singles"); }
  const AuthShare<F>& take_bit() { return take(bits, bits_used_, "bits"); }

  std::size_t triples_consumed() const { return triples_used_; }
  std::size_t masks_consumed() const { return masks_used_; }
  std::size_t singles_consumed() const { return singles_used_; }
  std::size_t bits_consumed() const { return bits_used_; }
  std::size_t triples_remaining() const { return triples.size() - triples_used_; }

 private:
  template <class T>
  const T& take(const std::vector<T>& v, std::size_t& used, const char* what) {
    if (used >= v.size()) throw PreprocError(std::string("preproc exhausted: ") + what);
    return v[used++];
  }

  std::optional<u64> session_id_;
  std::size_t triples_used_ = 0, masks_used_ = 0, singles_used_ = 0, bits_used_ = 0;
};

template <class F>
std::vector<MacKeyShare<F>> dealer_init(int n, SeededRng& rng) {
  if (n < 2) throw std::invalid_argument("dealer_init: need at least 2 parties");
  std::vector<MacKeyShare<F>> out(n);
  for (int i = 0; i < n; i++) out[i].alpha = rng.template next_field<F>();
  return out;
}

template <class F>
F mac_key_total(const std::vector<MacKeyShare<F>>& keys) {
  F a;
  for (const auto& k : keys) a += k.alpha;
  return a;
}

/// Authenticate a known value under alpha: random value shares summing to v,
/// random mac shares summing to alpha*v.
template <class F>
std::vector<AuthShare<F>> authenticate(F v, int n, F alpha_total, SeededRng& rng) {
  std::vector<F> vs = share(v, n, rng);
  std::vector<F> ms = share(alpha_total * v, n, rng);
  std::vector<AuthShare<F>> out(n);
  for (int i = 0; i < n; i++) out[i] = {vs[i], ms[i], i};
  return out;
}

template <class F>
std::vector<DealerTriple<F>> gen_triples(std::size_t count, int n,
                                         const std::vector<MacKeyShare<F>>& keys,
                                         SeededRng& rng) {
  if (count < 1) throw std::invalid_argument("gen_triples: count must be >= 1");
  F alpha = mac_key_total(keys);
  std::vector<DealerTriple<F>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; i++) {
    F a = rng.template next_field<F>();
    F b = rng.template next_field<F>();
    out.push_back({authenticate(a, n, alpha, rng), authenticate(b, n, alpha, rng),
                   authenticate(a * b, n, alpha, rng)});
  }
  return out;
}

template <class F>
std::vector<std::vector<AuthShare<F>>> gen_masks(std::size_t count, int n,
                                                 const std::vector<MacKeyShare<F>>& keys,
                                                 SeededRng& rng) {
  F alpha = mac_key_total(keys);
  std::vector<std::vector<AuthShare<F>>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; i++)
    out.push_back(authenticate(rng.template next_field<F>(), n, alpha, rng));
  return out;
}

template <class F>
std::vector<std::vector<AuthShare<F>>> gen_bits(std::size_t count, int n,
                                                const std::vector<MacKeyShare<F>>& keys,
                                                SeededRng& rng) {
  if (count < 1) throw std::invalid_argument("gen_bits: count must be >= 1");
  F alpha = mac_key_total(keys);
  std::vector<std::vector<AuthShare<F>>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; i++)
    out.push_back(authenticate(F(rng.next_below(2)), n, alpha, rng));
  return out;
}

/// Everything the dealer produced, per party plus the global key. This type
/// is the quarantined "dealer view": online code only ever gets one
/// PartyBundle out of it.
template <class F>
struct DealerOutput {
  std::vector<PartyBundle<F>> parties;

  F alpha() const {
    F a;
    for (const auto& p : parties) a += p.alpha;
    return a;
  }

  PartyBundle<F>&& take_party(int i) { return std::move(parties.at(i)); }

  // dealer-view reconstruction helpers (test oracles)
  F open_value(const std::vector<AuthShare<F>>& shares) const {
    F v;
    for (const auto& s : shares) v += s.value;
    return v;
  }
  F triple_a(std::size_t i) const { return component(i, 0); }
  F triple_b(std::size_t i) const { return component(i, 1); }
  F triple_c(std::size_t i) const { return component(i, 2); }

 private:
  F component(std::size_t i, int which) const {
    F v;
    for (const auto& p : parties) {
      const TripleShare<F>& t = p.triples.at(i);
      v += (which == 0 ? t.a : which == 1 ? t.b : t.c).value;
    }
    return v;
  }
};

struct BundleSpec {
  std::size_t triples = 0;
  std::size_t masks = 0;
  std::size_t singles = 0;
  std::size_t bits = 0;
};

template <class F>
DealerOutput<F> make_dealer_output(int n, const BundleSpec& spec, SeededRng& rng) {
  auto keys = dealer_init<F>(n, rng);
  DealerOutput<F> out;
  out.parties.resize(n);
  for (int i = 0; i < n; i++) {
    out.parties[i].n = n;
    out.parties[i].party = i;
    out.parties[i].alpha = keys[i].alpha;
  }
  if (spec.triples) {
    auto ts = gen_triples(spec.triples, n, keys, rng);
    for (auto& t : ts)
      for (int i = 0; i < n; i++) out.parties[i].triples.push_back({t.a[i], t.b[i], t.c[i]});
  }
  auto fill = [&](std::size_t count, auto member) {
    if (!count) return;
    auto vals = gen_masks(count, n, keys, rng);
    for (auto& v : vals)
      for (int i = 0; i < n; i++) (out.parties[i].*member).push_back(v[i]);
  };
  fill(spec.masks, &PartyBundle<F>::masks);
  fill(spec.singles, &PartyBundle<F>::singles);
  if (spec.bits) {
    auto bs = gen_bits(spec.bits, n, keys, rng);
    for (auto& b : bs)
      for (int i = 0; i < n; i++) out.parties[i].bits.push_back(b[i]);
  }
  return out;
}

/// Dealer-side triple corruption: shift the c component of triple `index`
/// by delta, keeping its MAC consistent (the dealer knows alpha), so the
/// MAC check stays silent and only the sacrifice can catch it.
template <class F>
void corrupt_triple_c(DealerOutput<F>& out, std::size_t index, F delta) {
  F alpha = out.alpha();
  TripleShare<F>& t = out.parties.at(0).triples.at(index);
  t.c.value += delta;
  t.c.mac += alpha * delta;
}

}  // namespace mpcnet
