#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mpcnet/field.hpp"
#include "mpcnet/preprocessing.hpp"

namespace mpcnet {

/// Field-agnostic image of a bundle file. Sections hold raw canonical
/// values, party-major: all of party 0's records, then party 1's, ...
/// Per record: triples are 6 values (a,b,c each value+mac), the rest 2.
struct RawBundleFile {
  std::uint32_t n = 0;
  u64 modulus = 0;
  u64 n_triples = 0, n_masks = 0, n_singles = 0, n_bits = 0;
  std::vector<u64> mac_key_shares;  // n values
  std::vector<u64> triples;         // n * n_triples * 6
  std::vector<u64> masks;           // n * n_masks * 2
  std::vector<u64> singles;         // n * n_singles * 2
  std::vector<u64> bits;            // n * n_bits * 2
};

inline constexpr char kBundleMagic[9] = "ARPAPRE1";

void write_bundle_file(const std::string& path, const RawBundleFile& raw);
RawBundleFile read_bundle_file(const std::string& path);  // throws PreprocError

template <class F>
RawBundleFile to_raw(const DealerOutput<F>& d) {
  RawBundleFile raw;
  raw.n = (std::uint32_t)d.parties.size();
  raw.modulus = F::modulus;
  raw.n_triples = d.parties.at(0).triples.size();
  raw.n_masks = d.parties.at(0).masks.size();
  raw.n_singles = d.parties.at(0).singles.size();
  raw.n_bits = d.parties.at(0).bits.size();
  for (const auto& p : d.parties) raw.mac_key_shares.push_back(p.alpha.value());
  for (const auto& p : d.parties)
    for (const auto& t : p.triples) {
      raw.triples.push_back(t.a.value.value());
      raw.triples.push_back(t.a.mac.value());
      raw.triples.push_back(t.b.value.value());
      raw.triples.push_back(t.b.mac.value());
      raw.triples.push_back(t.c.value.value());
      raw.triples.push_back(t.c.mac.value());
    }
  auto flat = [](const auto& parties, auto member, std::vector<u64>& out) {
    for (const auto& p : parties)
      for (const auto& s : p.*member) {
        out.push_back(s.value.value());
        out.push_back(s.mac.value());
      }
  };
  flat(d.parties, &PartyBundle<F>::masks, raw.masks);
  flat(d.parties, &PartyBundle<F>::singles, raw.singles);
  flat(d.parties, &PartyBundle<F>::bits, raw.bits);
  return raw;
}

template <class F>
DealerOutput<F> from_raw(const RawBundleFile& raw) {
  if (raw.modulus != F::modulus) throw PreprocError("bundle modulus mismatch");
  int n = (int)raw.n;
  if (n < 2) throw PreprocError("bundle party count invalid");
  DealerOutput<F> d;
  d.parties.resize(n);
  for (int i = 0; i < n; i++) {
    auto& p = d.parties[i];
    p.n = n;
    p.party = i;
    p.alpha = F::raw(raw.mac_key_shares.at(i));
    const u64* t = raw.triples.data() + (std::size_t)i * raw.n_triples * 6;
    for (u64 j = 0; j < raw.n_triples; j++, t += 6)
      p.triples.push_back({{F::raw(t[0]), F::raw(t[1]), i},
                           {F::raw(t[2]), F::raw(t[3]), i},
                           {F::raw(t[4]), F::raw(t[5]), i}});
    auto unflat = [&](const std::vector<u64>& src, u64 count, std::vector<AuthShare<F>>& dst) {
      const u64* s = src.data() + (std::size_t)i * count * 2;
      for (u64 j = 0; j < count; j++, s += 2) dst.push_back({F::raw(s[0]), F::raw(s[1]), i});
    };
    unflat(raw.masks, raw.n_masks, p.masks);
    unflat(raw.singles, raw.n_singles, p.singles);
    unflat(raw.bits, raw.n_bits, p.bits);
  }
  return d;
}

}  // namespace mpcnet
