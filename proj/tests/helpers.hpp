#pragma once

// Shared test scaffolding: dealer setup sized from a circuit's cost report,
// one-call honest sessions, and a seeded random-circuit generator whose
// outputs are checked against eval_plaintext.

#include <utility>
#include <vector>

#include "mpcnet/engine.hpp"
#include "mpcnet/preproc_io.hpp"

namespace mpcnet::testutil {

template <class F>
BundleSpec spec_for(const Circuit& c, u64 extra_triples = 0) {
  CostReport r = cost(c);
  BundleSpec s;
  s.triples = r.triples_required + extra_triples;
  s.masks = r.masks_required;
  s.singles = r.singles_required;
  s.bits = r.bits_required;
  return s;
}

template <class F>
DealerOutput<F> deal_for(const Circuit& c, int n, u64 dealer_seed, u64 extra_triples = 0) {
  SeededRng rng(dealer_seed);
  return make_dealer_output<F>(n, spec_for<F>(c, extra_triples), rng);
}

template <class F>
std::vector<PartyBundle<F>> bundles_of(DealerOutput<F>&& d) {
  std::vector<PartyBundle<F>> out;
  out.reserve(d.parties.size());
  for (auto& p : d.parties) out.push_back(std::move(p));
  return out;
}

/// Deal, run, return. `mutate` gets the dealer output before the split so a
/// test can corrupt preprocessing with full knowledge of every share.
template <class F, class Mutate>
SessionResult run_mutated(const Circuit& c, int n, const std::vector<std::vector<u64>>& inputs,
                          SessionConfig cfg, AdversarySpec adv, u64 dealer_seed, Mutate mutate) {
  DealerOutput<F> d = deal_for<F>(c, n, dealer_seed);
  mutate(d);
  return run_session<F>(c, bundles_of(std::move(d)), inputs, cfg, std::move(adv));
}

template <class F>
SessionResult run_plain(const Circuit& c, int n, const std::vector<std::vector<u64>>& inputs,
                        SessionConfig cfg = {}, AdversarySpec adv = {}, u64 dealer_seed = 99) {
  return run_mutated<F>(c, n, inputs, cfg, std::move(adv), dealer_seed, [](DealerOutput<F>&) {});
}

struct RandomInstance {
  Circuit circuit;
  std::vector<std::vector<u64>> inputs;
  std::vector<u64> expected;  // eval_plaintext
};

/// Seeded arithmetic circuit: adds, constant ops and a target number of
/// multiplications over a growing wire pool, with a few output taps.
inline RandomInstance random_instance(u64 seed, int n, u64 target_muls,
                                      u64 modulus = kMersenne61) {
  SeededRng rng(seed * 0x9e3779b97f4a7c15ULL + 1);
  CircuitBuilder b(modulus);
  RandomInstance inst;
  inst.inputs.resize(n);

  int n_in = 1 + (int)rng.next_below((u64)(2 * n));
  std::vector<int> pool;
  for (int i = 0; i < n_in; i++) {
    int party = (int)rng.next_below((u64)n);
    pool.push_back(b.input(party));
    inst.inputs[party].push_back(rng.next_below(modulus));
  }
  auto pick = [&] { return pool[rng.next_below(pool.size())]; };

  u64 muls = 0;
  while (muls < target_muls || pool.size() < (std::size_t)n_in + 2) {
    switch (rng.next_below(4)) {
      case 0: pool.push_back(b.add(pick(), pick())); break;
      case 1: pool.push_back(b.add_const(rng.next_below(modulus), pick())); break;
      case 2: pool.push_back(b.smul(rng.next_below(modulus), pick())); break;
      default:
        if (muls < target_muls) {
          pool.push_back(b.mul(pick(), pick()));
          muls++;
        }
        break;
    }
  }
  int n_out = 1 + (int)rng.next_below(3);
  for (int i = 0; i < n_out; i++) b.output(pick());

  inst.circuit = b.finish();
  inst.expected = eval_plaintext(inst.circuit, inst.inputs);
  return inst;
}

}  // namespace mpcnet::testutil
