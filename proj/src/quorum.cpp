#include "mpcnet/quorum.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mpcnet/rng.hpp"

namespace mpcnet {

Digest drf_commit(const Seed32& seed) { return sha3_256(seed.data(), seed.size()); }

u64 seed_mod(const Seed32& seed, u64 modulus) {
  u128 acc = 0;
  for (std::uint8_t b : seed) acc = ((acc << 8) | b) % modulus;
  return (u64)acc;
}

DrfOutcome drf_round(const std::vector<Ticket>& tickets, const std::vector<Seed32>& reveals,
                     u64 modulus) {
  if (tickets.size() != reveals.size())
    throw std::invalid_argument("drf_round: one reveal per ticket required");
  DrfOutcome out;
  u128 acc = 0;
  for (std::size_t i = 0; i < tickets.size(); i++) {
    if (drf_commit(reveals[i]) != tickets[i].commitment) {
      out.bad_node = tickets[i].node_id;
      return out;
    }
    acc = (acc + seed_mod(reveals[i], modulus)) % modulus;
  }
  out.ok = true;
  out.p = (u64)acc;
  return out;
}

QuorumResult select_quorum(u64 p, const std::vector<int>& eligible, std::size_t q,
                           const std::vector<int>& must_include,
                           const std::vector<double>& weights) {
  if (q > eligible.size()) throw std::invalid_argument("select_quorum: q exceeds eligible set");
  if (!weights.empty() && weights.size() != eligible.size())
    throw std::invalid_argument("select_quorum: one weight per eligible node required");
  if (must_include.size() > q)
    throw std::invalid_argument("select_quorum: must-include larger than quorum");

  QuorumResult r;
  r.p = p;
  std::vector<int> pool;
  std::vector<u64> pool_weight;
  for (std::size_t i = 0; i < eligible.size(); i++) {
    int node = eligible[i];
    if (std::find(must_include.begin(), must_include.end(), node) != must_include.end()) continue;
    pool.push_back(node);
    // fixed-point weight, floored at 1 so zero-credit nodes stay selectable
    u64 w = weights.empty() ? 1 : (u64)std::llround(weights[i] * (1 << 20)) + 1;
    pool_weight.push_back(w);
  }
  for (int node : must_include) {
    if (std::find(eligible.begin(), eligible.end(), node) == eligible.end())
      throw std::invalid_argument("select_quorum: must-include node not eligible");
    r.selected.push_back(node);
  }

  SeededRng rng(p);
  std::size_t draws = q - must_include.size();
  if (weights.empty()) {
    for (std::size_t i = 0; i < draws; i++) {
      std::size_t j = i + rng.next_below(pool.size() - i);
      std::swap(pool[i], pool[j]);
      r.selected.push_back(pool[i]);
    }
  } else {
    for (std::size_t i = 0; i < draws; i++) {
      u64 total = 0;
      for (std::size_t j = i; j < pool.size(); j++) total += pool_weight[j];
      u64 ticket = rng.next_below(total);
      std::size_t j = i;
      for (u64 acc = pool_weight[j]; acc <= ticket; acc += pool_weight[++j]) {
      }
      std::swap(pool[i], pool[j]);
      std::swap(pool_weight[i], pool_weight[j]);
      r.selected.push_back(pool[i]);
    }
  }
  r.prover = r.selected.empty() ? -1 : r.selected[p % r.selected.size()];
  return r;
}

LotteryResult lottery_step(const std::vector<int>& candidates, u64 p) {
  if (candidates.size() < 2) throw std::invalid_argument("lottery_step: need at least 2 candidates");
  LotteryResult r;
  std::size_t idx = p % candidates.size();
  r.prover = candidates[idx];
  for (std::size_t i = 0; i < candidates.size(); i++)
    if (i != idx) r.validators.push_back(candidates[i]);
  return r;
}

}  // namespace mpcnet
