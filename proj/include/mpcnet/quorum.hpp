#pragma once

#include <array>
#include <string>
#include <vector>

#include "mpcnet/hash.hpp"

namespace mpcnet {

using Seed32 = std::array<std::uint8_t, 32>;

/// One node's entry in a commit-reveal round: the commitment is published
/// first, the seed only after every ticket is in.
struct Ticket {
  int node_id = 0;
  u64 stake = 0;
  Digest commitment{};  // SHA3-256(seed)
};

Digest drf_commit(const Seed32& seed);

/// Seed bytes as a big-endian 256-bit integer, reduced mod m.
u64 seed_mod(const Seed32& seed, u64 modulus);

/// Combined randomness, or the first node whose reveal broke its commitment.
struct DrfOutcome {
  bool ok = false;
  u64 p = 0;
  int bad_node = -1;
};

/// Two-phase commit-reveal: reveals[i] claims to open tickets[i]. The sum is
/// commutative, so P is independent of reveal order.
DrfOutcome drf_round(const std::vector<Ticket>& tickets, const std::vector<Seed32>& reveals,
                     u64 modulus);

struct QuorumResult {
  u64 p = 0;
  std::vector<int> selected;
  int prover = -1;
};

/// Deterministic selection from shared randomness: must_include goes in
/// whole, the rest fills by a Fisher-Yates shuffle of the remaining pool
/// seeded from P. With weights (one per eligible entry, parallel order) the
/// draw is without replacement with probability proportional to weight.
/// Every node computes this locally; nothing about the result is broadcast.
QuorumResult select_quorum(u64 p, const std::vector<int>& eligible, std::size_t q,
                           const std::vector<int>& must_include = {},
                           const std::vector<double>& weights = {});

/// Prover designation: index P mod |candidates|, the rest validate.
struct LotteryResult {
  int prover = -1;
  std::vector<int> validators;
};

LotteryResult lottery_step(const std::vector<int>& candidates, u64 p);

}  // namespace mpcnet
