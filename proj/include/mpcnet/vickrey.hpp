#pragma once

#include <vector>

#include "mpcnet/circuit.hpp"

namespace mpcnet {

/// Comparison-tree circuit for a second-price auction: party i contributes
/// one private bid < 2^bit_width; outputs are [winner index, second-highest
/// bid]. Each tournament node keeps (max, winner, runner-up) of its subtree;
/// ties resolve to the lower index.
Circuit build_vickrey_circuit(int n_bidders, int bit_width);

struct AuctionResult {
  u64 winner = 0;
  u64 second_price = 0;
  bool operator==(const AuctionResult& o) const {
    return winner == o.winner && second_price == o.second_price;
  }
};

/// Clear-text reference: argmax with lowest-index tie-break, then the
/// maximum over the remaining bids.
AuctionResult vickrey_oracle(const std::vector<u64>& bids);

}  // namespace mpcnet
