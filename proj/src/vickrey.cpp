#include "mpcnet/vickrey.hpp"

#include <stdexcept>

namespace mpcnet {

namespace {

struct Node {
  int max, winner, second;  // wire ids
};

// a - b over the field, via the (p-1) scalar
int sub_wire(CircuitBuilder& b, u64 modulus, int a, int y) {
  return b.add(a, b.smul(modulus - 1, y));
}

// x + c * (y - x): the c-selected blend used for every tournament field
int select_wire(CircuitBuilder& b, u64 modulus, int c, int x, int y) {
  return b.add(x, b.mul(c, sub_wire(b, modulus, y, x)));
}

Node combine(CircuitBuilder& b, u64 modulus, const Node& l, const Node& r) {
  Node out;
  int c = b.cmp(l.max, r.max);  // [left max < right max]; ties stay left
  out.max = select_wire(b, modulus, c, l.max, r.max);
  out.winner = select_wire(b, modulus, c, l.winner, r.winner);
  // loser_max = max_l + max_r - max = min(max_l, max_r)
  int loser_max = sub_wire(b, modulus, b.add(l.max, r.max), out.max);
  int winner_second = select_wire(b, modulus, c, l.second, r.second);
  int c4 = b.cmp(winner_second, loser_max);
  out.second = select_wire(b, modulus, c4, winner_second, loser_max);
  return out;
}

}  // namespace

Circuit build_vickrey_circuit(int n_bidders, int bit_width) {
  if (n_bidders < 2) throw std::invalid_argument("vickrey: need at least 2 bidders");
  if (bit_width < 1) throw std::invalid_argument("vickrey: bit width must be positive");
  u64 modulus = kMersenne61;
  CircuitBuilder b(modulus);
  b.set_cmp_bits(bit_width);
  std::vector<Node> level;
  level.reserve(n_bidders);
  for (int i = 0; i < n_bidders; i++) {
    int bid = b.input(i);
    int zero = b.smul(0, bid);
    level.push_back({bid, b.add_const((u64)i, zero), zero});
  }
  while (level.size() > 1) {
    std::vector<Node> next;
    next.reserve((level.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < level.size(); i += 2)
      next.push_back(combine(b, modulus, level[i], level[i + 1]));
    if (level.size() % 2) next.push_back(level.back());  // bye advances whole
    level = std::move(next);
  }
  b.output(level[0].winner);
  b.output(level[0].second);
  return b.finish();
}

AuctionResult vickrey_oracle(const std::vector<u64>& bids) {
  if (bids.size() < 2) throw std::invalid_argument("vickrey: need at least 2 bids");
  std::size_t win = 0;
  for (std::size_t i = 1; i < bids.size(); i++)
    if (bids[i] > bids[win]) win = i;
  u64 second = 0;
  for (std::size_t i = 0; i < bids.size(); i++)
    if (i != win && bids[i] > second) second = bids[i];
  return {(u64)win, second};
}

}  // namespace mpcnet
