#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <stdexcept>
#include <vector>

#include "helpers.hpp"
#include "mpcnet/vickrey.hpp"

using namespace mpcnet;
using namespace mpcnet::testutil;

namespace {

// Clear evaluation of the auction circuit, one bid per party.
AuctionResult eval_auction(const Circuit& c, const std::vector<u64>& bids) {
  std::vector<std::vector<u64>> inputs(bids.size());
  for (std::size_t i = 0; i < bids.size(); i++) inputs[i] = {bids[i]};
  std::vector<u64> out = eval_plaintext(c, inputs);
  REQUIRE(out.size() == 2);
  return {out[0], out[1]};
}

AuctionResult run_auction(const Circuit& c, const std::vector<u64>& bids, u64 dealer_seed) {
  std::vector<std::vector<u64>> inputs(bids.size());
  for (std::size_t i = 0; i < bids.size(); i++) inputs[i] = {bids[i]};
  SessionResult r = run_plain<F61>(c, (int)bids.size(), inputs, {}, {}, dealer_seed);
  REQUIRE(r.ok);
  REQUIRE(r.outputs.size() == 2);
  return {r.outputs[0], r.outputs[1]};
}

}  // namespace

TEST_CASE("oracle picks the highest bid and prices at the runner-up") {
  CHECK(vickrey_oracle({5, 9, 7}) == AuctionResult{1, 7});
  CHECK(vickrey_oracle({9, 5, 7}) == AuctionResult{0, 7});
  CHECK(vickrey_oracle({1, 2}) == AuctionResult{1, 1});
  CHECK(vickrey_oracle({2, 1}) == AuctionResult{0, 1});
  CHECK(vickrey_oracle({0, 0}) == AuctionResult{0, 0});
  CHECK(vickrey_oracle({3, 1, 4, 1, 5, 9, 2, 6}) == AuctionResult{5, 6});
}

TEST_CASE("oracle breaks ties toward the lower index") {
  CHECK(vickrey_oracle({4, 4, 4}) == AuctionResult{0, 4});
  CHECK(vickrey_oracle({1, 7, 7}) == AuctionResult{1, 7});
  CHECK(vickrey_oracle({7, 1, 7, 7}) == AuctionResult{0, 7});
  // a tied maximum makes the second price equal the maximum
  CHECK(vickrey_oracle({6, 6}) == AuctionResult{0, 6});
}

TEST_CASE("oracle rejects degenerate auctions") {
  CHECK_THROWS_AS((void)vickrey_oracle({}), std::invalid_argument);
  CHECK_THROWS_AS((void)vickrey_oracle({42}), std::invalid_argument);
  CHECK_THROWS_AS((void)build_vickrey_circuit(1, 4), std::invalid_argument);
  CHECK_THROWS_AS((void)build_vickrey_circuit(0, 4), std::invalid_argument);
  CHECK_THROWS_AS((void)build_vickrey_circuit(3, 0), std::invalid_argument);
}

TEST_CASE("circuit agrees with the oracle in the clear, including byes and ties") {
  SeededRng rng(2026);
  for (int n = 2; n <= 9; n++) {
    Circuit c = build_vickrey_circuit(n, 6);
    for (int rep = 0; rep < 60; rep++) {
      std::vector<u64> bids(n);
      // small value range on every third vector to force frequent ties
      u64 range = (rep % 3 == 0) ? 3 : 64;
      for (auto& b : bids) b = rng.next_below(range);
      AuctionResult want = vickrey_oracle(bids);
      CHECK(eval_auction(c, bids) == want);
    }
  }
}

TEST_CASE("circuit handles boundary bids in the clear") {
  Circuit c = build_vickrey_circuit(4, 8);
  CHECK(eval_auction(c, {255, 255, 255, 255}) == AuctionResult{0, 255});
  CHECK(eval_auction(c, {0, 0, 0, 255}) == AuctionResult{3, 0});
  CHECK(eval_auction(c, {255, 0, 0, 0}) == AuctionResult{0, 0});
  CHECK(eval_auction(c, {0, 0, 0, 0}) == AuctionResult{0, 0});
  CHECK(eval_auction(c, {1, 255, 254, 255}) == AuctionResult{1, 255});
}

TEST_CASE("full sessions reproduce the oracle result") {
  CHECK(run_auction(build_vickrey_circuit(3, 4), {5, 9, 7}, 7) == AuctionResult{1, 7});
  CHECK(run_auction(build_vickrey_circuit(3, 4), {4, 4, 4}, 8) == AuctionResult{0, 4});
  // odd bracket: the bye node must advance with its index and runner-up intact
  CHECK(run_auction(build_vickrey_circuit(5, 4), {3, 8, 2, 1, 9}, 9) == AuctionResult{4, 8});
  CHECK(run_auction(build_vickrey_circuit(5, 4), {9, 8, 2, 1, 3}, 10) == AuctionResult{0, 8});

  SeededRng rng(55);
  for (int rep = 0; rep < 6; rep++) {
    int n = 2 + (int)rng.next_below(5);
    std::vector<u64> bids(n);
    for (auto& b : bids) b = rng.next_below(16);
    Circuit c = build_vickrey_circuit(n, 4);
    CHECK(run_auction(c, bids, 100 + rep) == vickrey_oracle(bids));
  }
}

TEST_CASE("resource usage follows the tournament-tree formula") {
  // n-1 combines, each 4 blend multiplications plus two l-bit comparisons
  for (auto [n, l] : {std::pair{2, 8}, {3, 8}, {7, 16}, {100, 32}}) {
    Circuit c = build_vickrey_circuit(n, l);
    CostReport r = cost(c);
    u64 combines = (u64)n - 1;
    CHECK(r.mul_gates == 4 * combines);
    CHECK(r.gadget_muls == 2 * (u64)l * combines);
    CHECK(r.triples_required == 2 * (r.mul_gates + r.gadget_muls));
  }
  CostReport big = cost(build_vickrey_circuit(100, 32));
  CHECK(big.mul_gates + big.gadget_muls == 6732);
  CHECK(big.triples_required == 13464);
}
