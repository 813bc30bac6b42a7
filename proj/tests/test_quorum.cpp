#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "mpcnet/quorum.hpp"
#include "mpcnet/rng.hpp"

using namespace mpcnet;

namespace {

// Independent reduction: sum of byte[i] * 256^(31-i) built from the back,
// cross-checking the Horner scan in seed_mod.
u64 seed_mod_oracle(const Seed32& seed, u64 m) {
  u128 pow = 1 % m, acc = 0;
  for (int i = 31; i >= 0; i--) {
    acc = (acc + pow * seed[i]) % m;
    pow = (pow * 256) % m;
  }
  return (u64)acc;
}

Seed32 seed_of_last_bytes(std::initializer_list<std::uint8_t> tail) {
  Seed32 s{};
  std::size_t i = 32 - tail.size();
  for (std::uint8_t b : tail) s[i++] = b;
  return s;
}

struct Round {
  std::vector<Ticket> tickets;
  std::vector<Seed32> reveals;
};

Round honest_round(SeededRng& rng, int n_nodes) {
  Round r;
  for (int i = 0; i < n_nodes; i++) {
    Seed32 s = rng.next_seed32();
    r.tickets.push_back({i, 100, drf_commit(s)});
    r.reveals.push_back(s);
  }
  return r;
}

}  // namespace

TEST_CASE("seed reduction matches an independent big-endian evaluation") {
  CHECK(seed_mod(Seed32{}, 97) == 0);
  CHECK(seed_mod(seed_of_last_bytes({7}), 1000) == 7);
  CHECK(seed_mod(seed_of_last_bytes({1, 2}), 100000) == 258);
  CHECK(seed_mod(seed_of_last_bytes({255}), 7) == 255 % 7);

  SeededRng rng(31);
  for (u64 m : {u64(2), u64(97), u64(101), u64(1000003), kMersenne61}) {
    for (int rep = 0; rep < 50; rep++) {
      Seed32 s = rng.next_seed32();
      CHECK(seed_mod(s, m) == seed_mod_oracle(s, m));
    }
  }
}

TEST_CASE("commitment is the hash of the seed and nothing else") {
  SeededRng rng(5);
  Seed32 a = rng.next_seed32();
  Seed32 b = rng.next_seed32();
  CHECK(drf_commit(a) == sha3_256(a.data(), a.size()));
  CHECK(drf_commit(a) == drf_commit(a));
  CHECK(drf_commit(a) != drf_commit(b));
}

TEST_CASE("honest round sums the revealed seeds mod m") {
  SeededRng rng(77);
  for (u64 m : {u64(101), kMersenne61}) {
    for (int rep = 0; rep < 20; rep++) {
      Round r = honest_round(rng, 2 + (int)rng.next_below(9));
      u64 want = 0;
      for (const Seed32& s : r.reveals) want = (u64)(((u128)want + seed_mod_oracle(s, m)) % m);
      DrfOutcome out = drf_round(r.tickets, r.reveals, m);
      REQUIRE(out.ok);
      CHECK(out.p == want);
      CHECK(out.bad_node == -1);
    }
  }
}

TEST_CASE("combined randomness is independent of reveal order") {
  SeededRng rng(123);
  Round r = honest_round(rng, 7);
  DrfOutcome base = drf_round(r.tickets, r.reveals, kMersenne61);
  REQUIRE(base.ok);
  std::vector<std::size_t> order(7);
  std::iota(order.begin(), order.end(), 0);
  for (int rep = 0; rep < 20; rep++) {
    for (std::size_t i = order.size(); i > 1; i--)
      std::swap(order[i - 1], order[rng.next_below(i)]);
    Round perm;
    for (std::size_t idx : order) {
      perm.tickets.push_back(r.tickets[idx]);
      perm.reveals.push_back(r.reveals[idx]);
    }
    DrfOutcome got = drf_round(perm.tickets, perm.reveals, kMersenne61);
    REQUIRE(got.ok);
    CHECK(got.p == base.p);
  }
}

TEST_CASE("forged reveal is caught and blamed on the first offender") {
  SeededRng rng(9);
  Round r = honest_round(rng, 5);
  SUBCASE("single forgery") {
    r.reveals[2][0] ^= 1;
    DrfOutcome out = drf_round(r.tickets, r.reveals, 101);
    CHECK(!out.ok);
    CHECK(out.p == 0);
    CHECK(out.bad_node == r.tickets[2].node_id);
  }
  SUBCASE("two forgeries blame the earlier ticket") {
    r.reveals[1][5] ^= 0xff;
    r.reveals[3][5] ^= 0xff;
    CHECK(drf_round(r.tickets, r.reveals, 101).bad_node == r.tickets[1].node_id);
  }
  SUBCASE("stale commitment to a different seed") {
    r.tickets[4].commitment = drf_commit(rng.next_seed32());
    CHECK(drf_round(r.tickets, r.reveals, 101).bad_node == 4);
  }
  SUBCASE("every seed forged in place still verifies") {
    for (std::size_t i = 0; i < r.reveals.size(); i++) r.tickets[i].commitment = drf_commit(r.reveals[i]);
    CHECK(drf_round(r.tickets, r.reveals, 101).ok);
  }
}

TEST_CASE("round rejects mismatched ticket and reveal counts") {
  SeededRng rng(4);
  Round r = honest_round(rng, 3);
  r.reveals.pop_back();
  CHECK_THROWS_AS((void)drf_round(r.tickets, r.reveals, 101), std::invalid_argument);
  CHECK_THROWS_AS((void)drf_round({}, {rng.next_seed32()}, 101), std::invalid_argument);
}

TEST_CASE("quorum selection is a valid deterministic subset") {
  std::vector<int> eligible = {3, 1, 4, 15, 9, 2, 6, 53, 5, 8};
  SeededRng rng(88);
  for (int rep = 0; rep < 50; rep++) {
    u64 p = rng.next_u64();
    QuorumResult r = select_quorum(p, eligible, 4);
    CHECK(r.p == p);
    REQUIRE(r.selected.size() == 4);
    std::vector<int> sorted = r.selected;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    for (int node : r.selected)
      CHECK(std::find(eligible.begin(), eligible.end(), node) != eligible.end());
    CHECK(r.prover == r.selected[p % r.selected.size()]);
    // same P, same inputs: every node computes the identical quorum
    QuorumResult again = select_quorum(p, eligible, 4);
    CHECK(again.selected == r.selected);
    CHECK(again.prover == r.prover);
  }
  QuorumResult all = select_quorum(7, eligible, eligible.size());
  std::vector<int> sel = all.selected, want = eligible;
  std::sort(sel.begin(), sel.end());
  std::sort(want.begin(), want.end());
  CHECK(sel == want);
  CHECK(select_quorum(9, eligible, 0).selected.empty());
  CHECK(select_quorum(9, eligible, 0).prover == -1);
}

TEST_CASE("must-include nodes are seated first and never redrawn") {
  std::vector<int> eligible = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  QuorumResult r = select_quorum(424242, eligible, 4, {7, 3});
  REQUIRE(r.selected.size() == 4);
  CHECK(r.selected[0] == 7);
  CHECK(r.selected[1] == 3);
  CHECK(std::count(r.selected.begin(), r.selected.end(), 7) == 1);
  CHECK(std::count(r.selected.begin(), r.selected.end(), 3) == 1);
  QuorumResult whole = select_quorum(11, eligible, 2, {5, 1});
  CHECK(whole.selected == std::vector<int>{5, 1});
}

TEST_CASE("selection argument validation") {
  std::vector<int> eligible = {1, 2, 3};
  CHECK_THROWS_AS((void)select_quorum(0, eligible, 4), std::invalid_argument);
  CHECK_THROWS_AS((void)select_quorum(0, eligible, 2, {1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS((void)select_quorum(0, eligible, 2, {9}), std::invalid_argument);
  CHECK_THROWS_AS((void)select_quorum(0, eligible, 2, {}, {0.5, 0.5}), std::invalid_argument);
  CHECK_NOTHROW((void)select_quorum(0, eligible, 2, {}, {0.5, 0.5, 0.5}));
}

TEST_CASE("uniform draws spread evenly across the eligible set") {
  std::vector<int> eligible(10);
  std::iota(eligible.begin(), eligible.end(), 0);
  std::map<int, int> hits;
  SeededRng rng(3001);
  const int rounds = 30000;
  for (int i = 0; i < rounds; i++)
    for (int node : select_quorum(rng.next_u64(), eligible, 3).selected) hits[node]++;
  for (int node : eligible) {
    double freq = (double)hits[node] / rounds;  // expect q/n = 0.3
    CHECK(freq > 0.285);
    CHECK(freq < 0.315);
  }
}

TEST_CASE("weighted draws track the weight ratios") {
  SeededRng rng(3002);
  std::vector<int> eligible = {0, 1, 2};
  std::map<int, int> hits;
  const int rounds = 30000;
  for (int i = 0; i < rounds; i++)
    hits[select_quorum(rng.next_u64(), eligible, 1, {}, {1.0, 2.0, 1.0}).selected[0]]++;
  CHECK((double)hits[1] / rounds == doctest::Approx(0.5).epsilon(0.04));
  CHECK((double)hits[0] / rounds == doctest::Approx(0.25).epsilon(0.08));
  CHECK((double)hits[2] / rounds == doctest::Approx(0.25).epsilon(0.08));

  // overwhelming weight wins essentially always
  int heavy = 0;
  for (int i = 0; i < 2000; i++)
    heavy += select_quorum(rng.next_u64(), {0, 1, 2, 3}, 1, {}, {100.0, 0.0, 0.0, 0.0}).selected[0] == 0;
  CHECK(heavy >= 1995);
}

TEST_CASE("zero weights floor at a selectable minimum") {
  SeededRng rng(3003);
  std::vector<int> eligible = {0, 1, 2, 3};
  std::map<int, int> hits;
  for (int i = 0; i < 4000; i++)
    hits[select_quorum(rng.next_u64(), eligible, 1, {}, {0.0, 0.0, 0.0, 0.0}).selected[0]]++;
  for (int node : eligible) CHECK(hits[node] > 800);  // expect ~1000 each
}

TEST_CASE("lottery designates one prover and keeps the rest as validators") {
  CHECK(lottery_step({10, 20, 30}, 0).prover == 10);
  LotteryResult r = lottery_step({10, 20, 30}, 4);
  CHECK(r.prover == 20);
  CHECK(r.validators == std::vector<int>{10, 30});
  CHECK(lottery_step({10, 20, 30}, 5).prover == 30);
  CHECK(lottery_step({7, 8}, 1001).prover == 8);
  CHECK_THROWS_AS((void)lottery_step({42}, 0), std::invalid_argument);
  CHECK_THROWS_AS((void)lottery_step({}, 0), std::invalid_argument);
}

TEST_CASE("drf output spreads over small moduli") {
  SeededRng rng(7117);
  std::vector<int> count(101, 0);
  const int rounds = 5000;
  for (int i = 0; i < rounds; i++) {
    Round r = honest_round(rng, 3);
    DrfOutcome out = drf_round(r.tickets, r.reveals, 101);
    REQUIRE(out.ok);
    count[out.p]++;
  }
  for (int c : count) {
    CHECK(c > 15);  // expected ~49.5 per residue
    CHECK(c < 100);
  }
}
