#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "mpcnet/chain.hpp"
#include "mpcnet/engine.hpp"

using namespace mpcnet;
using namespace mpcnet::testutil;

namespace {

Circuit one_mul() {
  return parse_circuit("in 0 x\nin 1 y\nmul x y z\nout z\n");
}

}  // namespace

TEST_CASE("honest single multiplication") {
  SessionResult r = run_plain<F61>(one_mul(), 2, {{3}, {4}});
  REQUIRE(r.ok);
  CHECK(r.outputs == std::vector<u64>{12});
  CHECK(r.abort_reason.empty());
  CHECK(r.blamed_party == -1);
  CHECK(r.transcript_hash != Transcript::genesis());
  CHECK(r.roster.size() == 2);

  // measured traffic equals the analytic plan
  CHECK(r.stats.envelopes == r.stats.analytic_envelopes);
  CHECK(r.stats.logical_messages == r.stats.analytic_logical_messages);
  CHECK(r.stats.opened_values == r.stats.analytic_opened_values);
  CHECK(r.stats.muleps_values_delivered == r.stats.analytic_muleps_values);
  CHECK(r.stats.rounds == 13);  // 2 input + 4 multiply + 7 output
  CHECK(r.stats.envelopes == 26);
  CHECK(r.stats.opened_values == 7);  // 6 per multiplication + e

  // consumption equals the static cost report
  CostReport c = cost(one_mul());
  CHECK(r.stats.triples_used == c.triples_required);
  CHECK(r.stats.masks_used == c.masks_required);
  CHECK(r.stats.singles_used == c.singles_required);
  CHECK(r.stats.bits_used == c.bits_required);
}

TEST_CASE("honest sessions match plaintext evaluation across shapes") {
  int ncase = 0;
  for (int n : {2, 3, 5, 10}) {
    for (u64 seed = 0; seed < 3; seed++) {
      RandomInstance inst = random_instance(1000 * n + seed, n, 5 + seed * 7);
      SessionConfig cfg;
      cfg.seed = seed + 1;
      cfg.keep_transcript_records = false;
      SessionResult r = run_plain<F61>(inst.circuit, n, inst.inputs, cfg, {}, seed + 50);
      REQUIRE(r.ok);
      CHECK(r.outputs == inst.expected);
      CHECK(r.stats.envelopes == r.stats.analytic_envelopes);
      CHECK(r.stats.logical_messages == r.stats.analytic_logical_messages);
      CHECK(r.stats.opened_values == r.stats.analytic_opened_values);
      CHECK(r.stats.muleps_values_delivered == r.stats.analytic_muleps_values);
      ncase++;
    }
  }
  CHECK(ncase == 12);
}

TEST_CASE("linear-only circuit needs no triples") {
  Circuit c = parse_circuit("in 0 x\nin 1 y\nadd x y s\nsmul 7 s t\naddc 9 t u\nout u\n");
  SessionResult r = run_plain<F61>(c, 2, {{100}, {200}});
  REQUIRE(r.ok);
  CHECK(r.outputs == std::vector<u64>{(100 + 200) * 7 + 9});
  CHECK(r.stats.triples_used == 0);
  CHECK(r.stats.opened_values == 1);  // only the checking coefficient
  CHECK(r.stats.rounds == 2 + 7);
}

TEST_CASE("multi-input providers and idle parties") {
  // party 0 provides two inputs, party 2 none
  Circuit c = parse_circuit("in 0 a\nin 1 b\nin 0 c\nmul a b ab\nadd ab c s\nout s\n");
  SessionResult r = run_plain<F61>(c, 3, {{5, 11}, {7}, {}});
  REQUIRE(r.ok);
  CHECK(r.outputs == std::vector<u64>{5 * 7 + 11});
}

TEST_CASE("small field session") {
  Circuit c = parse_circuit("modulus 101\nin 0 x\nin 1 y\nmul x y z\nout z\n");
  SessionResult r = run_plain<F101>(c, 3, {{57}, {88}, {}});
  REQUIRE(r.ok);
  CHECK(r.outputs == std::vector<u64>{57 * 88 % 101});
}

TEST_CASE("session constructor rejects bad setups") {
  Circuit c = one_mul();
  SeededRng rng(1);
  // wrong party order in bundles
  {
    auto d = deal_for<F61>(c, 2, 1);
    std::vector<PartyBundle<F61>> b;
    b.push_back(std::move(d.parties[1]));
    b.push_back(std::move(d.parties[0]));
    CHECK_THROWS_AS(Session<F61>(c, std::move(b), {{3}, {4}}, {}, {}), std::invalid_argument);
  }
  // circuit modulus vs field mismatch
  {
    Circuit c101 = parse_circuit("modulus 101\nin 0 x\nout x\n");
    auto d = deal_for<F61>(c, 2, 1);
    CHECK_THROWS_AS(Session<F61>(c101, bundles_of(std::move(d)), {{3}, {4}}, {}, {}),
                    std::invalid_argument);
  }
  // too few input values
  {
    auto d = deal_for<F61>(c, 2, 1);
    CHECK_THROWS_AS(Session<F61>(c, bundles_of(std::move(d)), {{3}}, {}, {}),
                    std::invalid_argument);
  }
  // adversary controlling every party
  {
    auto d = deal_for<F61>(c, 2, 1);
    AdversarySpec adv = AdversarySpec::parse("0:tamper-open:1;1:tamper-mac:1");
    CHECK_THROWS_AS(Session<F61>(c, bundles_of(std::move(d)), {{3}, {4}}, {}, std::move(adv)),
                    std::invalid_argument);
  }
  // bundle too small: the shortfall surfaces as PreprocError during the run
  {
    SeededRng r2(9);
    auto d = make_dealer_output<F61>(2, BundleSpec{1, 2, 2, 0}, r2);  // needs 2 triples
    Session<F61> s(c, bundles_of(std::move(d)), {{3}, {4}}, {}, {});
    CHECK_THROWS_AS((void)s.run(), PreprocError);
  }
}

TEST_CASE("open and multiply building blocks") {
  Circuit c = one_mul();
  auto d = deal_for<F61>(c, 3, 7, 2);
  // statically known sharings via the dealer view
  F61 alpha = d.alpha();
  Session<F61> s(c, bundles_of(std::move(d)), {{3}, {4}, {}}, {}, {});

  auto x = s.input_col(0, F61(21));
  auto y = s.input_col(1, F61(2));
  CHECK(s.open_col(s.add_cols(x, y), "open").value() == 23);
  CHECK(s.open_col(s.smul_col(F61(5), x), "open").value() == 105);
  CHECK(s.open_col(s.add_const_col(x, F61(9)), "open").value() == 30);
  CHECK(s.open_col(s.sub_cols(x, y), "open").value() == 19);
  CHECK(s.open_col(s.constant_col(F61(77)), "open").value() == 77);

  auto z = s.mul_cols(x, y);
  CHECK(s.open_col(z, "open").value() == 42);

  // the five linear opens hold indices 0-4; the multiply appended t sigma
  // rho E eps delta at 5-10 and the final open put the product at 11
  auto& log = s.party(0).opened_log;
  REQUIRE(log.size() == 12);
  CHECK(log[8].value == F61());  // sacrifice residue opened to zero
  CHECK(log[11].value.value() == 42);
  // every opened value's mac shares sum to alpha times the agreed value
  for (std::size_t j = 0; j < log.size(); j++) {
    F61 mac;
    for (int p = 0; p < 3; p++) mac += s.party(p).opened_log[j].mac_share;
    CHECK(mac == alpha * log[j].value);
  }

  // seeded check passes on an honest log and leaves it intact
  s.mac_check_seeded();
  CHECK(s.party(0).opened_log.size() == 12);
  s.mac_check_seeded();  // repeatable
}

TEST_CASE("mac check demands a non-empty log") {
  Circuit c = one_mul();
  auto d = deal_for<F61>(c, 2, 3);
  Session<F61> s(c, bundles_of(std::move(d)), {{1}, {2}}, {}, {});
  CHECK_THROWS_AS(s.mac_check_seeded(), std::logic_error);
}

TEST_CASE("every tampering behavior aborts with the right blame") {
  Circuit c = one_mul();
  std::vector<std::vector<u64>> ins = {{3}, {4}};

  struct Case {
    const char* adv;
    const char* reason;
    int blamed;
    u64 round;
  };
  // occurrence walk for party 1's open-class slots: 0=t 1=sigma 2=rho
  // 3=sacrifice-residue 4=checking-coefficient 5=output-value 6=output-mac
  const Case cases[] = {
      {"1:tamper-open:5:0", "mac-check-failed", -1, 9},       // t: silent until the mac check
      {"1:tamper-open:5:1", "preprocessing-corrupt", -1, 5},  // sigma skews the residue
      {"1:tamper-open:5:2", "preprocessing-corrupt", -1, 5},  // rho skews the residue
      {"1:tamper-open:5:3", "preprocessing-corrupt", -1, 5},  // residue share itself
      {"1:tamper-open:5:4", "mac-check-failed", -1, 9},       // checking coefficient
      {"1:tamper-open:5:5", "bad-commitment", 1, 12},         // output value vs commitment
      {"1:tamper-open:5:6", "bad-commitment", 1, 12},         // output mac vs commitment
      {"1:wrong-epsilon:5:0", "mac-check-failed", -1, 9},     // eps
      {"1:wrong-epsilon:5:1", "mac-check-failed", -1, 9},     // delta
      {"0:tamper-mac:5", "mac-check-failed", -1, 9},
      {"1:tamper-mac:2305843009213693950", "mac-check-failed", -1, 9},  // -1 lie
      {"1:abort-at:1", "abort-attack", 1, 1},
      {"1:abort-at:3", "abort-attack", 1, 3},
      {"0:abort-at:12", "abort-attack", 0, 12},
  };
  for (const Case& k : cases) {
    CAPTURE(k.adv);
    SessionResult r = run_plain<F61>(c, 2, ins, {}, AdversarySpec::parse(k.adv), 77);
    CHECK(!r.ok);
    CHECK(r.abort_reason == k.reason);
    CHECK(r.blamed_party == k.blamed);
    CHECK(r.abort_round == k.round);
    CHECK(r.outputs.empty());
  }
}

TEST_CASE("corrupted triples trip the sacrifice on either slot") {
  // dealer-side corruption keeps macs consistent, so only the sacrifice can
  // object; both the working and the sacrificed triple are covered
  Circuit c = one_mul();
  for (std::size_t idx : {std::size_t(0), std::size_t(1)}) {
    SessionResult r = run_mutated<F61>(c, 2, {{3}, {4}}, {}, {}, 7, [&](DealerOutput<F61>& d) {
      corrupt_triple_c(d, idx, F61(5));
    });
    CHECK(!r.ok);
    CHECK(r.abort_reason == "preprocessing-corrupt");
    CHECK(r.blamed_party == -1);
    CHECK(r.abort_round == 5);
  }
}

TEST_CASE("tampering any occurrence in a deeper circuit still aborts") {
  RandomInstance inst = random_instance(5, 3, 6);
  u64 total = 0;
  for (u64 occ = 0; occ < 10; occ++) {
    AdversarySpec adv = AdversarySpec::parse("2:tamper-open:17:" + std::to_string(occ));
    SessionConfig cfg;
    cfg.keep_transcript_records = false;
    SessionResult r = run_plain<F61>(inst.circuit, 3, inst.inputs, cfg, std::move(adv), 8);
    CHECK(!r.ok);
    CHECK((r.abort_reason == "mac-check-failed" || r.abort_reason == "preprocessing-corrupt" ||
           r.abort_reason == "bad-commitment"));
    total++;
  }
  CHECK(total == 10);
}

TEST_CASE("periodic checks catch tampering before the output phase") {
  // two multiplicative layers; the layer check fires right after the tamper
  Circuit c = parse_circuit("in 0 x\nin 1 y\nmul x y a\nmul a y b\nout b\n");
  AdversarySpec adv = AdversarySpec::parse("0:tamper-open:3:0");

  SessionResult lazy = run_plain<F61>(c, 2, {{3}, {4}}, {}, adv, 5);
  SessionConfig cfg;
  cfg.periodic_mac_check = true;
  SessionResult eager = run_plain<F61>(c, 2, {{3}, {4}}, cfg, adv, 5);

  CHECK(!lazy.ok);
  CHECK(!eager.ok);
  CHECK(lazy.abort_reason == "mac-check-failed");
  CHECK(eager.abort_reason == "mac-check-failed");
  CHECK(eager.abort_round < lazy.abort_round);

  // honest run with periodic checks still matches its (larger) plan
  SessionResult honest = run_plain<F61>(c, 2, {{3}, {4}}, cfg, {}, 5);
  REQUIRE(honest.ok);
  CHECK(honest.outputs == std::vector<u64>{3 * 4 * 4});
  CHECK(honest.stats.envelopes == honest.stats.analytic_envelopes);
  SessionResult plainr = run_plain<F61>(c, 2, {{3}, {4}}, {}, {}, 5);
  CHECK(honest.stats.rounds > plainr.stats.rounds);
}

TEST_CASE("corrupted triple in a long run names no honest value") {
  // corruption deep in the bundle: only the multiplication that consumes
  // that triple trips the sacrifice
  RandomInstance inst = random_instance(11, 2, 8);
  SessionResult r = run_mutated<F61>(inst.circuit, 2, inst.inputs, {}, {}, 31,
                                     [](DealerOutput<F61>& d) {
                                       corrupt_triple_c(d, 6, F61(12345));
                                     });
  CHECK(!r.ok);
  CHECK(r.abort_reason == "preprocessing-corrupt");
}

TEST_CASE("mac identity: broadcast sigma values sum to zero") {
  // proofshare sigma values of honest runs sum to zero exactly
  for (u64 seed = 0; seed < 5; seed++) {
    RandomInstance inst = random_instance(seed + 200, 3, 4);
    SessionConfig cfg;
    cfg.seed = seed + 1;
    SessionResult r = run_plain<F61>(inst.circuit, 3, inst.inputs, cfg, {}, seed + 60);
    REQUIRE(r.ok);
    F61 sum;
    for (u64 sv : r.proof.sigma) sum += F61(sv);
    CHECK(sum == F61());
    // and the proof verifies against the roster
    VerifyOutcome v = verify_proof(r.proof, r.roster);
    CHECK(v.ok);
    CHECK(r.proof.results == r.outputs);
    CHECK(r.proof.sigma.size() == 3);
    CHECK(r.proof.circuit_hash == hex_encode(circuit_hash(inst.circuit)));
  }
}

TEST_CASE("deterministic transcript hash") {
  Circuit c = one_mul();
  SessionConfig cfg;
  cfg.seed = 9;
  cfg.session_id = 4;
  SessionResult a = run_plain<F61>(c, 2, {{3}, {4}}, cfg, {}, 13);
  SessionResult b = run_plain<F61>(c, 2, {{3}, {4}}, cfg, {}, 13);
  CHECK(a.transcript_hash == b.transcript_hash);
  CHECK(a.outputs == b.outputs);
  CHECK(a.proof.signatures == b.proof.signatures);

  // any knob change moves the hash
  SessionConfig cfg2 = cfg;
  cfg2.seed = 10;
  SessionResult cdiff = run_plain<F61>(c, 2, {{3}, {4}}, cfg2, {}, 13);
  CHECK(cdiff.transcript_hash != a.transcript_hash);
  SessionResult ddiff = run_plain<F61>(c, 2, {{3}, {4}}, cfg, {}, 14);  // dealer seed
  CHECK(ddiff.transcript_hash != a.transcript_hash);
  SessionResult ediff = run_plain<F61>(c, 2, {{3}, {5}}, cfg, {}, 13);  // inputs
  CHECK(ediff.transcript_hash != a.transcript_hash);
  // aborting runs are deterministic too
  AdversarySpec adv = AdversarySpec::parse("1:tamper-open:5:0");
  SessionResult t1 = run_plain<F61>(c, 2, {{3}, {4}}, cfg, adv, 13);
  SessionResult t2 = run_plain<F61>(c, 2, {{3}, {4}}, cfg, adv, 13);
  CHECK(t1.transcript_hash == t2.transcript_hash);
  CHECK(t1.transcript_hash != a.transcript_hash);
}

TEST_CASE("beaver openings hide the inputs") {
  // with fresh triples the opened eps = x - a is uniform: across dealer
  // seeds the same input produces many distinct opened values
  Circuit c = parse_circuit("modulus 101\nin 0 x\nin 1 y\nmul x y z\nout z\n");
  std::set<u64> seen;
  for (u64 ds = 0; ds < 200; ds++) {
    auto d = deal_for<F101>(c, 2, ds + 1);
    Session<F101> s(c, bundles_of(std::move(d)), {{57}, {4}}, {}, {});
    auto x = s.input_col(0, F101(57));
    auto y = s.input_col(1, F101(4));
    (void)s.mul_cols(x, y);
    // opened entries: t sigma rho E eps delta
    auto& log = s.party(0).opened_log;
    seen.insert(log[log.size() - 2].value.value());
  }
  // uniform draws would cover ~87 of 101 values; far from constant
  CHECK(seen.size() > 60);
}

TEST_CASE("sacrifice detection probability is exactly 1 - 1/p") {
  // force the opened sacrifice coefficient t to every field value: with the
  // working triple's product shifted, the residue opens to t*delta, zero
  // only at t = 0
  Circuit c = parse_circuit("modulus 101\nin 0 x\nin 1 y\nmul x y z\nout z\n");
  int detected = 0, silent_wrong = 0;
  for (u64 t = 0; t < 101; t++) {
    auto d = deal_for<F101>(c, 2, 5);
    corrupt_triple_c(d, 0, F101(17));
    // retarget the first opened single to t, keeping its mac consistent
    F101 alpha = d.alpha();
    F101 rest = d.parties[1].singles[0].value;
    F101 rest_mac = d.parties[1].singles[0].mac;
    d.parties[0].singles[0].value = F101(t) - rest;
    d.parties[0].singles[0].mac = alpha * F101(t) - rest_mac;
    SessionResult r = run_session<F101>(c, bundles_of(std::move(d)), {{57}, {88}}, {}, {});
    if (!r.ok) {
      CHECK(r.abort_reason == "preprocessing-corrupt");
      detected++;
    } else {
      // the single blind spot: output silently off by delta
      CHECK(r.outputs[0] == (57 * 88 + 17) % 101);
      silent_wrong++;
    }
  }
  CHECK(detected == 100);
  CHECK(silent_wrong == 1);
}

TEST_CASE("analytic plan tracks gadget layers") {
  Circuit c = parse_circuit(
      "cmpbits 8\nin 0 a\nin 1 b\ncmp a b lt\ntrunc 8 3 a t\nmul lt t m\nout m\n");
  SessionPlan p2 = plan_session(c, 2);
  SessionPlan p5 = plan_session(c, 5);
  CHECK(p2.providers == 2);
  CHECK(p5.opened_values == p2.opened_values);  // openings are party-count free
  CHECK(p5.envelopes > p2.envelopes);
  // formula strings expose the arithmetic
  CHECK(p2.formula.find("envelopes") != std::string::npos);

  SessionResult r = run_plain<F61>(c, 2, {{200, 77}, {13}}, {}, {}, 3);
  REQUIRE(r.ok);
  CHECK(r.outputs == std::vector<u64>{(200 < 13 ? 1u : 0u) * (200 >> 3)});
  CHECK(r.stats.envelopes == p2.envelopes);
  CHECK(r.stats.opened_values == p2.opened_values);
  CHECK(r.stats.logical_messages == p2.logical_messages);
}

TEST_CASE("signature keys derive per party and session") {
  auto k0 = session_sig_keys(1, 1, 0);
  auto k1 = session_sig_keys(1, 1, 1);
  auto k0b = session_sig_keys(1, 1, 0);
  auto k0s = session_sig_keys(2, 1, 0);
  CHECK(k0.public_key == k0b.public_key);
  CHECK(k0.public_key != k1.public_key);
  CHECK(k0.public_key != k0s.public_key);
}

TEST_CASE("timeout tolerance delays the abort-attack blame") {
  Circuit c = one_mul();
  SessionConfig patient;
  patient.timeout_rounds = 3;
  AdversarySpec adv = AdversarySpec::parse("1:abort-at:3");
  SessionResult r = run_plain<F61>(c, 2, {{3}, {4}}, patient, adv, 21);
  CHECK(!r.ok);
  CHECK(r.abort_reason == "abort-attack");
  CHECK(r.blamed_party == 1);
  CHECK(r.abort_round == 5);  // silent at 3,4,5: three strikes
}
