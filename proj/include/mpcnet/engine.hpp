#pragma once

#include <algorithm>
#include <chrono>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mpcnet/circuit.hpp"
#include "mpcnet/gadget_costs.hpp"
#include "mpcnet/preprocessing.hpp"
#include "mpcnet/proof.hpp"
#include "mpcnet/sign.hpp"
#include "mpcnet/transport.hpp"

namespace mpcnet {

enum class Phase { Init, Running, Checking, Done, Aborted };

/// Internal control flow for protocol-level failures. run() converts these
/// into an aborted SessionResult; they never escape run_session.
struct ProtocolAbort {
  std::string reason;  // "preprocessing-corrupt" | "mac-check-failed" | "bad-commitment"
  int party = -1;      // offender when attributable
};

/// One party's record of a value the group opened: the agreed public value
/// plus this party's MAC share, both consumed by the closing MAC check.
template <class F>
struct OpenedEntry {
  u64 label;  // opening sequence number
  F value;
  F mac_share;
};

template <class F>
struct PartyState {
  PartyId id;
  PartyBundle<F> preproc;
  SigKeyPair keys;
  SeededRng rng;  // commitment nonces and check seeds
  std::vector<OpenedEntry<F>> opened_log;
  Phase phase = Phase::Init;

  PartyState(PartyId id_, PartyBundle<F>&& bundle, SigKeyPair keys_, u64 rng_seed)
      : id(id_), preproc(std::move(bundle)), keys(keys_), rng(rng_seed) {}
};

struct SessionConfig {
  u64 session_id = 1;
  u64 seed = 1;
  u64 timeout_rounds = 1;
  bool periodic_mac_check = false;      // extra seeded check after each layer
  bool keep_transcript_records = true;  // false: hash-only (bulk test loops)
};

struct SessionStats {
  u64 rounds = 0;
  u64 envelopes = 0;
  u64 logical_messages = 0;
  u64 opened_values = 0;
  u64 muleps_values_delivered = 0;
  u64 triples_used = 0, masks_used = 0, singles_used = 0, bits_used = 0;
  // analytic counterparts derived from the circuit alone; an honest run must
  // match them exactly
  u64 analytic_envelopes = 0;
  u64 analytic_logical_messages = 0;
  u64 analytic_opened_values = 0;
  u64 analytic_muleps_values = 0;
  std::string formula;
  double offline_seconds = 0, online_seconds = 0;
};

struct SessionResult {
  bool ok = false;
  std::string abort_reason;
  int blamed_party = -1;
  u64 abort_round = 0;
  std::vector<u64> outputs;
  ComputationProof proof;
  std::vector<PubKey> roster;
  Digest transcript_hash{};
  SessionStats stats;
};

/// Gate ids grouped by multiplicative depth, in the exact order the engine
/// schedules them. Input/output pseudo-gates are excluded; `out_wires`
/// receives the output wire list when given.
inline std::map<int, std::vector<int>> circuit_layers(const Circuit& c,
                                                      std::vector<int>* out_wires = nullptr) {
  std::vector<int> depth(c.n_wires, 0);
  std::map<int, std::vector<int>> layers;
  for (int gi = 0; gi < (int)c.gates.size(); gi++) {
    const Gate& g = c.gates[gi];
    int d = 0;
    for (int w : g.in) d = std::max(d, depth[w]);
    int gd = 0;
    switch (g.kind) {
      case GateKind::kMul: gd = 1; break;
      case GateKind::kCmp: gd = compare_cost(c.cmp_bits, c.modulus).depth; break;
      case GateKind::kTrunc: gd = trunc_cost(g.trunc_k, g.trunc_m, c.modulus).depth; break;
      case GateKind::kFlmul: gd = flmul_cost(c.fl_bits, c.modulus).depth; break;
      default: break;
    }
    for (int w : g.out) depth[w] = d + gd;
    if (g.kind == GateKind::kOutput && out_wires) out_wires->push_back(g.in[0]);
    if (g.kind == GateKind::kInput || g.kind == GateKind::kOutput) continue;
    layers[d].push_back(gi);
  }
  return layers;
}

/// Analytic message/opening counts for running `c` with n parties: an
/// independent formula the fabric's actual bookkeeping is checked against.
struct SessionPlan {
  u64 broadcast_rounds = 0;  // rounds where every party broadcasts once
  u64 providers = 0;         // parties contributing at least one input
  u64 envelopes = 0;
  u64 logical_messages = 0;
  u64 opened_values = 0;
  u64 muleps_values = 0;
  std::string formula;
};

inline SessionPlan plan_session(const Circuit& c, int n, bool periodic_mac_check = false) {
  SessionPlan plan;
  std::vector<bool> provides(n, false);
  for (const Gate& g : c.gates)
    if (g.kind == GateKind::kInput) provides.at(g.party) = true;
  for (int q = 0; q < n; q++) plan.providers += provides[q];

  u64 rb = 0;       // rounds in which all n parties broadcast
  u64 copens = 0;   // gadget mask openings (one per trunc scan, incl. inside cmp/flmul)
  bool opened_yet = false;
  auto layers = circuit_layers(c);
  for (const auto& kv : layers) {
    u64 muls = 0, cmps = 0, flmuls = 0;
    int trunc_scan = 0;
    bool truncs = false;
    for (int gi : kv.second) {
      const Gate& g = c.gates[gi];
      if (g.kind == GateKind::kMul) muls++;
      if (g.kind == GateKind::kCmp) cmps++;
      if (g.kind == GateKind::kFlmul) flmuls++;
      if (g.kind == GateKind::kTrunc) {
        truncs = true;
        trunc_scan = std::max(trunc_scan, g.trunc_m);
      }
    }
    if (muls) rb += 4;
    if (cmps) {
      rb += 1 + 4 * (u64)c.cmp_bits;
      copens += cmps;
    }
    if (truncs) {
      rb += 1 + 4 * (u64)trunc_scan;
      copens += std::count_if(kv.second.begin(), kv.second.end(), [&](int gi) {
        return c.gates[gi].kind == GateKind::kTrunc;
      });
    }
    if (flmuls) {
      rb += 8 * (u64)c.fl_bits + 19;
      copens += 3 * flmuls;
    }
    opened_yet = opened_yet || muls || cmps || truncs || flmuls;
    if (periodic_mac_check && opened_yet) rb += 4;  // seeded check after the layer
  }
  rb += 7;  // output: e-open, sig commit/open, outcommit, alphaopen, outopen, proofshare

  CostReport cr = cost(c);
  u64 total_muls = cr.mul_gates + cr.gadget_muls;
  plan.broadcast_rounds = rb;
  plan.envelopes = (u64)n * rb + plan.providers * (u64)n;
  plan.logical_messages = (u64)(n - 1) * ((u64)n * rb + 2 * plan.providers);
  plan.opened_values = 6 * total_muls + copens + 1;
  plan.muleps_values = 2 * total_muls * (u64)n * (u64)(n - 1);

  std::ostringstream f;
  f << "envelopes = n*Rb + P*n = " << n << '*' << rb << " + " << plan.providers << '*' << n
    << " = " << plan.envelopes << "; logical = (n-1)*(n*Rb + 2*P) = " << plan.logical_messages
    << "; opened = 6*M + C + 1 = 6*" << total_muls << " + " << copens << " + 1 = "
    << plan.opened_values << "; muleps-values = 2*M*n*(n-1) = 2*" << total_muls << '*' << n << '*'
    << (n - 1) << " = " << plan.muleps_values;
  plan.formula = f.str();
  return plan;
}

/// Derive party i's signature keypair from the session seed. Shared with the
/// CLI so a verifier can rebuild the roster without the session object.
inline SigKeyPair session_sig_keys(u64 seed, u64 session_id, int party) {
  Bytes b;
  put_u64_le(b, seed);
  put_u64_le(b, session_id);
  put_u64_le(b, (u64)party);
  b.push_back('s');
  b.push_back('i');
  b.push_back('g');
  return sig_keygen(sha3_256(b));
}

/// Lockstep simulator of one protocol session: n party state machines plus
/// the fabric between them. "Columns" hold one value per party, so a shared
/// value <x> is a Col and party p's AuthShare is col[p].
template <class F>
class Session {
 public:
  using Col = std::vector<AuthShare<F>>;

  Session(const Circuit& c, std::vector<PartyBundle<F>> bundles,
          std::vector<std::vector<u64>> inputs, SessionConfig cfg, AdversarySpec adversary);

  // the fabric points at the member transcript; relocation would dangle
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  SessionResult run();

  // --- building blocks, public for gadget code and protocol-level tests ---

  int n() const { return n_; }
  const Circuit& circuit() const { return circuit_; }
  PartyState<F>& party(int i) { return parties_[i]; }
  u64 current_round() const { return round_; }
  Transcript& transcript() { return transcript_; }

  /// Everyone broadcasts its share of each column; returns the agreed public
  /// values and appends them to every party's opened log.
  std::vector<F> open_cols(const std::vector<Col>& cols, const std::string& msg_type);
  F open_col(const Col& col, const std::string& msg_type);

  /// Beaver multiplication with a sacrifice check, batched over jobs.
  std::vector<Col> mul_batch(const std::vector<std::pair<Col, Col>>& jobs);
  Col mul_cols(const Col& x, const Col& y);

  /// Additively shared public constant: party 0 carries the value.
  Col constant_col(F v) const;
  Col add_cols(const Col& a, const Col& b) const;
  Col sub_cols(const Col& a, const Col& b) const;
  Col smul_col(F k, const Col& a) const;
  Col add_const_col(const Col& a, F c) const;

  Col input_col(int provider, F x);  // single secret injection (tests)

  /// Seed-derived random linear combination over the opened log.
  void mac_check_seeded();
  /// Output-phase variant: coefficients are powers of a freshly opened e.
  void mac_check_epowers();

  // gadget entry points (definitions in gadgets.hpp)
  Col op_and(const Col& a, const Col& b);
  Col op_or(const Col& a, const Col& b);
  Col op_xor(const Col& a, const Col& b);
  Col op_not(const Col& a);
  struct TruncJob {
    Col x;
    int k, m;
  };
  std::vector<Col> op_trunc_batch(const std::vector<TruncJob>& jobs);
  Col op_trunc(const Col& x, int k, int m);
  Col op_lt_pow2(const Col& x, int k);
  std::vector<Col> op_compare_batch(const std::vector<std::pair<Col, Col>>& jobs, int l);
  Col op_compare(const Col& a, const Col& b, int l);
  struct FloatCols {
    Col v, p, z, s;
  };
  std::vector<FloatCols> op_flmul_batch(const std::vector<std::pair<FloatCols, FloatCols>>& jobs);

 private:
  void input_phase();
  void eval_layers();
  void run_layer(const std::vector<int>& gate_ids);
  std::vector<F> output_phase();  // returns outputs, fills proof_
  std::vector<Bytes> commit_open(const std::string& tag, const std::vector<Bytes>& blobs);
  std::vector<std::vector<Envelope>> exchange(std::vector<std::vector<Envelope>> out,
                                              const std::vector<bool>& expected);
  std::vector<std::vector<Envelope>> exchange_all(std::vector<std::vector<Envelope>> out);
  F alpha_of(int p) const { return parties_[p].preproc.alpha; }
  F sigma_lie(int p) const;  // tamper-mac perturbation for party p

  int n_;
  Circuit circuit_;
  std::vector<std::vector<u64>> inputs_;
  SessionConfig cfg_;
  AdversarySpec adversary_;
  Transcript transcript_;
  Fabric fabric_;
  std::vector<PartyState<F>> parties_;
  std::vector<Col> wires_;
  std::vector<int> output_wires_;
  u64 round_ = 1;
  u64 open_label_ = 0;
  ComputationProof proof_;
};

/// One-call façade matching the module-level operation.
template <class F>
SessionResult run_session(const Circuit& c, std::vector<PartyBundle<F>> bundles,
                          std::vector<std::vector<u64>> inputs, SessionConfig cfg,
                          AdversarySpec adversary) {
  Session<F> s(c, std::move(bundles), std::move(inputs), cfg, std::move(adversary));
  return s.run();
}

// ---------------------------------------------------------------------------
// implementation
// ---------------------------------------------------------------------------

template <class F>
Session<F>::Session(const Circuit& c, std::vector<PartyBundle<F>> bundles,
                    std::vector<std::vector<u64>> inputs, SessionConfig cfg,
                    AdversarySpec adversary)
    : n_((int)bundles.size()),
      circuit_(c),
      inputs_(std::move(inputs)),
      cfg_(cfg),
      adversary_(std::move(adversary)),
      transcript_(cfg.keep_transcript_records),
      fabric_(n_, F::modulus, adversary_, cfg.timeout_rounds) {
  if (n_ < 2) throw std::invalid_argument("session: need at least 2 parties");
  adversary_.validate(n_);
  if (circuit_.modulus != F::modulus)
    throw std::invalid_argument("session: circuit modulus does not match the field");
  if ((int)inputs_.size() < n_) inputs_.resize(n_);
  std::vector<std::size_t> need(n_, 0);
  for (const Gate& g : circuit_.gates)
    if (g.kind == GateKind::kInput) need.at(g.party)++;
  for (int q = 0; q < n_; q++)
    if (inputs_[q].size() < need[q])
      throw std::invalid_argument("session: party " + std::to_string(q) +
                                  " supplied too few input values");
  fabric_.attach_transcript(&transcript_);
  parties_.reserve(n_);
  for (int i = 0; i < n_; i++) {
    if (bundles[i].party != i || bundles[i].n != n_)
      throw std::invalid_argument("session: bundle/party mismatch");
    bundles[i].bind_session(cfg_.session_id);
    Bytes rb;
    put_u64_le(rb, cfg_.seed);
    put_u64_le(rb, cfg_.session_id);
    put_u64_le(rb, (u64)i);
    u64 rng_seed = digest_mod(sha3_256(rb), ~u64(0));
    parties_.emplace_back(i, std::move(bundles[i]),
                          session_sig_keys(cfg_.seed, cfg_.session_id, i), rng_seed);
  }
  wires_.resize(circuit_.n_wires);
}

template <class F>
typename Session<F>::Col Session<F>::constant_col(F v) const {
  Col c(n_);
  for (int i = 0; i < n_; i++) c[i] = {i == 0 ? v : F(), alpha_of(i) * v, i};
  return c;
}

template <class F>
typename Session<F>::Col Session<F>::add_cols(const Col& a, const Col& b) const {
  Col c(n_);
  for (int i = 0; i < n_; i++) c[i] = add_shares(a[i], b[i]);
  return c;
}

template <class F>
typename Session<F>::Col Session<F>::sub_cols(const Col& a, const Col& b) const {
  Col c(n_);
  for (int i = 0; i < n_; i++) c[i] = sub_shares(a[i], b[i]);
  return c;
}

template <class F>
typename Session<F>::Col Session<F>::smul_col(F k, const Col& a) const {
  Col c(n_);
  for (int i = 0; i < n_; i++) c[i] = scalar_mul(a[i], k);
  return c;
}

template <class F>
typename Session<F>::Col Session<F>::add_const_col(const Col& a, F k) const {
  Col c(n_);
  for (int i = 0; i < n_; i++) c[i] = add_public(a[i], k, alpha_of(i));
  return c;
}

template <class F>
std::vector<std::vector<Envelope>> Session<F>::exchange(std::vector<std::vector<Envelope>> out,
                                                        const std::vector<bool>& expected) {
  // A timeout above one round tolerates silence: keep running (empty) rounds
  // for the still-missing expected senders until they deliver or the fabric
  // raises the timeout. Honest sessions never retry.
  std::vector<std::vector<Envelope>> merged(n_);
  std::vector<bool> waiting = expected;
  while (true) {
    auto inbox = fabric_.exchange(round_++, std::move(out), waiting);
    for (int q = 0; q < n_; q++)
      for (Envelope& e : inbox[q]) {
        if (waiting[e.sender] && (e.receiver == kBroadcast || e.receiver == q))
          waiting[e.sender] = false;
        merged[q].push_back(std::move(e));
      }
    bool pending = false;
    for (int q = 0; q < n_; q++) pending = pending || waiting[q];
    if (!pending) return merged;
    out.assign(n_, {});
  }
}

template <class F>
std::vector<std::vector<Envelope>> Session<F>::exchange_all(
    std::vector<std::vector<Envelope>> out) {
  return exchange(std::move(out), std::vector<bool>(n_, true));
}

template <class F>
std::vector<F> Session<F>::open_cols(const std::vector<Col>& cols, const std::string& msg_type) {
  std::size_t k = cols.size();
  if (k == 0) return {};
  std::vector<std::vector<Envelope>> out(n_);
  for (int p = 0; p < n_; p++) {
    Envelope e;
    e.receiver = kBroadcast;
    e.msg_type = msg_type;
    e.payload.reserve(8 * k);
    for (const Col& col : cols) put_u64_le(e.payload, col[p].value.value());
    out[p].push_back(std::move(e));
  }
  auto inbox = exchange_all(std::move(out));

  // Broadcast is consistent, so the sums are computed once from the wire
  // view. Adversary-shifted payloads still reduce canonically.
  std::vector<F> values(k);
  {
    std::vector<u128> acc(k, 0);
    int seen = 0;
    for (const Envelope& e : inbox[0]) {
      if (e.msg_type != msg_type) continue;
      if (e.payload.size() != 8 * k) throw std::runtime_error("open: malformed payload");
      for (std::size_t j = 0; j < k; j++)
        acc[j] += get_u64_le(e.payload.data() + 8 * j) % F::modulus;
      seen++;
    }
    if (seen != n_) throw std::runtime_error("open: missing shares");
    for (std::size_t j = 0; j < k; j++) values[j] = F::raw((u64)(acc[j] % F::modulus));
  }
  for (int p = 0; p < n_; p++) {
    auto& log = parties_[p].opened_log;
    for (std::size_t j = 0; j < k; j++) log.push_back({open_label_ + j, values[j], cols[j][p].mac});
  }
  open_label_ += k;
  return values;
}

template <class F>
F Session<F>::open_col(const Col& col, const std::string& msg_type) {
  return open_cols({col}, msg_type)[0];
}

template <class F>
std::vector<typename Session<F>::Col> Session<F>::mul_batch(
    const std::vector<std::pair<Col, Col>>& jobs) {
  std::size_t k = jobs.size();
  if (k == 0) return {};
  struct JobMat {
    TripleShare<F> tr, aux;  // working triple (a,b,c) and sacrificed (f,g,h)
    AuthShare<F> t;
  };
  std::vector<std::vector<JobMat>> mat(n_, std::vector<JobMat>(k));
  for (int p = 0; p < n_; p++) {
    auto& b = parties_[p].preproc;
    for (std::size_t j = 0; j < k; j++) mat[p][j] = {b.take_triple(), b.take_triple(),
                                                     b.take_single()};
  }

  // R1: open the sacrifice scalar t and sigma = b - g
  std::vector<Col> r1(2 * k, Col(n_));
  for (int p = 0; p < n_; p++)
    for (std::size_t j = 0; j < k; j++) {
      r1[2 * j][p] = mat[p][j].t;
      r1[2 * j + 1][p] = sub_shares(mat[p][j].tr.b, mat[p][j].aux.b);
    }
  std::vector<F> ts(k), sigmas(k);
  {
    auto v = open_cols(r1, "open");
    for (std::size_t j = 0; j < k; j++) {
      ts[j] = v[2 * j];
      sigmas[j] = v[2 * j + 1];
    }
  }

  // R2: open rho = t*a - f
  std::vector<Col> r2(k, Col(n_));
  for (int p = 0; p < n_; p++)
    for (std::size_t j = 0; j < k; j++)
      r2[j][p] = sub_shares(scalar_mul(mat[p][j].tr.a, ts[j]), mat[p][j].aux.a);
  std::vector<F> rhos = open_cols(r2, "open");

  // R3: t*c - h - sigma*f - rho*g - sigma*rho opens to 0 for a good triple
  std::vector<Col> r3(k, Col(n_));
  for (int p = 0; p < n_; p++)
    for (std::size_t j = 0; j < k; j++) {
      AuthShare<F> e = sub_shares(scalar_mul(mat[p][j].tr.c, ts[j]), mat[p][j].aux.c);
      e = sub_shares(e, scalar_mul(mat[p][j].aux.a, sigmas[j]));
      e = sub_shares(e, scalar_mul(mat[p][j].aux.b, rhos[j]));
      r3[j][p] = add_public(e, -(sigmas[j] * rhos[j]), alpha_of(p));
    }
  for (F e : open_cols(r3, "open"))
    if (e != F()) throw ProtocolAbort{"preprocessing-corrupt", -1};

  // R4: the Beaver openings epsilon = x - a, delta = y - b
  std::vector<Col> r4(2 * k, Col(n_));
  for (int p = 0; p < n_; p++)
    for (std::size_t j = 0; j < k; j++) {
      r4[2 * j][p] = sub_shares(jobs[j].first[p], mat[p][j].tr.a);
      r4[2 * j + 1][p] = sub_shares(jobs[j].second[p], mat[p][j].tr.b);
    }
  std::vector<F> eps(k), del(k);
  {
    auto v = open_cols(r4, "muleps");
    for (std::size_t j = 0; j < k; j++) {
      eps[j] = v[2 * j];
      del[j] = v[2 * j + 1];
    }
  }

  // z = c + eps*b + delta*a + eps*delta
  std::vector<Col> z(k, Col(n_));
  for (int p = 0; p < n_; p++)
    for (std::size_t j = 0; j < k; j++) {
      AuthShare<F> s = mat[p][j].tr.c;
      s = add_shares(s, scalar_mul(mat[p][j].tr.b, eps[j]));
      s = add_shares(s, scalar_mul(mat[p][j].tr.a, del[j]));
      z[j][p] = add_public(s, eps[j] * del[j], alpha_of(p));
    }
  return z;
}

template <class F>
typename Session<F>::Col Session<F>::mul_cols(const Col& x, const Col& y) {
  return mul_batch({{x, y}})[0];
}

template <class F>
typename Session<F>::Col Session<F>::input_col(int provider, F x) {
  // single-value input (test harness); the circuit path batches per provider
  Col mask(n_);
  for (int p = 0; p < n_; p++) mask[p] = parties_[p].preproc.take_mask();

  std::vector<std::vector<Envelope>> out(n_);
  std::vector<bool> expected(n_, true);
  expected[provider] = false;
  for (int p = 0; p < n_; p++) {
    if (p == provider) continue;
    Envelope e;
    e.receiver = provider;
    e.msg_type = "maskshare";
    put_u64_le(e.payload, mask[p].value.value());
    out[p].push_back(std::move(e));
  }
  auto inbox = exchange(std::move(out), expected);
  F r = mask[provider].value;
  for (const Envelope& e : inbox[provider])
    if (e.msg_type == "maskshare") r += F(get_u64_le(e.payload.data()));

  std::vector<std::vector<Envelope>> out2(n_);
  std::vector<bool> expected2(n_, false);
  expected2[provider] = true;
  Envelope e;
  e.receiver = kBroadcast;
  e.msg_type = "inputeps";
  put_u64_le(e.payload, (x - r).value());
  out2[provider].push_back(std::move(e));
  auto inbox2 = exchange(std::move(out2), expected2);
  F seen;
  for (const Envelope& en : inbox2[0])
    if (en.msg_type == "inputeps") seen = F(get_u64_le(en.payload.data()));
  Col xcol(n_);
  for (int p = 0; p < n_; p++) xcol[p] = add_public(mask[p], seen, alpha_of(p));
  return xcol;
}

template <class F>
void Session<F>::input_phase() {
  std::vector<std::vector<int>> gates_of(n_);  // provider -> input gate ids
  for (int gi = 0; gi < (int)circuit_.gates.size(); gi++) {
    const Gate& g = circuit_.gates[gi];
    if (g.kind == GateKind::kInput) gates_of[g.party].push_back(gi);
  }
  std::vector<int> providers;
  for (int q = 0; q < n_; q++)
    if (!gates_of[q].empty()) providers.push_back(q);
  if (providers.empty()) return;

  // one mask per input gate, consumed in global gate order by every party
  std::map<int, Col> mask_of;  // gate id -> mask column
  for (int gi = 0; gi < (int)circuit_.gates.size(); gi++) {
    if (circuit_.gates[gi].kind != GateKind::kInput) continue;
    Col m(n_);
    for (int p = 0; p < n_; p++) m[p] = parties_[p].preproc.take_mask();
    mask_of[gi] = std::move(m);
  }

  // round A: every party sends its mask shares to each foreign provider
  std::vector<std::vector<Envelope>> out(n_);
  std::vector<bool> expected(n_, false);
  for (int p = 0; p < n_; p++) {
    for (int q : providers) {
      if (q == p) continue;
      Envelope e;
      e.receiver = q;
      e.msg_type = "maskshare";
      for (int gi : gates_of[q]) put_u64_le(e.payload, mask_of[gi][p].value.value());
      out[p].push_back(std::move(e));
      expected[p] = true;
    }
  }
  auto inbox = exchange(std::move(out), expected);

  // round B: providers reconstruct their masks, broadcast epsilon = x - r
  std::vector<std::vector<Envelope>> out2(n_);
  std::vector<bool> expected2(n_, false);
  for (int q : providers) {
    std::vector<F> r(gates_of[q].size());
    for (std::size_t j = 0; j < r.size(); j++) r[j] = mask_of[gates_of[q][j]][q].value;
    for (const Envelope& e : inbox[q]) {
      if (e.msg_type != "maskshare") continue;
      if (e.payload.size() != 8 * r.size())
        throw std::runtime_error("input: malformed mask share");
      for (std::size_t j = 0; j < r.size(); j++) r[j] += F(get_u64_le(e.payload.data() + 8 * j));
    }
    Envelope e;
    e.receiver = kBroadcast;
    e.msg_type = "inputeps";
    auto& queue = inputs_[q];
    for (std::size_t j = 0; j < r.size(); j++) {
      F x = F(queue.front());
      queue.erase(queue.begin());
      put_u64_le(e.payload, (x - r[j]).value());
    }
    out2[q].push_back(std::move(e));
    expected2[q] = true;
  }
  auto inbox2 = exchange(std::move(out2), expected2);

  // everyone applies <x> = <r> + eps; the broadcast is consistent, so the
  // payload seen by party 0 is the payload seen by all
  for (int q : providers) {
    const Envelope* eps_env = nullptr;
    for (const Envelope& e : inbox2[0])
      if (e.msg_type == "inputeps" && e.sender == q) eps_env = &e;
    if (!eps_env || eps_env->payload.size() != 8 * gates_of[q].size())
      throw std::runtime_error("input: missing epsilon broadcast");
    for (std::size_t j = 0; j < gates_of[q].size(); j++) {
      int gi = gates_of[q][j];
      F epsv = F(get_u64_le(eps_env->payload.data() + 8 * j));
      Col x(n_);
      for (int p = 0; p < n_; p++) x[p] = add_public(mask_of[gi][p], epsv, alpha_of(p));
      wires_[circuit_.gates[gi].out[0]] = std::move(x);
    }
  }
}

template <class F>
F Session<F>::sigma_lie(int p) const {
  const AdversaryAction* a = adversary_.action_for(p);
  if (!a || a->kind != AdvKind::tamper_mac) return F();
  std::int64_t m = (std::int64_t)F::modulus;
  return F::raw((u64)(((a->offset % m) + m) % m));
}

template <class F>
std::vector<Bytes> Session<F>::commit_open(const std::string& tag,
                                           const std::vector<Bytes>& blobs) {
  std::vector<std::array<std::uint8_t, 16>> nonces(n_);
  std::vector<std::vector<Envelope>> out(n_);
  for (int p = 0; p < n_; p++) {
    nonces[p] = parties_[p].rng.next_nonce16();
    Bytes buf = blobs[p];
    buf.insert(buf.end(), nonces[p].begin(), nonces[p].end());
    Digest d = sha3_256(buf);
    Envelope e;
    e.receiver = kBroadcast;
    e.msg_type = tag + "commit";
    e.payload.assign(d.begin(), d.end());
    out[p].push_back(std::move(e));
  }
  auto inbox = exchange_all(std::move(out));
  std::vector<Digest> committed(n_);
  for (const Envelope& e : inbox[0]) {
    if (e.msg_type != tag + "commit" || e.payload.size() != 32) continue;
    std::copy(e.payload.begin(), e.payload.end(), committed[e.sender].begin());
  }

  std::vector<std::vector<Envelope>> out2(n_);
  for (int p = 0; p < n_; p++) {
    Envelope e;
    e.receiver = kBroadcast;
    e.msg_type = tag + "open";
    e.payload = blobs[p];
    e.payload.insert(e.payload.end(), nonces[p].begin(), nonces[p].end());
    out2[p].push_back(std::move(e));
  }
  auto inbox2 = exchange_all(std::move(out2));
  std::vector<Bytes> opened(n_);
  for (const Envelope& e : inbox2[0]) {
    if (e.msg_type != tag + "open") continue;
    if (e.payload.size() < 16 || sha3_256(e.payload) != committed[e.sender])
      throw ProtocolAbort{"bad-commitment", e.sender};
    opened[e.sender] = Bytes(e.payload.begin(), e.payload.end() - 16);
  }
  return opened;
}

template <class F>
void Session<F>::mac_check_seeded() {
  if (parties_[0].opened_log.empty()) throw std::logic_error("mac_check: opened log is empty");
  for (auto& ps : parties_) ps.phase = Phase::Checking;

  // commit-open 32-byte seeds, combine by 256-bit addition
  std::vector<Bytes> seed_blobs(n_);
  for (int p = 0; p < n_; p++) {
    auto s = parties_[p].rng.next_seed32();
    seed_blobs[p] = Bytes(s.begin(), s.end());
  }
  std::vector<Bytes> seeds = commit_open("seed", seed_blobs);
  std::array<std::uint8_t, 32> s{};
  for (const Bytes& sd : seeds) {
    if (sd.size() != 32) throw ProtocolAbort{"bad-commitment", -1};
    unsigned carry = 0;
    for (int i = 31; i >= 0; i--) {
      unsigned v = (unsigned)s[i] + sd[i] + carry;
      s[i] = (std::uint8_t)v;
      carry = v >> 8;
    }
  }

  // r_j = SHA3-256(s || j) mod p over the log; sigma_i = gamma_i - alpha_i*a
  std::size_t L = parties_[0].opened_log.size();
  std::vector<F> r(L);
  for (std::size_t j = 0; j < L; j++) {
    Bytes buf(s.begin(), s.end());
    put_u64_le(buf, (u64)j);
    r[j] = F::raw(digest_mod(sha3_256(buf), F::modulus));
  }
  F a;
  for (std::size_t j = 0; j < L; j++) a += r[j] * parties_[0].opened_log[j].value;
  std::vector<Bytes> sig_blobs(n_);
  for (int p = 0; p < n_; p++) {
    F gamma;
    for (std::size_t j = 0; j < L; j++) gamma += r[j] * parties_[p].opened_log[j].mac_share;
    put_u64_le(sig_blobs[p], (gamma - alpha_of(p) * a + sigma_lie(p)).value());
  }
  F sum;
  for (const Bytes& b : commit_open("sig", sig_blobs)) sum += F(get_u64_le(b.data()));
  if (sum != F()) throw ProtocolAbort{"mac-check-failed", -1};
  for (auto& ps : parties_) ps.phase = Phase::Running;
}

template <class F>
void Session<F>::mac_check_epowers() {
  // the coefficient source e is itself opened and logged before use
  Col ecol(n_);
  for (int p = 0; p < n_; p++) ecol[p] = parties_[p].preproc.take_single();
  F e = open_col(ecol, "open");
  for (auto& ps : parties_) ps.phase = Phase::Checking;

  std::size_t L = parties_[0].opened_log.size();
  std::vector<F> r(L);
  F pw = F::raw(1);
  for (std::size_t j = 0; j < L; j++) {
    pw *= e;
    r[j] = pw;  // r_j = e^(j+1)
  }
  F a;
  for (std::size_t j = 0; j < L; j++) a += r[j] * parties_[0].opened_log[j].value;
  std::vector<Bytes> sig_blobs(n_);
  for (int p = 0; p < n_; p++) {
    F gamma;
    for (std::size_t j = 0; j < L; j++) gamma += r[j] * parties_[p].opened_log[j].mac_share;
    put_u64_le(sig_blobs[p], (gamma - alpha_of(p) * a + sigma_lie(p)).value());
  }
  F sum;
  for (const Bytes& b : commit_open("sig", sig_blobs)) sum += F(get_u64_le(b.data()));
  if (sum != F()) throw ProtocolAbort{"mac-check-failed", -1};
}

template <class F>
std::vector<F> Session<F>::output_phase() {
  mac_check_epowers();

  // commit to every party's output share and MAC share, one 32-byte digest
  // per output wire, before the key is opened
  std::size_t W = output_wires_.size();
  std::vector<std::vector<std::array<std::uint8_t, 16>>> nonces(n_);
  std::vector<std::vector<Envelope>> out(n_);
  for (int p = 0; p < n_; p++) {
    Envelope e;
    e.receiver = kBroadcast;
    e.msg_type = "outcommit";
    for (int w : output_wires_) {
      auto nonce = parties_[p].rng.next_nonce16();
      nonces[p].push_back(nonce);
      Bytes buf;
      put_u64_le(buf, wires_[w][p].value.value());
      put_u64_le(buf, wires_[w][p].mac.value());
      buf.insert(buf.end(), nonce.begin(), nonce.end());
      Digest d = sha3_256(buf);
      e.payload.insert(e.payload.end(), d.begin(), d.end());
    }
    out[p].push_back(std::move(e));
  }
  auto inbox = exchange_all(std::move(out));
  std::vector<std::vector<Digest>> committed(n_, std::vector<Digest>(W));
  for (const Envelope& e : inbox[0]) {
    if (e.msg_type != "outcommit" || e.payload.size() != 32 * W) continue;
    for (std::size_t w = 0; w < W; w++)
      std::copy(e.payload.begin() + 32 * w, e.payload.begin() + 32 * (w + 1),
                committed[e.sender][w].begin());
  }

  // open the session MAC key (fresh per session, spent here)
  std::vector<std::vector<Envelope>> out2(n_);
  for (int p = 0; p < n_; p++) {
    Envelope e;
    e.receiver = kBroadcast;
    e.msg_type = "alphaopen";
    put_u64_le(e.payload, alpha_of(p).value());
    out2[p].push_back(std::move(e));
  }
  auto inbox2 = exchange_all(std::move(out2));
  F alpha;
  for (const Envelope& e : inbox2[0])
    if (e.msg_type == "alphaopen") alpha += F(get_u64_le(e.payload.data()));

  // open output shares against the commitments
  std::vector<std::vector<Envelope>> out3(n_);
  for (int p = 0; p < n_; p++) {
    Envelope e;
    e.receiver = kBroadcast;
    e.msg_type = "outopen";
    for (std::size_t w = 0; w < W; w++) {
      put_u64_le(e.payload, wires_[output_wires_[w]][p].value.value());
      put_u64_le(e.payload, wires_[output_wires_[w]][p].mac.value());
      e.payload.insert(e.payload.end(), nonces[p][w].begin(), nonces[p][w].end());
    }
    out3[p].push_back(std::move(e));
  }
  auto inbox3 = exchange_all(std::move(out3));
  std::vector<F> y(W), mac_sum(W);
  std::vector<std::vector<F>> gamma(n_, std::vector<F>(W));
  for (const Envelope& e : inbox3[0]) {
    if (e.msg_type != "outopen") continue;
    if (e.payload.size() != 32 * W) throw ProtocolAbort{"bad-commitment", e.sender};
    for (std::size_t w = 0; w < W; w++) {
      const std::uint8_t* g = e.payload.data() + 32 * w;
      if (sha3_256(g, 32) != committed[e.sender][w])
        throw ProtocolAbort{"bad-commitment", e.sender};
      F val = F(get_u64_le(g));
      F mac = F(get_u64_le(g + 8));
      y[w] += val;
      mac_sum[w] += mac;
      gamma[e.sender][w] = mac;
    }
  }
  for (std::size_t w = 0; w < W; w++)
    if (alpha * y[w] != mac_sum[w]) throw ProtocolAbort{"mac-check-failed", -1};

  // assemble and sign the proof
  proof_.session_id = cfg_.session_id;
  proof_.modulus = F::modulus;
  proof_.circuit_hash = hex_encode(circuit_hash(circuit_));
  for (std::size_t w = 0; w < W; w++) proof_.results.push_back(y[w].value());
  proof_.sigma.resize(n_);
  proof_.commitments = committed;
  proof_.signatures.resize(n_);
  std::vector<std::vector<Envelope>> out4(n_);
  for (int p = 0; p < n_; p++) {
    F sp;
    for (std::size_t w = 0; w < W; w++) sp += gamma[p][w] - alpha_of(p) * y[w];
    proof_.sigma[p] = sp.value();
    Bytes sig = sig_sign(parties_[p].keys, proof_sign_bytes(proof_, p));
    proof_.signatures[p] = sig;
    Envelope e;
    e.receiver = kBroadcast;
    e.msg_type = "proofshare";
    put_u64_le(e.payload, sp.value());
    e.payload.insert(e.payload.end(), sig.begin(), sig.end());
    out4[p].push_back(std::move(e));
  }
  exchange_all(std::move(out4));

  std::vector<F> outs(W);
  for (std::size_t w = 0; w < W; w++) outs[w] = y[w];
  return outs;
}

template <class F>
void Session<F>::run_layer(const std::vector<int>& gate_ids) {
  // linear gates first (they feed same-depth multiplications), then the
  // communicating batches in a fixed kind order
  std::vector<int> muls, cmps, truncs, flmuls;
  for (int gi : gate_ids) {
    const Gate& g = circuit_.gates[gi];
    switch (g.kind) {
      case GateKind::kAdd: wires_[g.out[0]] = add_cols(wires_[g.in[0]], wires_[g.in[1]]); break;
      case GateKind::kAddConst: wires_[g.out[0]] = add_const_col(wires_[g.in[0]], F(g.k)); break;
      case GateKind::kSmul: wires_[g.out[0]] = smul_col(F(g.k), wires_[g.in[0]]); break;
      case GateKind::kMul: muls.push_back(gi); break;
      case GateKind::kCmp: cmps.push_back(gi); break;
      case GateKind::kTrunc: truncs.push_back(gi); break;
      case GateKind::kFlmul: flmuls.push_back(gi); break;
      case GateKind::kInput:
      case GateKind::kOutput: break;  // handled in their own phases
    }
  }
  if (!muls.empty()) {
    std::vector<std::pair<Col, Col>> jobs;
    for (int gi : muls)
      jobs.push_back({wires_[circuit_.gates[gi].in[0]], wires_[circuit_.gates[gi].in[1]]});
    auto z = mul_batch(jobs);
    for (std::size_t j = 0; j < muls.size(); j++) wires_[circuit_.gates[muls[j]].out[0]] = z[j];
  }
  if (!cmps.empty()) {
    std::vector<std::pair<Col, Col>> jobs;
    for (int gi : cmps)
      jobs.push_back({wires_[circuit_.gates[gi].in[0]], wires_[circuit_.gates[gi].in[1]]});
    auto z = op_compare_batch(jobs, circuit_.cmp_bits);
    for (std::size_t j = 0; j < cmps.size(); j++) wires_[circuit_.gates[cmps[j]].out[0]] = z[j];
  }
  if (!truncs.empty()) {
    std::vector<TruncJob> jobs;
    for (int gi : truncs) {
      const Gate& g = circuit_.gates[gi];
      jobs.push_back({wires_[g.in[0]], g.trunc_k, g.trunc_m});
    }
    auto z = op_trunc_batch(jobs);
    for (std::size_t j = 0; j < truncs.size(); j++)
      wires_[circuit_.gates[truncs[j]].out[0]] = z[j];
  }
  if (!flmuls.empty()) {
    std::vector<std::pair<FloatCols, FloatCols>> jobs;
    for (int gi : flmuls) {
      const Gate& g = circuit_.gates[gi];
      jobs.push_back({{wires_[g.in[0]], wires_[g.in[1]], wires_[g.in[2]], wires_[g.in[3]]},
                      {wires_[g.in[4]], wires_[g.in[5]], wires_[g.in[6]], wires_[g.in[7]]}});
    }
    auto z = op_flmul_batch(jobs);
    for (std::size_t j = 0; j < flmuls.size(); j++) {
      const Gate& g = circuit_.gates[flmuls[j]];
      wires_[g.out[0]] = z[j].v;
      wires_[g.out[1]] = z[j].p;
      wires_[g.out[2]] = z[j].z;
      wires_[g.out[3]] = z[j].s;
    }
  }
}

template <class F>
void Session<F>::eval_layers() {
  auto layers = circuit_layers(circuit_, &output_wires_);
  for (const auto& kv : layers) {
    run_layer(kv.second);
    if (cfg_.periodic_mac_check && !parties_[0].opened_log.empty()) mac_check_seeded();
  }
}

template <class F>
SessionResult Session<F>::run() {
  SessionResult res;
  auto t0 = std::chrono::steady_clock::now();
  try {
    for (auto& ps : parties_) ps.phase = Phase::Running;
    input_phase();
    eval_layers();
    auto outs = output_phase();
    for (F v : outs) res.outputs.push_back(v.value());
    res.ok = true;
    res.proof = proof_;
    for (auto& ps : parties_) ps.phase = Phase::Done;
  } catch (const ProtocolAbort& a) {
    res.ok = false;
    res.abort_reason = a.reason;
    res.blamed_party = a.party;
    res.abort_round = round_ - 1;
    for (auto& ps : parties_) ps.phase = Phase::Aborted;
  } catch (const TimeoutError& t) {
    res.ok = false;
    res.abort_reason = "abort-attack";
    res.blamed_party = t.party;
    res.abort_round = t.round;
    for (auto& ps : parties_) ps.phase = Phase::Aborted;
  }
  res.transcript_hash = transcript_.final_hash();
  for (int p = 0; p < n_; p++) res.roster.push_back(parties_[p].keys.public_key);

  SessionStats& st = res.stats;
  st.rounds = fabric_.rounds_run();
  st.envelopes = fabric_.envelopes();
  st.logical_messages = fabric_.logical_messages();
  st.opened_values = open_label_;
  auto it = fabric_.per_type().find("muleps");
  if (it != fabric_.per_type().end())
    st.muleps_values_delivered = it->second.bytes / 8 * (u64)(n_ - 1);
  st.triples_used = parties_[0].preproc.triples_consumed();
  st.masks_used = parties_[0].preproc.masks_consumed();
  st.singles_used = parties_[0].preproc.singles_consumed();
  st.bits_used = parties_[0].preproc.bits_consumed();
  if (res.ok) {
    SessionPlan plan = plan_session(circuit_, n_, cfg_.periodic_mac_check);
    st.analytic_envelopes = plan.envelopes;
    st.analytic_logical_messages = plan.logical_messages;
    st.analytic_opened_values = plan.opened_values;
    st.analytic_muleps_values = plan.muleps_values;
    st.formula = plan.formula;
  }
  st.online_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace mpcnet

#include "mpcnet/gadgets.hpp"
