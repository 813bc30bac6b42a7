#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mpcnet/chain.hpp"
#include "mpcnet/engine.hpp"
#include "mpcnet/preproc_io.hpp"
#include "mpcnet/quorum.hpp"
#include "mpcnet/vickrey.hpp"

namespace {

using namespace mpcnet;

constexpr int kExitOk = 0;
constexpr int kExitAbort = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Report files hold only seed-determined values (no wall-clock), so a fixed
/// command line reproduces them byte for byte.
struct Report {
  std::vector<std::pair<std::string, std::string>> rows;
  void put(const std::string& k, const std::string& v) { rows.push_back({k, v}); }
  void put(const std::string& k, u64 v) { put(k, std::to_string(v)); }
  void write(const std::string& path) const {
    if (path.empty()) return;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write " + path);
    for (const auto& [k, v] : rows) out << k << ": " << v << '\n';
  }
  void print() const {
    for (const auto& [k, v] : rows) std::cout << k << ": " << v << '\n';
  }
};

std::vector<std::vector<u64>> parse_inputs_file(const std::string& path, int n) {
  std::vector<std::vector<u64>> inputs(n);
  if (path.empty()) return inputs;
  std::istringstream in(read_text_file(path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    int id = -1;
    u64 value = 0;
    if (!(ls >> tag >> id >> value) || tag != "party" || id < 0 || id >= n)
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected `party <id> <value>`");
    inputs[id].push_back(value);
  }
  return inputs;
}

struct RunOptions {
  std::string circuit_path, preproc_path, inputs_path, adversary_text;
  std::string report_path, transcript_path, proof_path, roster_path, outputs_path;
  u64 seed = 1, session = 1, timeout = 1;
  bool periodic_check = false;
};

template <class F>
int run_with_field(const RunOptions& opt, const Circuit& c, const RawBundleFile& raw) {
  CostReport need = cost(c);
  if (raw.n_triples < need.triples_required || raw.n_masks < need.masks_required ||
      raw.n_singles < need.singles_required || raw.n_bits < need.bits_required)
    throw UsageError("insufficient preprocessing for this circuit (need " +
                     std::to_string(need.triples_required) + " triples, " +
                     std::to_string(need.masks_required) + " masks, " +
                     std::to_string(need.singles_required) + " singles, " +
                     std::to_string(need.bits_required) + " bits)");

  AdversarySpec adv = AdversarySpec::parse(opt.adversary_text);
  adv.validate((int)raw.n);
  DealerOutput<F> dealer = from_raw<F>(raw);
  std::int64_t m = (std::int64_t)F::modulus;
  for (const AdversaryAction& a : adv.actions)
    if (a.kind == AdvKind::corrupt_triple)
      corrupt_triple_c(dealer, a.index, F::raw((u64)(((a.offset % m) + m) % m)));

  int n = (int)raw.n;
  std::vector<PartyBundle<F>> bundles;
  bundles.reserve(n);
  for (int i = 0; i < n; i++) bundles.push_back(dealer.take_party(i));

  SessionConfig cfg;
  cfg.session_id = opt.session;
  cfg.seed = opt.seed;
  cfg.timeout_rounds = opt.timeout;
  cfg.periodic_mac_check = opt.periodic_check;
  cfg.keep_transcript_records = !opt.transcript_path.empty();

  Session<F> session(c, std::move(bundles), parse_inputs_file(opt.inputs_path, n), cfg, adv);
  SessionResult res = session.run();

  if (!opt.transcript_path.empty()) session.transcript().write_file(opt.transcript_path);
  if (!opt.roster_path.empty()) write_roster_file(opt.roster_path, res.roster);
  if (res.ok && !opt.proof_path.empty()) write_proof_file(opt.proof_path, res.proof);
  if (!opt.outputs_path.empty()) {
    std::ofstream out(opt.outputs_path, std::ios::binary);
    if (!out) throw UsageError("cannot write " + opt.outputs_path);
    for (u64 v : res.outputs) out << v << '\n';
  }

  Report rep;
  rep.put("status", res.ok ? "ok" : "abort");
  if (!res.ok) {
    rep.put("abort-reason", res.abort_reason);
    rep.put("blamed-party", std::to_string(res.blamed_party));
    rep.put("abort-round", res.abort_round);
  }
  {
    std::ostringstream os;
    for (std::size_t i = 0; i < res.outputs.size(); i++) os << (i ? " " : "") << res.outputs[i];
    rep.put("outputs", os.str());
  }
  rep.put("parties", (u64)n);
  rep.put("modulus", F::modulus);
  rep.put("session-id", opt.session);
  rep.put("seed", opt.seed);
  rep.put("circuit-hash", hex_encode(circuit_hash(c)));
  rep.put("transcript-hash", hex_encode(res.transcript_hash));
  rep.put("rounds", res.stats.rounds);
  rep.put("envelopes", res.stats.envelopes);
  rep.put("logical-messages", res.stats.logical_messages);
  rep.put("opened-values", res.stats.opened_values);
  rep.put("muleps-values-delivered", res.stats.muleps_values_delivered);
  rep.put("triples-used", res.stats.triples_used);
  rep.put("masks-used", res.stats.masks_used);
  rep.put("singles-used", res.stats.singles_used);
  rep.put("bits-used", res.stats.bits_used);
  if (res.ok) {
    rep.put("analytic-envelopes", res.stats.analytic_envelopes);
    rep.put("analytic-logical-messages", res.stats.analytic_logical_messages);
    rep.put("analytic-opened-values", res.stats.analytic_opened_values);
    rep.put("analytic-muleps-values", res.stats.analytic_muleps_values);
    rep.put("formula", res.stats.formula);
  }
  rep.write(opt.report_path);
  rep.print();
  std::cout << "online-seconds: " << res.stats.online_seconds << '\n';
  return res.ok ? kExitOk : kExitAbort;
}

int cmd_run(const RunOptions& opt) {
  Circuit c = parse_circuit(read_text_file(opt.circuit_path));
  RawBundleFile raw = read_bundle_file(opt.preproc_path);
  if (c.modulus != raw.modulus)
    throw UsageError("circuit modulus does not match the preprocessing bundle");
  if (raw.modulus == kMersenne61) return run_with_field<F61>(opt, c, raw);
  if (raw.modulus == 101) return run_with_field<F101>(opt, c, raw);
  throw UsageError("unsupported modulus " + std::to_string(raw.modulus));
}

struct GenOptions {
  std::string out_path, circuit_path;
  int parties = 3;
  u64 seed = 1, modulus = kMersenne61;
  u64 triples = 0, masks = 0, singles = 0, bits = 0;
};

template <class F>
int gen_with_field(const GenOptions& opt, const BundleSpec& spec) {
  auto t0 = std::chrono::steady_clock::now();
  SeededRng rng(opt.seed);
  DealerOutput<F> dealer = make_dealer_output<F>(opt.parties, spec, rng);
  write_bundle_file(opt.out_path, to_raw(dealer));
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << "bundle: " << opt.out_path << '\n'
            << "parties: " << opt.parties << '\n'
            << "modulus: " << F::modulus << '\n'
            << "triples: " << spec.triples << '\n'
            << "masks: " << spec.masks << '\n'
            << "singles: " << spec.singles << '\n'
            << "bits: " << spec.bits << '\n'
            << "offline-seconds: " << secs << '\n';
  return kExitOk;
}

int cmd_gen_preproc(const GenOptions& opt) {
  BundleSpec spec{opt.triples, opt.masks, opt.singles, opt.bits};
  u64 modulus = opt.modulus;
  if (!opt.circuit_path.empty()) {
    Circuit c = parse_circuit(read_text_file(opt.circuit_path));
    CostReport need = cost(c);
    spec.triples = std::max<std::size_t>(spec.triples, need.triples_required);
    spec.masks = std::max<std::size_t>(spec.masks, need.masks_required);
    spec.singles = std::max<std::size_t>(spec.singles, need.singles_required);
    spec.bits = std::max<std::size_t>(spec.bits, need.bits_required);
    modulus = c.modulus;
  }
  if (modulus == kMersenne61) return gen_with_field<F61>(opt, spec);
  if (modulus == 101) return gen_with_field<F101>(opt, spec);
  throw UsageError("unsupported modulus " + std::to_string(modulus));
}

struct AuctionOptions {
  int bidders = 3;
  int bits = 16;
  u64 seed = 1;
  std::string bids_csv, report_path;
};

int cmd_demo_auction(const AuctionOptions& opt) {
  if (opt.bidders < 2) throw UsageError("need at least 2 bidders");
  if (opt.bits < 1 || opt.bits > 32) throw UsageError("bid width must be 1..32");
  std::vector<u64> bids;
  if (!opt.bids_csv.empty()) {
    std::istringstream is(opt.bids_csv);
    std::string tok;
    while (std::getline(is, tok, ',')) bids.push_back(std::stoull(tok));
    if ((int)bids.size() != opt.bidders)
      throw UsageError("expected one bid per bidder (" + std::to_string(opt.bidders) + ")");
  } else {
    SeededRng rng(opt.seed ^ 0xb1d5);
    for (int i = 0; i < opt.bidders; i++) bids.push_back(rng.next_below(u64(1) << opt.bits));
  }
  for (u64 b : bids)
    if (b >> opt.bits) throw UsageError("bid exceeds the declared bit width");

  Circuit c = build_vickrey_circuit(opt.bidders, opt.bits);
  CostReport need = cost(c);

  auto t0 = std::chrono::steady_clock::now();
  SeededRng rng(opt.seed);
  DealerOutput<F61> dealer = make_dealer_output<F61>(
      opt.bidders, {need.triples_required, need.masks_required, need.singles_required,
                    need.bits_required},
      rng);
  double offline = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::vector<PartyBundle<F61>> bundles;
  std::vector<std::vector<u64>> inputs(opt.bidders);
  for (int i = 0; i < opt.bidders; i++) {
    bundles.push_back(dealer.take_party(i));
    inputs[i] = {bids[i]};
  }
  SessionConfig cfg;
  cfg.session_id = opt.seed + 1;
  cfg.seed = opt.seed;
  cfg.keep_transcript_records = false;
  SessionResult res = run_session<F61>(c, std::move(bundles), inputs, cfg, {});
  if (!res.ok) {
    std::cerr << "auction session aborted: " << res.abort_reason << '\n';
    return kExitAbort;
  }
  AuctionResult oracle = vickrey_oracle(bids);
  bool match = res.outputs.size() == 2 && res.outputs[0] == oracle.winner &&
               res.outputs[1] == oracle.second_price;

  Report rep;
  rep.put("bidders", (u64)opt.bidders);
  rep.put("bit-width", (u64)opt.bits);
  rep.put("seed", opt.seed);
  rep.put("winner", res.outputs[0]);
  rep.put("second-price", res.outputs[1]);
  rep.put("oracle-match", match ? "yes" : "no");
  rep.put("triples-used", res.stats.triples_used);
  rep.put("masks-used", res.stats.masks_used);
  rep.put("singles-used", res.stats.singles_used);
  rep.put("bits-used", res.stats.bits_used);
  rep.put("rounds", res.stats.rounds);
  rep.put("envelopes", res.stats.envelopes);
  rep.put("opened-values", res.stats.opened_values);
  rep.put("transcript-hash", hex_encode(res.transcript_hash));
  rep.write(opt.report_path);
  rep.print();
  std::cout << "offline-seconds: " << offline << '\n'
            << "online-seconds: " << res.stats.online_seconds << '\n';
  return match ? kExitOk : kExitAbort;
}

int cmd_verify(const std::string& proof_path, const std::string& roster_path) {
  ComputationProof proof = read_proof_file(proof_path);
  std::vector<PubKey> roster = read_roster_file(roster_path);
  VerifyOutcome out = verify_proof(proof, roster);
  if (out.ok) {
    std::cout << "accept\n";
    return kExitOk;
  }
  std::cout << "reject: " << out.reason;
  if (out.party >= 0) std::cout << " party " << out.party;
  std::cout << '\n';
  return kExitAbort;
}

int cmd_drf(int nodes, u64 seed, std::size_t quorum, u64 modulus) {
  if (nodes < 2) throw UsageError("need at least 2 nodes");
  if (quorum == 0 || quorum > (std::size_t)nodes) throw UsageError("quorum size out of range");
  SeededRng rng(seed);
  std::vector<Ticket> tickets(nodes);
  std::vector<Seed32> reveals(nodes);
  for (int i = 0; i < nodes; i++) {
    reveals[i] = rng.next_seed32();
    tickets[i] = {i, 1, drf_commit(reveals[i])};
  }
  DrfOutcome drf = drf_round(tickets, reveals, modulus);
  if (!drf.ok) {
    std::cout << "verification-failure node " << drf.bad_node << '\n';
    return kExitAbort;
  }
  std::vector<int> eligible(nodes);
  for (int i = 0; i < nodes; i++) eligible[i] = i;
  QuorumResult q = select_quorum(drf.p, eligible, quorum);
  std::cout << "p: " << drf.p << '\n' << "selected:";
  for (int node : q.selected) std::cout << ' ' << node;
  std::cout << '\n' << "prover: " << q.prover << '\n';
  return kExitOk;
}

int cmd_econ_table() {
  const double fractions[] = {0.50, 0.60, 0.70, 0.80, 0.90, 0.95, 0.98, 0.99};
  std::printf("%-12s %-8s %s\n", "coordinated", "quorum", "chance");
  for (double f : fractions)
    std::printf("%10.0f%% %8d %9.2f%%\n", f * 100, 100, coordinated_chance(f, 100) * 100);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"authenticated-sharing MPC engine with a mock settlement layer"};
  app.require_subcommand(1);

  GenOptions gen;
  CLI::App* cgen = app.add_subcommand("gen-preproc", "deal a preprocessing bundle file");
  cgen->add_option("--out", gen.out_path, "bundle file to write")->required();
  cgen->add_option("--parties", gen.parties, "number of parties");
  cgen->add_option("--seed", gen.seed, "dealer seed");
  cgen->add_option("--modulus", gen.modulus, "field modulus (2^61-1 or 101)");
  cgen->add_option("--triples", gen.triples, "triple count");
  cgen->add_option("--masks", gen.masks, "input mask count");
  cgen->add_option("--singles", gen.singles, "opened-scalar count");
  cgen->add_option("--bits", gen.bits, "random bit count");
  cgen->add_option("--for-circuit", gen.circuit_path,
                   "size the bundle from a circuit file's requirements");

  RunOptions run;
  CLI::App* crun = app.add_subcommand("run", "run one MPC session over a circuit file");
  crun->add_option("--circuit", run.circuit_path, "circuit file")->required();
  crun->add_option("--preproc", run.preproc_path, "preprocessing bundle")->required();
  crun->add_option("--inputs", run.inputs_path, "inputs file (`party <id> <value>` lines)");
  crun->add_option("--seed", run.seed, "session seed");
  crun->add_option("--session", run.session, "session id");
  crun->add_option("--timeout", run.timeout, "silent rounds before abort-attack blame");
  crun->add_option("--adversary", run.adversary_text,
                   "misbehavior plan, e.g. \"2:tamper-open:+1;4:abort-at:10\"");
  crun->add_flag("--periodic-check", run.periodic_check, "run a MAC check after every layer");
  crun->add_option("--report", run.report_path, "report file (key: value lines)");
  crun->add_option("--transcript", run.transcript_path, "transcript file");
  crun->add_option("--proof", run.proof_path, "computation proof file");
  crun->add_option("--roster", run.roster_path, "signer roster file");
  crun->add_option("--outputs", run.outputs_path, "output values file");

  AuctionOptions auction;
  CLI::App* cauc = app.add_subcommand("demo-auction", "second-price auction demo");
  cauc->add_option("--bidders", auction.bidders, "number of bidders (= parties)");
  cauc->add_option("--bits", auction.bits, "bid width in bits (max 32)");
  cauc->add_option("--seed", auction.seed, "seed for bids and the session");
  cauc->add_option("--bids", auction.bids_csv, "comma-separated bids (else random)");
  cauc->add_option("--report", auction.report_path, "report file");

  std::string proof_path, roster_path;
  CLI::App* cver = app.add_subcommand("verify", "verify a computation proof");
  cver->add_option("--proof", proof_path, "proof file")->required();
  cver->add_option("--roster", roster_path, "roster file")->required();

  int drf_nodes = 5;
  u64 drf_seed = 1, drf_modulus = kMersenne61;
  std::size_t drf_quorum = 3;
  CLI::App* cdrf = app.add_subcommand("drf", "commit-reveal randomness and quorum selection");
  cdrf->add_option("--nodes", drf_nodes, "node count");
  cdrf->add_option("--seed", drf_seed, "seed deriving every node's secret");
  cdrf->add_option("--quorum", drf_quorum, "quorum size");
  cdrf->add_option("--modulus", drf_modulus, "reduction modulus for P");

  CLI::App* cecon = app.add_subcommand("econ-table", "print the coordinated-chance table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*cgen) return cmd_gen_preproc(gen);
    if (*crun) return cmd_run(run);
    if (*cauc) return cmd_demo_auction(auction);
    if (*cver) return cmd_verify(proof_path, roster_path);
    if (*cdrf) return cmd_drf(drf_nodes, drf_seed, drf_quorum, drf_modulus);
    if (*cecon) return cmd_econ_table();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const PreprocError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CircuitParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitAbort;
  }
  return kExitUsage;
}
