#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string out;  // stdout + stderr interleaved
};

std::string bin() {
  const char* p = std::getenv("MPCNET_BIN");
  REQUIRE_MESSAGE(p != nullptr, "MPCNET_BIN must point at the CLI binary");
  return p;
}

CmdResult run_cli(const std::string& args) {
  std::string cmd = bin() + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CmdResult r;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string scratch() {
  static std::string dir = [] {
    char tmpl[] = "/tmp/mpcnet_cli_test_XXXXXX";
    char* d = mkdtemp(tmpl);
    REQUIRE(d != nullptr);
    return std::string(d);
  }();
  return dir;
}

std::string path_of(const std::string& name) { return scratch() + "/" + name; }

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// `key: value` lines (reports and printed output share the format)
std::map<std::string, std::string> parse_kv(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto colon = line.find(": ");
    if (colon != std::string::npos) kv[line.substr(0, colon)] = line.substr(colon + 2);
  }
  return kv;
}

const char* kOneMul = "modulus 2305843009213693951\nin 0 x\nin 1 y\nmul x y z\nout z\n";
const char* kInputs = "party 0 3\nparty 1 4\n";

// shared honest-run artifacts, generated once
struct Artifacts {
  std::string circuit = path_of("c.mpc");
  std::string inputs = path_of("in.txt");
  std::string bundle = path_of("b.pre");
  std::string proof = path_of("p.bin");
  std::string roster = path_of("r.txt");
};

const Artifacts& artifacts() {
  static Artifacts a = [] {
    Artifacts art;
    write_file(art.circuit, kOneMul);
    write_file(art.inputs, kInputs);
    CmdResult gen = run_cli("gen-preproc --out " + art.bundle + " --for-circuit " + art.circuit +
                            " --parties 2 --seed 5");
    REQUIRE_MESSAGE(gen.exit_code == 0, gen.out);
    CmdResult run = run_cli("run --circuit " + art.circuit + " --preproc " + art.bundle +
                            " --inputs " + art.inputs + " --proof " + art.proof + " --roster " +
                            art.roster);
    REQUIRE_MESSAGE(run.exit_code == 0, run.out);
    return art;
  }();
  return a;
}

}  // namespace

TEST_CASE("help exits clean, bad usage exits 2") {
  CHECK(run_cli("--help").exit_code == 0);
  CHECK(run_cli("run --help").exit_code == 0);
  CHECK(run_cli("no-such-command").exit_code == 2);
  CHECK(run_cli("run --no-such-flag").exit_code == 2);
  CHECK(run_cli("run").exit_code == 2);  // --circuit/--preproc required
  CHECK(run_cli("").exit_code == 2);     // a subcommand is required
  CHECK(run_cli("gen-preproc").exit_code == 2);
}

TEST_CASE("honest run produces outputs, report, proof and transcript") {
  const Artifacts& art = artifacts();
  std::string report = path_of("rep1.txt"), outputs = path_of("out1.txt"),
              transcript = path_of("t1.log");
  CmdResult r = run_cli("run --circuit " + art.circuit + " --preproc " + art.bundle +
                        " --inputs " + art.inputs + " --report " + report + " --outputs " +
                        outputs + " --transcript " + transcript);
  REQUIRE_MESSAGE(r.exit_code == 0, r.out);
  CHECK(slurp(outputs) == "12\n");

  auto kv = parse_kv(slurp(report));
  CHECK(kv["status"] == "ok");
  CHECK(kv["outputs"] == "12");
  CHECK(kv["parties"] == "2");
  CHECK(kv["modulus"] == "2305843009213693951");
  CHECK(kv["rounds"] == "13");
  CHECK(kv["envelopes"] == "26");
  CHECK(kv["opened-values"] == "7");
  CHECK(kv["triples-used"] == "2");
  CHECK(kv["masks-used"] == "2");
  CHECK(kv["envelopes"] == kv["analytic-envelopes"]);
  CHECK(kv["opened-values"] == kv["analytic-opened-values"]);
  CHECK(kv["transcript-hash"].size() == 64);
  CHECK(kv.count("formula") == 1);
  // timing goes to stdout only; the report stays seed-determined
  CHECK(slurp(report).find("online-seconds") == std::string::npos);
  CHECK(r.out.find("online-seconds: ") != std::string::npos);

  std::string tlog = slurp(transcript);
  CHECK(tlog.find("round 1 ") == 0);
  CHECK(tlog.find(" maskshare ") != std::string::npos);
}

TEST_CASE("reports are byte-identical across repeated runs") {
  const Artifacts& art = artifacts();
  std::string rep_a = path_of("rep_a.txt"), rep_b = path_of("rep_b.txt");
  std::string common = "run --circuit " + art.circuit + " --preproc " + art.bundle +
                       " --inputs " + art.inputs + " --seed 9 --session 3 --report ";
  REQUIRE(run_cli(common + rep_a).exit_code == 0);
  REQUIRE(run_cli(common + rep_b).exit_code == 0);
  CHECK(slurp(rep_a) == slurp(rep_b));
  // a different session seed changes the transcript hash
  std::string rep_c = path_of("rep_c.txt");
  REQUIRE(run_cli("run --circuit " + art.circuit + " --preproc " + art.bundle + " --inputs " +
                  art.inputs + " --seed 10 --session 3 --report " + rep_c)
              .exit_code == 0);
  CHECK(parse_kv(slurp(rep_a))["transcript-hash"] != parse_kv(slurp(rep_c))["transcript-hash"]);
}

TEST_CASE("adversarial runs exit 1 with a structured abort report") {
  const Artifacts& art = artifacts();
  std::string base = "run --circuit " + art.circuit + " --preproc " + art.bundle + " --inputs " +
                     art.inputs + " --report ";

  std::string rep = path_of("rep_t.txt");
  CmdResult r = run_cli(base + rep + " --adversary 1:tamper-open:5:0");
  CHECK(r.exit_code == 1);
  auto kv = parse_kv(slurp(rep));
  CHECK(kv["status"] == "abort");
  CHECK(kv["abort-reason"] == "mac-check-failed");
  CHECK(kv["blamed-party"] == "-1");
  CHECK(kv["abort-round"] == "9");
  CHECK(kv.count("formula") == 0);  // analytic block only for completed runs

  rep = path_of("rep_a2.txt");
  CHECK(run_cli(base + rep + " --adversary 1:abort-at:3").exit_code == 1);
  kv = parse_kv(slurp(rep));
  CHECK(kv["abort-reason"] == "abort-attack");
  CHECK(kv["blamed-party"] == "1");
  CHECK(kv["abort-round"] == "3");

  rep = path_of("rep_ct.txt");
  CHECK(run_cli(base + rep + " --adversary 0:corrupt-triple:0:5").exit_code == 1);
  kv = parse_kv(slurp(rep));
  CHECK(kv["abort-reason"] == "preprocessing-corrupt");
  CHECK(kv["blamed-party"] == "-1");
  CHECK(kv["abort-round"] == "5");

  CHECK(run_cli(base + path_of("rep_x.txt") + " --adversary 1:tamper-mac:5").exit_code == 1);
  // malformed adversary text is a usage problem, not a protocol abort
  CHECK(run_cli(base + path_of("rep_y.txt") + " --adversary nonsense").exit_code == 2);
  CHECK(run_cli(base + path_of("rep_z.txt") + " --adversary 7:tamper-mac:5").exit_code == 2);
  // honest entries are explicit no-ops, whatever id they carry
  CHECK(run_cli(base + path_of("rep_h.txt") + " --adversary 7:honest").exit_code == 0);
}

TEST_CASE("insufficient preprocessing is rejected before the session starts") {
  const Artifacts& art = artifacts();
  std::string small = path_of("small.pre");
  REQUIRE(run_cli("gen-preproc --out " + small +
                  " --parties 2 --triples 1 --masks 2 --singles 2 --bits 0")
              .exit_code == 0);
  CmdResult r = run_cli("run --circuit " + art.circuit + " --preproc " + small + " --inputs " +
                        art.inputs);
  CHECK(r.exit_code == 2);
  CHECK(r.out.find("insufficient preprocessing") != std::string::npos);
}

TEST_CASE("modulus mismatch between circuit and bundle is a usage error") {
  const Artifacts& art = artifacts();
  std::string b101 = path_of("b101.pre");
  REQUIRE(run_cli("gen-preproc --out " + b101 +
                  " --parties 2 --modulus 101 --triples 4 --masks 2 --singles 4 --bits 0")
              .exit_code == 0);
  CHECK(run_cli("run --circuit " + art.circuit + " --preproc " + b101 + " --inputs " + art.inputs)
            .exit_code == 2);
}

TEST_CASE("gen-preproc sizes bundles from the circuit when asked") {
  const Artifacts& art = artifacts();
  CmdResult r = run_cli("gen-preproc --out " + path_of("sized.pre") + " --for-circuit " +
                        art.circuit + " --parties 3 --seed 8");
  REQUIRE(r.exit_code == 0);
  auto kv = parse_kv(r.out);
  CHECK(kv["parties"] == "3");
  CHECK(kv["triples"] == "2");
  CHECK(kv["masks"] == "2");
  CHECK(kv["singles"] == "2");
}

TEST_CASE("verify accepts the produced proof and rejects a tampered one") {
  const Artifacts& art = artifacts();
  CmdResult ok = run_cli("verify --proof " + art.proof + " --roster " + art.roster);
  CHECK(ok.exit_code == 0);
  CHECK(ok.out == "accept\n");

  // flip one digit of sigma-0 in the proof file
  std::string text = slurp(art.proof);
  auto pos = text.find("sigma-0: ");
  REQUIRE(pos != std::string::npos);
  pos += 9;
  text[pos] = text[pos] == '1' ? '2' : '1';
  std::string bad = path_of("p_bad.bin");
  write_file(bad, text);
  CmdResult rej = run_cli("verify --proof " + bad + " --roster " + art.roster);
  CHECK(rej.exit_code == 1);
  CHECK(rej.out == "reject: bad-signature party 0\n");

  CHECK(run_cli("verify --proof " + path_of("nope.bin") + " --roster " + art.roster).exit_code ==
        1);
}

TEST_CASE("drf command is deterministic and self-consistent") {
  CmdResult a = run_cli("drf --nodes 10 --seed 7 --quorum 3");
  REQUIRE(a.exit_code == 0);
  CHECK(a.out == run_cli("drf --nodes 10 --seed 7 --quorum 3").out);
  auto kv = parse_kv(a.out);
  CHECK(!kv["p"].empty());
  std::istringstream sel(kv["selected"]);
  std::vector<int> selected;
  int node;
  while (sel >> node) selected.push_back(node);
  REQUIRE(selected.size() == 3);
  int prover = std::stoi(kv["prover"]);
  CHECK(std::count(selected.begin(), selected.end(), prover) == 1);
  CHECK(run_cli("drf --nodes 10 --seed 8 --quorum 3").out != a.out);

  CHECK(run_cli("drf --nodes 1 --seed 7 --quorum 1").exit_code == 2);
  CHECK(run_cli("drf --nodes 4 --seed 7 --quorum 9").exit_code == 2);
}

TEST_CASE("econ-table prints the coordination risk rows") {
  CmdResult r = run_cli("econ-table");
  REQUIRE(r.exit_code == 0);
  std::istringstream in(r.out);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 9);  // header + 8 fractions
  CHECK(lines[0].find("coordinated") != std::string::npos);
  CHECK(lines[1].find("50%") != std::string::npos);
  CHECK(lines[1].find("0.00%") != std::string::npos);
  CHECK(lines[6].find("0.59%") != std::string::npos);
  CHECK(lines[7].find("13.26%") != std::string::npos);
  CHECK(lines[8].find("36.60%") != std::string::npos);
}

TEST_CASE("auction demo matches the oracle on fixed bids") {
  std::string rep = path_of("auction.txt");
  CmdResult r = run_cli("demo-auction --bidders 3 --bits 8 --bids 5,9,7 --report " + rep);
  REQUIRE_MESSAGE(r.exit_code == 0, r.out);
  auto kv = parse_kv(slurp(rep));
  CHECK(kv["winner"] == "1");
  CHECK(kv["second-price"] == "7");
  CHECK(kv["oracle-match"] == "yes");
  CHECK(kv["bidders"] == "3");
  CHECK(r.out.find("offline-seconds: ") != std::string::npos);
  CHECK(r.out.find("online-seconds: ") != std::string::npos);

  CHECK(run_cli("demo-auction --bidders 3 --bits 8 --bids 5,9").exit_code == 2);
  CHECK(run_cli("demo-auction --bidders 1").exit_code == 2);
  CHECK(run_cli("demo-auction --bidders 2 --bits 2 --bids 9,1").exit_code == 2);
  CHECK(run_cli("demo-auction --bidders 2 --bits 40").exit_code == 2);
}

TEST_CASE("timeout and periodic flags feed through to the session") {
  const Artifacts& art = artifacts();
  std::string rep = path_of("rep_to.txt");
  CmdResult r = run_cli("run --circuit " + art.circuit + " --preproc " + art.bundle +
                        " --inputs " + art.inputs + " --timeout 3 --report " + rep +
                        " --adversary 1:abort-at:3");
  CHECK(r.exit_code == 1);
  auto kv = parse_kv(slurp(rep));
  CHECK(kv["abort-reason"] == "abort-attack");
  CHECK(kv["abort-round"] == "5");  // 3 tolerated silent rounds end at round 5

  CHECK(run_cli("run --circuit " + art.circuit + " --preproc " + art.bundle + " --inputs " +
                art.inputs + " --periodic-check")
            .exit_code == 0);
}
