#include "mpcnet/circuit.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <sstream>

namespace mpcnet {

namespace {

u64 mod_add(u64 a, u64 b, u64 p) {
  u64 s = a + b;
  if (s >= p) s -= p;
  return s;
}
u64 mod_sub(u64 a, u64 b, u64 p) { return a >= b ? a - b : a + p - b; }
u64 mod_mul(u64 a, u64 b, u64 p) { return (u64)(((u128)a * b) % p); }

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

u64 parse_u64(const std::string& s, int line, const char* what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw CircuitParseError(line, std::string("bad ") + what + ": " + s);
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw CircuitParseError(line, std::string("bad ") + what + ": " + s);
  }
}

int parse_int(const std::string& s, int line, const char* what) {
  u64 v = parse_u64(s, line, what);
  if (v > 1'000'000'000) throw CircuitParseError(line, std::string("bad ") + what + ": " + s);
  return (int)v;
}

/// Stable topological sort (Kahn, smallest original index first). Detects
/// cycles; preserves order of already-sorted gate lists so that
/// parse(emit(c)) == c.
void topo_sort(Circuit& c) {
  int ng = (int)c.gates.size();
  std::vector<int> producer(c.n_wires, -1);
  for (int g = 0; g < ng; g++)
    for (int w : c.gates[g].out) producer[w] = g;
  std::vector<std::vector<int>> consumers(ng);
  std::vector<int> pending(ng, 0);
  for (int g = 0; g < ng; g++)
    for (int w : c.gates[g].in) {
      int p = producer[w];
      if (p < 0) throw CircuitParseError(c.gates[g].line, "dangling wire: " + c.wire_names[w]);
      consumers[p].push_back(g);
      pending[g]++;
    }
  std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
  for (int g = 0; g < ng; g++)
    if (pending[g] == 0) ready.push(g);
  std::vector<Gate> sorted;
  sorted.reserve(ng);
  while (!ready.empty()) {
    int g = ready.top();
    ready.pop();
    sorted.push_back(c.gates[g]);
    for (int h : consumers[g])
      if (--pending[h] == 0) ready.push(h);
  }
  if ((int)sorted.size() != ng) {
    for (int g = 0; g < ng; g++)
      if (pending[g] > 0) throw CircuitParseError(c.gates[g].line, "cycle through this gate");
  }
  c.gates = std::move(sorted);
}

void validate(Circuit& c) {
  topo_sort(c);
  c.n_inputs = 0;
  c.n_outputs = 0;
  for (const Gate& g : c.gates) {
    if (g.kind == GateKind::kInput) c.n_inputs++;
    if (g.kind == GateKind::kOutput) c.n_outputs++;
    if (g.kind == GateKind::kTrunc) {
      if (g.trunc_m < 1 || g.trunc_m >= g.trunc_k)
        throw CircuitParseError(g.line, "trunc: need 1 <= m < k");
    }
  }
}

}  // namespace

Circuit parse_circuit(const std::string& text) {
  Circuit c;
  std::map<std::string, int> wire_ids;
  int line_no = 0;

  auto wire_use = [&](const std::string& name, int) {
    auto it = wire_ids.find(name);
    if (it != wire_ids.end()) return it->second;
    // forward reference: allocate now, must be defined somewhere in the file
    int id = c.n_wires++;
    wire_ids.emplace(name, id);
    c.wire_names.push_back(name);
    return id;
  };
  std::vector<bool> defined;
  auto wire_def = [&](const std::string& name, int line) {
    int id = wire_use(name, line);
    if ((int)defined.size() <= id) defined.resize(id + 1, false);
    if (defined[id]) throw CircuitParseError(line, "wire redefinition: " + name);
    defined[id] = true;
    return id;
  };

  std::istringstream is(text);
  std::string raw;
  while (std::getline(is, raw)) {
    line_no++;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.resize(hash);
    auto tok = split_ws(raw);
    if (tok.empty()) continue;
    const std::string& op = tok[0];
    auto want = [&](std::size_t n) {
      if (tok.size() != n + 1)
        throw CircuitParseError(line_no, op + ": expected " + std::to_string(n) + " operands");
    };
    Gate g;
    g.line = line_no;
    if (op == "modulus") {
      want(1);
      c.modulus = parse_u64(tok[1], line_no, "modulus");
      if (c.modulus < 2) throw CircuitParseError(line_no, "bad modulus");
      continue;
    } else if (op == "cmpbits") {
      want(1);
      c.cmp_bits = parse_int(tok[1], line_no, "cmpbits");
      continue;
    } else if (op == "flbits") {
      want(1);
      c.fl_bits = parse_int(tok[1], line_no, "flbits");
      continue;
    } else if (op == "in") {
      want(2);
      g.kind = GateKind::kInput;
      g.party = parse_int(tok[1], line_no, "party");
      g.out = {wire_def(tok[2], line_no)};
    } else if (op == "add") {
      want(3);
      g.kind = GateKind::kAdd;
      g.in = {wire_use(tok[1], line_no), wire_use(tok[2], line_no)};
      g.out = {wire_def(tok[3], line_no)};
    } else if (op == "addc") {
      want(3);
      g.kind = GateKind::kAddConst;
      g.k = parse_u64(tok[1], line_no, "constant") % c.modulus;
      g.in = {wire_use(tok[2], line_no)};
      g.out = {wire_def(tok[3], line_no)};
    } else if (op == "smul") {
      want(3);
      g.kind = GateKind::kSmul;
      g.k = parse_u64(tok[1], line_no, "constant") % c.modulus;
      g.in = {wire_use(tok[2], line_no)};
      g.out = {wire_def(tok[3], line_no)};
    } else if (op == "mul") {
      want(3);
      g.kind = GateKind::kMul;
      g.in = {wire_use(tok[1], line_no), wire_use(tok[2], line_no)};
      g.out = {wire_def(tok[3], line_no)};
    } else if (op == "cmp") {
      want(3);
      g.kind = GateKind::kCmp;
      g.in = {wire_use(tok[1], line_no), wire_use(tok[2], line_no)};
      g.out = {wire_def(tok[3], line_no)};
    } else if (op == "trunc") {
      want(4);
      g.kind = GateKind::kTrunc;
      g.trunc_k = parse_int(tok[1], line_no, "k");
      g.trunc_m = parse_int(tok[2], line_no, "m");
      g.in = {wire_use(tok[3], line_no)};
      g.out = {wire_def(tok[4], line_no)};
    } else if (op == "flmul") {
      want(12);
      g.kind = GateKind::kFlmul;
      for (int i = 1; i <= 8; i++) g.in.push_back(wire_use(tok[i], line_no));
      for (int i = 9; i <= 12; i++) g.out.push_back(wire_def(tok[i], line_no));
    } else if (op == "out") {
      want(1);
      g.kind = GateKind::kOutput;
      g.in = {wire_use(tok[1], line_no)};
    } else {
      throw CircuitParseError(line_no, "unknown opcode: " + op);
    }
    c.gates.push_back(g);
  }
  validate(c);
  return c;
}

std::string emit_circuit(const Circuit& c) {
  std::ostringstream os;
  os << "modulus " << c.modulus << "\n";
  os << "cmpbits " << c.cmp_bits << "\n";
  os << "flbits " << c.fl_bits << "\n";
  auto w = [&](int id) -> const std::string& { return c.wire_names[id]; };
  for (const Gate& g : c.gates) {
    switch (g.kind) {
      case GateKind::kInput: os << "in " << g.party << " " << w(g.out[0]); break;
      case GateKind::kAdd: os << "add " << w(g.in[0]) << " " << w(g.in[1]) << " " << w(g.out[0]); break;
      case GateKind::kAddConst: os << "addc " << g.k << " " << w(g.in[0]) << " " << w(g.out[0]); break;
      case GateKind::kSmul: os << "smul " << g.k << " " << w(g.in[0]) << " " << w(g.out[0]); break;
      case GateKind::kMul: os << "mul " << w(g.in[0]) << " " << w(g.in[1]) << " " << w(g.out[0]); break;
      case GateKind::kCmp: os << "cmp " << w(g.in[0]) << " " << w(g.in[1]) << " " << w(g.out[0]); break;
      case GateKind::kTrunc:
        os << "trunc " << g.trunc_k << " " << g.trunc_m << " " << w(g.in[0]) << " " << w(g.out[0]);
        break;
      case GateKind::kFlmul:
        os << "flmul";
        for (int i : g.in) os << " " << w(i);
        for (int i : g.out) os << " " << w(i);
        break;
      case GateKind::kOutput: os << "out " << w(g.in[0]); break;
    }
    os << "\n";
  }
  return os.str();
}

Digest circuit_hash(const Circuit& c) { return sha3_256(emit_circuit(c)); }

CostReport cost(const Circuit& c) {
  CostReport r;
  std::vector<int> depth(c.n_wires, 0);
  auto in_depth = [&](const Gate& g) {
    int d = 0;
    for (int w : g.in) d = std::max(d, depth[w]);
    return d;
  };
  for (const Gate& g : c.gates) {
    GadgetCost gc;
    switch (g.kind) {
      case GateKind::kInput:
        r.masks_required++;
        depth[g.out[0]] = 0;
        continue;
      case GateKind::kAdd:
      case GateKind::kAddConst:
      case GateKind::kSmul:
        depth[g.out[0]] = in_depth(g);
        continue;
      case GateKind::kOutput:
        r.depth = std::max(r.depth, in_depth(g));
        continue;
      case GateKind::kMul:
        r.mul_gates++;
        gc = {0, 0, 1};
        break;
      case GateKind::kCmp: gc = compare_cost(c.cmp_bits, c.modulus); break;
      case GateKind::kTrunc: gc = trunc_cost(g.trunc_k, g.trunc_m, c.modulus); break;
      case GateKind::kFlmul: gc = flmul_cost(c.fl_bits, c.modulus); break;
    }
    r.gadget_muls += gc.muls;
    r.bits_required += gc.bits;
    int d = in_depth(g) + gc.depth;
    for (int w : g.out) depth[w] = d;
    r.depth = std::max(r.depth, d);
  }
  u64 total_muls = r.mul_gates + r.gadget_muls;
  r.triples_required = 2 * total_muls;
  r.singles_required = total_muls + 1;  // + the output-phase coefficient
  return r;
}

u64 trunc_oracle(u64 x, int m) { return x >> m; }
u64 cmp_oracle(u64 a, u64 b) { return a < b ? 1 : 0; }

FlQuad flmul_oracle(const FlQuad& x, const FlQuad& y, int l, u64 modulus) {
  FlQuad r;
  u128 v = (u128)x.v * y.v;
  v >>= (l - 1);
  u64 b = v < ((u128)1 << l) ? 1 : 0;
  v = (v * (1 + b)) >> 1;
  r.z = x.z | y.z;
  r.s = x.s ^ y.s;
  if (r.z) {
    r.v = 0;
    r.p = 0;
  } else {
    r.v = (u64)v;
    u64 p = mod_add(x.p, y.p, modulus);
    p = mod_add(p, (u64)l % modulus, modulus);
    r.p = mod_sub(p, b, modulus);
  }
  return r;
}

std::vector<u64> eval_plaintext(const Circuit& c, const std::vector<std::vector<u64>>& inputs) {
  u64 p = c.modulus;
  std::vector<u64> wire(c.n_wires, 0);
  std::vector<std::size_t> next_input(inputs.size(), 0);
  std::vector<u64> out;
  for (const Gate& g : c.gates) {
    switch (g.kind) {
      case GateKind::kInput: {
        if (g.party < 0 || g.party >= (int)inputs.size() ||
            next_input[g.party] >= inputs[g.party].size())
          throw std::invalid_argument("eval_plaintext: missing input for party " +
                                      std::to_string(g.party));
        wire[g.out[0]] = inputs[g.party][next_input[g.party]++] % p;
        break;
      }
      case GateKind::kAdd: wire[g.out[0]] = mod_add(wire[g.in[0]], wire[g.in[1]], p); break;
      case GateKind::kAddConst: wire[g.out[0]] = mod_add(wire[g.in[0]], g.k, p); break;
      case GateKind::kSmul: wire[g.out[0]] = mod_mul(wire[g.in[0]], g.k, p); break;
      case GateKind::kMul: wire[g.out[0]] = mod_mul(wire[g.in[0]], wire[g.in[1]], p); break;
      case GateKind::kCmp: wire[g.out[0]] = cmp_oracle(wire[g.in[0]], wire[g.in[1]]); break;
      case GateKind::kTrunc: wire[g.out[0]] = trunc_oracle(wire[g.in[0]], g.trunc_m); break;
      case GateKind::kFlmul: {
        FlQuad x{wire[g.in[0]], wire[g.in[1]], wire[g.in[2]], wire[g.in[3]]};
        FlQuad y{wire[g.in[4]], wire[g.in[5]], wire[g.in[6]], wire[g.in[7]]};
        FlQuad z = flmul_oracle(x, y, c.fl_bits, p);
        wire[g.out[0]] = z.v;
        wire[g.out[1]] = z.p;
        wire[g.out[2]] = z.z;
        wire[g.out[3]] = z.s;
        break;
      }
      case GateKind::kOutput: out.push_back(wire[g.in[0]]); break;
    }
  }
  return out;
}

int CircuitBuilder::fresh_wire() {
  c_.wire_names.push_back("w" + std::to_string(c_.n_wires));
  return c_.n_wires++;
}

int CircuitBuilder::input(int party) {
  Gate g;
  g.kind = GateKind::kInput;
  g.party = party;
  g.out = {fresh_wire()};
  c_.gates.push_back(g);
  return g.out[0];
}

int CircuitBuilder::add(int a, int b) {
  Gate g;
  g.kind = GateKind::kAdd;
  g.in = {a, b};
  g.out = {fresh_wire()};
  c_.gates.push_back(g);
  return g.out[0];
}

int CircuitBuilder::add_const(u64 k, int a) {
  Gate g;
  g.kind = GateKind::kAddConst;
  g.k = k % c_.modulus;
  g.in = {a};
  g.out = {fresh_wire()};
  c_.gates.push_back(g);
  return g.out[0];
}

int CircuitBuilder::smul(u64 k, int a) {
  Gate g;
  g.kind = GateKind::kSmul;
  g.k = k % c_.modulus;
  g.in = {a};
  g.out = {fresh_wire()};
  c_.gates.push_back(g);
  return g.out[0];
}

int CircuitBuilder::mul(int a, int b) {
  Gate g;
  g.kind = GateKind::kMul;
  g.in = {a, b};
  g.out = {fresh_wire()};
  c_.gates.push_back(g);
  return g.out[0];
}

int CircuitBuilder::cmp(int a, int b) {
  Gate g;
  g.kind = GateKind::kCmp;
  g.in = {a, b};
  g.out = {fresh_wire()};
  c_.gates.push_back(g);
  return g.out[0];
}

int CircuitBuilder::trunc(int k, int m, int a) {
  Gate g;
  g.kind = GateKind::kTrunc;
  g.trunc_k = k;
  g.trunc_m = m;
  g.in = {a};
  g.out = {fresh_wire()};
  c_.gates.push_back(g);
  return g.out[0];
}

std::array<int, 4> CircuitBuilder::flmul(std::array<int, 4> x, std::array<int, 4> y) {
  Gate g;
  g.kind = GateKind::kFlmul;
  g.in = {x[0], x[1], x[2], x[3], y[0], y[1], y[2], y[3]};
  std::array<int, 4> out{fresh_wire(), fresh_wire(), fresh_wire(), fresh_wire()};
  g.out = {out[0], out[1], out[2], out[3]};
  c_.gates.push_back(g);
  return out;
}

void CircuitBuilder::output(int w) {
  Gate g;
  g.kind = GateKind::kOutput;
  g.in = {w};
  c_.gates.push_back(g);
}

Circuit CircuitBuilder::finish() {
  validate(c_);
  return std::move(c_);
}

}  // namespace mpcnet
