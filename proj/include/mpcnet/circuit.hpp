#pragma once

#include <string>
#include <vector>

#include "mpcnet/field.hpp"
#include "mpcnet/gadget_costs.hpp"
#include "mpcnet/hash.hpp"

namespace mpcnet {

struct CircuitParseError : std::runtime_error {
  int line;
  CircuitParseError(int line_, const std::string& what)
      : std::runtime_error("line " + std::to_string(line_) + ": " + what), line(line_) {}
};

enum class GateKind { kInput, kAdd, kAddConst, kSmul, kMul, kCmp, kTrunc, kFlmul, kOutput };

struct Gate {
  GateKind kind;
  int party = -1;               // kInput: providing party
  u64 k = 0;                    // kAddConst / kSmul constant (canonical)
  int trunc_k = 0, trunc_m = 0; // kTrunc parameters
  std::vector<int> in;          // input wire ids
  std::vector<int> out;         // produced wire ids (kFlmul has 4)
  int line = 0;                 // 1-based source line, 0 if built in memory

  bool operator==(const Gate& o) const {
    return kind == o.kind && party == o.party && k == o.k && trunc_k == o.trunc_k &&
           trunc_m == o.trunc_m && in == o.in && out == o.out;
  }
};

/// Immutable after construction; gates are in a valid topological order.
struct Circuit {
  std::vector<Gate> gates;
  std::vector<std::string> wire_names;
  int n_wires = 0;
  int n_inputs = 0;
  int n_outputs = 0;
  u64 modulus = kMersenne61;
  int cmp_bits = 32;  // comparison width l (per-circuit parameter)
  int fl_bits = 8;    // shared-float mantissa width

  bool operator==(const Circuit& o) const {
    return gates == o.gates && wire_names == o.wire_names && n_wires == o.n_wires &&
           modulus == o.modulus && cmp_bits == o.cmp_bits && fl_bits == o.fl_bits;
  }
};

struct CostReport {
  u64 mul_gates = 0;         // explicit MUL gates
  u64 gadget_muls = 0;       // multiplications performed inside macro-gates
  u64 triples_required = 0;  // 2 per multiplication (one sacrificed, one used)
  u64 singles_required = 0;  // one opened scalar per multiplication + output coefficient
  u64 masks_required = 0;    // one per input gate
  u64 bits_required = 0;     // truncation randomness
  int depth = 0;             // multiplicative depth
};

Circuit parse_circuit(const std::string& text);
std::string emit_circuit(const Circuit& c);
CostReport cost(const Circuit& c);
Digest circuit_hash(const Circuit& c);

/// Builder for in-memory circuit construction (used by the expression
/// compiler and the auction demo). Gates must be appended in topological
/// order; finish() validates exactly like the parser.
class CircuitBuilder {
 public:
  explicit CircuitBuilder(u64 modulus = kMersenne61) { c_.modulus = modulus; }

  int input(int party);
  int add(int a, int b);
  int add_const(u64 k, int a);
  int smul(u64 k, int a);
  int mul(int a, int b);
  int cmp(int a, int b);
  int trunc(int k, int m, int a);
  std::array<int, 4> flmul(std::array<int, 4> x, std::array<int, 4> y);
  void output(int w);
  void set_cmp_bits(int l) { c_.cmp_bits = l; }
  void set_fl_bits(int l) { c_.fl_bits = l; }

  Circuit finish();

 private:
  int fresh_wire();
  Circuit c_;
};

/// Clear-text evaluation, the correctness oracle for the engine. Uses plain
/// u64/u128 modular arithmetic on the circuit's runtime modulus, a code path
/// independent of the Fp template. Inputs are per-party value queues, drawn
/// in gate order.
std::vector<u64> eval_plaintext(const Circuit& c, const std::vector<std::vector<u64>>& inputs);

// plaintext gadget reference semantics (shared with eval_plaintext and tests)
u64 trunc_oracle(u64 x, int m);
u64 cmp_oracle(u64 a, u64 b);
struct FlQuad {
  u64 v = 0, p = 0, z = 1, s = 0;  // p is field-encoded signed
  bool operator==(const FlQuad& o) const { return v == o.v && p == o.p && z == o.z && s == o.s; }
};
FlQuad flmul_oracle(const FlQuad& x, const FlQuad& y, int l, u64 modulus);

}  // namespace mpcnet
