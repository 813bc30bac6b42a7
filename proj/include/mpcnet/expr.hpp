#pragma once

#include <memory>
#include <vector>

#include "mpcnet/circuit.hpp"

namespace mpcnet {

enum class ExprKind { kInput, kConst, kAdd, kSub, kMul, kAnd, kOr, kNot, kXor };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Expression tree node. Boolean operators demand bit-typed operands
/// (inputs declared as bits, 0/1 constants, or results of boolean ops).
struct Expr {
  ExprKind kind;
  int party = -1;   // kInput
  u64 value = 0;    // kConst
  bool is_bit = false;
  ExprPtr a, b;

  static ExprPtr input(int party, bool is_bit = false);
  static ExprPtr constant(u64 v, bool is_bit = false);
  static ExprPtr add(ExprPtr a, ExprPtr b);
  static ExprPtr sub(ExprPtr a, ExprPtr b);
  static ExprPtr mul(ExprPtr a, ExprPtr b);
  static ExprPtr band(ExprPtr a, ExprPtr b);  // a*b
  static ExprPtr bor(ExprPtr a, ExprPtr b);   // a+b-ab
  static ExprPtr bnot(ExprPtr a);             // 1-a
  static ExprPtr bxor(ExprPtr a, ExprPtr b);  // a+b-2ab
};

struct ExprTypeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Lower expression roots to a circuit. Distinct input nodes become INPUT
/// gates in discovery order; shared subtrees compile once.
Circuit compile_expr(const std::vector<ExprPtr>& roots, u64 modulus = kMersenne61);

/// Direct recursive evaluation, independent of the circuit IR; the
/// cross-check oracle for compile_expr + eval_plaintext. Input values are
/// assigned to kInput nodes in the same discovery order as compile_expr.
std::vector<u64> eval_expr(const std::vector<ExprPtr>& roots,
                           const std::vector<std::vector<u64>>& inputs_per_party, u64 modulus);

}  // namespace mpcnet
