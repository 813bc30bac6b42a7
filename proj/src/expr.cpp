#include "mpcnet/expr.hpp"

#include <functional>
#include <map>

namespace mpcnet {

namespace {

ExprPtr node(ExprKind k, ExprPtr a, ExprPtr b, bool is_bit) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->a = std::move(a);
  e->b = std::move(b);
  e->is_bit = is_bit;
  return e;
}

void require_bit(const ExprPtr& e, const char* op) {
  if (!e->is_bit) throw ExprTypeError(std::string(op) + " applied to non-bit-typed subtree");
}

}  // namespace

ExprPtr Expr::input(int party, bool is_bit) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::kInput;
  e->party = party;
  e->is_bit = is_bit;
  return e;
}

ExprPtr Expr::constant(u64 v, bool is_bit) {
  if (is_bit && v > 1) throw ExprTypeError("bit constant must be 0 or 1");
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::kConst;
  e->value = v;
  e->is_bit = is_bit;
  return e;
}

ExprPtr Expr::add(ExprPtr a, ExprPtr b) { return node(ExprKind::kAdd, a, b, false); }
ExprPtr Expr::sub(ExprPtr a, ExprPtr b) { return node(ExprKind::kSub, a, b, false); }
ExprPtr Expr::mul(ExprPtr a, ExprPtr b) { return node(ExprKind::kMul, a, b, false); }

ExprPtr Expr::band(ExprPtr a, ExprPtr b) {
  require_bit(a, "AND");
  require_bit(b, "AND");
  return node(ExprKind::kAnd, a, b, true);
}
ExprPtr Expr::bor(ExprPtr a, ExprPtr b) {
  require_bit(a, "OR");
  require_bit(b, "OR");
  return node(ExprKind::kOr, a, b, true);
}
ExprPtr Expr::bnot(ExprPtr a) {
  require_bit(a, "NOT");
  return node(ExprKind::kNot, a, nullptr, true);
}
ExprPtr Expr::bxor(ExprPtr a, ExprPtr b) {
  require_bit(a, "XOR");
  require_bit(b, "XOR");
  return node(ExprKind::kXor, a, b, true);
}

namespace {

u64 fold_bin(u64 a, u64 b, ExprKind k, u64 p) {
  u64 ab = (u64)((u128)a * b % p);
  switch (k) {
    case ExprKind::kAdd: return (a + b) % p;
    case ExprKind::kSub: return (a + p - b) % p;
    case ExprKind::kMul:
    case ExprKind::kAnd: return ab;                                    // AND(a,b) = a*b
    case ExprKind::kOr: return ((a + b) % p + p - ab) % p;             // a+b-ab
    case ExprKind::kXor: return ((a + b) % p + 2 * p - 2 * ab % p) % p;  // a+b-2ab
    default: throw ExprTypeError("fold_bin: not a binary op");
  }
}

bool all_const(const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::kInput: return false;
    case ExprKind::kConst: return true;
    case ExprKind::kNot: return all_const(e->a);
    default: return all_const(e->a) && all_const(e->b);
  }
}

u64 fold(const ExprPtr& e, u64 p) {
  switch (e->kind) {
    case ExprKind::kConst: return e->value % p;
    case ExprKind::kNot: return (1 + p - fold(e->a, p)) % p;
    case ExprKind::kInput: throw ExprTypeError("fold: not constant");
    default: return fold_bin(fold(e->a, p), fold(e->b, p), e->kind, p);
  }
}

/// Lowers the tree to gates, folding constant subtrees into addc/smul.
/// Boolean ops follow the arithmetic transform: AND = ab, OR = a+b-ab,
/// NOT = 1-a, XOR = a+b-2ab.
struct Lowering {
  CircuitBuilder b;
  u64 p;
  std::map<const Expr*, int> memo;
  int anchor = -1;  // any existing wire, for pure-constant subtrees

  explicit Lowering(u64 modulus) : b(modulus), p(modulus) {}

  int sub_wires(int x, int y) { return b.add(x, b.smul(p - 1, y)); }

  int constant_wire(u64 k) {
    // the IR has no constant gate: ride on 0*anchor + k
    return b.add_const(k, b.smul(0, anchor));
  }

  int lower(const ExprPtr& e) {
    auto it = memo.find(e.get());
    if (it != memo.end()) return it->second;
    int w;
    if (all_const(e)) {
      w = constant_wire(fold(e, p));
      memo.emplace(e.get(), w);
      return w;
    }
    switch (e->kind) {
      case ExprKind::kInput: w = b.input(e->party); break;
      case ExprKind::kConst: throw ExprTypeError("unreachable");
      case ExprKind::kAdd:
      case ExprKind::kSub: {
        bool ca = all_const(e->a), cb = all_const(e->b);
        if (cb) {
          u64 k = fold(e->b, p);
          w = b.add_const(e->kind == ExprKind::kAdd ? k : (p - k) % p, lower(e->a));
        } else if (ca) {
          u64 k = fold(e->a, p);
          int x = lower(e->b);
          w = e->kind == ExprKind::kAdd ? b.add_const(k, x)
                                        : b.add_const(k, b.smul(p - 1, x));  // k - x
        } else {
          int x = lower(e->a), y = lower(e->b);
          w = e->kind == ExprKind::kAdd ? b.add(x, y) : sub_wires(x, y);
        }
        break;
      }
      case ExprKind::kMul:
      case ExprKind::kAnd: {
        bool ca = all_const(e->a), cb = all_const(e->b);
        if (ca || cb) {
          w = b.smul(fold(ca ? e->a : e->b, p), lower(ca ? e->b : e->a));
        } else {
          w = b.mul(lower(e->a), lower(e->b));
        }
        break;
      }
      case ExprKind::kOr: {
        int x = lower(e->a), y = lower(e->b);
        w = sub_wires(b.add(x, y), b.mul(x, y));
        break;
      }
      case ExprKind::kNot: w = b.add_const(1, b.smul(p - 1, lower(e->a))); break;
      case ExprKind::kXor: {
        int x = lower(e->a), y = lower(e->b);
        w = sub_wires(b.add(x, y), b.smul(2, b.mul(x, y)));
        break;
      }
    }
    memo.emplace(e.get(), w);
    return w;
  }
};

void collect_inputs(const ExprPtr& e, std::vector<const Expr*>& order,
                    std::map<const Expr*, int>& seen) {
  if (!seen.emplace(e.get(), 1).second) return;
  if (e->kind == ExprKind::kInput) {
    order.push_back(e.get());
    return;
  }
  if (e->a) collect_inputs(e->a, order, seen);
  if (e->b) collect_inputs(e->b, order, seen);
}

}  // namespace

Circuit compile_expr(const std::vector<ExprPtr>& roots, u64 modulus) {
  Lowering lo(modulus);
  // INPUT gates first, in discovery order, so eval_expr can mirror the order
  std::vector<const Expr*> order;
  std::map<const Expr*, int> seen;
  for (const auto& r : roots) collect_inputs(r, order, seen);
  for (const Expr* e : order) lo.memo.emplace(e, lo.b.input(e->party));
  if (order.empty()) {
    lo.anchor = lo.b.input(0);  // pure-constant circuit still needs a wire
  } else {
    lo.anchor = lo.memo.at(order[0]);
  }
  for (const auto& r : roots) lo.b.output(lo.lower(r));
  return lo.b.finish();
}

std::vector<u64> eval_expr(const std::vector<ExprPtr>& roots,
                           const std::vector<std::vector<u64>>& inputs_per_party, u64 modulus) {
  std::vector<const Expr*> order;
  std::map<const Expr*, int> seen;
  for (const auto& r : roots) collect_inputs(r, order, seen);
  std::map<const Expr*, u64> val;
  std::vector<std::size_t> next(inputs_per_party.size(), 0);
  for (const Expr* e : order) {
    if (e->party < 0 || e->party >= (int)inputs_per_party.size() ||
        next[e->party] >= inputs_per_party[e->party].size())
      throw std::invalid_argument("eval_expr: missing input");
    val[e] = inputs_per_party[e->party][next[e->party]++] % modulus;
  }
  std::map<const Expr*, u64> memo;
  std::function<u64(const ExprPtr&)> ev = [&](const ExprPtr& e) -> u64 {
    if (e->kind == ExprKind::kInput) return val.at(e.get());
    auto it = memo.find(e.get());
    if (it != memo.end()) return it->second;
    u64 r;
    if (e->kind == ExprKind::kConst) {
      r = e->value % modulus;
    } else if (e->kind == ExprKind::kNot) {
      r = (1 + modulus - ev(e->a)) % modulus;
    } else {
      r = fold_bin(ev(e->a), ev(e->b), e->kind, modulus);
    }
    memo.emplace(e.get(), r);
    return r;
  };
  std::vector<u64> out;
  for (const auto& r : roots) out.push_back(ev(r));
  return out;
}

}  // namespace mpcnet
