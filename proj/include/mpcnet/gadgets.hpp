#pragma once

#include "mpcnet/engine.hpp"

// Composite protocol gadgets built from open/multiply. Each definition
// consumes exactly the resources its entry in gadget_costs.hpp declares;
// tests assert the counters match.

namespace mpcnet {

template <class F>
typename Session<F>::Col Session<F>::op_and(const Col& a, const Col& b) {
  return mul_cols(a, b);
}

template <class F>
typename Session<F>::Col Session<F>::op_or(const Col& a, const Col& b) {
  return sub_cols(add_cols(a, b), mul_cols(a, b));
}

template <class F>
typename Session<F>::Col Session<F>::op_xor(const Col& a, const Col& b) {
  return sub_cols(add_cols(a, b), smul_col(F(2), mul_cols(a, b)));
}

template <class F>
typename Session<F>::Col Session<F>::op_not(const Col& a) {
  return sub_cols(constant_col(F(1)), a);
}

/// trunc(x, k, m) = floor(x / 2^m), exact for 0 <= x < 2^k. One masked
/// opening c = x + r' + 2^m r'' per job (single round for the whole batch),
/// then an MSB-first equality scan comparing c mod 2^m against the shared
/// bits of r', one multiplication per scanned bit.
template <class F>
std::vector<typename Session<F>::Col> Session<F>::op_trunc_batch(
    const std::vector<TruncJob>& jobs) {
  std::size_t k = jobs.size();
  if (k == 0) return {};
  struct Mat {
    std::vector<Col> low_bits;  // shared bits of r', LSB first
    Col rp;                     // r'  = sum 2^i b_i
    Col c;                      // masked opening x + r' + 2^m r''
  };
  std::vector<Mat> mat(k);
  int max_m = 0;
  for (std::size_t j = 0; j < k; j++) {
    const TruncJob& job = jobs[j];
    int slack = stat_slack_for(job.k, F::modulus);  // validates k against the field
    if (job.m < 1 || job.m >= job.k) throw std::domain_error("trunc: need 1 <= m < k");
    max_m = std::max(max_m, job.m);
    Mat& mj = mat[j];
    mj.rp = constant_col(F());
    for (int i = 0; i < job.m; i++) {
      Col b(n_);
      for (int p = 0; p < n_; p++) b[p] = parties_[p].preproc.take_bit();
      mj.rp = add_cols(mj.rp, smul_col(F(2).pow((u64)i), b));
      mj.low_bits.push_back(std::move(b));
    }
    Col rpp = constant_col(F());
    for (int i = 0; i < job.k - job.m + slack; i++) {
      Col b(n_);
      for (int p = 0; p < n_; p++) b[p] = parties_[p].preproc.take_bit();
      rpp = add_cols(rpp, smul_col(F(2).pow((u64)i), b));
    }
    mj.c = add_cols(jobs[j].x, add_cols(mj.rp, smul_col(F(2).pow((u64)job.m), rpp)));
  }

  std::vector<Col> copen(k);
  for (std::size_t j = 0; j < k; j++) copen[j] = mat[j].c;
  std::vector<F> cvals = open_cols(copen, "open");
  std::vector<u64> cmod(k);
  for (std::size_t j = 0; j < k; j++)
    cmod[j] = cvals[j].value() & ((u64(1) << jobs[j].m) - 1);

  // u = [c' < r'] via the shared carry scan: eq tracks bit-prefix equality,
  // lt fires on the first position where c' has 0 and r' has 1
  std::vector<Col> eq(k), lt(k);
  for (std::size_t j = 0; j < k; j++) {
    eq[j] = constant_col(F(1));
    lt[j] = constant_col(F());
  }
  for (int t = 0; t < max_m; t++) {
    std::vector<std::pair<Col, Col>> mjobs;
    std::vector<std::size_t> live;
    for (std::size_t j = 0; j < k; j++) {
      if (t >= jobs[j].m) continue;
      mjobs.push_back({eq[j], mat[j].low_bits[jobs[j].m - 1 - t]});
      live.push_back(j);
    }
    std::vector<Col> w = mul_batch(mjobs);
    for (std::size_t i = 0; i < live.size(); i++) {
      std::size_t j = live[i];
      if ((cmod[j] >> (jobs[j].m - 1 - t)) & 1) {
        eq[j] = w[i];
      } else {
        lt[j] = add_cols(lt[j], w[i]);
        eq[j] = sub_cols(eq[j], w[i]);
      }
    }
  }

  // x mod 2^m = c' - r' + 2^m u, then divide the exact difference
  std::vector<Col> out(k);
  for (std::size_t j = 0; j < k; j++) {
    F p2m = F(2).pow((u64)jobs[j].m);
    Col xmod = add_cols(sub_cols(constant_col(F(cmod[j])), mat[j].rp), smul_col(p2m, lt[j]));
    out[j] = smul_col(p2m.inv(), sub_cols(jobs[j].x, xmod));
  }
  return out;
}

template <class F>
typename Session<F>::Col Session<F>::op_trunc(const Col& x, int k, int m) {
  return op_trunc_batch({TruncJob{x, k, m}})[0];
}

/// [x < 2^(k-1)] for 0 <= x < 2^k: complement of the truncated top bit.
template <class F>
typename Session<F>::Col Session<F>::op_lt_pow2(const Col& x, int k) {
  return sub_cols(constant_col(F(1)), op_trunc(x, k, k - 1));
}

/// [a < b] for a, b < 2^l: the shifted difference a - b + 2^l stays in
/// [1, 2^(l+1)) and drops below 2^l exactly when a < b.
template <class F>
std::vector<typename Session<F>::Col> Session<F>::op_compare_batch(
    const std::vector<std::pair<Col, Col>>& jobs, int l) {
  std::vector<TruncJob> tjobs;
  tjobs.reserve(jobs.size());
  for (const auto& [a, b] : jobs)
    tjobs.push_back({add_const_col(sub_cols(a, b), F(2).pow((u64)l)), l + 1, l});
  std::vector<Col> tops = op_trunc_batch(tjobs);
  std::vector<Col> out(jobs.size());
  for (std::size_t j = 0; j < jobs.size(); j++)
    out[j] = sub_cols(constant_col(F(1)), tops[j]);
  return out;
}

template <class F>
typename Session<F>::Col Session<F>::op_compare(const Col& a, const Col& b, int l) {
  return op_compare_batch({{a, b}}, l)[0];
}

/// Shared-float product. Mantissas of nonzero inputs are normalized to
/// [2^(l-1), 2^l); zero is encoded (v=0, p=0, z=1). The provisional product
/// shift keeps l+1 bits, the top-bit test decides the extra 1-bit shift, and
/// the exponent is masked to zero when either factor is zero. v propagates
/// zero through every stage on its own, so no separate mask is spent on it.
template <class F>
std::vector<typename Session<F>::FloatCols> Session<F>::op_flmul_batch(
    const std::vector<std::pair<FloatCols, FloatCols>>& jobs) {
  std::size_t k = jobs.size();
  if (k == 0) return {};
  int l = circuit_.fl_bits;

  std::vector<std::pair<Col, Col>> m1;
  m1.reserve(k);
  for (const auto& [x, y] : jobs) m1.push_back({x.v, y.v});
  std::vector<Col> v = mul_batch(m1);

  std::vector<TruncJob> t2;
  t2.reserve(k);
  for (std::size_t j = 0; j < k; j++) t2.push_back({v[j], 2 * l, l - 1});
  v = op_trunc_batch(t2);

  std::vector<TruncJob> t3;
  t3.reserve(k);
  for (std::size_t j = 0; j < k; j++) t3.push_back({v[j], l + 1, l});
  std::vector<Col> top = op_trunc_batch(t3);
  std::vector<Col> b(k);
  for (std::size_t j = 0; j < k; j++) b[j] = sub_cols(constant_col(F(1)), top[j]);

  std::vector<std::pair<Col, Col>> m4;
  m4.reserve(k);
  for (std::size_t j = 0; j < k; j++) m4.push_back({b[j], v[j]});
  std::vector<Col> bv = mul_batch(m4);
  std::vector<TruncJob> t4;
  t4.reserve(k);
  for (std::size_t j = 0; j < k; j++) t4.push_back({add_cols(v[j], bv[j]), l + 1, 1});
  v = op_trunc_batch(t4);

  // z = OR(z1, z2) and s = XOR(s1, s2) share one multiplication round
  std::vector<std::pair<Col, Col>> m5;
  m5.reserve(2 * k);
  for (const auto& [x, y] : jobs) {
    m5.push_back({x.z, y.z});
    m5.push_back({x.s, y.s});
  }
  std::vector<Col> zs = mul_batch(m5);
  std::vector<Col> z(k), s(k);
  for (std::size_t j = 0; j < k; j++) {
    z[j] = sub_cols(add_cols(jobs[j].first.z, jobs[j].second.z), zs[2 * j]);
    s[j] = sub_cols(add_cols(jobs[j].first.s, jobs[j].second.s), smul_col(F(2), zs[2 * j + 1]));
  }

  // p = (p1 + p2 + l - b) * (1 - z), field-encoded signed exponent
  std::vector<std::pair<Col, Col>> m6;
  m6.reserve(k);
  for (std::size_t j = 0; j < k; j++) {
    Col pe = sub_cols(add_const_col(add_cols(jobs[j].first.p, jobs[j].second.p), F((u64)l)), b[j]);
    m6.push_back({pe, sub_cols(constant_col(F(1)), z[j])});
  }
  std::vector<Col> p = mul_batch(m6);

  std::vector<FloatCols> out(k);
  for (std::size_t j = 0; j < k; j++) out[j] = {v[j], p[j], z[j], s[j]};
  return out;
}

}  // namespace mpcnet
