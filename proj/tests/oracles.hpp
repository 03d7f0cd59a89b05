// Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0.
// Independent reference machinery for the tests: a 50-digit AST evaluator and
// nested central finite differences on top of it. Nothing here touches jets.
#pragma once

#include <array>
#include <boost/multiprecision/cpp_complex.hpp>
#include <functional>

#include "qkprz/expr.hpp"

namespace oracle {

using mpc = boost::multiprecision::cpp_complex_50;
using mpf = boost::multiprecision::cpp_bin_float_50;
using Pt = std::array<mpc, 4>;

inline mpc to_mp(qkprz::cplx c) { return mpc(mpf(c.real()), mpf(c.imag())); }
inline qkprz::cplx to_d(const mpc& c) {
  return {static_cast<double>(c.real()), static_cast<double>(c.imag())};
}
inline Pt to_mp(const qkprz::Point4& p) { return {to_mp(p.w), to_mp(p.z), to_mp(p.wb), to_mp(p.zb)}; }

inline mpc eval_mp(const qkprz::Ast& a, const Pt& x, double lambda) {
  using qkprz::NodeKind;
  switch (a->kind) {
    case NodeKind::kVar: return x[a->index];
    case NodeKind::kParam: return a->index == 0 ? mpc(lambda) : mpc(lambda > 0 ? 1 : -1);
    case NodeKind::kLiteral: return to_mp(a->literal);
    case NodeKind::kAdd: return eval_mp(a->lhs, x, lambda) + eval_mp(a->rhs, x, lambda);
    case NodeKind::kSub: return eval_mp(a->lhs, x, lambda) - eval_mp(a->rhs, x, lambda);
    case NodeKind::kMul: return eval_mp(a->lhs, x, lambda) * eval_mp(a->rhs, x, lambda);
    case NodeKind::kDiv: return eval_mp(a->lhs, x, lambda) / eval_mp(a->rhs, x, lambda);
    case NodeKind::kNeg: return -eval_mp(a->lhs, x, lambda);
    case NodeKind::kLn: return log(eval_mp(a->lhs, x, lambda));
    case NodeKind::kExp: return exp(eval_mp(a->lhs, x, lambda));
    case NodeKind::kSqrt: return sqrt(eval_mp(a->lhs, x, lambda));
    case NodeKind::kPow: {
      mpc b = eval_mp(a->lhs, x, lambda);
      double e = a->exponent;
      if (e == std::round(e)) {
        mpc r(1);
        for (int i = 0; i < int(e); ++i) r *= b;
        return r;
      }
      return exp(mpc(mpf(e)) * log(b));
    }
  }
  return mpc(0);
}

using Fn = std::function<mpc(const Pt&)>;

// Nested central differences: derivative multi-index m, step h, in 50 digits.
inline mpc central_difference(const Fn& f, Pt x, std::array<int, 4> m, double h) {
  for (int d = 0; d < 4; ++d) {
    if (m[d] == 0) continue;
    --m[d];
    Pt xp = x, xm = x;
    xp[d] += mpc(mpf(h));
    xm[d] -= mpc(mpf(h));
    return (central_difference(f, xp, m, h) - central_difference(f, xm, m, h)) / mpc(mpf(2 * h));
  }
  return f(x);
}

inline Fn ast_fn(const qkprz::Ast& a, double lambda) {
  return [a, lambda](const Pt& x) { return eval_mp(a, x, lambda); };
}

}  // namespace oracle
