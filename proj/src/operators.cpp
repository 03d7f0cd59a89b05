// Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0.
#include "qkprz/operators.hpp"

#include <algorithm>
#include <random>

namespace qkprz {
namespace {

Point4 with_lambda(const ManifoldSpec& spec, Point4 p) {
  p.lambda = spec.lambda;
  return p;
}

}  // namespace

cplx tilde_k_at(const ManifoldSpec& spec, const Point4& at) {
  return background_at(spec, at, 2).tildeK.value();
}

OperatorReport prz_residual(const Background& bg) {
  const cplx t1 = bg.Kzwb.value() * bg.Kwzb.value();
  const cplx t2 = -bg.Kwwb.value() * bg.Q.value();
  const cplx t3 = bg.Kw.value() * bg.Kwb.value() * bg.E.value();
  OperatorReport r;
  r.at = bg.at;
  r.residual = t1 + t2 + t3;
  r.normalisation = std::max({std::abs(t1), std::abs(t2), std::abs(t3)});
  r.relative = r.normalisation > 0 ? std::abs(r.residual) / r.normalisation : 0.0;
  r.degenerate = std::abs(bg.tildeK.value()) < kDegenerateTol;
  return r;
}

OperatorReport prz_residual(const ManifoldSpec& spec, const Point4& at) {
  return prz_residual(background_at(spec, with_lambda(spec, at), 2));
}

cplx lin_prz_apply(const Background& bg, const Jet& g) {
  if (g.order() < 2) throw Error(ErrorCode::kInsufficientOrder, "linearised operator needs second derivatives");
  auto d1 = [&](int i) { return g.d(i); };
  auto d2 = [&](int i, int j) { return g.d(i, j); };
  const cplx E = bg.E.value();
  return bg.Kzwb.value() * d2(kW, kZb) + bg.Kwzb.value() * d2(kZ, kWb) - bg.Kwwb.value() * d2(kZ, kZb) -
         bg.Q.value() * d2(kW, kWb) +
         E * (bg.Kw.value() * d1(kWb) + bg.Kwb.value() * d1(kW) +
              bg.lambda * bg.Kw.value() * bg.Kwb.value() * g.value() - 2.0 * bg.Kwwb.value() * g.value());
}

cplx laplacian_weighted(const FrameData& frame, const LeeForms& lee, const HodgeStar& star,
                        const WeightedSection& f) {
  (void)frame;
  const double l = f.l, m = f.m;
  if (f.value.order() < 2) throw Error(ErrorCode::kInsufficientOrder, "Laplacian needs second derivatives");
  const int o1 = std::min(f.value.order() - 1, lee.A.order());
  Form1 alpha = cplx(l / 2) * lee.A - cplx((l + m) / 2) * lee.B;
  Form1 df = differential(f.value).truncated(o1) + f.value.truncated(o1) * alpha.truncated(o1);
  Form3 sdf = star(df);
  const int o2 = sdf.order() - 1;
  Form1 beta = cplx(l / 2) * lee.A - cplx((l + m + 2) / 2) * lee.B;
  Form4 top = exterior_d(sdf) + wedge(beta.truncated(o2), sdf.truncated(o2));
  return star.scalar(top).value();
}

cplx laplacian_weighted(const ManifoldSpec& spec, const Point4& at, const WeightedSection& f) {
  FrameData frame = frame_at(spec, with_lambda(spec, at));
  LeeForms lee = lee_forms(frame.bg);
  HodgeStar star(frame);
  return laplacian_weighted(frame, lee, star, f);
}

cplx plain_laplacian(const HodgeStar& star, const Jet& f) {
  if (f.order() < 2) throw Error(ErrorCode::kInsufficientOrder, "Laplacian needs second derivatives");
  Form3 sdf = star(differential(f));
  return star.scalar(exterior_d(sdf)).value();
}

Jet gauge_kernel_element(const ManifoldSpec& spec, const Point4& at, const Ast& dw, const Ast& dz) {
  // dw may depend on (w, z), dz on z only.
  if (!depends_only_on(dw, 0b0011))
    throw Error(ErrorCode::kInvalidArgument, "delta w must be holomorphic in (w, z)");
  if (!depends_only_on(dz, 0b0010)) throw Error(ErrorCode::kInvalidArgument, "delta z must depend on z only");
  const Point4 p = with_lambda(spec, at);
  const int n = kMaxOrder;
  Background bg = background_at(spec, p, n);
  const int o = n - 2;
  Jet vw = eval_jet(dw, p, n - 1), vz = eval_jet(dz, p, n - 1);
  Jet vwb = eval_jet(conjugate_ast(dw), p, n - 1), vzb = eval_jet(conjugate_ast(dz), p, n - 1);
  Jet first = bg.Kw * vw + bg.Kz * vz + bg.Kwb * vwb + bg.Kzb * vzb;
  Jet div = partial(vz, kZ) + partial(vzb, kZb);
  return first.truncated(o) + div * cplx(1.0 / spec.lambda);
}

Ast sample_test_function(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto coeff = [&] { return cplx(u(rng), u(rng)); };
  Ast sum = lit(coeff());
  // Monomials of degree 1..3 in the four coordinates, each kept with probability 1/2.
  for (int a = 0; a < 4; ++a) {
    Ast m1 = var(a);
    if (rng() & 1) sum = binary(NodeKind::kAdd, sum, binary(NodeKind::kMul, lit(coeff()), m1));
    for (int b = a; b < 4; ++b) {
      Ast m2 = binary(NodeKind::kMul, m1, var(b));
      if (rng() & 1) sum = binary(NodeKind::kAdd, sum, binary(NodeKind::kMul, lit(coeff() * 0.5), m2));
      for (int c = b; c < 4; ++c) {
        if (rng() % 4) continue;
        Ast m3 = binary(NodeKind::kMul, m2, var(c));
        sum = binary(NodeKind::kAdd, sum, binary(NodeKind::kMul, lit(coeff() * 0.25), m3));
      }
    }
  }
  Ast lin = lit(0.0);
  for (int a = 0; a < 4; ++a) lin = binary(NodeKind::kAdd, lin, binary(NodeKind::kMul, lit(coeff() * 0.7), var(a)));
  return binary(NodeKind::kAdd, sum, binary(NodeKind::kMul, lit(coeff() * 0.5), unary(NodeKind::kExp, lin)));
}

}  // namespace qkprz
