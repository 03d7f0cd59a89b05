// Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0.
#include "qkprz/lax.hpp"

#include <algorithm>

namespace qkprz {
namespace {

void require_lax_gauge(const Background& bg) {
  if (std::abs(bg.Kw.value()) < kDegenerateTol || std::abs(bg.Kwb.value()) < kDegenerateTol)
    throw Error(ErrorCode::kGaugeSingularity, "K_w or K_wb vanishes at the point");
  if (std::abs(bg.tildeK.value()) < kDegenerateTol)
    throw Error(ErrorCode::kGaugeSingularity, "tildeK vanishes at the point");
}

// The d_xi coefficients: l0 carries xi a, l1 carries xi b + xi^2 c.
struct XiCoefficients {
  Jet a, b, c;
};

XiCoefficients xi_coefficients(const Background& bg) {
  const int o = bg.tildeK.order() - 1;
  if (o < 0) throw Error(ErrorCode::kInsufficientOrder, "Lax pair needs K jets of order 3 or more");
  auto t = [o](const Jet& j) { return j.truncated(o); };
  Jet T = t(bg.tildeK), E = t(bg.E), Kw = t(bg.Kw), Kwb = t(bg.Kwb);
  XiCoefficients x;
  x.a = (partial(bg.tildeK, kW) + E * Kw * t(bg.Kwwb)) / T - t(bg.Kwwb) / Kwb;
  x.b = (partial(bg.tildeK, kZ) + E * Kw * t(bg.Kzwb)) / T - t(bg.Kzwb) / Kwb;
  x.c = Jet::constant(bg.at, o, 1.0) / Kw - E * Kwb / T;
  return x;
}

// X(f) for a xi-polynomial f with jet coefficients.
std::array<Jet, kXiTerms> apply(const XiPolyVectorField& x, const std::array<Jet, kXiTerms>& f, int o) {
  const Point4& p = x.base;
  std::array<Jet, kXiTerms> r;
  r.fill(Jet(p, o));
  auto add = [&](int power, const Jet& term) {
    if (term.max_abs() == 0) return;
    if (power >= kXiTerms)
      throw Error(ErrorCode::kInternal, "xi-polynomial degree exceeds the supported bound");
    r[power] += term;
  };
  for (int b = 0; b < kXiTerms; ++b) {
    if (f[b].max_abs() == 0) continue;
    for (int i = 0; i < 4; ++i) {
      Jet df = partial(f[b], i).truncated(o);
      for (int a = 0; a < kXiTerms; ++a)
        if (x.c[i][a].max_abs() != 0) add(a + b, x.c[i][a].truncated(o) * df);
    }
    if (b == 0) continue;
    for (int a = 0; a < kXiTerms; ++a)
      if (x.c[kDxi][a].max_abs() != 0) add(a + b - 1, (x.c[kDxi][a] * f[b]).truncated(o) * cplx(b));
  }
  return r;
}

}  // namespace

XiPolyVectorField XiPolyVectorField::zero(const Point4& base, int order) {
  XiPolyVectorField f;
  f.base = base;
  for (auto& d : f.c) d.fill(Jet(base, order));
  return f;
}

int XiPolyVectorField::degree(int direction) const {
  for (int k = kXiTerms - 1; k >= 0; --k)
    if (c[direction][k].value() != cplx(0)) return k;
  return -1;
}

double XiPolyVectorField::max_abs_value() const {
  double m = 0;
  for (const auto& d : c)
    for (const Jet& j : d) m = std::max(m, std::abs(j.value()));
  return m;
}

LaxPair lax_fields(const Background& bg) {
  require_lax_gauge(bg);
  XiCoefficients x = xi_coefficients(bg);
  const int o = x.a.order();
  const Point4& p = bg.at;
  auto t = [o](const Jet& j) { return j.truncated(o); };
  Jet T = t(bg.tildeK);
  LaxPair lp{XiPolyVectorField::zero(p, o), XiPolyVectorField::zero(p, o)};
  lp.l0.c[kDw][0] = Jet::constant(p, o, 1.0);
  lp.l0.c[kDwb][1] = -t(bg.Kwzb) / T;
  lp.l0.c[kDzb][1] = t(bg.Kwwb) / T;
  lp.l0.c[kDxi][1] = x.a;
  lp.l1.c[kDz][0] = Jet::constant(p, o, 1.0);
  lp.l1.c[kDwb][1] = -t(bg.Q) / T;
  lp.l1.c[kDzb][1] = t(bg.Kzwb) / T;
  lp.l1.c[kDxi][1] = x.b;
  lp.l1.c[kDxi][2] = x.c;
  return lp;
}

LaxPair lax_fields_at(const ManifoldSpec& spec, const Point4& at) {
  Point4 p = at;
  p.lambda = spec.lambda;
  return lax_fields(background_at(spec, p));
}

XiPolyVectorField lax_commutator(const XiPolyVectorField& x, const XiPolyVectorField& y) {
  if (!x.base.same_coords(y.base)) throw Error(ErrorCode::kInvalidArgument, "fields live at different points");
  const int o = std::min(x.order(), y.order()) - 1;
  if (o < 0) throw Error(ErrorCode::kInsufficientOrder, "commutator needs first-derivative jets");
  XiPolyVectorField r = XiPolyVectorField::zero(x.base, o);
  for (int k = 0; k < 5; ++k) {
    auto xy = apply(x, y.c[k], o);
    auto yx = apply(y, x.c[k], o);
    for (int p = 0; p < kXiTerms; ++p) r.c[k][p] = xy[p] - yx[p];
  }
  return r;
}

CommutatorDecomp decompose_commutator(const XiPolyVectorField& comm, const FrameData& frame) {
  const Background& bg = frame.bg;
  const cplx T = bg.tildeK.value();
  // nabla_{01'} and nabla_{11'} components along d_wb, d_zb.
  const cplx n0w = -bg.Kwzb.value() / T, n0z = bg.Kwwb.value() / T;
  const cplx n1w = -bg.Q.value() / T, n1z = bg.Kzwb.value() / T;
  const cplx det = n0w * n1z - n1w * n0z;
  CommutatorDecomp d;
  for (int p = 0; p < kXiTerms; ++p) {
    const cplx u = comm.value(kDwb, p), v = comm.value(kDzb, p);
    d.A[p] = (u * n1z - n1w * v) / det;
    d.B[p] = (n0w * v - u * n0z) / det;
    d.transverse = std::max({d.transverse, std::abs(comm.value(kDw, p)), std::abs(comm.value(kDz, p))});
  }
  d.C1 = comm.value(kDxi, 1);
  d.C2 = comm.value(kDxi, 2);
  d.C3 = comm.value(kDxi, 3);
  d.transverse = std::max({d.transverse, std::abs(comm.value(kDxi, 0)), std::abs(comm.value(kDxi, 4))});
  return d;
}

CommutatorDecomp closed_form_coefficients(const Background& bg) {
  require_lax_gauge(bg);
  const cplx T = bg.tildeK.value(), E = bg.E.value();
  const cplx Kw = bg.Kw.value(), Kwb = bg.Kwb.value();
  const cplx prz = T + Kw * Kwb * E;
  CommutatorDecomp d;
  d.A[1] = Kw * bg.Kzwb.value() * prz / (T * Kw * Kwb);
  d.A[2] = -Kwb * prz / (T * Kw * Kwb);
  d.B[1] = -bg.Kwwb.value() * prz / (T * Kwb);

  // F = e^{lambda K} K_w K_wb / tildeK and its first derivatives.
  const int o = bg.tildeK.order();
  Jet F = bg.E.truncated(o) * bg.Kw.truncated(o) * bg.Kwb.truncated(o) / bg.tildeK;
  const cplx Fw = F.d(kW), Fz = F.d(kZ), Fwb = F.d(kWb), Fzb = F.d(kZb);
  d.C1 = -(bg.Kwwb.value() * Fz - bg.Kzwb.value() * Fw) / Kwb;
  const cplx nabla01_F = (-bg.Kwzb.value() * Fwb + bg.Kwwb.value() * Fzb) / T;
  d.C3 = -nabla01_F / Kw;

  // C2 from the xi^2 part of the commutator of the Lax fields.
  XiCoefficients x = xi_coefficients(bg);
  auto nabla01 = [&](const Jet& f) { return (-bg.Kwzb.value() * f.d(kWb) + bg.Kwwb.value() * f.d(kZb)) / T; };
  auto nabla11 = [&](const Jet& f) { return (-bg.Q.value() * f.d(kWb) + bg.Kzwb.value() * f.d(kZb)) / T; };
  d.C2 = x.c.d(kW) + nabla01(x.b) - nabla11(x.a) + x.a.value() * x.c.value();
  return d;
}

CommutatorDecomp closed_form_coefficients(const ManifoldSpec& spec, const Point4& at) {
  Point4 p = at;
  p.lambda = spec.lambda;
  return closed_form_coefficients(background_at(spec, p));
}

double lax_scale(const LaxPair& lp) { return std::max(lp.l0.max_abs_value(), lp.l1.max_abs_value()); }

double reconstruction_residual(const CommutatorDecomp& d, const XiPolyVectorField& comm, const FrameData& frame,
                               double scale) {
  const Background& bg = frame.bg;
  const cplx T = bg.tildeK.value();
  const cplx n0w = -bg.Kwzb.value() / T, n0z = bg.Kwwb.value() / T;
  const cplx n1w = -bg.Q.value() / T, n1z = bg.Kzwb.value() / T;
  double diff = 0;
  for (int p = 0; p < kXiTerms; ++p) {
    cplx xi = 0;
    if (p == 1) xi = d.C1;
    if (p == 2) xi = d.C2;
    if (p == 3) xi = d.C3;
    diff = std::max({diff, std::abs(comm.value(kDw, p)), std::abs(comm.value(kDz, p)),
                     std::abs(comm.value(kDwb, p) - (d.A[p] * n0w + d.B[p] * n1w)),
                     std::abs(comm.value(kDzb, p) - (d.A[p] * n0z + d.B[p] * n1z)),
                     std::abs(comm.value(kDxi, p) - xi)});
  }
  if (scale <= 0) scale = comm.max_abs_value();
  return scale > 0 ? diff / scale : diff;
}

std::array<cplx, kXiTerms + 2> contact_contraction(const XiPolyVectorField& field, const Background& bg) {
  std::array<Form1, 3> g = connection_fg(bg);
  std::array<cplx, kXiTerms + 2> r{};
  for (int p = 0; p < kXiTerms; ++p) {
    r[p] += field.value(kDxi, p);
    for (int i = 0; i < 4; ++i) {
      const cplx v = field.value(i, p);
      r[p] -= v * g[0].c[i].value();
      r[p + 1] -= 2.0 * v * g[1].c[i].value();
      r[p + 2] -= v * g[2].c[i].value();
    }
  }
  return r;
}

}  // namespace qkprz
