// Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0.
#include "qkprz/geometry.hpp"

#include <Eigen/Dense>
#include <bit>
#include <algorithm>
#include <array>
#include <cmath>

namespace qkprz {
namespace {

// eps^{AB} = eps_{AB} with eps^{01} = 1.
constexpr double eps2(int a, int b) { return a == b ? 0.0 : (a == 0 ? 1.0 : -1.0); }

Form1 coord_form(const Point4& p, int order, int coord) {
  Form1 f = Form1::zero(p, order);
  f.c[coord] = Jet::constant(p, order, 1.0);
  return f;
}

void require_gauge(const Background& bg) {
  if (std::abs(bg.Kw.value()) < kDegenerateTol || std::abs(bg.Kwb.value()) < kDegenerateTol)
    throw Error(ErrorCode::kGaugeSingularity, "K_w or K_wb vanishes at the point");
}

// Structure equation solved for (Gamma_{A'B'}, Gamma_{AB}) at jet order n-3.
Connection solve_structure_equation(const FrameData& f) {
  const int o = f.e[0].order() - 1;
  const Point4& p = f.bg.at;
  std::array<Form2, 4> de;
  std::array<Form1, 4> e;
  for (int a = 0; a < 4; ++a) {
    de[a] = exterior_d(f.e[a]);
    e[a] = f.e[a].truncated(o);
  }
  std::array<Form1, 4> dx;
  for (int mu = 0; mu < 4; ++mu) dx[mu] = coord_form(p, o, mu);

  // Unknown u = 12*(0 primed | 1 unprimed) + 4*pair + mu.
  std::vector<std::vector<Jet>> m(24, std::vector<Jet>(24, Jet(p, o)));
  std::vector<Jet> rhs(24, Jet(p, o));
  for (int A = 0; A < 2; ++A)
    for (int Ap = 0; Ap < 2; ++Ap) {
      int a = frame_index(A, Ap);
      for (int k = 0; k < 6; ++k) rhs[6 * a + k] = de[a].c[k];
      // -eps^{A'B'} Gamma_{B'C'} ^ e^{AC'}  and  -eps^{AB} Gamma_{BC} ^ e^{CA'}
      for (int B = 0; B < 2; ++B)
        for (int C = 0; C < 2; ++C) {
          double sp = -eps2(Ap, B);
          double su = -eps2(A, B);
          for (int mu = 0; mu < 4; ++mu) {
            if (sp != 0) {
              Form2 t = wedge(dx[mu], e[frame_index(A, C)]);
              int u = 4 * pair_index(B, C) + mu;
              for (int k = 0; k < 6; ++k) m[6 * a + k][u] += sp * t.c[k];
            }
            if (su != 0) {
              Form2 t = wedge(dx[mu], e[frame_index(C, Ap)]);
              int u = 12 + 4 * pair_index(B, C) + mu;
              for (int k = 0; k < 6; ++k) m[6 * a + k][u] += su * t.c[k];
            }
          }
        }
    }
  std::vector<Jet> x = solve_jet_system(std::move(m), std::move(rhs));
  Connection c;
  for (int pr = 0; pr < 3; ++pr)
    for (int mu = 0; mu < 4; ++mu) {
      c.primed[pr].c[mu] = x[4 * pr + mu];
      c.unprimed[pr].c[mu] = x[12 + 4 * pr + mu];
    }
  return c;
}

Jet det4(const std::array<std::array<Jet, 4>, 4>& g) {
  std::array<int, 4> perm = {0, 1, 2, 3};
  Jet d(g[0][0].base(), g[0][0].order());
  do {
    int inv = 0;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j)
        if (perm[i] > perm[j]) ++inv;
    Jet t = g[0][perm[0]] * g[1][perm[1]] * g[2][perm[2]] * g[3][perm[3]];
    if (inv % 2) d -= t;
    else d += t;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return d;
}

}  // namespace

// ---- background and frame ----------------------------------------------

Background background_from_jet(const Jet& K, double lambda) {
  if (lambda == 0) throw Error(ErrorCode::kInvalidArgument, "lambda must be nonzero");
  if (K.order() < 2) throw Error(ErrorCode::kInsufficientOrder, "K needs at least second-order jets");
  const int n = K.order();
  Background b;
  b.at = K.base();
  b.lambda = lambda;
  b.eps = lambda > 0 ? 1.0 : -1.0;
  b.K = K;
  b.E = exp(K * cplx(lambda));
  b.Kw = partial(K, kW);
  b.Kz = partial(K, kZ);
  b.Kwb = partial(K, kWb);
  b.Kzb = partial(K, kZb);
  b.Kwwb = partial(b.Kw, kWb);
  b.Kwzb = partial(b.Kw, kZb);
  b.Kzwb = partial(b.Kz, kWb);
  b.Kzzb = partial(b.Kz, kZb);
  b.Q = b.Kzzb + b.E.truncated(n - 2) * cplx(2.0 / lambda);
  b.tildeK = b.Kwzb * b.Kzwb - b.Kwwb * b.Q;
  return b;
}

Background background_at(const ManifoldSpec& spec, const Point4& at, int order) {
  Point4 p = at;
  p.lambda = spec.lambda;
  return background_from_jet(eval_jet(spec.k_expr, p, order), spec.lambda);
}

Jet Vec4::apply(const Jet& f) const {
  const int o = std::min(c[0].order(), f.order() - 1);
  Jet r(f.base(), o);
  for (int mu = 0; mu < 4; ++mu) r += c[mu].truncated(o) * partial(f, mu).truncated(o);
  return r;
}

Jet Vec4::contract(const Form1& a) const {
  const int o = std::min(c[0].order(), a.order());
  Jet r(a.base(), o);
  for (int mu = 0; mu < 4; ++mu) r += c[mu].truncated(o) * a.c[mu].truncated(o);
  return r;
}

FrameData frame_from_background(const Background& bg) {
  const int o = bg.tildeK.order();
  if (o < 1) throw Error(ErrorCode::kInsufficientOrder, "frame needs K jets of order 3 or more");
  if (std::abs(bg.tildeK.value()) < kDegenerateTol)
    throw Error(ErrorCode::kDegenerateMetric, "tildeK vanishes at the point");
  const Point4& p = bg.at;
  FrameData f;
  f.bg = bg;
  Jet zero(p, o), one = Jet::constant(p, o, 1.0);
  f.e[frame_index(0, 0)] = coord_form(p, o, kW);
  f.e[frame_index(1, 0)] = coord_form(p, o, kZ);
  f.e[frame_index(0, 1)].c = {zero, zero, -bg.Kzwb, -bg.Q};
  f.e[frame_index(1, 1)].c = {zero, zero, bg.Kwwb, bg.Kwzb};

  Jet inv = one / bg.tildeK;
  f.nabla[frame_index(0, 0)].c = {one, zero, zero, zero};
  f.nabla[frame_index(1, 0)].c = {zero, one, zero, zero};
  f.nabla[frame_index(0, 1)].c = {zero, zero, -bg.Kwzb * inv, bg.Kwwb * inv};
  f.nabla[frame_index(1, 1)].c = {zero, zero, -bg.Q * inv, bg.Kzwb * inv};

  for (int Ap = 0; Ap < 2; ++Ap)
    for (int Bp = Ap; Bp < 2; ++Bp) {
      const Form1 &a = f.e[frame_index(0, Ap)], &b = f.e[frame_index(1, Bp)];
      const Form1 &c = f.e[frame_index(1, Ap)], &d = f.e[frame_index(0, Bp)];
      f.sigma[pair_index(Ap, Bp)] = cplx(0.5) * (wedge(a, b) - wedge(c, d));
      const Form1 &ua = f.e[frame_index(Ap, 0)], &ub = f.e[frame_index(Bp, 1)];
      const Form1 &uc = f.e[frame_index(Ap, 1)], &ud = f.e[frame_index(Bp, 0)];
      f.sigma_unprimed[pair_index(Ap, Bp)] = cplx(0.5) * (wedge(ua, ub) - wedge(uc, ud));
    }

  const Form1 &e00 = f.e[0], &e01 = f.e[1], &e10 = f.e[2], &e11 = f.e[3];
  for (int mu = 0; mu < 4; ++mu)
    for (int nu = 0; nu < 4; ++nu)
      f.g[mu][nu] = e00.c[mu] * e11.c[nu] + e11.c[mu] * e00.c[nu] - e01.c[mu] * e10.c[nu] -
                    e10.c[mu] * e01.c[nu];
  return f;
}

FrameData frame_at(const ManifoldSpec& spec, const Point4& at) {
  return frame_from_background(background_at(spec, at));
}

std::array<std::array<cplx, 4>, 4> przanowski_metric(const Background& bg) {
  std::array<std::array<cplx, 4>, 4> g{};
  auto set = [&](int a, int b, cplx v) { g[a][b] = g[b][a] = v; };
  set(kW, kWb, bg.Kwwb.value());
  set(kW, kZb, bg.Kwzb.value());
  set(kZ, kWb, bg.Kzwb.value());
  set(kZ, kZb, bg.Q.value());
  return g;
}

std::array<Form2, 3> lower_primed(const std::array<Form2, 3>& up) { return {up[2], -up[1], up[0]}; }

// ---- connection ----------------------------------------------------------

std::vector<Jet> solve_jet_system(std::vector<std::vector<Jet>> m, std::vector<Jet> b) {
  const size_t n = b.size();
  double scale = 0;
  for (const auto& row : m)
    for (const Jet& x : row) scale = std::max(scale, std::abs(x.value()));
  for (size_t col = 0; col < n; ++col) {
    size_t piv = col;
    for (size_t r = col + 1; r < n; ++r)
      if (std::abs(m[r][col].value()) > std::abs(m[piv][col].value())) piv = r;
    if (std::abs(m[piv][col].value()) <= 1e-13 * scale)
      throw Error(ErrorCode::kFrameDegeneracy, "singular linear system in the frame computation");
    std::swap(m[piv], m[col]);
    std::swap(b[piv], b[col]);
    Jet inv = reciprocal(m[col][col]);
    for (size_t r = col + 1; r < n; ++r) {
      if (m[r][col].max_abs() == 0) continue;
      Jet f = m[r][col] * inv;
      for (size_t c = col; c < n; ++c) m[r][c] -= f * m[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<Jet> x(n);
  for (size_t i = n; i-- > 0;) {
    Jet s = b[i];
    for (size_t c = i + 1; c < n; ++c) s -= m[i][c] * x[c];
    x[i] = s / m[i][i];
  }
  return x;
}

Connection connection_from_frame(const FrameData& f, ConnectionMethod method) {
  Connection sol = solve_structure_equation(f);
  if (method == ConnectionMethod::kStructureEquation) return sol;

  const Background& bg = f.bg;
  require_gauge(bg);
  const int o = bg.tildeK.order() - 1;
  Jet lnKw = log(bg.Kw), lnKwb = log(bg.Kwb);
  Jet L = log(bg.tildeK) - lnKwb.truncated(bg.tildeK.order());
  auto nab = [&](int A, int Ap, const Jet& x) { return f.nabla[frame_index(A, Ap)].apply(x).truncated(o); };
  auto e = [&](int A, int Ap) { return f.e[frame_index(A, Ap)].truncated(o); };

  Connection c;
  c.unprimed = sol.unprimed;
  c.primed[0] = -(nab(0, 0, lnKwb) * e(0, 1) + nab(1, 0, lnKwb) * e(1, 1));
  c.primed[2] = nab(0, 1, lnKw) * e(0, 0) + nab(1, 1, lnKw) * e(1, 0);
  c.primed[1] = cplx(0.5) * (nab(0, 0, L) * e(0, 0) + nab(1, 0, L) * e(1, 0) +
                             nab(0, 1, lnKw) * e(0, 1) + nab(1, 1, lnKw) * e(1, 1));
  return c;
}

Connection connection_at(const ManifoldSpec& spec, const Point4& at, ConnectionMethod method) {
  return connection_from_frame(frame_at(spec, at), method);
}

std::array<Form1, 3> connection_fg(const Background& bg) {
  require_gauge(bg);
  const int o = bg.Kw.order() - 1;
  const Point4& p = bg.at;
  std::array<Form1, 3> g;
  g[0] = Form1::zero(p, o);
  g[0].c[kZb] = (bg.E.truncated(o + 1) * bg.Kw).truncated(o);
  g[2] = Form1::zero(p, o);
  g[2].c[kZ] = reciprocal(bg.Kw).truncated(o);
  Form1 dK = holomorphic_part(differential(bg.K)).truncated(o);
  g[1] = cplx(0.5) * (differential(log(bg.Kw)) + cplx(bg.lambda) * dK);
  return g;
}

double structure_equation_residual(const FrameData& f, const Connection& conn) {
  const int o = conn.primed[0].order();
  double scale = 0, worst = 0;
  for (int A = 0; A < 2; ++A)
    for (int Ap = 0; Ap < 2; ++Ap) {
      Form2 de = exterior_d(f.e[frame_index(A, Ap)]).truncated(std::min(o, f.e[0].order() - 1));
      const int oo = de.order();
      Form2 rhs = Form2::zero(f.bg.at, oo);
      for (int B = 0; B < 2; ++B)
        for (int C = 0; C < 2; ++C) {
          if (eps2(Ap, B) != 0)
            rhs -= cplx(eps2(Ap, B)) *
                   wedge(conn.primed[pair_index(B, C)].truncated(oo), f.e[frame_index(A, C)].truncated(oo));
          if (eps2(A, B) != 0)
            rhs -= cplx(eps2(A, B)) *
                   wedge(conn.unprimed[pair_index(B, C)].truncated(oo), f.e[frame_index(C, Ap)].truncated(oo));
        }
      scale = std::max(scale, de.max_abs_value());
      worst = std::max(worst, (de - rhs).max_abs_value());
    }
  return scale > 0 ? worst / scale : worst;
}

// ---- curvature -----------------------------------------------------------

std::array<Form2, 3> primed_curvature(const std::array<Form1, 3>& g) {
  const int o = g[0].order() - 1;
  std::array<Form1, 3> gt = {g[0].truncated(o), g[1].truncated(o), g[2].truncated(o)};
  auto G = [&](int a, int b) -> const Form1& { return gt[pair_index(a, b)]; };
  std::array<Form2, 3> r;
  for (int Ap = 0; Ap < 2; ++Ap)
    for (int Bp = Ap; Bp < 2; ++Bp)
      r[pair_index(Ap, Bp)] = exterior_d(g[pair_index(Ap, Bp)]) + wedge(G(Ap, 0), G(1, Bp)) -
                              wedge(G(Ap, 1), G(0, Bp));
  return r;
}

CurvatureDecomp curvature_from_frame(const FrameData& f, ConnectionMethod method) {
  Connection conn = connection_from_frame(f, method);
  std::array<Form2, 3> R = primed_curvature(conn.primed);
  const double lam = f.bg.lambda;
  CurvatureDecomp out;

  std::array<Form2, 3> sig_low = lower_primed(f.sigma);
  double num = 0, den = 0;
  for (int p = 0; p < 3; ++p) {
    out.r_primed[p] = R[p].values();
    auto s = sig_low[p].values();
    for (int k = 0; k < 6; ++k) {
      num = std::max(num, std::abs(out.r_primed[p][k] - lam * s[k]));
      den = std::max(den, std::abs(lam * s[k]));
    }
  }
  out.einstein_residual = num / den;

  // Expand each R_{A'B'} on {Sigma^{C'D'}, Sigma^{CD}}.
  Eigen::Matrix<cplx, 6, 6> basis;
  for (int p = 0; p < 3; ++p) {
    auto s = f.sigma[p].values();
    auto u = f.sigma_unprimed[p].values();
    for (int k = 0; k < 6; ++k) {
      basis(k, p) = s[k];
      basis(k, 3 + p) = u[k];
    }
  }
  Eigen::PartialPivLU<Eigen::Matrix<cplx, 6, 6>> lu(basis);
  // X[A'][B'][C'][D'] and Phi[pair(A'B')][pair(CD)].
  cplx X[2][2][2][2];
  for (int Ap = 0; Ap < 2; ++Ap)
    for (int Bp = 0; Bp < 2; ++Bp) {
      int p = pair_index(Ap, Bp);
      Eigen::Matrix<cplx, 6, 1> rhs;
      for (int k = 0; k < 6; ++k) rhs(k) = out.r_primed[p][k];
      Eigen::Matrix<cplx, 6, 1> x = lu.solve(rhs);
      // The Sigma^{01} coefficient collects both 01 and 10 terms of the sum.
      X[Ap][Bp][0][0] = x(0);
      X[Ap][Bp][0][1] = X[Ap][Bp][1][0] = x(1) / 2.0;
      X[Ap][Bp][1][1] = x(2);
      out.phi[p] = {x(3), x(4) / 2.0, x(5)};
    }
  cplx contraction = 0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) contraction += eps2(a, c) * eps2(b, d) * X[a][b][c][d];
  // eps^{A'C'} eps^{B'D'} of the trace part gives 3 R / 12.
  out.scalar_r = 4.0 * contraction;
  cplx Y[2][2][2][2];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) {
          double s = 0.5 * (eps2(c, a) * eps2(d, b) + eps2(d, a) * eps2(c, b));
          Y[a][b][c][d] = X[a][b][c][d] - out.scalar_r / 12.0 * s;
        }
  out.weyl_sd.fill(0);
  std::array<int, 5> count{};
  for (int m = 0; m < 16; ++m) {
    int a = m & 1, b = m >> 1 & 1, c = m >> 2 & 1, d = m >> 3 & 1;
    int k = a + b + c + d;
    out.weyl_sd[k] += Y[a][b][c][d];
    ++count[k];
  }
  double wmax = 0, pmax = 0;
  for (int k = 0; k < 5; ++k) {
    out.weyl_sd[k] /= double(count[k]);
    wmax = std::max(wmax, std::abs(out.weyl_sd[k]));
  }
  for (const auto& row : out.phi)
    for (cplx v : row) pmax = std::max(pmax, std::abs(v));
  out.weyl_norm = wmax / std::abs(lam);
  out.phi_norm = pmax / std::abs(lam);
  return out;
}

CurvatureDecomp curvature_at(const ManifoldSpec& spec, const Point4& at, ConnectionMethod method) {
  return curvature_from_frame(frame_at(spec, at), method);
}

// ---- Lee forms -----------------------------------------------------------

LeeForms lee_forms(const Background& bg) {
  require_gauge(bg);
  if (std::abs(bg.tildeK.value()) < kDegenerateTol)
    throw Error(ErrorCode::kDegenerateMetric, "tildeK vanishes at the point");
  const int o = bg.tildeK.order() - 1;
  Form1 dlnKw = differential(log(bg.Kw)).truncated(o);
  Form1 dlnKwb = differential(log(bg.Kwb)).truncated(o);
  Form1 dlnT = differential(log(bg.tildeK));
  LeeForms lf;
  lf.A = holomorphic_part(dlnT - cplx(2.0) * dlnKwb) + cplx(2.0) * antiholomorphic_part(dlnKw);
  lf.B = cplx(2.0) * (holomorphic_part(dlnKwb) + antiholomorphic_part(dlnKw));
  return lf;
}

LeeForms lee_forms_at(const ManifoldSpec& spec, const Point4& at) { return lee_forms(background_at(spec, at)); }

// ---- Hodge star ------------------------------------------------------------

HodgeStar::HodgeStar(const FrameData& f) {
  const int o = f.g[0][0].order();
  const Point4& p = f.bg.at;
  for (int col = 0; col < 4; ++col) {
    std::vector<std::vector<Jet>> m(4, std::vector<Jet>(4));
    std::vector<Jet> rhs(4, Jet(p, o));
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) m[i][j] = f.g[i][j];
    rhs[col] = Jet::constant(p, o, 1.0);
    std::vector<Jet> x = solve_jet_system(std::move(m), std::move(rhs));
    for (int i = 0; i < 4; ++i) ginv_[i][col] = x[i];
  }
  Jet det = det4(f.g);
  if (std::abs(det.value()) < kDegenerateTol)
    throw Error(ErrorCode::kDegenerateMetric, "metric determinant vanishes");
  vol_ = sqrt(det);
  // Orientation: pick the sign of the volume form making Sigma^{0'1'} self-dual.
  Form2 s = f.sigma[1].truncated(std::min(o, f.sigma[1].order()));
  Form2 ss = (*this)(s);
  double plus = (ss - s).max_abs_value(), minus = (ss + s).max_abs_value();
  if (minus < plus) vol_ = -vol_;
}

Jet HodgeStar::minor(int rows, int cols) const {
  if (rows == 0) return Jet::constant(ginv_[0][0].base(), ginv_[0][0].order(), 1.0);
  int r = std::countr_zero(unsigned(rows));
  int rest = rows & ~(1 << r);
  Jet acc(ginv_[0][0].base(), ginv_[0][0].order());
  int sign = 1;
  for (int c = 0; c < 4; ++c) {
    if (!(cols >> c & 1)) continue;
    Jet t = ginv_[r][c] * minor(rest, cols & ~(1 << c));
    if (sign > 0) acc += t;
    else acc -= t;
    sign = -sign;
  }
  return acc;
}

template <int P>
Form<4 - P> HodgeStar::operator()(const Form<P>& a) const {
  const int o = std::min(a.order(), vol_.order());
  const Point4& p = a.base();
  auto r = Form<4 - P>::zero(p, o);
  const auto& sp = subsets(P);
  for (int i = 0; i < Form<P>::kSize; ++i) {
    Jet raised(p, o);
    for (int j = 0; j < Form<P>::kSize; ++j) raised += minor(sp[i], sp[j]).truncated(o) * a.c[j].truncated(o);
    int comp = 15 & ~sp[i];
    Jet t = vol_.truncated(o) * raised;
    if (wedge_sign(sp[i], comp) > 0) r.c[subset_slot(comp)] += t;
    else r.c[subset_slot(comp)] -= t;
  }
  return r;
}

template Form<4> HodgeStar::operator()(const Form<0>&) const;
template Form<3> HodgeStar::operator()(const Form<1>&) const;
template Form<2> HodgeStar::operator()(const Form<2>&) const;
template Form<1> HodgeStar::operator()(const Form<3>&) const;
template Form<0> HodgeStar::operator()(const Form<4>&) const;

Jet HodgeStar::scalar(const Form4& a) const { return (*this)(a).c[0]; }

Form4 HodgeStar::top(const Jet& f) const {
  Form<0> z;
  z.c[0] = f;
  return (*this)(z);
}

// ---- connection-built self-dual forms --------------------------------------

std::array<Form2, 3> sigma_from_connection(const Background& bg) {
  std::array<Form2, 3> R = primed_curvature(connection_fg(bg));
  cplx inv = 1.0 / bg.lambda;
  // Lowered Sigma_{A'B'} = R_{A'B'} / lambda, then raise.
  return {inv * R[2], -(inv * R[1]), inv * R[0]};
}

double sigma_wedge_residual(const std::array<Form2, 3>& s) {
  const int o = 0;
  Form4 a = wedge(s[0].truncated(o), s[2].truncated(o));
  Form4 b = cplx(2.0) * wedge(s[1].truncated(o), s[1].truncated(o));
  double scale = std::max(std::abs(a.c[0].value()), std::abs(b.c[0].value()));
  double r = std::abs((a + b).c[0].value());
  return scale > 0 ? r / scale : r;
}

}  // namespace qkprz
