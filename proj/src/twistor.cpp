// Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0.
#include "qkprz/twistor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "qkprz/operators.hpp"

namespace qkprz {
namespace {

std::array<D6, 4> seeded_moduli(const Moduli& m) {
  return {D6::seed(m[0], 0), D6::seed(m[1], 1), D6::seed(m[2], 2), D6::seed(m[3], 3)};
}
std::array<D6, 2> seeded_xi(std::array<cplx, 2> xi) { return {D6::seed(xi[0], 4), D6::seed(xi[1], 5)}; }

// Pullback of tau through the line map: component per input slot.
std::array<cplx, 6> pullback_all(const TwistorLineFamily& fam, const Moduli& m, std::array<cplx, 2> xi) {
  std::vector<D6> x = fam.line_map(seeded_moduli(m), seeded_xi(xi));
  std::vector<D6> t = fam.contact(x);
  std::array<cplx, 6> r{};
  for (size_t a = 0; a < x.size(); ++a)
    for (int k = 0; k < 6; ++k) r[k] += t[a].v * x[a].d[k];
  return r;
}

// Ambient points are products of projective blocks (one for CP^3, two for the flag manifold).
std::vector<std::pair<int, int>> blocks(const TwistorLineFamily& fam) {
  if (fam.ambient_dim == 4) return {{0, 4}};
  return {{0, 3}, {3, 6}};
}

double vnorm(const std::vector<cplx>& v, int lo, int hi) {
  double s = 0;
  for (int i = lo; i < hi; ++i) s += std::norm(v[i]);
  return std::sqrt(s);
}

// Projective distance of two vectors on [lo, hi): max |a_i b_j - a_j b_i| / (|a| |b|).
double projective_distance(const std::vector<cplx>& a, const std::vector<cplx>& b, int lo, int hi) {
  double d = 0;
  for (int i = lo; i < hi; ++i)
    for (int j = i + 1; j < hi; ++j) d = std::max(d, std::abs(a[i] * b[j] - a[j] * b[i]));
  const double s = vnorm(a, lo, hi) * vnorm(b, lo, hi);
  return s > 0 ? d / s : d;
}

TwistorLineFamily sphere_family(std::string name, double eps) {
  TwistorLineFamily f;
  f.name = std::move(name);
  f.eps = eps;
  f.ambient_dim = 4;
  f.line_map = [eps](const std::array<D6, 4>& m, const std::array<D6, 2>& xi) {
    const D6 &w = m[0], &z = m[1], &wb = m[2], &zb = m[3];
    D6 s = sqrt(D6(1.0) - D6(eps) * w * wb * (D6(1.0) + z * zb));
    return std::vector<D6>{xi[0] / s, xi[1] / s, (w * xi[0] + wb * zb * xi[1]) / s, (w * z * xi[0] - wb * xi[1]) / s};
  };
  // tau = u0 du1 - u1 du0 + eps (v0 dv1 - v1 dv0)
  f.contact = [eps](const std::vector<D6>& x) {
    return std::vector<D6>{-x[1], x[0], D6(-eps) * x[3], D6(eps) * x[2]};
  };
  f.coordinates = [](const std::array<D6, 4>& m) { return m; };
  f.moduli_at = [](const Point4& p) { return Moduli{p.w, p.z, p.wb, p.zb}; };
  f.conjugate_moduli = [](const Moduli& m) {
    return Moduli{std::conj(m[2]), std::conj(m[3]), std::conj(m[0]), std::conj(m[1])};
  };
  f.involution = [](const std::vector<cplx>& x) {
    return std::vector<cplx>{-std::conj(x[1]), std::conj(x[0]), std::conj(x[3]), -std::conj(x[2])};
  };
  f.incidence = [](const Moduli&, const std::vector<cplx>&) { return std::vector<cplx>{}; };
  return f;
}

TwistorLineFamily flag_family(std::string name, double eps) {
  TwistorLineFamily f;
  f.name = std::move(name);
  f.eps = eps;
  f.ambient_dim = 6;
  // Moduli (W, Z, Wt, Zt): P = (W, Z, 1), L = (Wt, Zt, 1).
  f.line_map = [](const std::array<D6, 4>& m, const std::array<D6, 2>& xi) {
    const D6 &W = m[0], &Z = m[1], &Wt = m[2], &Zt = m[3];
    const D6 &x0 = xi[0], &x1 = xi[1];
    D6 one(1.0);
    D6 c = one + Z * Zt, s = one + W * Wt + Z * Zt;
    return std::vector<D6>{-(c * x1),
                           x0 / c + W * Zt * x1,
                           -(Z * x0) / c + W * x1,
                           x0 / s,
                           -(Wt * Z * x0) / (c * s) + x1,
                           -(Wt * x0) / (c * s) - Zt * x1};
  };
  // tau = (l^j dp_j - p_j dl^j) / 2. The opposite orientation restricts to minus the canonical
  // form on each line; the overall sign cancels in fg.
  f.contact = [](const std::vector<D6>& x) {
    D6 h(0.5);
    return std::vector<D6>{-(h * x[3]), -(h * x[4]), -(h * x[5]), h * x[0], h * x[1], h * x[2]};
  };
  f.coordinates = [eps](const std::array<D6, 4>& m) {
    const D6 &W = m[0], &Z = m[1], &Wt = m[2], &Zt = m[3];
    D6 c = D6(1.0) + Z * Zt;
    return std::array<D6, 4>{c / Wt, Z, D6(-eps) * c / W, D6(-eps) * Zt};
  };
  f.moduli_at = [eps](const Point4& p) {
    const cplx Z = p.z, Zt = -eps * p.zb;
    const cplx c = 1.0 + Z * Zt;
    return Moduli{-eps * c / p.wb, Z, c / p.w, Zt};
  };
  f.conjugate_moduli = [eps](const Moduli& m) {
    return Moduli{-eps * std::conj(m[2]), -eps * std::conj(m[3]), -eps * std::conj(m[0]), -eps * std::conj(m[1])};
  };
  // (l, p) -> (h conj(p), h conj(l)) with the hermitian form h = diag(1, 1, -eps).
  f.involution = [eps](const std::vector<cplx>& x) {
    return std::vector<cplx>{std::conj(x[3]), std::conj(x[4]), -eps * std::conj(x[5]),
                             std::conj(x[0]), std::conj(x[1]), -eps * std::conj(x[2])};
  };
  f.incidence = [](const Moduli& m, const std::vector<cplx>& x) {
    const cplx P[3] = {m[0], m[1], 1.0}, L[3] = {m[2], m[3], 1.0};
    cplx pl = 0, ll = 0, pL = 0;
    for (int j = 0; j < 3; ++j) {
      pl += P[j] * x[j];
      ll += x[3 + j] * x[j];
      pL += x[3 + j] * L[j];
    }
    return std::vector<cplx>{pl, ll, pL};
  };
  return f;
}

// Per-point data for the recursion operators.
struct RecursionLocal {
  FrameData frame;
  LeeForms lee;
};

RecursionLocal recursion_local(const ManifoldSpec& spec, const Point4& at) {
  Point4 p = at;
  p.lambda = spec.lambda;
  FrameData f = frame_at(spec, p);
  LeeForms lee = lee_forms(f.bg);
  return {std::move(f), std::move(lee)};
}

// Jet of d^{(n,k)}_{AA'} psi, one order below psi.
Jet twisted_derivative(const RecursionLocal& loc, const Jet& psi, int n, int k, int A, int Ap) {
  const Vec4& v = loc.frame.nabla[frame_index(A, Ap)];
  Jet d = v.apply(psi);
  const int o = std::min(d.order(), loc.lee.A.order());
  Jet a = v.contract(loc.lee.A.truncated(o)).truncated(o);
  Jet b = v.contract(loc.lee.B.truncated(o)).truncated(o);
  Jet coeff = a * cplx(n - k / 2.0) - b * cplx(k / 4.0);
  return d.truncated(o) + coeff * psi.truncated(o);
}

}  // namespace

TwistorLineFamily builtin_family(std::string_view name) {
  if (name == "s4") return sphere_family("s4", -1.0);
  if (name == "h4") return sphere_family("h4", 1.0);
  if (name == "cp2") return flag_family("cp2", -1.0);
  if (name == "bergmann") return flag_family("bergmann", 1.0);
  throw Error(ErrorCode::kInvalidArgument, "unknown twistor family '" + std::string(name) + "'");
}

std::vector<cplx> line_point(const TwistorLineFamily& fam, const Moduli& m, std::array<cplx, 2> xi) {
  std::array<D6, 4> mm;
  for (int i = 0; i < 4; ++i) mm[i] = D6(m[i]);
  std::vector<D6> x = fam.line_map(mm, {D6(xi[0]), D6(xi[1])});
  std::vector<cplx> r(x.size());
  for (size_t i = 0; i < x.size(); ++i) r[i] = x[i].v;
  return r;
}

double incidence_residual(const TwistorLineFamily& fam, const Moduli& m, std::array<cplx, 2> xi) {
  std::vector<cplx> x = line_point(fam, m, xi);
  double r = 0;
  for (cplx v : fam.incidence(m, x)) r = std::max(r, std::abs(v));
  return r;
}

double line_restriction_residual(const TwistorLineFamily& fam, const Moduli& m, std::array<cplx, 2> xi) {
  auto t = pullback_all(fam, m, xi);
  return std::max(std::abs(t[4] + xi[1]), std::abs(t[5] - xi[0]));
}

std::array<cplx, 4> contact_pullback(const TwistorLineFamily& fam, const Moduli& m, std::array<cplx, 2> xi) {
  auto t = pullback_all(fam, m, xi);
  // alpha_moduli = J^T alpha_coords with J[i][M] = d coord_i / d modulus_M.
  std::array<D6, 4> c = fam.coordinates(seeded_moduli(m));
  Eigen::Matrix4cd jt;
  Eigen::Vector4cd am;
  for (int i = 0; i < 4; ++i) {
    am(i) = t[i];
    for (int M = 0; M < 4; ++M) jt(M, i) = c[i].d[M];
  }
  Eigen::FullPivLU<Eigen::Matrix4cd> lu(jt);
  if (!lu.isInvertible())
    throw Error(ErrorCode::kExtractionDomain, "coordinate identification is singular at these moduli");
  Eigen::Vector4cd ax = lu.solve(am);
  return {ax(0), ax(1), ax(2), ax(3)};
}

Extraction extract_przanowski(const TwistorLineFamily& fam, double lambda, const Moduli& m) {
  if (lambda == 0 || (lambda > 0) != (fam.eps > 0))
    throw Error(ErrorCode::kInvalidArgument, "lambda must be nonzero with the sign of the family");
  std::array<cplx, 4> s1 = contact_pullback(fam, m, {1.0, 0.0});
  std::array<cplx, 4> s2 = contact_pullback(fam, m, {0.0, 1.0});
  Extraction e;
  std::array<D6, 4> c = fam.coordinates(seeded_moduli(m));
  e.point = Point4{c[0].v, c[1].v, c[2].v, c[3].v, lambda};
  e.f = s1[kZ];
  e.g = s2[kZb];
  if (std::abs(e.f) == 0 || std::abs(e.g) == 0)
    throw Error(ErrorCode::kGaugeMismatch, "contact form vanishes on a distinguished section");
  for (int i : {kW, kWb, kZb}) e.transverse = std::max(e.transverse, std::abs(s1[i]) / std::abs(e.f));
  for (int i : {kW, kZ, kWb}) e.transverse = std::max(e.transverse, std::abs(s2[i]) / std::abs(e.g));
  if (e.transverse > 1e-12)
    throw Error(ErrorCode::kGaugeMismatch, "contact form on the distinguished sections has transverse components (" +
                                               std::to_string(e.transverse) + ")");
  const cplx fg = e.f * e.g;
  if (!(fg.real() > 0) || std::abs(fg.imag()) > 1e-12 * std::abs(fg))
    throw Error(ErrorCode::kExtractionDomain, "fg is not a positive real number at these moduli");
  e.K = std::log(fg.real()) / lambda;
  return e;
}

InvolutionReport involution_reality_check(const TwistorLineFamily& fam, const Moduli& m, double tol) {
  InvolutionReport rep;
  const Moduli mc = fam.conjugate_moduli(m);
  std::vector<cplx> e0 = line_point(fam, mc, {1.0, 0.0}), e1 = line_point(fam, mc, {0.0, 1.0});
  const auto bl = blocks(fam);
  const std::array<std::array<cplx, 2>, 5> samples{{{1.0, 0.0}, {0.0, 1.0}, {1.0, cplx(0.3, 0.2)},
                                                   {cplx(0.5, -0.1), 1.0}, {1.0, cplx(-1.7, 0.9)}}};
  for (const auto& xi : samples) {
    std::vector<cplx> x = line_point(fam, m, xi);
    std::vector<cplx> y = fam.involution(x);
    // Fibre coordinate of the image from the first block (least squares on span{e0, e1}).
    const auto [lo, hi] = bl[0];
    Eigen::MatrixX2cd basis(hi - lo, 2);
    Eigen::VectorXcd rhs(hi - lo);
    for (int i = lo; i < hi; ++i) {
      basis(i - lo, 0) = e0[i];
      basis(i - lo, 1) = e1[i];
      rhs(i - lo) = y[i];
    }
    Eigen::Vector2cd ab = basis.colPivHouseholderQr().solve(rhs);
    std::vector<cplx> img = line_point(fam, mc, {ab(0), ab(1)});
    for (const auto& [b0, b1] : bl) rep.setwise = std::max(rep.setwise, projective_distance(y, img, b0, b1));
    rep.fibre_map.emplace_back(xi[1] / xi[0], ab(1) / ab(0));
    std::vector<cplx> back = fam.involution(y);
    for (const auto& [b0, b1] : bl) rep.involutive = std::max(rep.involutive, projective_distance(back, x, b0, b1));
  }
  rep.ok = rep.setwise < tol && rep.involutive < tol;
  return rep;
}

cplx twistor_derivative(const ManifoldSpec& spec, const Point4& at, const RecursionState& s, int A, int Ap) {
  RecursionLocal loc = recursion_local(spec, at);
  Jet psi = eval_jet(s.psi, loc.frame.bg.at, 1);
  return twisted_derivative(loc, psi, s.n, s.k, A, Ap).value();
}

double recursion_residual(const ManifoldSpec& spec, const Point4& at, const RecursionState& lo,
                          const RecursionState& up) {
  if (up.n != lo.n + 1 || up.k != lo.k)
    throw Error(ErrorCode::kInvalidArgument, "recursion relates psi_n to psi_{n+1} at equal k");
  RecursionLocal loc = recursion_local(spec, at);
  const Point4& p = loc.frame.bg.at;
  Jet psi_lo = eval_jet(lo.psi, p, 1), psi_up = eval_jet(up.psi, p, 1);
  double worst = 0, scale = 0;
  for (int A = 0; A < 2; ++A) {
    const cplx t1 = twisted_derivative(loc, psi_up, up.n, up.k, A, 0).value();
    const cplx t2 = twisted_derivative(loc, psi_lo, lo.n, lo.k, A, 1).value();
    scale = std::max({scale, std::abs(t1), std::abs(t2)});
    worst = std::max(worst, std::abs(t1 + t2));
  }
  return scale > 0 ? worst / scale : 0.0;
}

cplx integrability_residual(const ManifoldSpec& spec, const Point4& at, const RecursionState& s) {
  Point4 p = at;
  p.lambda = spec.lambda;
  return laplacian_weighted(spec, p, {eval_jet(s.psi, p, 2), s.weight_l(), s.weight_m()});
}

Point4 RecursionPatch::node(int i, int j) const {
  Point4 p = corner;
  p.w += double(i) * hw;
  p.z += double(j) * hz;
  return p;
}

RecursionResult recursion_step(const ManifoldSpec& spec, const RecursionState& s, const RecursionPatch& patch,
                               double curl_tol) {
  if (patch.nw < 1 || patch.nz < 1 || patch.substeps < 1)
    throw Error(ErrorCode::kInvalidArgument, "patch needs at least one node and one substep");
  const int n1 = s.n + 1;
  RecursionResult res;
  res.next = RecursionState{s.k, n1, nullptr};
  res.nw = patch.nw;
  res.nz = patch.nz;
  res.particular.assign(size_t(patch.nw) * patch.nz, 0.0);
  res.homogeneous.assign(size_t(patch.nw) * patch.nz, 0.0);

  // dpsi/dx = -r - alpha psi along x = w (A = 0) or z (A = 1).
  struct Coeffs {
    cplx alpha, r;
  };
  auto coeffs = [&](const Point4& p, int A) {
    RecursionLocal loc = recursion_local(spec, p);
    Jet psi = eval_jet(s.psi, loc.frame.bg.at, 1);
    const Vec4& v = loc.frame.nabla[frame_index(A, 0)];
    const cplx a = v.contract(loc.lee.A).value(), b = v.contract(loc.lee.B).value();
    return Coeffs{(n1 - s.k / 2.0) * a - (s.k / 4.0) * b, twisted_derivative(loc, psi, s.n, s.k, A, 1).value()};
  };
  using State = std::array<cplx, 2>;  // (particular, homogeneous)
  auto rhs = [&](const Point4& p, int A, const State& y, cplx h) {
    Coeffs c = coeffs(p, A);
    return State{h * (-c.r - c.alpha * y[0]), h * (-c.alpha * y[1])};
  };
  auto advance = [&](Point4 p, int A, cplx step, State y) {
    const cplx h = step / double(patch.substeps);
    auto shifted = [&](const Point4& q, cplx dx) {
      Point4 r = q;
      (A == 0 ? r.w : r.z) += dx;
      return r;
    };
    auto add = [](State a, const State& b, double f) {
      a[0] += f * b[0];
      a[1] += f * b[1];
      return a;
    };
    for (int k = 0; k < patch.substeps; ++k) {
      State k1 = rhs(p, A, y, h);
      State k2 = rhs(shifted(p, 0.5 * h), A, add(y, k1, 0.5), h);
      State k3 = rhs(shifted(p, 0.5 * h), A, add(y, k2, 0.5), h);
      State k4 = rhs(shifted(p, h), A, add(y, k3, 1.0), h);
      for (int c = 0; c < 2; ++c) y[c] += (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]) / 6.0;
      p = shifted(p, h);
    }
    return y;
  };

  // Curl of the pair of equations at every node.
  for (int i = 0; i < patch.nw; ++i)
    for (int j = 0; j < patch.nz; ++j) {
      RecursionLocal loc = recursion_local(spec, patch.node(i, j));
      Jet psi = eval_jet(s.psi, loc.frame.bg.at, 2);
      std::array<Jet, 2> alpha, r;
      for (int A = 0; A < 2; ++A) {
        const Vec4& v = loc.frame.nabla[frame_index(A, 0)];
        alpha[A] = v.contract(loc.lee.A) * cplx(n1 - s.k / 2.0) - v.contract(loc.lee.B) * cplx(s.k / 4.0);
        r[A] = twisted_derivative(loc, psi, s.n, s.k, A, 1);
      }
      const cplx c0 = alpha[0].d(kZ) - alpha[1].d(kW);
      const double s0 = std::max({std::abs(alpha[0].d(kZ)), std::abs(alpha[1].d(kW)), 1.0});
      const cplx t[4] = {r[0].d(kZ), alpha[1].value() * r[0].value(), -r[1].d(kW), -alpha[0].value() * r[1].value()};
      const cplx c1 = t[0] + t[1] + t[2] + t[3];
      double s1 = 1.0;
      for (cplx x : t) s1 = std::max(s1, std::abs(x));
      res.curl = std::max({res.curl, std::abs(c0) / s0, std::abs(c1) / s1});
    }
  if (res.curl > curl_tol)
    throw Error(ErrorCode::kIntegrabilityViolation,
                "recursion right-hand sides are not cross-consistent (curl " + std::to_string(res.curl) + ")");

  // z-line through the corner, then w-lines.
  std::vector<State> column(patch.nz);
  column[0] = {0.0, 1.0};
  for (int j = 1; j < patch.nz; ++j) column[j] = advance(patch.node(0, j - 1), 1, patch.hz, column[j - 1]);
  for (int j = 0; j < patch.nz; ++j) {
    State y = column[j];
    for (int i = 0; i < patch.nw; ++i) {
      if (i > 0) y = advance(patch.node(i - 1, j), 0, patch.hw, y);
      res.particular[size_t(i) * patch.nz + j] = y[0];
      res.homogeneous[size_t(i) * patch.nz + j] = y[1];
    }
  }
  return res;
}

cplx contour_extract(const std::function<cplx(cplx)>& psi, double radius, int nodes) {
  if (nodes < 1 || !(radius > 0)) throw Error(ErrorCode::kInvalidArgument, "need a positive radius and nodes");
  cplx acc = 0;
  for (int j = 0; j < nodes; ++j) {
    const cplx xi = std::polar(radius, 2.0 * std::numbers::pi * j / nodes);
    const cplx v = psi(xi);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw Error(ErrorCode::kPoleOnContour, "integrand is not finite on the contour");
    acc += v / xi;
  }
  return acc / double(nodes);
}

}  // namespace qkprz
