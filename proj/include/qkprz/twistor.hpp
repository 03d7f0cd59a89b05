// Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0.
#pragma once

#include <array>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "qkprz/expr.hpp"
#include "qkprz/geometry.hpp"

namespace qkprz {

// First-order forward-mode number with N directional derivatives.
template <int N>
struct Dual {
  cplx v{};
  std::array<cplx, N> d{};

  Dual() = default;
  Dual(cplx value) : v(value) {}  // NOLINT: constants promote implicitly
  Dual(double value) : v(value) {}  // NOLINT
  static Dual seed(cplx value, int slot) {
    Dual r(value);
    r.d[slot] = 1.0;
    return r;
  }

  friend Dual operator+(Dual a, const Dual& b) {
    a.v += b.v;
    for (int i = 0; i < N; ++i) a.d[i] += b.d[i];
    return a;
  }
  friend Dual operator-(Dual a, const Dual& b) {
    a.v -= b.v;
    for (int i = 0; i < N; ++i) a.d[i] -= b.d[i];
    return a;
  }
  friend Dual operator*(const Dual& a, const Dual& b) {
    Dual r(a.v * b.v);
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    return r;
  }
  friend Dual operator/(const Dual& a, const Dual& b) {
    Dual r(a.v / b.v);
    for (int i = 0; i < N; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) / b.v;
    return r;
  }
  Dual operator-() const { return Dual(0.0) - *this; }
  friend Dual sqrt(const Dual& a) {
    Dual r(std::sqrt(a.v));
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] / (2.0 * r.v);
    return r;
  }
};

// Inputs 0..3: moduli; 4, 5: the fibre spinor (xi^{0'}, xi^{1'}).
using D6 = Dual<6>;
using Moduli = std::array<cplx, 4>;

struct TwistorLineFamily {
  std::string name;
  double eps = 1;  // sign of lambda
  int ambient_dim = 4;
  // Homogeneous ambient coordinates of the point xi on the line with the given moduli.
  std::function<std::vector<D6>(const std::array<D6, 4>&, const std::array<D6, 2>&)> line_map;
  // Coefficients T_a of the contact form tau = T_a dX^a.
  std::function<std::vector<D6>(const std::vector<D6>&)> contact;
  // Holomorphic / antiholomorphic coordinates (w, z, wb, zb) as functions of the moduli.
  std::function<std::array<D6, 4>(const std::array<D6, 4>&)> coordinates;
  // Inverse of coordinates, used to place moduli at given manifold points.
  std::function<Moduli(const Point4&)> moduli_at;
  // Moduli of the image line under the involution.
  std::function<Moduli(const Moduli&)> conjugate_moduli;
  // Antiholomorphic involution on ambient coordinates.
  std::function<std::vector<cplx>(const std::vector<cplx>&)> involution;
  // Defining equations of a line evaluated at an ambient point (empty if none).
  std::function<std::vector<cplx>(const Moduli&, const std::vector<cplx>&)> incidence;
};

// s4, h4 (lines in CP^3) and cp2, bergmann (flag-manifold lines).
TwistorLineFamily builtin_family(std::string_view name);

std::vector<cplx> line_point(const TwistorLineFamily& family, const Moduli& moduli, std::array<cplx, 2> xi);
// Largest incidence residual at the point xi of the line (0 for families without incidence equations).
double incidence_residual(const TwistorLineFamily& family, const Moduli& moduli, std::array<cplx, 2> xi);
// tau restricted to the line, compared with xi^{0'} dxi^{1'} - xi^{1'} dxi^{0'}.
double line_restriction_residual(const TwistorLineFamily& family, const Moduli& moduli, std::array<cplx, 2> xi);
// Pullback of tau at a frozen section xi, in the (dw, dz, dwb, dzb) cobasis.
std::array<cplx, 4> contact_pullback(const TwistorLineFamily& family, const Moduli& moduli, std::array<cplx, 2> xi);

struct Extraction {
  Point4 point;  // (w, z, wb, zb) of the moduli, lambda set
  cplx f{}, g{};
  double K = 0;
  double transverse = 0;  // largest off-direction component relative to |f| or |g|
};

// f from tau|_{xi=(1,0)} = f dz, g from tau|_{xi=(0,1)} = g dzb, K = ln(fg) / lambda.
Extraction extract_przanowski(const TwistorLineFamily& family, double lambda, const Moduli& moduli);

struct InvolutionReport {
  double setwise = 0;     // distance of the image of the line from the conjugate line
  double involutive = 0;  // |iota^2 X - X| projectively
  std::vector<std::pair<cplx, cplx>> fibre_map;  // (xi, image xi) pairs in the affine coordinate xi1/xi0
  bool ok = false;
};

InvolutionReport involution_reality_check(const TwistorLineFamily& family, const Moduli& moduli, double tol = 1e-12);

// Laurent coefficient psi_n of a degree-k twistor function.
// The A-term of D at weight l is (l/2) A and that of the recursion operator is (n - k/2) A, so
// the covariant weight is l = 2n - k; m = k/2 - l keeps the B-term at -(k/4) B. For n = k/2 this
// agrees with (k - 2n, 2n - k/2), e.g. (0, 1) for the linearised equation at (n, k) = (1, 2).
struct RecursionState {
  int k = 0;
  int n = 0;
  Ast psi;
  double weight_l() const { return 2.0 * n - k; }
  double weight_m() const { return 1.5 * k - 2.0 * n; }
};

// nabla_{AA'} psi + (n - k/2) A_{AA'} psi - (k/4) B_{AA'} psi.
cplx twistor_derivative(const ManifoldSpec& spec, const Point4& at, const RecursionState& state, int A, int Ap);

// max over A of |d^{(n+1,k)}_{A0'} psi_{n+1} + d^{(n,k)}_{A1'} psi_n|, relative to the largest term.
double recursion_residual(const ManifoldSpec& spec, const Point4& at, const RecursionState& lower,
                          const RecursionState& upper);

// *D*D psi_n at its weight.
cplx integrability_residual(const ManifoldSpec& spec, const Point4& at, const RecursionState& state);

// Holomorphic slice: (w, z) = (corner.w + i hw, corner.z + j hz), i < nw, j < nz, (wb, zb) frozen.
struct RecursionPatch {
  Point4 corner;
  cplx hw{}, hz{};
  int nw = 1, nz = 1;
  int substeps = 4;  // integrator steps between neighbouring grid nodes
  Point4 node(int i, int j) const;
};

struct RecursionResult {
  RecursionState next;  // k, n+1; psi left empty
  std::vector<cplx> particular;   // zero at the corner, row-major [i * nz + j]
  std::vector<cplx> homogeneous;  // one at the corner
  double curl = 0;                // largest integrability residual over the nodes
  int nw = 1, nz = 1;
  cplx at(int i, int j) const { return particular[i * nz + j]; }
};

// Integrates d^{(n+1,k)}_{A0'} psi_{n+1} = -d^{(n,k)}_{A1'} psi_n along the z-line through the
// corner, then along w-lines, with a fourth-order Runge-Kutta scheme.
RecursionResult recursion_step(const ManifoldSpec& spec, const RecursionState& state, const RecursionPatch& patch,
                               double curl_tol = 1e-7);

// (1/2 pi i) \oint psi(xi) / xi^2 dxi on |xi| = r by the N-node trapezoidal rule: the xi^1 coefficient.
cplx contour_extract(const std::function<cplx(cplx)>& psi, double radius, int nodes);

}  // namespace qkprz
