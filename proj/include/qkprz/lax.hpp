// Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0.
#pragma once

#include <array>
#include <utility>

#include "qkprz/geometry.hpp"

namespace qkprz {

// Directions of a vector field on the correspondence space: d_w, d_z, d_wb, d_zb, d_xi.
enum Direction : int { kDw = 0, kDz = 1, kDwb = 2, kDzb = 3, kDxi = 4 };

inline constexpr int kXiTerms = 5;  // polynomial degree <= 4

// Vector field whose components are polynomials in the fibre coordinate xi
// with jet-valued coefficients: c[direction][power].
struct XiPolyVectorField {
  Point4 base;
  std::array<std::array<Jet, kXiTerms>, 5> c;

  static XiPolyVectorField zero(const Point4& base, int order);
  int order() const { return c[0][0].order(); }
  cplx value(int direction, int power) const { return c[direction][power].value(); }
  int degree(int direction) const;  // -1 for the zero polynomial (values only)
  double max_abs_value() const;
};

struct LaxPair {
  XiPolyVectorField l0, l1;
};

LaxPair lax_fields(const Background& bg);
LaxPair lax_fields_at(const ManifoldSpec& spec, const Point4& at);

// [X, Y]^k = X(Y^k) - Y(X^k); xi-derivatives exact, coordinate derivatives on the jets.
XiPolyVectorField lax_commutator(const XiPolyVectorField& x, const XiPolyVectorField& y);

// [l0, l1] = A nabla_{01'} + B nabla_{11'} + (C1 xi + C2 xi^2 + C3 xi^3) d_xi.
struct CommutatorDecomp {
  std::array<cplx, kXiTerms> A{}, B{};
  cplx C1{}, C2{}, C3{};
  double transverse = 0;  // largest d_w, d_z component, or d_xi terms outside xi..xi^3
};

// Read A, B, C_i off a commutator by solving against nabla_{01'}, nabla_{11'}.
CommutatorDecomp decompose_commutator(const XiPolyVectorField& comm, const FrameData& frame);

// Closed-form coefficients from the K-jets.
CommutatorDecomp closed_form_coefficients(const Background& bg);
CommutatorDecomp closed_form_coefficients(const ManifoldSpec& spec, const Point4& at);

// Largest coefficient difference between decomp and the commutator divided by
// scale; scale <= 0 means the largest commutator coefficient.
double reconstruction_residual(const CommutatorDecomp& decomp, const XiPolyVectorField& comm,
                               const FrameData& frame, double scale = 0);
// Largest coefficient of either Lax field, the natural scale for the commutator.
double lax_scale(const LaxPair& lp);

// Contact form of the extraction gauge, tau = dxi - Gamma_{0'0'} - 2 xi Gamma_{0'1'} - xi^2 Gamma_{1'1'}.
// Returns the xi-polynomial of its contraction with the field (values only).
std::array<cplx, kXiTerms + 2> contact_contraction(const XiPolyVectorField& field, const Background& bg);

}  // namespace qkprz
