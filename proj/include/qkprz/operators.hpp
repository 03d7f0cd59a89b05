// Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0.
#pragma once

#include <cstdint>

#include "qkprz/geometry.hpp"

namespace qkprz {

cplx tilde_k_at(const ManifoldSpec& spec, const Point4& at);

// Residual K_{z wb} K_{w zb} - K_{w wb} (K_{z zb} + (2/lambda) e^{lambda K}) + K_w K_wb e^{lambda K},
// normalised by the largest of its three terms.
struct OperatorReport {
  Point4 at;
  cplx residual{};
  double normalisation = 0;  // largest |term|
  double relative = 0;       // |residual| / normalisation
  bool degenerate = false;   // tildeK vanishes
};

OperatorReport prz_residual(const Background& bg);
OperatorReport prz_residual(const ManifoldSpec& spec, const Point4& at);

// Linearisation of the residual at K applied to g (g needs order >= 2).
cplx lin_prz_apply(const Background& bg, const Jet& g);

// Section of weight (l, m); the value jet needs order >= 2 for the Laplacian.
struct WeightedSection {
  Jet value;
  double l = 0, m = 0;
};

// *D*D f with Df = df + (l/2 A - (l+m)/2 B) f on weight (l, m) sections.
cplx laplacian_weighted(const FrameData& frame, const LeeForms& lee, const HodgeStar& star,
                        const WeightedSection& f);
cplx laplacian_weighted(const ManifoldSpec& spec, const Point4& at, const WeightedSection& f);
// *d*d f.
cplx plain_laplacian(const HodgeStar& star, const Jet& f);

// Infinitesimal gauge transformation generated by holomorphic dw = dw(w, z), dz = dz(z):
//   dK = K_w dw + K_z dz + c.c. + (1/lambda)(d_z dz + d_zb dzb),
// the t-derivative of K(phi_t(x)) + (1/lambda) ln(d_z z_t d_zb zb_t).
// The jet has order kMaxOrder - 2.
Jet gauge_kernel_element(const ManifoldSpec& spec, const Point4& at, const Ast& dw, const Ast& dz);

// Reproducible smooth test function: a random polynomial of degree <= 3 plus a
// damped exponential of a random linear form.
Ast sample_test_function(std::uint64_t seed);

}  // namespace qkprz
