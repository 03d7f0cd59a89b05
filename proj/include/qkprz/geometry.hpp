// Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0.
#pragma once

#include <array>

#include "qkprz/expr.hpp"
#include "qkprz/forms.hpp"

namespace qkprz {

// Thresholds below which quantities count as vanishing.
inline constexpr double kDegenerateTol = 1e-12;

// K and the derivative combinations every module needs, at one point.
// With K of order n: first derivatives have order n-1, second derivatives,
// Q and tildeK order n-2.
struct Background {
  Point4 at;
  double lambda = 1, eps = 1;
  Jet K, E;  // E = exp(lambda K)
  Jet Kw, Kz, Kwb, Kzb;
  Jet Kwwb, Kwzb, Kzwb, Kzzb;
  Jet Q;       // K_{z zb} + (2/lambda) E
  Jet tildeK;  // K_{w zb} K_{z wb} - K_{w wb} Q
};

Background background_from_jet(const Jet& K, double lambda);
Background background_at(const ManifoldSpec& spec, const Point4& at, int order = kMaxOrder);

// Vector field in the coordinate basis (d_w, d_z, d_wb, d_zb).
struct Vec4 {
  std::array<Jet, 4> c;
  Jet apply(const Jet& f) const;  // directional derivative, order min(order, f.order()-1)
  Jet contract(const Form1& a) const;
};

// Spinor pair index of a symmetric pair: 00 -> 0, 01/10 -> 1, 11 -> 2.
constexpr int pair_index(int a, int b) { return a + b; }
// Frame index of e^{AA'}: 2A + A'.
constexpr int frame_index(int A, int Ap) { return 2 * A + Ap; }

struct FrameData {
  Background bg;
  std::array<Form1, 4> e;      // e^{AA'}, order n-2
  std::array<Vec4, 4> nabla;   // nabla_{AA'}, dual to e
  std::array<Form2, 3> sigma;  // Sigma^{A'B'} (self-dual)
  std::array<Form2, 3> sigma_unprimed;  // Sigma^{AB} (anti-self-dual)
  std::array<std::array<Jet, 4>, 4> g;  // metric components g_{mu nu}
};

FrameData frame_from_background(const Background& bg);
FrameData frame_at(const ManifoldSpec& spec, const Point4& at);

// Metric read directly off the Przanowski line element, for cross-checks.
std::array<std::array<cplx, 4>, 4> przanowski_metric(const Background& bg);

// Sigma^{A'B'} lowered with epsilon: Sigma_{00} = Sigma^{11}, Sigma_{01} = -Sigma^{01}, Sigma_{11} = Sigma^{00}.
std::array<Form2, 3> lower_primed(const std::array<Form2, 3>& upper);

enum class ConnectionMethod { kClosedForm, kStructureEquation };

struct Connection {
  std::array<Form1, 3> primed;    // Gamma_{A'B'}
  std::array<Form1, 3> unprimed;  // Gamma_{AB}; filled only by the structure equation
};

Connection connection_from_frame(const FrameData& frame, ConnectionMethod method);
Connection connection_at(const ManifoldSpec& spec, const Point4& at, ConnectionMethod method);

// The connection of the twistor extraction gauge: Gamma_{0'0'} = e^{lambda K} K_w dzb,
// Gamma_{1'1'} = dz / K_w, Gamma_{0'1'} = (d ln K_w + lambda dK^{(1,0)}) / 2.
std::array<Form1, 3> connection_fg(const Background& bg);

// de^{AA'} - Gamma^{AA'}_{CC'} ^ e^{CC'}, value components, normalised by max |de|.
double structure_equation_residual(const FrameData& frame, const Connection& conn);

// R_{A'B'} = dGamma_{A'B'} + eps^{C'D'} Gamma_{A'C'} ^ Gamma_{D'B'}.
std::array<Form2, 3> primed_curvature(const std::array<Form1, 3>& gamma);

struct CurvatureDecomp {
  std::array<std::array<cplx, 6>, 3> r_primed{};  // R_{A'B'} two-form values
  cplx scalar_r{};
  std::array<cplx, 5> weyl_sd{};                 // W_{A'B'C'D'} by number of 1' indices
  std::array<std::array<cplx, 3>, 3> phi{};      // Phi_{A'B'CD}
  double einstein_residual = 0;                  // max |R - lambda Sigma| / max |lambda Sigma|
  double weyl_norm = 0;                          // max |W| / |lambda|
  double phi_norm = 0;                           // max |Phi| / |lambda|
};

CurvatureDecomp curvature_from_frame(const FrameData& frame, ConnectionMethod method);
CurvatureDecomp curvature_at(const ManifoldSpec& spec, const Point4& at,
                             ConnectionMethod method = ConnectionMethod::kStructureEquation);

struct LeeForms {
  Form1 A, B;
};

// A = d'(ln tildeK - 2 ln K_wb) + d''(2 ln K_w),  B = 2 (d' ln K_wb + d'' ln K_w).
LeeForms lee_forms(const Background& bg);
LeeForms lee_forms_at(const ManifoldSpec& spec, const Point4& at);

// Hodge star from the metric, oriented so that every Sigma^{A'B'} is self-dual.
class HodgeStar {
 public:
  explicit HodgeStar(const FrameData& frame);

  template <int P>
  Form<4 - P> operator()(const Form<P>& a) const;
  Jet scalar(const Form4& a) const;      // * of a top form
  Form4 top(const Jet& f) const;         // * of a function
  const Jet& volume() const { return vol_; }  // vol = v dw^dz^dwb^dzb
  const std::array<std::array<Jet, 4>, 4>& inverse_metric() const { return ginv_; }

 private:
  Jet minor(int rows, int cols) const;
  std::array<std::array<Jet, 4>, 4> ginv_;
  Jet vol_;
};

// Sigma^{A'B'} recovered from the extraction-gauge connection through the
// Einstein relations R_{A'B'} = lambda Sigma_{A'B'}.
std::array<Form2, 3> sigma_from_connection(const Background& bg);

// |Sigma^{00}^Sigma^{11} + 2 Sigma^{01}^Sigma^{01}| relative to the larger term.
double sigma_wedge_residual(const std::array<Form2, 3>& sigma_upper);

// Solve M x = b with jet entries by Gaussian elimination with partial pivoting on the values.
std::vector<Jet> solve_jet_system(std::vector<std::vector<Jet>> m, std::vector<Jet> b);

}  // namespace qkprz
