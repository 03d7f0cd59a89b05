// Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qkprz/error.hpp"
#include "qkprz/expr.hpp"
#include "qkprz/jet.hpp"

namespace qkprz {

// Uniform n x n grid over [rho0, rho1] x [sig0, sig1] with rho = w wb, sigma = z zb.
struct GridSpec {
  double rho0 = 0.05, rho1 = 0.25, sig0 = 0.05, sig1 = 0.25;
  int n = 17;
  double lambda = 1;
  double eps = 1;

  double h_rho() const { return (rho1 - rho0) / (n - 1); }
  double h_sig() const { return (sig1 - sig0) / (n - 1); }
  double rho(int i) const { return rho0 + i * h_rho(); }
  double sigma(int j) const { return sig0 + j * h_sig(); }
  bool boundary(int i, int j) const { return i == 0 || j == 0 || i == n - 1 || j == n - 1; }
  int index(int i, int j) const { return i * n + j; }
  // Real-slice point with w = wb = sqrt(rho), z = zb = sqrt(sigma).
  Point4 point(int i, int j) const;
};

// Default box for a builtin family (h4, s4, cp2, bergmann); checks the domain margins.
GridSpec default_grid(const ManifoldSpec& spec, int n);
// Throws kInvalidArgument unless the box lies inside the family's domain with margin 0.1.
void validate_grid(const GridSpec& grid, const ManifoldSpec& spec);

// Node values are kept in extended precision: second differences amplify the rounding of K by
// 4 / h^2, which in double puts the residual floor near 1e-11 on a 17 x 17 grid.
using GridValue = long double;

struct GridField {
  int n = 0;
  std::vector<GridValue> K;  // row-major, index i * n + j with i along rho
  GridValue at(int i, int j) const { return K[size_t(i) * n + j]; }
};

// Value and derivatives of K(rho, sigma) at a node.
struct ReducedJet {
  double rho = 0, sigma = 0;
  double k = 0, kr = 0, ks = 0, krr = 0, krs = 0, kss = 0;
};

// Order-2 jet in (w, z, wb, zb) of K(w wb, z zb) at the real-slice point, by composition.
Jet lift_reduced_jet(const ReducedJet& r, double lambda);

// Second-order central differences at an interior node.
ReducedJet reduced_jet_at(const GridField& f, const GridSpec& grid, int i, int j);

GridField sample_reference(const GridSpec& grid, const ManifoldSpec& spec);
// Adds seeded uniform noise in [-amplitude, amplitude] at interior nodes.
GridField perturb(const GridField& f, const GridSpec& grid, double amplitude, uint64_t seed);
// Largest interior |a - b|.
double max_interior_deviation(const GridField& a, const GridField& b, const GridSpec& grid);

// Raw Przanowski residual at every node (zero on the boundary).
std::vector<double> grid_residual(const GridField& f, const GridSpec& grid, int jobs = 1);
double max_abs(const std::vector<double>& v);

struct NewtonOptions {
  double tol = 1e-11;
  int max_iter = 8;
  int jobs = 1;
};

struct NewtonReport {
  int iterations = 0;
  std::vector<double> residuals;  // max-norm before the first step and after each step
  std::vector<double> step_lengths;
  double max_deviation = 0;  // from the reference at interior nodes
  double order_estimate = 0;  // log(r_{k+1}/r_k) / log(r_k/r_{k-1}) over the last steps above 1e-12
  bool converged = false;
};

class SolverError : public Error {
 public:
  SolverError(ErrorCode code, const std::string& what, NewtonReport report)
      : Error(code, what), report_(std::move(report)) {}
  const NewtonReport& report() const { return report_; }

 private:
  NewtonReport report_;
};

struct NewtonResult {
  GridField field;
  NewtonReport report;
};

// Damped Newton: full step, halved up to 6 times while the residual increases. Boundary values
// are replaced by the reference; the Jacobian comes from the linearised operator applied to the
// lifted stencil sensitivities and is factorised by dense LU.
NewtonResult newton_solve(const GridSpec& grid, const GridField& initial, const ManifoldSpec& reference,
                          const NewtonOptions& options = {});

struct StudyRow {
  int n = 0;
  double h = 0;
  // Measured at the interior nodes of the coarsest grid, which all nested grids share.
  double exact_residual = 0;  // discrete residual of the reference data
  double deviation = 0;       // converged field vs reference
  // The same over every interior node of this grid.
  double exact_residual_all = 0;
  double deviation_all = 0;
  int iterations = 0;
  double final_residual = 0;
};

struct StudyTable {
  std::string family;
  std::vector<StudyRow> rows;
  double deviation_order = 0;  // least-squares slope of log deviation against log h
  double residual_order = 0;
};

// Solves on each grid of a nested sequence over the family's default box, starting from the
// sampled reference plus seeded noise. Rough starts (noise 1e-2 at h ~ 1e-2) can land on a spurious
// branch of the discrete equation, so the default start is unperturbed.
StudyTable convergence_study(const ManifoldSpec& spec, const std::vector<int>& grids, double noise = 0,
                             uint64_t seed = 1, const NewtonOptions& options = {});

}  // namespace qkprz
