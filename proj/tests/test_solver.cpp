// Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0.
#include <cmath>

#include "doctest.h"
#include "qkprz/solver.hpp"

using namespace qkprz;

namespace {

// Reduced h4 function at lambda = 1: K = 2 ln rho - 2 ln(1 - rho (1 + sigma)), derivatives by hand.
ReducedJet h4_reduced(double rho, double sigma) {
  const double D = 1 - rho * (1 + sigma);
  ReducedJet r{rho, sigma};
  r.k = 2 * std::log(rho) - 2 * std::log(D);
  r.kr = 2 / rho + 2 * (1 + sigma) / D;
  r.ks = 2 * rho / D;
  r.krr = -2 / (rho * rho) + 2 * (1 + sigma) * (1 + sigma) / (D * D);
  r.krs = 2 / D + 2 * rho * (1 + sigma) / (D * D);
  r.kss = 2 * rho * rho / (D * D);
  return r;
}

}  // namespace

TEST_CASE("lifting reduced jets") {
  ReducedJet lin{0.3, 0.2};
  lin.k = 0.3;
  lin.kr = 1;
  Jet K = lift_reduced_jet(lin, 1.0);
  const double w = std::sqrt(0.3);
  CHECK(std::abs(K.d(kW, kWb) - 1.0) < 1e-15);
  CHECK(std::abs(K.d(kW) - w) < 1e-15);
  CHECK(std::abs(K.d(kZ)) < 1e-15);
  CHECK(std::abs(K.d(kW, kW)) < 1e-15);

  ReducedJet c{0.3, 0.2};
  c.k = 4;
  Jet Kc = lift_reduced_jet(c, 1.0);
  for (int i = 0; i < 4; ++i) {
    CHECK(Kc.d(i) == cplx(0));
    for (int j = 0; j < 4; ++j) CHECK(Kc.d(i, j) == cplx(0));
  }

  CHECK_THROWS_AS(lift_reduced_jet(ReducedJet{0.0, 0.2}, 1.0), Error);
}

TEST_CASE("lifted h4 jets match direct jets of the full expression") {
  auto h4 = builtin_manifold("h4");
  for (int k = 0; k < 50; ++k) {
    const double rho = 0.05 + 0.004 * k, sigma = 0.25 - 0.003 * k;
    Jet lifted = lift_reduced_jet(h4_reduced(rho, sigma), 1.0);
    Point4 p{std::sqrt(rho), std::sqrt(sigma), std::sqrt(rho), std::sqrt(sigma), 1.0};
    Jet direct = eval_jet(h4.k_expr, p, 2);
    CHECK(std::abs(lifted.value() - direct.value()) < 1e-11 * (1 + std::abs(direct.value())));
    for (int i = 0; i < 4; ++i) {
      CHECK(std::abs(lifted.d(i) - direct.d(i)) < 1e-11 * (1 + std::abs(direct.d(i))));
      for (int j = i; j < 4; ++j) CHECK(std::abs(lifted.d(i, j) - direct.d(i, j)) < 1e-11 * (1 + std::abs(direct.d(i, j))));
    }
  }
}

TEST_CASE("discrete residual of exact data is second order") {
  auto h4 = builtin_manifold("h4");
  auto study = convergence_study(h4, {9, 17, 33});
  MESSAGE("h4 exact-data residual on 17 x 17: " << study.rows[1].exact_residual_all);
  CHECK(study.rows[1].exact_residual / study.rows[2].exact_residual > std::pow(2.0, 1.8));
  CHECK(study.residual_order >= 1.8);
  CHECK(study.residual_order <= 2.2);

  // Constant K: every term of the residual carries a derivative.
  GridSpec g = default_grid(h4, 9);
  GridField c{9, std::vector<GridValue>(81, 0.7L)};
  for (double r : grid_residual(c, g)) CHECK(r == 0);
}

TEST_CASE("parallel assembly matches serial") {
  auto s4 = builtin_manifold("s4");
  GridSpec g = default_grid(s4, 17);
  GridField f = perturb(sample_reference(g, s4), g, 1e-3, 5);
  CHECK(grid_residual(f, g, 1) == grid_residual(f, g, 4));
}

TEST_CASE("Newton recovers the discrete solution") {
  auto h4 = builtin_manifold("h4");
  GridSpec g = default_grid(h4, 17);
  const GridField ref = sample_reference(g, h4);

  NewtonResult exact = newton_solve(g, ref, h4, {1e-11, 8, 2});
  CHECK(exact.report.converged);
  CHECK(exact.report.residuals.back() < 1e-11);
  CHECK(exact.report.max_deviation < 5e-4);

  // Starting from the converged field needs no step.
  NewtonResult again = newton_solve(g, exact.field, h4, {1e-11, 8, 1});
  CHECK(again.report.iterations == 0);

  // From a small perturbation: same discrete solution, quadratic tail.
  NewtonResult pert = newton_solve(g, perturb(ref, g, 1e-4, 7), h4, {1e-11, 8, 2});
  CHECK(pert.report.residuals.back() < 1e-11);
  CHECK(max_interior_deviation(pert.field, exact.field, g) < 1e-10);
  const auto& rs = pert.report.residuals;
  for (size_t k = 1; k < rs.size(); ++k)
    if (rs[k] > 1e-12 && rs[k - 1] < 1) CHECK(rs[k] / (rs[k - 1] * rs[k - 1]) < 10);
  CHECK(pert.report.order_estimate > 1.8);
}

TEST_CASE("Newton from a rough start reaches the tolerance") {
  auto h4 = builtin_manifold("h4");
  GridSpec g = default_grid(h4, 17);
  const GridField start = perturb(sample_reference(g, h4), g, 1e-2, 1);
  NewtonResult r = newton_solve(g, start, h4, {1e-11, 20, 2});
  CHECK(r.report.residuals.back() < 1e-11);
  CHECK(r.report.order_estimate > 1.8);
  CHECK(r.report.order_estimate < 2.2);
  MESSAGE("iterations from 1e-2 noise: " << r.report.iterations << ", deviation " << r.report.max_deviation);

  try {
    newton_solve(g, start, h4, {1e-11, 2, 1});
    FAIL("expected non-convergence");
  } catch (const SolverError& e) {
    CHECK(e.code() == ErrorCode::kNotConverged);
    CHECK(e.report().residuals.size() == 3);
  }
}

TEST_CASE("convergence study orders and determinism") {
  for (const char* name : {"h4", "s4", "cp2", "bergmann"}) {
    auto spec = builtin_manifold(name);
    auto t = convergence_study(spec, {9, 17, 33});
    CHECK(t.deviation_order >= 1.8);
    CHECK(t.deviation_order <= 2.2);
    CHECK(t.residual_order >= 1.8);
    CHECK(t.residual_order <= 2.2);
    if (std::string(name) == "h4") {
      auto u = convergence_study(spec, {9, 17, 33});
      for (size_t k = 0; k < t.rows.size(); ++k) {
        CHECK(t.rows[k].deviation == u.rows[k].deviation);
        CHECK(t.rows[k].exact_residual == u.rows[k].exact_residual);
        CHECK(t.rows[k].final_residual == u.rows[k].final_residual);
      }
    }
  }
}

TEST_CASE("solver argument validation") {
  auto h4 = builtin_manifold("h4");
  GridSpec g = default_grid(h4, 9);
  g.rho1 = 0.8;  // 1 - rho (1 + sigma) reaches zero
  CHECK_THROWS_AS(validate_grid(g, h4), Error);
  CHECK_THROWS_AS(convergence_study(h4, {9, 16}), Error);
  GridSpec ok = default_grid(h4, 9);
  GridField wrong{5, std::vector<GridValue>(25, 0)};
  CHECK_THROWS_AS(newton_solve(ok, wrong, h4), Error);
  CHECK_THROWS_AS(reduced_jet_at(sample_reference(ok, h4), ok, 0, 3), Error);
}
