// Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0.
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "qkprz/expr.hpp"
#include "qkprz/jet.hpp"

using namespace qkprz;

namespace {

Point4 at(cplx w, cplx z, cplx wb, cplx zb, double lam = 1) { return {w, z, wb, zb, lam}; }

Jet random_jet(std::mt19937_64& rng, const Point4& p, int order, double value_offset = 0) {
  std::uniform_real_distribution<double> u(-1, 1);
  Jet j(p, order);
  for (int s = 0; s < coefficient_count(order); ++s) j.set_coeff_slot(s, cplx(u(rng), u(rng)));
  j.set_coeff_slot(0, j.value() + value_offset);
  return j;
}

double diff(const Jet& a, const Jet& b) { return (a - b).max_abs(); }

MultiIndex mi(int a, int b, int c, int d) { return MultiIndex{{a, b, c, d}}; }

}  // namespace

TEST_CASE("multi-index table") {
  CHECK(coefficient_count(0) == 1);
  CHECK(coefficient_count(1) == 5);
  CHECK(coefficient_count(2) == 15);
  CHECK(coefficient_count(3) == 35);
  CHECK(coefficient_count(4) == 70);
  for (int s = 0; s < kNumCoeffs; ++s) CHECK(multi_index_slot(multi_index_at(s)) == s);
}

TEST_CASE("product rule example") {
  Point4 p = at(2, 0, 3, 0);
  Jet f = Jet::variable(p, 2, kW) * Jet::variable(p, 2, kWb);
  CHECK(f.value() == cplx(6));
  CHECK(f.d(kW) == cplx(3));
  CHECK(f.d(kWb) == cplx(2));
  CHECK(f.d(kW, kWb) == cplx(1));
  CHECK(f.d(kZ) == cplx(0));
  CHECK(f.d(kW, kW) == cplx(0));
  CHECK(f.d(kZ, kZb) == cplx(0));
}

TEST_CASE("self division is one") {
  std::mt19937_64 rng(1);
  Point4 p = at(0.3, 0.1, 0.3, 0.1);
  for (int n = 0; n < 20; ++n) {
    Jet a = random_jet(rng, p, 4, 2.0);
    Jet one = a / a;
    CHECK(diff(one, Jet::constant(p, 4, 1)) < 1e-12);
  }
}

TEST_CASE("division by zero value is a singular-point error") {
  Point4 p = at(0, 0, 0, 0);
  Jet w = Jet::variable(p, 2, kW);
  try {
    (void)(Jet::constant(p, 2, 1) / w);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSingularPoint);
  }
}

TEST_CASE("mixed third derivative of (w+z)^3 against finite differences") {
  Point4 p = at(1, 1, 0, 0);
  Jet s = Jet::variable(p, 3, kW) + Jet::variable(p, 3, kZ);
  Jet f = s * s * s;
  oracle::Fn fn = [](const oracle::Pt& x) { return (x[0] + x[1]) * (x[0] + x[1]) * (x[0] + x[1]); };
  cplx fd = oracle::to_d(oracle::central_difference(fn, oracle::to_mp(p), {2, 1, 0, 0}, 1e-4));
  cplx jd = f.derivative(mi(2, 1, 0, 0));
  CHECK(std::abs(jd - fd) <= 1e-6 * std::abs(fd));
  CHECK(std::abs(jd - 6.0) < 1e-14);
}

TEST_CASE("exp and log are inverse") {
  std::mt19937_64 rng(2);
  Point4 p = at(0.3, 0.1, 0.3, 0.1);
  for (int n = 0; n < 50; ++n) {
    Jet a = random_jet(rng, p, 4, 3.0);  // value well away from the negative real axis
    CHECK(diff(exp(log(a)), a) < 1e-12);
    CHECK(diff(log(exp(a)).truncated(4) - a, Jet(p, 4)) < 1e-12);
  }
  Jet zero(p, 4);
  CHECK(diff(exp(zero), Jet::constant(p, 4, 1)) == 0.0);
}

TEST_CASE("branch-point errors") {
  Point4 p = at(0, 0, 0, 0);
  Jet w = Jet::variable(p, 2, kW);
  for (auto fn : {+[](const Jet& j) { return log(j); }, +[](const Jet& j) { return sqrt(j); }}) {
    try {
      (void)fn(w);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kBranchPoint);
    }
  }
}

TEST_CASE("elementary functions against 50-digit finite differences") {
  // exp(lam*K) for the four-sphere and a mix of sqrt/pow; every coefficient up to order 4.
  const char* sources[] = {
      "exp(lam*((2/lam)*ln(w*wb/(1 - eps*w*wb*(1+z*zb)))))",
      "sqrt(1 + w*zb + z^2)*exp(wb - z) / (2 + w*wb)",
      "(1 + w + 0.5i*zb)^2.5 * ln(3 + z*wb)",
  };
  Point4 p = at(cplx(0.4, 0.1), cplx(0.2, -0.3), cplx(0.4, -0.1), cplx(0.2, 0.3), -1);
  for (const char* src : sources) {
    Ast a = parse(src);
    Jet j = eval_jet(a, p, 4);
    auto fn = oracle::ast_fn(a, p.lambda);
    for (int s = 0; s < kNumCoeffs; ++s) {
      const MultiIndex& m = multi_index_at(s);
      cplx fd = oracle::to_d(oracle::central_difference(fn, oracle::to_mp(p), m.e, 1e-5));
      cplx jd = j.derivative(m);
      INFO(src, " slot ", s);
      CHECK(std::abs(jd - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("partial derivatives") {
  Point4 p = at(3, 0, 0, 0);
  Jet w = Jet::variable(p, 3, kW);
  Jet dw = partial(w * w, kW);
  CHECK(dw.order() == 2);
  CHECK(dw.value() == cplx(6));
  CHECK(dw.d(kW) == cplx(2));
  CHECK(dw.d(kW, kW) == cplx(0));

  Jet indep = exp(w) * Jet::variable(p, 3, kWb);
  CHECK(partial(indep, kZ).max_abs() == 0.0);

  try {
    (void)partial(w, kW, 4);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInsufficientOrder);
  }
}

TEST_CASE("mixed second derivative of the hyperbolic K") {
  // On z = 0 the closed form reduces to 2 ln(w wb) - 2 ln(1 - w wb), so
  // K_{w wb} = 2 / (1 - w wb)^2, i.e. 32/9 at w = wb = 1/2.
  Ast k = parse("(2/lam)*ln(w*wb/(1 - eps*w*wb*(1+z*zb)))");
  Jet j = eval_jet(k, at(0.5, 0, 0.5, 0, 1), 4);
  CHECK(std::abs(partial(partial(j, kW), kWb).value() - 32.0 / 9.0) < 1e-13);
  CHECK(std::abs(j.d(kW, kWb) - 32.0 / 9.0) < 1e-13);
}

TEST_CASE("ring axioms and Leibniz rule") {
  std::mt19937_64 rng(3);
  Point4 p = at(cplx(0.1, 0.2), 0.3, cplx(0.1, -0.2), 0.3);
  for (int n = 0; n < 50; ++n) {
    Jet a = random_jet(rng, p, 4), b = random_jet(rng, p, 4), c = random_jet(rng, p, 4);
    CHECK(diff((a * b) * c, a * (b * c)) < 1e-12);
    CHECK(diff(a * (b + c), a * b + a * c) < 1e-12);
    CHECK(diff(a * b, b * a) < 1e-12);
    CHECK(diff(a + b, b + a) < 1e-12);
    for (int d = 0; d < 4; ++d) {
      Jet lhs = partial(a * b, d);
      Jet rhs = partial(a, d) * b.truncated(3) + a.truncated(3) * partial(b, d);
      CHECK(diff(lhs, rhs) < 1e-12);
    }
  }
}

TEST_CASE("binary operations demand matching base and order") {
  Point4 p = at(1, 1, 1, 1), q = at(2, 1, 1, 1);
  CHECK_THROWS_AS((void)(Jet(p, 2) + Jet(p, 3)), Error);
  CHECK_THROWS_AS((void)(Jet(p, 2) * Jet(q, 2)), Error);
  CHECK(jet_arith(Jet::constant(p, 1, 2), Jet::constant(p, 1, 4), JetOp::kDiv).value() == cplx(0.5));
}
