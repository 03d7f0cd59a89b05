// Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0.
#include "qkprz/jet.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace qkprz {
namespace {

struct Tables {
  std::array<MultiIndex, kNumCoeffs> index{};
  std::array<int, 625> slot_of{};  // base-5 packed multi-index -> slot
  std::array<int, kMaxOrder + 2> first{};
  // Product triples (i, j, k): c[k] += a[i] * b[j], sorted by degree of k.
  struct Triple { int8_t i, j, k; };
  std::vector<Triple> triples;
  std::array<int, kMaxOrder + 2> triples_end{};  // end offset per target degree
  // Slot of m + e_coord, or -1 past the cap.
  std::array<std::array<int, 4>, kNumCoeffs> raise{};

  static int pack(const MultiIndex& m) {
    return ((m.e[0] * 5 + m.e[1]) * 5 + m.e[2]) * 5 + m.e[3];
  }

  Tables() {
    slot_of.fill(-1);
    int n = 0;
    for (int deg = 0; deg <= kMaxOrder; ++deg) {
      first[deg] = n;
      for (int a = deg; a >= 0; --a)
        for (int b = deg - a; b >= 0; --b)
          for (int c = deg - a - b; c >= 0; --c) {
            MultiIndex m{{a, b, c, deg - a - b - c}};
            index[n] = m;
            slot_of[pack(m)] = n;
            ++n;
          }
    }
    first[kMaxOrder + 1] = n;
    for (int k = 0; k < kNumCoeffs; ++k) {
      const MultiIndex& t = index[k];
      for (int i = 0; i < kNumCoeffs; ++i) {
        const MultiIndex& a = index[i];
        bool ok = true;
        MultiIndex b;
        for (int d = 0; d < 4; ++d) {
          b.e[d] = t.e[d] - a.e[d];
          if (b.e[d] < 0) ok = false;
        }
        if (ok) triples.push_back({int8_t(i), int8_t(slot_of[pack(b)]), int8_t(k)});
      }
    }
    // k is already increasing, so triples are grouped by target degree.
    for (int deg = 0; deg <= kMaxOrder; ++deg) {
      auto it = std::find_if(triples.begin(), triples.end(),
                             [&](const Triple& t) { return t.k >= first[deg + 1]; });
      triples_end[deg] = int(it - triples.begin());
    }
    for (int s = 0; s < kNumCoeffs; ++s)
      for (int d = 0; d < 4; ++d) {
        MultiIndex m = index[s];
        ++m.e[d];
        raise[s][d] = m.degree() <= kMaxOrder ? slot_of[pack(m)] : -1;
      }
  }
};

const Tables& tables() {
  static const Tables t;
  return t;
}

double factorial(int n) {
  static constexpr double f[] = {1, 1, 2, 6, 24, 120};
  return f[n];
}

void check_order(int order) {
  if (order < 0 || order > kMaxOrder)
    throw Error(ErrorCode::kInvalidArgument, "jet order must lie in 0..4");
}

// Univariate composition: f(a0 + h) = sum_k t[k] h^k with h = a - a0.
Jet compose(const Jet& a, const std::array<cplx, kMaxOrder + 1>& t) {
  Jet h = a;
  h.set_coeff_slot(0, 0.0);
  Jet result = Jet::constant(a.base(), a.order(), t[0]);
  if (a.order() == 0) return result;
  Jet hk = h;
  for (int k = 1; k <= a.order(); ++k) {
    result += hk * t[k];
    if (k < a.order()) hk *= h;
  }
  return result;
}

}  // namespace

void Point4::set_coord(int i, cplx v) {
  switch (i) {
    case 0: w = v; break;
    case 1: z = v; break;
    case 2: wb = v; break;
    default: zb = v; break;
  }
}

bool Point4::on_real_slice(double tol) const {
  return std::abs(wb - std::conj(w)) <= tol && std::abs(zb - std::conj(z)) <= tol;
}

int multi_index_slot(const MultiIndex& m) {
  for (int x : m.e)
    if (x < 0 || x > kMaxOrder) return -1;
  if (m.degree() > kMaxOrder) return -1;
  return tables().slot_of[Tables::pack(m)];
}

const MultiIndex& multi_index_at(int slot) { return tables().index[slot]; }

int coefficient_count(int order) { return tables().first[order + 1]; }

Jet::Jet(const Point4& base, int order) : base_(base), order_(order) { check_order(order); }

Jet Jet::constant(const Point4& base, int order, cplx c) {
  Jet j(base, order);
  j.c_[0] = c;
  return j;
}

Jet Jet::variable(const Point4& base, int order, int coord) {
  Jet j = constant(base, order, base.coord(coord));
  if (order >= 1) j.c_[1 + coord] = 1.0;
  return j;
}

cplx Jet::coeff(const MultiIndex& m) const {
  if (m.degree() > order_) throw Error(ErrorCode::kInsufficientOrder, "coefficient beyond jet order");
  int s = multi_index_slot(m);
  if (s < 0) throw Error(ErrorCode::kInvalidArgument, "malformed multi-index");
  return c_[s];
}

void Jet::set_coeff(const MultiIndex& m, cplx v) {
  if (m.degree() > order_) throw Error(ErrorCode::kInsufficientOrder, "coefficient beyond jet order");
  c_[multi_index_slot(m)] = v;
}

cplx Jet::derivative(const MultiIndex& m) const {
  double f = 1;
  for (int x : m.e) f *= factorial(x);
  return coeff(m) * f;
}

cplx Jet::d(int i) const {
  MultiIndex m;
  ++m.e[i];
  return derivative(m);
}

cplx Jet::d(int i, int j) const {
  MultiIndex m;
  ++m.e[i];
  ++m.e[j];
  return derivative(m);
}

Jet Jet::truncated(int order) const {
  if (order > order_) throw Error(ErrorCode::kInsufficientOrder, "cannot raise jet order");
  Jet j(base_, order);
  std::copy_n(c_.begin(), coefficient_count(order), j.c_.begin());
  return j;
}

double Jet::max_abs() const {
  double m = 0;
  for (int s = 0; s < coefficient_count(order_); ++s) m = std::max(m, std::abs(c_[s]));
  return m;
}

void Jet::require_compatible(const Jet& o) const {
  if (order_ != o.order_)
    throw Error(ErrorCode::kInvalidArgument, "jet orders differ");
  if (!base_.same_coords(o.base_))
    throw Error(ErrorCode::kInvalidArgument, "jet base points differ");
}

Jet& Jet::operator+=(const Jet& o) {
  require_compatible(o);
  for (int s = 0; s < coefficient_count(order_); ++s) c_[s] += o.c_[s];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  require_compatible(o);
  for (int s = 0; s < coefficient_count(order_); ++s) c_[s] -= o.c_[s];
  return *this;
}

Jet& Jet::operator*=(cplx s) {
  for (int k = 0; k < coefficient_count(order_); ++k) c_[k] *= s;
  return *this;
}

Jet operator*(const Jet& a, const Jet& b) {
  a.require_compatible(b);
  Jet r(a.base_, a.order_);
  const auto& t = tables();
  const int end = t.triples_end[a.order_];
  for (int n = 0; n < end; ++n) {
    const auto& x = t.triples[n];
    r.c_[x.k] += a.c_[x.i] * b.c_[x.j];
  }
  return r;
}

Jet& Jet::operator*=(const Jet& o) { return *this = *this * o; }

Jet reciprocal(const Jet& a) {
  cplx a0 = a.value();
  if (std::abs(a0) == 0.0) throw Error(ErrorCode::kSingularPoint, "division by a jet with zero value");
  std::array<cplx, kMaxOrder + 1> t{};
  cplx p = 1.0 / a0;
  for (int k = 0; k <= kMaxOrder; ++k) {
    t[k] = p;
    p *= -1.0 / a0;
  }
  return compose(a, t);
}

Jet operator/(const Jet& a, const Jet& b) {
  a.require_compatible(b);
  return a * reciprocal(b);
}

Jet operator/(cplx s, const Jet& a) { return reciprocal(a) * s; }

Jet& Jet::operator/=(const Jet& o) { return *this = *this / o; }

Jet Jet::operator-() const {
  Jet r = *this;
  r *= -1.0;
  return r;
}

Jet jet_arith(const Jet& a, const Jet& b, JetOp op) {
  switch (op) {
    case JetOp::kAdd: return a + b;
    case JetOp::kSub: return a - b;
    case JetOp::kMul: return a * b;
    case JetOp::kDiv: return a / b;
  }
  throw Error(ErrorCode::kInternal, "unknown jet operation");
}

Jet exp(const Jet& a) {
  std::array<cplx, kMaxOrder + 1> t{};
  cplx e = std::exp(a.value());
  for (int k = 0; k <= kMaxOrder; ++k) t[k] = e / factorial(k);
  return compose(a, t);
}

Jet log(const Jet& a) {
  cplx a0 = a.value();
  if (std::abs(a0) == 0.0) throw Error(ErrorCode::kBranchPoint, "logarithm of a jet with zero value");
  std::array<cplx, kMaxOrder + 1> t{};
  t[0] = std::log(a0);
  cplx p = 1.0 / a0;
  for (int k = 1; k <= kMaxOrder; ++k) {
    t[k] = (k % 2 == 1 ? 1.0 : -1.0) * p / double(k);
    p /= a0;
  }
  return compose(a, t);
}

Jet pow(const Jet& a, double c) {
  if (c == std::round(c) && std::abs(c) <= 64) return pow_int(a, int(c));
  cplx a0 = a.value();
  if (std::abs(a0) == 0.0) throw Error(ErrorCode::kBranchPoint, "non-integer power of a jet with zero value");
  std::array<cplx, kMaxOrder + 1> t{};
  // (a0 + h)^c = a0^c sum_k binom(c, k) (h / a0)^k
  cplx base = std::exp(c * std::log(a0));
  double binom = 1;
  cplx p = 1.0;
  for (int k = 0; k <= kMaxOrder; ++k) {
    t[k] = base * binom * p;
    binom *= (c - k) / double(k + 1);
    p /= a0;
  }
  return compose(a, t);
}

Jet sqrt(const Jet& a) {
  if (std::abs(a.value()) == 0.0) throw Error(ErrorCode::kBranchPoint, "square root of a jet with zero value");
  return pow(a, 0.5);
}

Jet pow_int(const Jet& a, int n) {
  if (n < 0) return reciprocal(pow_int(a, -n));
  Jet r = Jet::constant(a.base(), a.order(), 1.0);
  Jet b = a;
  while (n > 0) {
    if (n & 1) r *= b;
    n >>= 1;
    if (n) b *= b;
  }
  return r;
}

Jet partial(const Jet& a, int coord, int times) {
  if (coord < 0 || coord > 3) throw Error(ErrorCode::kInvalidArgument, "coordinate index must be 0..3");
  if (times < 0) throw Error(ErrorCode::kInvalidArgument, "negative derivative count");
  if (times > a.order()) throw Error(ErrorCode::kInsufficientOrder, "derivative count exceeds jet order");
  Jet cur = a;
  const auto& t = tables();
  for (int n = 0; n < times; ++n) {
    Jet next(cur.base(), cur.order() - 1);
    for (int s = 0; s < coefficient_count(next.order()); ++s) {
      int up = t.raise[s][coord];
      next.set_coeff_slot(s, cur.coeff_slot(up) * double(t.index[s].e[coord] + 1));
    }
    cur = next;
  }
  return cur;
}

}  // namespace qkprz
