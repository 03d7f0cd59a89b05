// Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0.
#pragma once

#include <array>
#include <vector>

#include "qkprz/jet.hpp"

namespace qkprz {

constexpr int binomial4(int p) { return p == 0 || p == 4 ? 1 : p == 2 ? 6 : 4; }

// Sorted index subsets of {0,1,2,3} of size p, in lexicographic order, as bitmasks.
const std::vector<int>& subsets(int p);
int subset_slot(int mask);  // position of the mask within subsets(popcount(mask))

// Jet-valued p-form in the cobasis (dw, dz, dwb, dzb); component k multiplies
// dx^{I_k} with I_k = subsets(P)[k].
template <int P>
struct Form {
  static constexpr int kSize = binomial4(P);
  std::array<Jet, kSize> c;

  static Form zero(const Point4& base, int order) {
    Form f;
    f.c.fill(Jet(base, order));
    return f;
  }
  int order() const { return c[0].order(); }
  const Point4& base() const { return c[0].base(); }

  Form truncated(int order) const {
    Form f;
    for (int k = 0; k < kSize; ++k) f.c[k] = c[k].truncated(order);
    return f;
  }
  // Value components.
  std::array<cplx, kSize> values() const {
    std::array<cplx, kSize> v;
    for (int k = 0; k < kSize; ++k) v[k] = c[k].value();
    return v;
  }
  double max_abs_value() const {
    double m = 0;
    for (const Jet& j : c) m = std::max(m, std::abs(j.value()));
    return m;
  }

  Form& operator+=(const Form& o) {
    for (int k = 0; k < kSize; ++k) c[k] += o.c[k];
    return *this;
  }
  Form& operator-=(const Form& o) {
    for (int k = 0; k < kSize; ++k) c[k] -= o.c[k];
    return *this;
  }
  friend Form operator+(Form a, const Form& b) { return a += b; }
  friend Form operator-(Form a, const Form& b) { return a -= b; }
  friend Form operator*(const Jet& s, Form a) {
    for (auto& x : a.c) x = s * x;
    return a;
  }
  friend Form operator*(cplx s, Form a) {
    for (auto& x : a.c) x *= s;
    return a;
  }
  Form operator-() const { return cplx(-1.0) * *this; }
};

using Form1 = Form<1>;
using Form2 = Form<2>;
using Form3 = Form<3>;
using Form4 = Form<4>;

// Sign of dx^I ^ dx^J relative to dx^{I u J}; 0 if I and J overlap.
int wedge_sign(int mask_i, int mask_j);

template <int P, int Q>
Form<P + Q> wedge(const Form<P>& a, const Form<Q>& b) {
  static_assert(P + Q <= 4);
  auto r = Form<P + Q>::zero(a.base(), a.order());
  const auto& sa = subsets(P);
  const auto& sb = subsets(Q);
  for (int i = 0; i < Form<P>::kSize; ++i)
    for (int j = 0; j < Form<Q>::kSize; ++j) {
      int s = wedge_sign(sa[i], sb[j]);
      if (s == 0) continue;
      Jet t = a.c[i] * b.c[j];
      if (s > 0) r.c[subset_slot(sa[i] | sb[j])] += t;
      else r.c[subset_slot(sa[i] | sb[j])] -= t;
    }
  return r;
}

// Exterior derivative; jet order drops by one.
template <int P>
Form<P + 1> exterior_d(const Form<P>& a) {
  static_assert(P < 4);
  auto r = Form<P + 1>::zero(a.base(), a.order() - 1);
  const auto& sa = subsets(P);
  for (int i = 0; i < Form<P>::kSize; ++i)
    for (int x = 0; x < 4; ++x) {
      int s = wedge_sign(1 << x, sa[i]);
      if (s == 0) continue;
      Jet t = partial(a.c[i], x);
      if (s > 0) r.c[subset_slot((1 << x) | sa[i])] += t;
      else r.c[subset_slot((1 << x) | sa[i])] -= t;
    }
  return r;
}

Form1 differential(const Jet& f);
Form1 holomorphic_part(const Form1& a);      // dw, dz components
Form1 antiholomorphic_part(const Form1& a);  // dwb, dzb components

}  // namespace qkprz
