// Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0.
#pragma once

#include <array>
#include <complex>
#include <cstdint>

#include "qkprz/error.hpp"

namespace qkprz {

using cplx = std::complex<double>;

// Coordinates of the complexified manifold: w, z, wb, zb are independent.
struct Point4 {
  cplx w, z, wb, zb;
  double lambda = 1.0;

  cplx coord(int i) const {
    switch (i) {
      case 0: return w;
      case 1: return z;
      case 2: return wb;
      default: return zb;
    }
  }
  void set_coord(int i, cplx v);
  // wb == conj(w), zb == conj(z) to the given tolerance.
  bool on_real_slice(double tol = 1e-14) const;
  bool same_coords(const Point4& o) const {
    return w == o.w && z == o.z && wb == o.wb && zb == o.zb;
  }
};

enum Coord : int { kW = 0, kZ = 1, kWb = 2, kZb = 3 };

inline constexpr int kMaxOrder = 4;
// Number of multi-indices (i,j,k,l) with i+j+k+l <= 4.
inline constexpr int kNumCoeffs = 70;

struct MultiIndex {
  std::array<int, 4> e{};
  int degree() const { return e[0] + e[1] + e[2] + e[3]; }
};

// Graded ordering: all degree-0 indices, then degree 1, ... Index lookup is O(1).
int multi_index_slot(const MultiIndex& m);
const MultiIndex& multi_index_at(int slot);
// First slot of a given degree; coefficient_count(order) == first slot of order+1.
int coefficient_count(int order);

// Truncated Taylor jet in (w, z, wb, zb). coeff(m) is the Taylor coefficient
// d^m f / m!; derivative(m) is the partial derivative itself.
class Jet {
 public:
  Jet() = default;
  Jet(const Point4& base, int order);  // zero jet

  static Jet constant(const Point4& base, int order, cplx c);
  static Jet variable(const Point4& base, int order, int coord);

  const Point4& base() const { return base_; }
  int order() const { return order_; }

  cplx value() const { return c_[0]; }
  cplx coeff(const MultiIndex& m) const;
  cplx coeff_slot(int slot) const { return c_[slot]; }
  void set_coeff(const MultiIndex& m, cplx v);
  void set_coeff_slot(int slot, cplx v) { c_[slot] = v; }
  cplx derivative(const MultiIndex& m) const;
  // Shorthand for first and second derivatives by coordinate index.
  cplx d(int i) const;
  cplx d(int i, int j) const;

  Jet truncated(int order) const;
  // Largest coefficient modulus.
  double max_abs() const;

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(const Jet& o);
  Jet& operator/=(const Jet& o);
  Jet& operator*=(cplx s);
  Jet& operator+=(cplx s) { c_[0] += s; return *this; }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator/(const Jet& a, const Jet& b);
  friend Jet operator*(Jet a, cplx s) { return a *= s; }
  friend Jet operator*(cplx s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, cplx s) { return a *= (1.0 / s); }
  friend Jet operator+(Jet a, cplx s) { return a += s; }
  friend Jet operator+(cplx s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, cplx s) { return a += -s; }
  friend Jet operator-(cplx s, const Jet& a) { return (-a) + s; }
  friend Jet operator/(cplx s, const Jet& a);
  Jet operator-() const;

 private:
  void require_compatible(const Jet& o) const;

  Point4 base_{};
  int order_ = 0;
  std::array<cplx, kNumCoeffs> c_{};
};

enum class JetOp { kAdd, kSub, kMul, kDiv };
Jet jet_arith(const Jet& a, const Jet& b, JetOp op);

Jet exp(const Jet& a);
Jet log(const Jet& a);  // principal branch
Jet sqrt(const Jet& a);  // principal branch
Jet pow(const Jet& a, double c);  // principal branch for non-integer c
Jet pow_int(const Jet& a, int n);  // repeated multiplication; n < 0 divides
Jet reciprocal(const Jet& a);

// d^times/dx_coord^times, order drops by `times`.
Jet partial(const Jet& a, int coord, int times = 1);

}  // namespace qkprz
