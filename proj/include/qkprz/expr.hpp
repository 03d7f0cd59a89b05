// Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0.
#pragma once

#include <array>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "qkprz/jet.hpp"

namespace qkprz {

enum class NodeKind { kVar, kParam, kLiteral, kAdd, kSub, kMul, kDiv, kPow, kNeg, kLn, kExp, kSqrt };

enum Param : int { kLam = 0, kEps = 1 };

struct Node;
using Ast = std::shared_ptr<const Node>;

struct Node {
  NodeKind kind = NodeKind::kLiteral;
  int index = 0;         // coordinate for kVar, Param for kParam
  cplx literal{};        // kLiteral: nonnegative real or nonnegative imaginary
  double exponent = 0;   // kPow: nonnegative literal exponent
  Ast lhs, rhs;
};

// Builders. lit() splits arbitrary complex constants into canonical literal nodes
// so that printing and reparsing reproduce the tree exactly.
Ast var(int coord);
Ast param(int which);
Ast lit(cplx c);
Ast binary(NodeKind kind, Ast a, Ast b);
Ast unary(NodeKind kind, Ast a);
Ast power(Ast base, double exponent);

Ast parse(std::string_view source);
std::string print_canonical(const Ast& ast);
bool structurally_equal(const Ast& a, const Ast& b);

// lam = at.lambda, eps = sign(at.lambda).
Jet eval_jet(const Ast& ast, const Point4& at, int order);
cplx eval_value(const Ast& ast, const Point4& at);

// Swap w<->wb, z<->zb and conjugate literals: the expression of the conjugate
// function under the reality condition.
Ast conjugate_ast(const Ast& ast);
// Simultaneous substitution of coordinates; null entries keep the variable.
Ast substitute(const Ast& ast, const std::array<Ast, 4>& replacement);
// True if the expression mentions only the coordinates in the bitmask (bit i = coord i).
bool depends_only_on(const Ast& ast, int coord_mask);

struct Range {
  double lo = 0, hi = 0;
};

struct CoordBox {
  Range re, im;
};

struct ManifoldSpec {
  std::string name;
  double lambda = 1;
  double eps = 1;
  std::string k_source;
  Ast k_expr;
  std::array<CoordBox, 4> domain{};  // w, z, wb, zb; wb, zb used only without reality
  bool reality = true;

  Point4 point(cplx w, cplx z) const;
  Point4 point(cplx w, cplx z, cplx wb, cplx zb) const;
};

// Deterministic domain sampling for a given seed.
class DomainSampler {
 public:
  DomainSampler(const ManifoldSpec& spec, uint64_t seed);
  Point4 next();

 private:
  const ManifoldSpec* spec_;
  std::mt19937_64 rng_;
  double uniform(const Range& r);
};

ManifoldSpec make_manifold(std::string name, double lambda, std::string k_source,
                           std::array<CoordBox, 4> domain, bool reality = true);
// s4, h4, cp2, bergmann; lambda defaults to -1 or +1 per the sign convention.
ManifoldSpec builtin_manifold(std::string_view name, std::optional<double> lambda = std::nullopt);
ManifoldSpec manifold_from_json(std::string_view json_text);
// Builtin name, "file:<path>" or a plain path to a JSON file.
ManifoldSpec load_manifold(std::string_view ref);

}  // namespace qkprz
