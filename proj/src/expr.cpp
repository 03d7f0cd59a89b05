// Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0.
#include "qkprz/expr.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include "json.hpp"

namespace qkprz {
namespace {

constexpr const char* kVarNames[] = {"w", "z", "wb", "zb"};
constexpr const char* kParamNames[] = {"lam", "eps"};

std::shared_ptr<Node> make(NodeKind kind) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  return n;
}

Ast raw_literal(cplx c) {
  auto n = make(NodeKind::kLiteral);
  n->literal = c;
  return n;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// ---- lexer -------------------------------------------------------------

enum class Tok { kNumber, kImag, kIdent, kPlus, kMinus, kStar, kSlash, kCaret, kLParen, kRParen, kEnd };

const char* tok_name(Tok t) {
  switch (t) {
    case Tok::kNumber: return "number";
    case Tok::kImag: return "imaginary number";
    case Tok::kIdent: return "identifier";
    case Tok::kPlus: return "'+'";
    case Tok::kMinus: return "'-'";
    case Tok::kStar: return "'*'";
    case Tok::kSlash: return "'/'";
    case Tok::kCaret: return "'^'";
    case Tok::kLParen: return "'('";
    case Tok::kRParen: return "')'";
    case Tok::kEnd: return "end of input";
  }
  return "?";
}

struct Token {
  Tok kind;
  size_t offset;
  std::string text;
  double number = 0;
};

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  size_t i = 0;
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) { ++i; continue; }
    size_t start = i;
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      while (i < src.size() && (std::isdigit(static_cast<unsigned char>(src[i])) || src[i] == '.')) ++i;
      if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
        size_t j = i + 1;
        if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
        if (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
          i = j;
          while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
        }
      }
      std::string text(src.substr(start, i - start));
      char* end = nullptr;
      double v = std::strtod(text.c_str(), &end);
      if (end != text.c_str() + text.size())
        throw Error(ErrorCode::kParse, "lexical error at byte " + std::to_string(start) + ": malformed number '" + text + "'");
      Tok kind = Tok::kNumber;
      if (i < src.size() && src[i] == 'i' &&
          !(i + 1 < src.size() && std::isalnum(static_cast<unsigned char>(src[i + 1])))) {
        ++i;
        kind = Tok::kImag;
      }
      out.push_back({kind, start, std::string(src.substr(start, i - start)), v});
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) ++i;
      out.push_back({Tok::kIdent, start, std::string(src.substr(start, i - start))});
      continue;
    }
    Tok kind;
    switch (c) {
      case '+': kind = Tok::kPlus; break;
      case '-': kind = Tok::kMinus; break;
      case '*': kind = Tok::kStar; break;
      case '/': kind = Tok::kSlash; break;
      case '^': kind = Tok::kCaret; break;
      case '(': kind = Tok::kLParen; break;
      case ')': kind = Tok::kRParen; break;
      default:
        throw Error(ErrorCode::kParse, "lexical error at byte " + std::to_string(start) +
                                           ": unexpected character '" + std::string(1, c) + "'");
    }
    ++i;
    out.push_back({kind, start, std::string(1, c)});
  }
  out.push_back({Tok::kEnd, src.size(), ""});
  return out;
}

// ---- parser ------------------------------------------------------------
//   expr   := term (("+"|"-") term)*
//   term   := factor (("*"|"/") factor)*
//   factor := "-" factor | power
//   power  := atom ("^" literal)?
//   atom   := literal | ident | func "(" expr ")" | "(" expr ")"

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

  Ast parse_all() {
    Ast e = expr();
    if (peek().kind != Tok::kEnd) fail({Tok::kPlus, Tok::kMinus, Tok::kStar, Tok::kSlash, Tok::kEnd});
    return e;
  }

 private:
  const Token& peek() const { return t_[pos_]; }
  const Token& take() { return t_[pos_++]; }

  [[noreturn]] void fail(std::initializer_list<Tok> expected, const char* extra = nullptr) const {
    std::ostringstream os;
    os << "parse error at byte " << peek().offset << ": ";
    if (extra) os << extra << "; ";
    os << "expected one of {";
    bool first = true;
    for (Tok t : expected) {
      os << (first ? "" : ", ") << tok_name(t);
      first = false;
    }
    os << "} but found " << tok_name(peek().kind);
    if (!peek().text.empty()) os << " '" << peek().text << "'";
    throw Error(ErrorCode::kParse, os.str());
  }

  Ast expr() {
    Ast lhs = term();
    while (peek().kind == Tok::kPlus || peek().kind == Tok::kMinus) {
      NodeKind k = take().kind == Tok::kPlus ? NodeKind::kAdd : NodeKind::kSub;
      lhs = binary(k, lhs, term());
    }
    return lhs;
  }

  Ast term() {
    Ast lhs = factor();
    while (peek().kind == Tok::kStar || peek().kind == Tok::kSlash) {
      NodeKind k = take().kind == Tok::kStar ? NodeKind::kMul : NodeKind::kDiv;
      lhs = binary(k, lhs, factor());
    }
    return lhs;
  }

  Ast factor() {
    if (peek().kind == Tok::kMinus) {
      take();
      return unary(NodeKind::kNeg, factor());
    }
    Ast base = atom();
    if (peek().kind == Tok::kCaret) {
      take();
      if (peek().kind != Tok::kNumber) fail({Tok::kNumber}, "exponent must be a real literal");
      return power(base, take().number);
    }
    return base;
  }

  Ast atom() {
    const Token& tk = peek();
    switch (tk.kind) {
      case Tok::kNumber: take(); return raw_literal(tk.number);
      case Tok::kImag: take(); return raw_literal(cplx(0, tk.number));
      case Tok::kLParen: {
        take();
        Ast e = expr();
        if (peek().kind != Tok::kRParen) fail({Tok::kRParen});
        take();
        return e;
      }
      case Tok::kIdent: {
        for (int i = 0; i < 4; ++i)
          if (tk.text == kVarNames[i]) { take(); return var(i); }
        for (int i = 0; i < 2; ++i)
          if (tk.text == kParamNames[i]) { take(); return param(i); }
        NodeKind fk;
        if (tk.text == "ln") fk = NodeKind::kLn;
        else if (tk.text == "exp") fk = NodeKind::kExp;
        else if (tk.text == "sqrt") fk = NodeKind::kSqrt;
        else {
          throw Error(ErrorCode::kParse, "parse error at byte " + std::to_string(tk.offset) +
                                             ": unknown identifier '" + tk.text +
                                             "' (vocabulary: w, z, wb, zb, lam, eps, ln, exp, sqrt)");
        }
        take();
        if (peek().kind != Tok::kLParen) fail({Tok::kLParen});
        take();
        Ast arg = expr();
        if (peek().kind != Tok::kRParen) fail({Tok::kRParen});
        take();
        return unary(fk, arg);
      }
      default:
        fail({Tok::kNumber, Tok::kImag, Tok::kIdent, Tok::kLParen, Tok::kMinus});
    }
  }

  std::vector<Token> t_;
  size_t pos_ = 0;
};

void print_into(const Ast& a, std::string& out) {
  switch (a->kind) {
    case NodeKind::kVar: out += kVarNames[a->index]; return;
    case NodeKind::kParam: out += kParamNames[a->index]; return;
    case NodeKind::kLiteral:
      if (a->literal.imag() != 0) out += format_double(a->literal.imag()) + "i";
      else out += format_double(a->literal.real());
      return;
    case NodeKind::kNeg:
      out += "(-";
      print_into(a->lhs, out);
      out += ")";
      return;
    case NodeKind::kLn:
    case NodeKind::kExp:
    case NodeKind::kSqrt:
      out += a->kind == NodeKind::kLn ? "ln(" : a->kind == NodeKind::kExp ? "exp(" : "sqrt(";
      print_into(a->lhs, out);
      out += ")";
      return;
    case NodeKind::kPow:
      out += "(";
      print_into(a->lhs, out);
      out += " ^ " + format_double(a->exponent) + ")";
      return;
    default: {
      const char* op = a->kind == NodeKind::kAdd ? " + " : a->kind == NodeKind::kSub ? " - "
                       : a->kind == NodeKind::kMul ? " * " : " / ";
      out += "(";
      print_into(a->lhs, out);
      out += op;
      print_into(a->rhs, out);
      out += ")";
    }
  }
}

[[noreturn]] void eval_fail(const Ast& a, const std::string& what) {
  throw Error(ErrorCode::kEvaluation, what + " in subexpression " + print_canonical(a));
}

constexpr double kNearZero = 1e-13;

Jet eval_rec(const Ast& a, const Point4& at, int order, double eps) {
  switch (a->kind) {
    case NodeKind::kVar: return Jet::variable(at, order, a->index);
    case NodeKind::kParam: return Jet::constant(at, order, a->index == kLam ? at.lambda : eps);
    case NodeKind::kLiteral: return Jet::constant(at, order, a->literal);
    case NodeKind::kAdd: return eval_rec(a->lhs, at, order, eps) + eval_rec(a->rhs, at, order, eps);
    case NodeKind::kSub: return eval_rec(a->lhs, at, order, eps) - eval_rec(a->rhs, at, order, eps);
    case NodeKind::kMul: return eval_rec(a->lhs, at, order, eps) * eval_rec(a->rhs, at, order, eps);
    case NodeKind::kDiv: {
      Jet d = eval_rec(a->rhs, at, order, eps);
      if (std::abs(d.value()) < kNearZero) eval_fail(a->rhs, "division by a near-zero value");
      return eval_rec(a->lhs, at, order, eps) / d;
    }
    case NodeKind::kNeg: return -eval_rec(a->lhs, at, order, eps);
    case NodeKind::kExp: return exp(eval_rec(a->lhs, at, order, eps));
    case NodeKind::kLn: {
      Jet x = eval_rec(a->lhs, at, order, eps);
      if (std::abs(x.value()) < kNearZero) eval_fail(a->lhs, "logarithm of a near-zero value");
      return log(x);
    }
    case NodeKind::kSqrt: {
      Jet x = eval_rec(a->lhs, at, order, eps);
      if (std::abs(x.value()) < kNearZero) eval_fail(a->lhs, "square root at a branch point");
      return sqrt(x);
    }
    case NodeKind::kPow: {
      Jet x = eval_rec(a->lhs, at, order, eps);
      if (a->exponent != std::round(a->exponent) && std::abs(x.value()) < kNearZero)
        eval_fail(a->lhs, "fractional power at a branch point");
      return pow(x, a->exponent);
    }
  }
  throw Error(ErrorCode::kInternal, "unknown node kind");
}

// ---- manifold specs ----------------------------------------------------

const char* kSpherical = "(2/lam)*ln(w*wb/(1 - eps*w*wb*(1+z*zb)))";
const char* kProjective = "-(1/lam)*ln((1 - eps*w*wb - eps*z*zb)*(z*zb - eps))";

CoordBox box(double rlo, double rhi, double ilo, double ihi) { return {{rlo, rhi}, {ilo, ihi}}; }

std::array<CoordBox, 4> with_conjugates(CoordBox w, CoordBox z) {
  auto conj = [](CoordBox b) { return CoordBox{b.re, {-b.im.hi, -b.im.lo}}; };
  return {w, z, conj(w), conj(z)};
}

using nlohmann::json;

Range parse_range(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw Error(ErrorCode::kSchema, path + ": expected [lo, hi]");
  Range r{j[0].get<double>(), j[1].get<double>()};
  if (!(r.lo <= r.hi)) throw Error(ErrorCode::kSchema, path + ": lo must not exceed hi");
  return r;
}

CoordBox parse_box(const json& j, const std::string& path) {
  if (j.is_array()) return {parse_range(j, path), {0, 0}};
  if (!j.is_object()) throw Error(ErrorCode::kSchema, path + ": expected [lo, hi] or {\"re\": .., \"im\": ..}");
  CoordBox b{{0, 0}, {0, 0}};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "re") b.re = parse_range(it.value(), path + ".re");
    else if (it.key() == "im") b.im = parse_range(it.value(), path + ".im");
    else throw Error(ErrorCode::kSchema, path + "." + it.key() + ": unknown key");
  }
  return b;
}

}  // namespace

// ---- builders -----------------------------------------------------------

Ast var(int coord) {
  if (coord < 0 || coord > 3) throw Error(ErrorCode::kInvalidArgument, "variable index must be 0..3");
  auto n = make(NodeKind::kVar);
  n->index = coord;
  return n;
}

Ast param(int which) {
  if (which < 0 || which > 1) throw Error(ErrorCode::kInvalidArgument, "parameter index must be 0..1");
  auto n = make(NodeKind::kParam);
  n->index = which;
  return n;
}

Ast lit(cplx c) {
  Ast re, im;
  if (c.real() != 0 || c.imag() == 0) {
    re = raw_literal(std::abs(c.real()));
    if (c.real() < 0) re = unary(NodeKind::kNeg, re);
  }
  if (c.imag() != 0) {
    im = raw_literal(cplx(0, std::abs(c.imag())));
    if (!re) return c.imag() < 0 ? unary(NodeKind::kNeg, im) : im;
    return binary(c.imag() < 0 ? NodeKind::kSub : NodeKind::kAdd, re, im);
  }
  return re;
}

Ast binary(NodeKind kind, Ast a, Ast b) {
  if (kind != NodeKind::kAdd && kind != NodeKind::kSub && kind != NodeKind::kMul && kind != NodeKind::kDiv)
    throw Error(ErrorCode::kInvalidArgument, "not a binary operator");
  auto n = make(kind);
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

Ast unary(NodeKind kind, Ast a) {
  if (kind != NodeKind::kNeg && kind != NodeKind::kLn && kind != NodeKind::kExp && kind != NodeKind::kSqrt)
    throw Error(ErrorCode::kInvalidArgument, "not a unary operator");
  auto n = make(kind);
  n->lhs = std::move(a);
  return n;
}

Ast power(Ast base, double exponent) {
  if (!(exponent >= 0) || !std::isfinite(exponent))
    throw Error(ErrorCode::kInvalidArgument, "exponent must be a nonnegative finite literal");
  auto n = make(NodeKind::kPow);
  n->lhs = std::move(base);
  n->exponent = exponent;
  return n;
}

Ast parse(std::string_view source) { return Parser(lex(source)).parse_all(); }

std::string print_canonical(const Ast& ast) {
  std::string out;
  print_into(ast, out);
  return out;
}

bool structurally_equal(const Ast& a, const Ast& b) {
  if (a == b) return true;
  if (!a || !b || a->kind != b->kind) return false;
  switch (a->kind) {
    case NodeKind::kVar:
    case NodeKind::kParam: return a->index == b->index;
    case NodeKind::kLiteral: return a->literal == b->literal;
    case NodeKind::kPow: return a->exponent == b->exponent && structurally_equal(a->lhs, b->lhs);
    default:
      return structurally_equal(a->lhs, b->lhs) && structurally_equal(a->rhs, b->rhs);
  }
}

Jet eval_jet(const Ast& ast, const Point4& at, int order) {
  if (at.lambda == 0) throw Error(ErrorCode::kInvalidArgument, "lambda must be nonzero");
  return eval_rec(ast, at, order, at.lambda > 0 ? 1.0 : -1.0);
}

cplx eval_value(const Ast& ast, const Point4& at) { return eval_jet(ast, at, 0).value(); }

Ast conjugate_ast(const Ast& a) {
  switch (a->kind) {
    case NodeKind::kVar: return var(a->index ^ 2);
    case NodeKind::kParam: return a;
    case NodeKind::kLiteral:
      return a->literal.imag() != 0 ? unary(NodeKind::kNeg, a) : a;
    case NodeKind::kPow: return power(conjugate_ast(a->lhs), a->exponent);
    case NodeKind::kNeg:
    case NodeKind::kLn:
    case NodeKind::kExp:
    case NodeKind::kSqrt: return unary(a->kind, conjugate_ast(a->lhs));
    default: return binary(a->kind, conjugate_ast(a->lhs), conjugate_ast(a->rhs));
  }
}

Ast substitute(const Ast& a, const std::array<Ast, 4>& r) {
  switch (a->kind) {
    case NodeKind::kVar: return r[a->index] ? r[a->index] : a;
    case NodeKind::kParam:
    case NodeKind::kLiteral: return a;
    case NodeKind::kPow: return power(substitute(a->lhs, r), a->exponent);
    case NodeKind::kNeg:
    case NodeKind::kLn:
    case NodeKind::kExp:
    case NodeKind::kSqrt: return unary(a->kind, substitute(a->lhs, r));
    default: return binary(a->kind, substitute(a->lhs, r), substitute(a->rhs, r));
  }
}

bool depends_only_on(const Ast& a, int mask) {
  switch (a->kind) {
    case NodeKind::kVar: return mask >> a->index & 1;
    case NodeKind::kParam:
    case NodeKind::kLiteral: return true;
    default: return depends_only_on(a->lhs, mask) && (!a->rhs || depends_only_on(a->rhs, mask));
  }
}

// ---- manifolds ----------------------------------------------------------

Point4 ManifoldSpec::point(cplx w, cplx z) const { return {w, z, std::conj(w), std::conj(z), lambda}; }

Point4 ManifoldSpec::point(cplx w, cplx z, cplx wb, cplx zb) const { return {w, z, wb, zb, lambda}; }

DomainSampler::DomainSampler(const ManifoldSpec& spec, uint64_t seed) : spec_(&spec), rng_(seed) {}

double DomainSampler::uniform(const Range& r) {
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng_);
}

Point4 DomainSampler::next() {
  const auto& d = spec_->domain;
  cplx w(uniform(d[0].re), uniform(d[0].im));
  cplx z(uniform(d[1].re), uniform(d[1].im));
  if (spec_->reality) return spec_->point(w, z);
  cplx wb(uniform(d[2].re), uniform(d[2].im));
  cplx zb(uniform(d[3].re), uniform(d[3].im));
  return spec_->point(w, z, wb, zb);
}

ManifoldSpec make_manifold(std::string name, double lambda, std::string k_source,
                           std::array<CoordBox, 4> domain, bool reality) {
  if (lambda == 0 || !std::isfinite(lambda))
    throw Error(ErrorCode::kInvalidArgument, "lambda must be a finite nonzero number");
  ManifoldSpec s;
  s.name = std::move(name);
  s.lambda = lambda;
  s.eps = lambda > 0 ? 1.0 : -1.0;
  s.k_expr = parse(k_source);
  s.k_source = std::move(k_source);
  s.domain = domain;
  s.reality = reality;
  return s;
}

ManifoldSpec builtin_manifold(std::string_view name, std::optional<double> lambda) {
  CoordBox z = box(-0.5, 0.5, -0.5, 0.5);
  if (name == "s4") return make_manifold("s4", lambda.value_or(-1), kSpherical, with_conjugates(box(0.2, 0.6, -0.3, 0.3), z));
  if (name == "h4") return make_manifold("h4", lambda.value_or(1), kSpherical, with_conjugates(box(0.2, 0.6, -0.3, 0.3), z));
  if (name == "cp2") return make_manifold("cp2", lambda.value_or(-1), kProjective, with_conjugates(box(0.2, 0.6, -0.3, 0.3), z));
  // The ln argument is positive (K real) only where |w|^2 + |z|^2 > 1 and |z| < 1.
  if (name == "bergmann")
    return make_manifold("bergmann", lambda.value_or(1), kProjective,
                         with_conjugates(box(1.2, 1.6, -0.3, 0.3), box(-0.4, 0.4, -0.4, 0.4)));
  throw Error(ErrorCode::kInvalidArgument, "unknown builtin manifold '" + std::string(name) + "'");
}

ManifoldSpec manifold_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("$: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kSchema, "$: expected an object");
  static const std::set<std::string> known = {"name", "lambda", "eps", "K", "domain", "reality"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw Error(ErrorCode::kSchema, "$." + it.key() + ": unknown key");
  auto need = [&](const char* key) -> const json& {
    if (!j.contains(key)) throw Error(ErrorCode::kSchema, std::string("$.") + key + ": missing");
    return j[key];
  };
  const json& name = need("name");
  if (!name.is_string()) throw Error(ErrorCode::kSchema, "$.name: expected a string");
  const json& lam = need("lambda");
  if (!lam.is_number()) throw Error(ErrorCode::kSchema, "$.lambda: expected a number");
  double lambda = lam.get<double>();
  if (lambda == 0) throw Error(ErrorCode::kSchema, "$.lambda: must be nonzero");
  if (j.contains("eps")) {
    if (!j["eps"].is_number()) throw Error(ErrorCode::kSchema, "$.eps: expected a number");
    double eps = j["eps"].get<double>();
    if (eps != (lambda > 0 ? 1.0 : -1.0)) throw Error(ErrorCode::kSchema, "$.eps: must equal sign(lambda)");
  }
  const json& k = need("K");
  if (!k.is_string()) throw Error(ErrorCode::kSchema, "$.K: expected an expression string");
  bool reality = true;
  if (j.contains("reality")) {
    if (!j["reality"].is_boolean()) throw Error(ErrorCode::kSchema, "$.reality: expected a boolean");
    reality = j["reality"].get<bool>();
  }
  std::array<CoordBox, 4> dom = with_conjugates(box(0.2, 0.6, -0.3, 0.3), box(-0.5, 0.5, -0.5, 0.5));
  if (j.contains("domain")) {
    const json& d = j["domain"];
    if (!d.is_object()) throw Error(ErrorCode::kSchema, "$.domain: expected an object");
    bool has_wb = false, has_zb = false;
    for (auto it = d.begin(); it != d.end(); ++it) {
      int c = -1;
      for (int i = 0; i < 4; ++i)
        if (it.key() == kVarNames[i]) c = i;
      if (c < 0) throw Error(ErrorCode::kSchema, "$.domain." + it.key() + ": unknown coordinate");
      dom[c] = parse_box(it.value(), "$.domain." + it.key());
      has_wb |= c == 2;
      has_zb |= c == 3;
    }
    auto conj = with_conjugates(dom[0], dom[1]);
    if (!has_wb) dom[2] = conj[2];
    if (!has_zb) dom[3] = conj[3];
  }
  try {
    return make_manifold(name.get<std::string>(), lambda, k.get<std::string>(), dom, reality);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParse) throw Error(ErrorCode::kSchema, std::string("$.K: ") + e.what());
    throw;
  }
}

ManifoldSpec load_manifold(std::string_view ref) {
  for (const char* b : {"s4", "h4", "cp2", "bergmann"})
    if (ref == b) return builtin_manifold(ref);
  std::string path(ref.substr(0, 5) == "file:" ? ref.substr(5) : ref);
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read manifold file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return manifold_from_json(ss.str());
}

}  // namespace qkprz
