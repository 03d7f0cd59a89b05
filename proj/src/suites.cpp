// Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0.
#include "qkprz/suites.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "qkprz/geometry.hpp"
#include "qkprz/lax.hpp"
#include "qkprz/operators.hpp"
#include "qkprz/solver.hpp"
#include "qkprz/twistor.hpp"

namespace qkprz {
namespace {

using ojson = nlohmann::ordered_json;
constexpr double kUnmeasured = std::numeric_limits<double>::quiet_NaN();

// Per-sample measurements. A slot left NaN without an error was not measured at that sample.
struct Probe {
  std::vector<double> v;
  std::vector<std::string> err;
  ojson row;

  explicit Probe(size_t slots) : v(slots, kUnmeasured), err(slots) {}

  template <class F>
  void measure(size_t slot, F&& f) {
    try {
      v[slot] = f();
    } catch (const Error& e) {
      err[slot] = std::string(error_code_name(e.code())) + ": " + e.what();
    } catch (const std::exception& e) {
      err[slot] = std::string("internal: ") + e.what();
    }
  }
  void fail_unset(const std::string& why) {
    for (size_t s = 0; s < v.size(); ++s)
      if (std::isnan(v[s]) && err[s].empty()) err[s] = why;
  }
};

std::string describe(const std::exception& e) {
  if (auto* q = dynamic_cast<const Error*>(&e)) return std::string(error_code_name(q->code())) + ": " + e.what();
  return std::string("internal: ") + e.what();
}

// Runs fn(i, probe) for every sample on up to `jobs` threads. Results are stored by index, so the
// reduction that follows does not depend on scheduling.
template <class F>
std::vector<Probe> map_samples(int count, size_t slots, int jobs, F&& fn) {
  std::vector<Probe> out(size_t(count), Probe{slots});
  auto one = [&](int i) {
    try {
      fn(i, out[size_t(i)]);
    } catch (const std::exception& e) {
      out[size_t(i)].fail_unset(describe(e));
    }
  };
  jobs = std::clamp(jobs, 1, std::max(1, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) one(i);
    return out;
  }
  std::atomic<int> next{0};
  std::vector<std::jthread> pool;
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) one(i);
    });
  pool.clear();
  return out;
}

class Tally {
 public:
  Tally(std::string name, double tol, bool lower = false) : name_(std::move(name)), tol_(tol), lower_(lower) {
    value_ = lower ? std::numeric_limits<double>::infinity() : 0;
  }

  void add(double v) {
    if (std::isnan(v)) return;
    ++samples_;
    value_ = lower_ ? std::min(value_, v) : std::max(value_, v);
  }
  void error(const std::string& why) {
    ++errors_;
    if (first_error_.empty()) first_error_ = why;
  }
  void absorb(const std::vector<Probe>& probes, size_t slot) {
    for (const Probe& p : probes) {
      if (!p.err[slot].empty())
        error(p.err[slot]);
      else
        add(p.v[slot]);
    }
  }

  Check finish(std::string detail = {}) const {
    Check c;
    c.name = name_;
    c.tolerance = tol_;
    c.lower_bound = lower_;
    c.samples = samples_;
    c.errors = errors_;
    c.value = samples_ > 0 ? value_ : kUnmeasured;
    const bool within = lower_ ? value_ > tol_ : value_ <= tol_;
    c.passed = errors_ == 0 && samples_ > 0 && within;
    if (errors_ > 0) {
      std::ostringstream os;
      os << errors_ << " of " << errors_ + samples_ << " samples raised " << first_error_;
      detail = detail.empty() ? os.str() : detail + "; " + os.str();
    } else if (samples_ == 0 && detail.empty()) {
      detail = "nothing measured";
    }
    c.detail = std::move(detail);
    return c;
  }

 private:
  std::string name_;
  double tol_;
  bool lower_;
  double value_;
  int samples_ = 0, errors_ = 0;
  std::string first_error_;
};

Check single(std::string name, double value, double tol, bool lower = false, std::string detail = {}) {
  Tally t(std::move(name), tol, lower);
  t.add(value);
  return t.finish(std::move(detail));
}

Check failed_check(std::string name, double tol, const std::exception& e) {
  Tally t(std::move(name), tol);
  t.error(describe(e));
  return t.finish();
}

std::vector<Point4> draw_points(const ManifoldSpec& spec, uint64_t seed, int count) {
  DomainSampler ds(spec, seed);
  std::vector<Point4> pts;
  pts.reserve(size_t(count));
  for (int i = 0; i < count; ++i) {
    Point4 p = ds.next();
    p.lambda = spec.lambda;
    pts.push_back(p);
  }
  return pts;
}

double pick(double user, double fallback) { return user > 0 ? user : fallback; }

ojson complex_json(cplx c) { return ojson::array({c.real(), c.imag()}); }

bool is_builtin(const std::string& name) {
  return name == "s4" || name == "h4" || name == "cp2" || name == "bergmann";
}

// Family named on the command line, else the manifold's own, else the sphere family of matching sign.
std::string choose_family(const ManifoldSpec& spec, const std::string& requested) {
  if (!requested.empty()) {
    if (!is_builtin(requested)) throw Error(ErrorCode::kInvalidArgument, "unknown twistor family '" + requested + "'");
    return requested;
  }
  if (is_builtin(spec.name)) return spec.name;
  return spec.eps < 0 ? "s4" : "h4";
}

ManifoldSpec with_extra_term(const ManifoldSpec& spec, const std::string& term) {
  return make_manifold(spec.name + "+", spec.lambda, "(" + spec.k_source + ") + " + term, spec.domain, spec.reality);
}

// ---------------------------------------------------------------------------------------------------
// verify: field equation, curvature, conformal Laplacian, Lax pair.

void suite_verify(RunReport& rep, const ManifoldSpec& spec, const SuiteOptions& o) {
  constexpr int kLaplacianPoints = 20, kFunctions = 20;
  enum Slot : size_t { kPrz, kEinstein, kWeyl, kPhi, kScalar, kConformal, kLax, kSlots };
  const auto pts = draw_points(spec, o.seed, o.samples);
  auto probes = map_samples(o.samples, kSlots, o.jobs, [&](int i, Probe& pr) {
    const Point4& p = pts[size_t(i)];
    const FrameData f = frame_at(spec, p);
    pr.measure(kPrz, [&] { return prz_residual(f.bg).relative; });
    try {
      const CurvatureDecomp c = curvature_from_frame(f, ConnectionMethod::kStructureEquation);
      pr.v[kEinstein] = c.einstein_residual;
      pr.v[kWeyl] = c.weyl_norm;
      pr.v[kPhi] = c.phi_norm;
      pr.v[kScalar] = std::abs(c.scalar_r - 12.0 * spec.lambda);
    } catch (const std::exception& e) {
      for (size_t s : {kEinstein, kWeyl, kPhi, kScalar}) pr.err[s] = describe(e);
    }
    if (i < kLaplacianPoints) {
      pr.measure(kConformal, [&] {
        const LeeForms lee = lee_forms(f.bg);
        const HodgeStar star(f);
        double worst = 0;
        for (int j = 0; j < kFunctions; ++j) {
          const Jet fn = eval_jet(sample_test_function(o.seed * 1000 + uint64_t(100 * i + j)), p, 2);
          const cplx plain = plain_laplacian(star, fn);
          const cplx got = laplacian_weighted(f, lee, star, {fn, 0, -1});
          const cplx want = plain + 2.0 * spec.lambda * fn.value();
          worst = std::max(worst, std::abs(got - want) / std::max({1.0, std::abs(plain), std::abs(fn.value())}));
        }
        return worst;
      });
    }
    pr.measure(kLax, [&] {
      const LaxPair lp = lax_fields(f.bg);
      return lax_commutator(lp.l0, lp.l1).max_abs_value() / lax_scale(lp);
    });
  });
  const std::pair<const char*, double> checks[] = {
      {"prz_relative", pick(o.tol, 1e-9)}, {"einstein", 1e-8}, {"weyl_sd", 1e-8},     {"phi", 1e-8},
      {"scalar_curvature", 1e-9},          {"conformal_laplacian", 1e-8},             {"lax_commutator", 1e-8}};
  for (size_t s = 0; s < kSlots; ++s) {
    Tally t(checks[s].first, checks[s].second);
    t.absorb(probes, s);
    rep.checks.push_back(t.finish());
  }
}

// ---------------------------------------------------------------------------------------------------
// lax: commutator on the manifold and on a perturbation, closed-form reconstruction, contact form.

void suite_lax(RunReport& rep, const ManifoldSpec& spec, const SuiteOptions& o) {
  enum Slot : size_t { kComm, kRecon, kContact, kPertComm, kPertRecon, kSlots };
  const ManifoldSpec bent = with_extra_term(spec, "0.01*w*wb");
  const auto pts = draw_points(spec, o.seed, o.samples);

  // Reconstruction is measured against the commutator when it is resolvable, else against the fields.
  auto recon = [](const FrameData& f, const LaxPair& lp, const XiPolyVectorField& comm) {
    const double scale = lax_scale(lp);
    const double ref = comm.max_abs_value() > 1e-8 * scale ? 0.0 : scale;
    return reconstruction_residual(closed_form_coefficients(f.bg), comm, f, ref);
  };
  auto probes = map_samples(o.samples, kSlots, o.jobs, [&](int i, Probe& pr) {
    const Point4& p = pts[size_t(i)];
    try {
      const FrameData f = frame_at(spec, p);
      const LaxPair lp = lax_fields(f.bg);
      const auto comm = lax_commutator(lp.l0, lp.l1);
      const double scale = lax_scale(lp);
      pr.v[kComm] = comm.max_abs_value() / scale;
      pr.measure(kRecon, [&] { return recon(f, lp, comm); });
      pr.measure(kContact, [&] {
        double worst = 0;
        for (const auto* l : {&lp.l0, &lp.l1})
          for (cplx v : contact_contraction(*l, f.bg)) worst = std::max(worst, std::abs(v) / scale);
        return worst;
      });
    } catch (const std::exception& e) {
      for (size_t s : {kComm, kRecon, kContact})
        if (pr.err[s].empty() && std::isnan(pr.v[s])) pr.err[s] = describe(e);
    }
    const FrameData fb = frame_at(bent, p);
    const LaxPair lb = lax_fields(fb.bg);
    const auto cb = lax_commutator(lb.l0, lb.l1);
    pr.v[kPertComm] = cb.max_abs_value() / lax_scale(lb);
    pr.measure(kPertRecon, [&] { return recon(fb, lb, cb); });
  });
  const std::tuple<const char*, double, bool> checks[] = {{"lax_commutator", pick(o.tol, 1e-8), false},
                                                          {"closed_form_reconstruction", 1e-10, false},
                                                          {"contact_annihilates_lax", 1e-10, false},
                                                          {"perturbed_commutator", 1e-5, true},
                                                          {"perturbed_reconstruction", 1e-10, false}};
  for (size_t s = 0; s < kSlots; ++s) {
    Tally t(std::get<0>(checks[s]), std::get<1>(checks[s]), std::get<2>(checks[s]));
    t.absorb(probes, s);
    rep.checks.push_back(t.finish(s >= kPertComm ? "K + 0.01 w wb" : ""));
  }
}

// ---------------------------------------------------------------------------------------------------
// extract: K from the contact form along the twistor lines of the family.

void suite_extract(RunReport& rep, const ManifoldSpec& spec, const SuiteOptions& o) {
  enum Slot : size_t { kK, kTransverse, kRestriction, kIncidence, kInvolution, kSlots };
  const TwistorLineFamily fam = builtin_family(rep.family);
  const auto pts = draw_points(spec, o.seed, o.samples);
  auto probes = map_samples(o.samples, kSlots, o.jobs, [&](int i, Probe& pr) {
    const Point4& p = pts[size_t(i)];
    const Moduli m = fam.moduli_at(p);
    std::mt19937_64 rng(o.seed * 0x9e3779b97f4a7c15ULL + uint64_t(i));
    std::uniform_real_distribution<double> u(-2, 2);
    const std::array<cplx, 2> xi{cplx(u(rng), u(rng)), cplx(u(rng), u(rng))};
    pr.measure(kK, [&] {
      const Extraction e = extract_przanowski(fam, spec.lambda, m);
      const cplx closed = eval_value(spec.k_expr, p);
      const double diff = std::abs(e.K - closed);
      pr.v[kTransverse] = e.transverse;
      ojson mj = ojson::array();
      for (cplx c : m) mj.push_back(complex_json(c));
      pr.row = {{"moduli", mj}, {"K_extracted", e.K}, {"K_closed_form", closed.real()}, {"abs_diff", diff}};
      return diff;
    });
    if (!pr.err[kK].empty()) pr.err[kTransverse] = pr.err[kK];
    pr.measure(kRestriction, [&] { return line_restriction_residual(fam, m, xi); });
    pr.measure(kIncidence, [&] { return incidence_residual(fam, m, xi); });
    pr.measure(kInvolution, [&] {
      const InvolutionReport r = involution_reality_check(fam, m);
      return std::max(r.setwise, r.involutive);
    });
  });
  const std::pair<const char*, double> checks[] = {{"K_extracted_vs_closed_form", pick(o.tol, 1e-10)},
                                                   {"transverse_contact", 1e-12},
                                                   {"line_restriction", 1e-12},
                                                   {"incidence", 1e-12},
                                                   {"involution_reality", 1e-12}};
  for (size_t s = 0; s < kSlots; ++s) {
    Tally t(checks[s].first, checks[s].second);
    t.absorb(probes, s);
    rep.checks.push_back(t.finish());
  }
  ojson rows = ojson::array();
  for (const Probe& pr : probes)
    if (!pr.row.is_null()) rows.push_back(pr.row);
  rep.tables["extraction"] = rows;
}

// ---------------------------------------------------------------------------------------------------
// recursion: Laurent coefficients of a twistor function.

RecursionState sphere_psi0() { return {0, 0, parse("wb*zb")}; }
RecursionState sphere_psi1() { return {0, 1, parse("(eps*lam/2)*(1 - eps*w*wb*(1+z*zb))^2")}; }

Point4 patch_corner(const ManifoldSpec& spec) {
  auto mid = [](const Range& r) { return 0.5 * (r.lo + r.hi); };
  Point4 c = spec.point(cplx(mid(spec.domain[0].re) - 0.05, mid(spec.domain[0].im) + 0.05),
                        cplx(mid(spec.domain[1].re) + 0.1, mid(spec.domain[1].im) - 0.1));
  c.lambda = spec.lambda;
  return c;
}

void suite_recursion(RunReport& rep, const ManifoldSpec& spec, const SuiteOptions& o) {
  const bool sphere = rep.family == "s4" || rep.family == "h4";
  const auto pts = draw_points(spec, o.seed, o.samples);
  if (sphere) {
    enum Slot : size_t { kRec, kInt0, kInt1, kLiteral, kSlots };
    const RecursionState lit0{0, 0, parse("w")}, lit1{0, 1, parse("wb*zb")};
    auto probes = map_samples(o.samples, kSlots, o.jobs, [&](int i, Probe& pr) {
      const Point4& p = pts[size_t(i)];
      pr.measure(kRec, [&] { return recursion_residual(spec, p, sphere_psi0(), sphere_psi1()); });
      pr.measure(kInt0, [&] { return std::abs(integrability_residual(spec, p, sphere_psi0())); });
      pr.measure(kInt1, [&] { return std::abs(integrability_residual(spec, p, sphere_psi1())); });
      pr.measure(kLiteral, [&] { return recursion_residual(spec, p, lit0, lit1); });
    });
    Tally rec("recursion_relation", pick(o.tol, 1e-9)), int0("integrability_psi0", 1e-8),
        int1("integrability_psi1", 1e-8);
    rec.absorb(probes, kRec);
    int0.absorb(probes, kInt0);
    int1.absorb(probes, kInt1);
    rep.checks.push_back(rec.finish("psi0 = wb zb, psi1 = (eps lam/2)(1 - eps w wb (1 + z zb))^2"));
    rep.checks.push_back(int0.finish());
    rep.checks.push_back(int1.finish());
    double lit = 0;
    for (const Probe& pr : probes)
      if (pr.err[kLiteral].empty() && !std::isnan(pr.v[kLiteral])) lit = std::max(lit, pr.v[kLiteral]);
    rep.observations.push_back({"literal_pair_w_wbzb", lit,
                                "recursion residual of (psi0, psi1) = (w, wb zb) at k = 0; this pair is not a "
                                "solution, the covariant pair above is"});

    // Integrate psi1 from psi0 on a holomorphic slice and compare up to the homogeneous solution.
    const RecursionPatch patch{patch_corner(spec), cplx(0.03, 0.01), cplx(-0.01, 0.03), 6, 6, 6};
    try {
      const RecursionResult r = recursion_step(spec, sphere_psi0(), patch);
      const cplx c = eval_value(sphere_psi1().psi, patch.corner);
      Tally rec_step("recursion_step_recovery", 1e-6);
      ojson rows = ojson::array();
      for (int i = 0; i < patch.nw; ++i)
        for (int j = 0; j < patch.nz; ++j) {
          const cplx exact = eval_value(sphere_psi1().psi, patch.node(i, j));
          const cplx got = r.at(i, j) + c * r.homogeneous[size_t(i) * patch.nz + j];
          rec_step.add(std::abs(got - exact) / std::max(1e-300, std::abs(exact)));
          rows.push_back({{"i", i}, {"j", j}, {"psi1_integrated", complex_json(got)}, {"psi1_exact", complex_json(exact)}});
        }
      rep.checks.push_back(rec_step.finish("relative, 6 x 6 slice"));
      rep.checks.push_back(single("recursion_step_curl", r.curl, 1e-8));
      rep.tables["recursion_slice"] = rows;
    } catch (const std::exception& e) {
      rep.checks.push_back(failed_check("recursion_step_recovery", 1e-6, e));
    }
    return;
  }

  // Flag-manifold family: no closed-form series; check the seeds and the consistency of one step.
  const char* seeds[] = {"wb", "wb*zb", "w*z"};
  auto probes = map_samples(o.samples, 3, o.jobs, [&](int i, Probe& pr) {
    for (size_t s = 0; s < 3; ++s)
      pr.measure(s, [&] {
        return std::abs(integrability_residual(spec, pts[size_t(i)], RecursionState{0, 0, parse(seeds[s])}));
      });
  });
  Tally seed_tally("integrability_seeds", pick(o.tol, 1e-8));
  for (size_t s = 0; s < 3; ++s) seed_tally.absorb(probes, s);
  rep.checks.push_back(seed_tally.finish("weight (0, 0) seeds wb, wb zb, w z"));
  try {
    const RecursionPatch patch{patch_corner(spec), cplx(0.01, 0.005), cplx(-0.005, 0.01), 6, 6, 6};
    const RecursionResult r = recursion_step(spec, RecursionState{0, 0, parse("wb*zb")}, patch);
    rep.checks.push_back(single("recursion_step_curl", r.curl, 1e-8, false, "seed wb zb, 6 x 6 slice"));
  } catch (const std::exception& e) {
    rep.checks.push_back(failed_check("recursion_step_curl", 1e-8, e));
  }
  rep.observations.push_back({"closed_form_series", 0, "no closed-form Laurent series for the flag family"});
}

// ---------------------------------------------------------------------------------------------------
// perturb: linearised equation, gauge kernel and the contour formula.

struct GaugeGenerator {
  const char* dw;
  const char* dz;
};
constexpr GaugeGenerator kGenerators[] = {
    {"0", "1"}, {"w", "0"}, {"0", "z"}, {"w*w + 0.5*z", "z*z + 1"}, {"w*z + 2i*w", "0.3*z*z*z"}};

void suite_perturb(RunReport& rep, const ManifoldSpec& spec, const SuiteOptions& o) {
  if (o.order < 1 || o.order > 30) throw Error(ErrorCode::kInvalidArgument, "--order must lie in [1, 30]");
  if (!(o.contour_radius > 0)) throw Error(ErrorCode::kInvalidArgument, "--contour-radius must be positive");
  constexpr int kNodes = 64, kOracleSamples = 10;
  const int n = std::min(o.samples, 50);
  const double r = o.contour_radius;
  enum Slot : size_t { kLin, kLap, kFd, kLaurent, kSlots };
  const auto pts = draw_points(spec, o.seed, n);
  auto probes = map_samples(n, kSlots, o.jobs, [&](int i, Probe& pr) {
    const Point4& p = pts[size_t(i)];
    const FrameData f = frame_at(spec, p);
    const auto& g = kGenerators[size_t(i) % std::size(kGenerators)];
    const Ast dw = parse(g.dw), dz = parse(g.dz);
    const Jet dK = gauge_kernel_element(spec, p, dw, dz);
    // Scale: the operator applied to the K_w dw piece alone.
    const Jet kw_part = (f.bg.Kw * eval_jet(dw, p, 3)).truncated(2);
    const double scale = std::max({1.0, std::abs(lin_prz_apply(f.bg, kw_part)), dK.max_abs()});
    pr.measure(kLin, [&] { return std::abs(lin_prz_apply(f.bg, dK)) / scale; });
    pr.measure(kLap, [&] {
      const cplx lap = laplacian_weighted(f, lee_forms(f.bg), HodgeStar(f), {dK, 0, 1});
      return std::abs(lap) / (scale * std::max(1.0, std::abs(2.0 / f.bg.tildeK.value())));
    });
    if (i < kOracleSamples) {
      pr.measure(kFd, [&] {
        const Jet K = eval_jet(spec.k_expr, p, 2);
        const Jet t = eval_jet(sample_test_function(o.seed * 1000 + 900 + uint64_t(i)), p, 2);
        const double h = 1e-5;
        const cplx plus = prz_residual(background_from_jet(K + t * cplx(h), spec.lambda)).residual;
        const cplx minus = prz_residual(background_from_jet(K - t * cplx(h), spec.lambda)).residual;
        const cplx lin = lin_prz_apply(background_from_jet(K, spec.lambda), t);
        return std::abs((plus - minus) / (2 * h) - lin) / std::max(1.0, std::abs(lin));
      });
    }
    // Laurent series in xi whose linear coefficient is the gauge variation.
    pr.measure(kLaurent, [&] {
      std::mt19937_64 rng(o.seed * 31 + uint64_t(i));
      std::uniform_real_distribution<double> u(-1, 1);
      std::vector<cplx> c(size_t(2 * o.order + 1));
      for (cplx& x : c) x = cplx(u(rng), u(rng));
      c[size_t(o.order + 1)] = dK.value();
      double size = 1;
      for (int k = -o.order; k <= o.order; ++k)
        size = std::max(size, std::abs(c[size_t(k + o.order)]) * std::pow(r, k - 1));
      auto psi = [&](cplx x) {
        cplx s = 0;
        for (int k = -o.order; k <= o.order; ++k) s += c[size_t(k + o.order)] * std::pow(x, k);
        return s;
      };
      return std::abs(contour_extract(psi, r, kNodes) - dK.value()) / size;
    });
  });
  const std::pair<const char*, double> checks[] = {{"gauge_kernel_linearised", pick(o.tol, 1e-8)},
                                                   {"gauge_kernel_weighted_laplacian", 1e-8},
                                                   {"linearisation_fd_oracle", 1e-6},
                                                   {"contour_gauge_variation", 1e-12}};
  for (size_t s = 0; s < kSlots; ++s) {
    Tally t(checks[s].first, checks[s].second);
    t.absorb(probes, s);
    rep.checks.push_back(t.finish());
  }

  // Contour formula on functions with known coefficients.
  try {
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<cplx> c(size_t(2 * o.order + 1));
    for (cplx& x : c) x = cplx(u(rng), u(rng));
    double size = 1;
    for (size_t k = 0; k < c.size(); ++k) size = std::max(size, std::abs(c[k]) * std::pow(r, double(k) - 1));
    auto poly = [&](cplx x) {
      cplx s = 0;
      for (size_t k = c.size(); k-- > 0;) s = s * x + c[k];
      return s;
    };
    rep.checks.push_back(single("contour_polynomial", std::abs(contour_extract(poly, r, kNodes) - c[1]) / size, 1e-13,
                                false, "degree " + std::to_string(c.size() - 1) + ", N = 64"));
  } catch (const std::exception& e) {
    rep.checks.push_back(failed_check("contour_polynomial", 1e-13, e));
  }
  try {
    // Linear term of the Cauchy product of sum x^j / j! and sum (x/2)^j: 1/0! * 1/2 + 1/1! * 1.
    const double oracle = 0.5 + 1.0;
    const cplx got = contour_extract([](cplx x) { return std::exp(x) / (1.0 - x / 2.0); }, r, kNodes);
    rep.checks.push_back(single("contour_analytic", std::abs(got - oracle), 1e-12, false, "exp(xi) / (1 - xi/2)"));
  } catch (const std::exception& e) {
    rep.checks.push_back(failed_check("contour_analytic", 1e-12, e));
  }
}

// ---------------------------------------------------------------------------------------------------
// solve: Newton on the reduced grid and the discretisation order.

void suite_solve(RunReport& rep, const ManifoldSpec& spec, const SuiteOptions& o) {
  const double tol = pick(o.tol, 1e-11);
  GridSpec g;
  try {
    g = default_grid(spec, o.grid);
  } catch (const std::exception& e) {
    rep.checks.push_back(failed_check("grid", 0, e));
    return;
  }
  const GridField ref = sample_reference(g, spec);
  const GridField start = perturb(ref, g, o.noise, o.seed);
  // The iterates do not depend on the budget, so one generous run answers both the tolerance and the
  // iteration-count question.
  const NewtonOptions opt{tol, std::max(o.max_iter, 50), o.jobs};
  NewtonReport nr;
  GridField solution;
  bool have_solution = false;
  std::string failure;
  try {
    NewtonResult res = newton_solve(g, start, spec, opt);
    nr = res.report;
    solution = std::move(res.field);
    have_solution = true;
  } catch (const SolverError& e) {
    nr = e.report();
    failure = describe(e);
  } catch (const std::exception& e) {
    failure = describe(e);
  }
  const double final_res = nr.residuals.empty() ? kUnmeasured : nr.residuals.back();
  if (nr.residuals.empty()) {
    rep.checks.push_back(single("newton_residual", std::numeric_limits<double>::infinity(), tol, false, failure));
  } else {
    rep.checks.push_back(single("newton_residual", have_solution ? final_res : std::max(final_res, 2 * tol), tol,
                                false, failure));
  }
  rep.checks.push_back(single("newton_iterations", have_solution ? nr.iterations : std::numeric_limits<double>::infinity(),
                              o.max_iter, false, "iterations to reach the residual tolerance"));
  rep.checks.push_back(single("newton_order_lower", nr.order_estimate, 1.8, true));
  rep.checks.push_back(single("newton_order_upper", nr.order_estimate, 2.2));
  rep.observations.push_back({"newton_iterations_taken", double(nr.iterations), have_solution ? "" : failure});
  rep.observations.push_back({"newton_deviation_from_reference", nr.max_deviation, ""});
  rep.tables["newton"] = {{"residuals", nr.residuals}, {"step_lengths", nr.step_lengths},
                          {"iterations", nr.iterations}, {"order_estimate", nr.order_estimate},
                          {"max_deviation", nr.max_deviation}, {"converged", nr.converged}};

  if (have_solution) {
    std::ostringstream csv;
    csv << "rho,sigma,K_value\n";
    char buf[96];
    for (int i = 0; i < g.n; ++i)
      for (int j = 0; j < g.n; ++j) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17Lg\n", g.rho(i), g.sigma(j), solution.at(i, j));
        csv << buf;
      }
    rep.solution_csv = csv.str();
  }

  // Two nested grids from the exact start.
  try {
    const StudyTable t = convergence_study(spec, {o.grid, 2 * o.grid - 1}, 0, o.seed, opt);
    rep.checks.push_back(single("discretisation_order_lower", t.deviation_order, 1.8, true));
    rep.checks.push_back(single("discretisation_order_upper", t.deviation_order, 2.2));
    rep.checks.push_back(single("residual_order_lower", t.residual_order, 1.8, true));
    rep.checks.push_back(single("residual_order_upper", t.residual_order, 2.2));
    ojson rows = ojson::array();
    for (const StudyRow& row : t.rows)
      rows.push_back({{"n", row.n}, {"h", row.h}, {"exact_residual", row.exact_residual},
                      {"deviation", row.deviation}, {"exact_residual_all", row.exact_residual_all},
                      {"deviation_all", row.deviation_all}, {"iterations", row.iterations},
                      {"final_residual", row.final_residual}});
    rep.tables["study"] = {{"rows", rows}, {"deviation_order", t.deviation_order},
                           {"residual_order", t.residual_order}};
  } catch (const std::exception& e) {
    rep.checks.push_back(failed_check("discretisation_order", 2.2, e));
  }
}

using SuiteFn = void (*)(RunReport&, const ManifoldSpec&, const SuiteOptions&);

SuiteFn find_suite(std::string_view name) {
  if (name == "verify") return suite_verify;
  if (name == "lax") return suite_lax;
  if (name == "extract") return suite_extract;
  if (name == "recursion") return suite_recursion;
  if (name == "perturb") return suite_perturb;
  if (name == "solve") return suite_solve;
  return nullptr;
}

void validate(const SuiteOptions& o) {
  if (o.samples < 1) throw Error(ErrorCode::kInvalidArgument, "--samples must be positive");
  if (o.grid < 5) throw Error(ErrorCode::kInvalidArgument, "--grid needs at least 5 nodes");
  if (o.jobs < 1) throw Error(ErrorCode::kInvalidArgument, "--jobs must be positive");
  if (o.max_iter < 1) throw Error(ErrorCode::kInvalidArgument, "iteration budget must be positive");
  if (!(o.noise >= 0)) throw Error(ErrorCode::kInvalidArgument, "--noise must be nonnegative");
  if (o.tol < 0 || !std::isfinite(o.tol)) throw Error(ErrorCode::kInvalidArgument, "--tol must be a finite nonnegative number");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"verify", "lax", "extract", "recursion", "perturb", "solve"};
  return names;
}

bool RunReport::passed() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

std::vector<std::string> RunReport::failing() const {
  std::vector<std::string> out;
  for (const Check& c : checks)
    if (!c.passed) out.push_back(c.name);
  return out;
}

ojson RunReport::to_json() const {
  auto num = [](double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); };
  ojson j;
  j["command"] = command;
  j["manifold"] = {{"name", manifold.name},   {"lambda", manifold.lambda}, {"eps", manifold.eps},
                   {"K", manifold.k_source}, {"reality", manifold.reality}};
  j["family"] = family;
  j["seed"] = options.seed;
  j["parameters"] = {{"samples", options.samples},
                     {"tol", options.tol},
                     {"grid", options.grid},
                     {"noise", options.noise},
                     {"contour_radius", options.contour_radius},
                     {"order", options.order},
                     {"jobs", options.jobs},
                     {"max_iter", options.max_iter}};
  ojson cs = ojson::array();
  for (const Check& c : checks)
    cs.push_back({{"name", c.name},
                  {"max_residual", num(c.value)},
                  {"tolerance", c.tolerance},
                  {"bound", c.lower_bound ? "lower" : "upper"},
                  {"passed", c.passed},
                  {"samples", c.samples},
                  {"errors", c.errors},
                  {"detail", c.detail}});
  j["checks"] = cs;
  ojson os = ojson::array();
  for (const Observation& o : observations) os.push_back({{"name", o.name}, {"value", num(o.value)}, {"detail", o.detail}});
  j["observations"] = os;
  j["tables"] = tables;
  j["passed"] = passed();
  j["failing"] = failing();
  j["wall_time_s"] = wall_time;
  return j;
}

std::string RunReport::summary() const {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "qkprz %s  manifold=%s  family=%s  lambda=%g  seed=%llu\n", command.c_str(),
                manifold.name.c_str(), family.c_str(), manifold.lambda, static_cast<unsigned long long>(options.seed));
  os << line;
  std::snprintf(line, sizeof line, "%-42s %-11s %-3s %-10s %7s  %s\n", "check", "value", "", "tolerance", "samples",
                "result");
  os << line;
  for (const Check& c : checks) {
    std::snprintf(line, sizeof line, "%-42s %-11s %-3s %-10s %7d  %s", c.name.c_str(), fmt(c.value).c_str(),
                  c.lower_bound ? ">" : "<=", fmt(c.tolerance).c_str(), c.samples, c.passed ? "pass" : "FAIL");
    os << line;
    if (!c.passed && !c.detail.empty()) os << "  (" << c.detail << ")";
    os << '\n';
  }
  for (const Observation& o : observations) {
    std::snprintf(line, sizeof line, "  note %-37s %-11s", o.name.c_str(), fmt(o.value).c_str());
    os << line;
    if (!o.detail.empty()) os << "  " << o.detail;
    os << '\n';
  }
  std::snprintf(line, sizeof line, "overall: %s  (%.2f s)\n", passed() ? "PASS" : "FAIL", wall_time);
  os << line;
  return os.str();
}

RunReport run_suite(std::string_view command, const ManifoldSpec& spec, const SuiteOptions& options) {
  validate(options);
  const auto t0 = std::chrono::steady_clock::now();
  RunReport rep;
  rep.command = std::string(command);
  rep.manifold = spec;
  rep.options = options;
  rep.family = choose_family(spec, options.family);

  if (command == "report") {
    for (const std::string& name : suite_names()) {
      RunReport sub;
      sub.family = rep.family;
      find_suite(name)(sub, spec, options);
      for (Check& c : sub.checks) {
        c.name = name + "." + c.name;
        rep.checks.push_back(std::move(c));
      }
      for (Observation& o : sub.observations) {
        o.name = name + "." + o.name;
        rep.observations.push_back(std::move(o));
      }
      if (!sub.tables.empty()) rep.tables[name] = std::move(sub.tables);
      if (!sub.solution_csv.empty()) rep.solution_csv = std::move(sub.solution_csv);
    }
  } else {
    SuiteFn fn = find_suite(command);
    if (!fn) throw Error(ErrorCode::kInvalidArgument, "unknown command '" + std::string(command) + "'");
    fn(rep, spec, options);
  }
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace qkprz
