// Copyright 2026 The qkprz Authors. Licensed under the Apache License, Version 2.0.
#include "qkprz/solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include "qkprz/geometry.hpp"
#include "qkprz/operators.hpp"

namespace qkprz {
namespace {

constexpr double kDomainMargin = 0.1;
constexpr double kImagTol = 1e-12;
constexpr int kMaxHalvings = 6;
constexpr double kRateFloor = 1e-12;

// Runs body(i) for i in [0, count), split into contiguous chunks over `jobs` threads.
template <class F>
void parallel_for(int count, int jobs, F&& body) {
  jobs = std::clamp(jobs, 1, std::max(1, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(jobs);
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&, t] {
      try {
        for (int i = t * count / jobs; i < (t + 1) * count / jobs; ++i) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Domain margins of the reduced closed forms, positive inside.
double margin(const ManifoldSpec& spec, double rho, double sigma) {
  const double e = spec.eps;
  if (spec.name == "s4" || spec.name == "h4") return 1 - e * rho * (1 + sigma);
  if (spec.name == "cp2" || spec.name == "bergmann") {
    const double a = 1 - e * rho - e * sigma, b = sigma - e;
    // The logarithm needs a * b > 0; both factors stay away from zero.
    return a * b > 0 ? std::min(std::abs(a), std::abs(b)) : -1;
  }
  return 1;
}

struct NodeLinearisation {
  double residual = 0;
  std::array<double, 9> dres{};  // offsets (di, dj) in row-major order over {-1, 0, 1}^2
};

// Reduced-jet weights of the value at offset (di, dj).
ReducedJet stencil_weights(const GridSpec& g, int di, int dj, double rho, double sigma) {
  const double hr = g.h_rho(), hs = g.h_sig();
  ReducedJet w{rho, sigma};
  if (di == 0 && dj == 0) {
    w.k = 1;
    w.krr = -2 / (hr * hr);
    w.kss = -2 / (hs * hs);
  } else if (dj == 0) {
    w.kr = di / (2 * hr);
    w.krr = 1 / (hr * hr);
  } else if (di == 0) {
    w.ks = dj / (2 * hs);
    w.kss = 1 / (hs * hs);
  } else {
    w.krs = di * dj / (4 * hr * hs);
  }
  return w;
}

double real_residual(const Background& bg, const Point4& at) {
  const cplx r = prz_residual(bg).residual;
  if (std::abs(r.imag()) > kImagTol * std::max(1.0, std::abs(r.real()))) {
    std::ostringstream os;
    os << "residual at rho=" << std::norm(at.w) << ", sigma=" << std::norm(at.z) << " has imaginary part "
       << r.imag();
    throw Error(ErrorCode::kReductionInconsistency, os.str());
  }
  return r.real();
}

NodeLinearisation linearise(const GridField& f, const GridSpec& g, int i, int j) {
  const ReducedJet r = reduced_jet_at(f, g, i, j);
  const Background bg = background_from_jet(lift_reduced_jet(r, g.lambda), g.lambda);
  NodeLinearisation out;
  out.residual = real_residual(bg, bg.at);
  int s = 0;
  for (int di = -1; di <= 1; ++di)
    for (int dj = -1; dj <= 1; ++dj, ++s)
      out.dres[s] = lin_prz_apply(bg, lift_reduced_jet(stencil_weights(g, di, dj, r.rho, r.sigma), g.lambda)).real();
  return out;
}

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = double(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t k = 0; k < x.size(); ++k) {
    sx += x[k];
    sy += y[k];
    sxx += x[k] * x[k];
    sxy += x[k] * y[k];
  }
  const double den = n * sxx - sx * sx;
  return den != 0 ? (n * sxy - sx * sy) / den : 0.0;
}

}  // namespace

Point4 GridSpec::point(int i, int j) const {
  const double w = std::sqrt(rho(i)), z = std::sqrt(sigma(j));
  return Point4{w, z, w, z, lambda};
}

GridSpec default_grid(const ManifoldSpec& spec, int n) {
  GridSpec g;
  g.n = n;
  g.lambda = spec.lambda;
  g.eps = spec.eps;
  if (spec.name == "bergmann") {
    g.rho0 = 1.3;
    g.rho1 = 1.5;
    g.sig0 = 0.1;
    g.sig1 = 0.3;
  }
  validate_grid(g, spec);
  return g;
}

void validate_grid(const GridSpec& g, const ManifoldSpec& spec) {
  if (g.n < 3) throw Error(ErrorCode::kInvalidArgument, "grid needs at least 3 nodes per axis");
  if (!(g.rho0 > 0 && g.sig0 > 0 && g.rho1 > g.rho0 && g.sig1 > g.sig0))
    throw Error(ErrorCode::kInvalidArgument, "grid box needs 0 < rho0 < rho1 and 0 < sig0 < sig1");
  if (g.lambda != spec.lambda) throw Error(ErrorCode::kInvalidArgument, "grid lambda differs from the manifold's");
  for (double r : {g.rho0, g.rho1})
    for (double s : {g.sig0, g.sig1})
      if (margin(spec, r, s) < kDomainMargin) {
        std::ostringstream os;
        os << "grid corner (" << r << ", " << s << ") is within " << kDomainMargin << " of the " << spec.name
           << " domain boundary";
        throw Error(ErrorCode::kInvalidArgument, os.str());
      }
}

Jet lift_reduced_jet(const ReducedJet& r, double lambda) {
  if (!(r.rho > 0) || !(r.sigma > 0))
    throw Error(ErrorCode::kSingularPoint, "reduced coordinates degenerate on the axes rho = 0 or sigma = 0");
  const double w = std::sqrt(r.rho), z = std::sqrt(r.sigma);
  const Point4 p{w, z, w, z, lambda};
  constexpr int o = 2;
  const Jet dr = Jet::variable(p, o, kW) * Jet::variable(p, o, kWb) - cplx(r.rho);
  const Jet ds = Jet::variable(p, o, kZ) * Jet::variable(p, o, kZb) - cplx(r.sigma);
  Jet K = Jet::constant(p, o, r.k);
  K += dr * cplx(r.kr) + ds * cplx(r.ks);
  K += dr * dr * cplx(0.5 * r.krr) + dr * ds * cplx(r.krs) + ds * ds * cplx(0.5 * r.kss);
  return K;
}

ReducedJet reduced_jet_at(const GridField& f, const GridSpec& g, int i, int j) {
  if (g.boundary(i, j)) throw Error(ErrorCode::kInvalidArgument, "reduced jet needs an interior node");
  const GridValue hr = g.h_rho(), hs = g.h_sig();
  ReducedJet r{g.rho(i), g.sigma(j)};
  r.k = double(f.at(i, j));
  r.kr = double((f.at(i + 1, j) - f.at(i - 1, j)) / (2 * hr));
  r.ks = double((f.at(i, j + 1) - f.at(i, j - 1)) / (2 * hs));
  r.krr = double((f.at(i + 1, j) - 2 * f.at(i, j) + f.at(i - 1, j)) / (hr * hr));
  r.kss = double((f.at(i, j + 1) - 2 * f.at(i, j) + f.at(i, j - 1)) / (hs * hs));
  r.krs = double((f.at(i + 1, j + 1) - f.at(i + 1, j - 1) - f.at(i - 1, j + 1) + f.at(i - 1, j - 1)) / (4 * hr * hs));
  return r;
}

GridField sample_reference(const GridSpec& g, const ManifoldSpec& spec) {
  GridField f{g.n, std::vector<GridValue>(size_t(g.n) * g.n)};
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) {
      const cplx v = eval_value(spec.k_expr, g.point(i, j));
      if (!std::isfinite(v.real()) || std::abs(v.imag()) > kImagTol * std::max(1.0, std::abs(v.real())))
        throw Error(ErrorCode::kEvaluation, "reference K is not real on the grid");
      f.K[g.index(i, j)] = v.real();
    }
  return f;
}

GridField perturb(const GridField& f, const GridSpec& g, double amplitude, uint64_t seed) {
  GridField out = f;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      if (!g.boundary(i, j)) out.K[g.index(i, j)] += u(rng);
  return out;
}

double max_interior_deviation(const GridField& a, const GridField& b, const GridSpec& g) {
  double d = 0;
  for (int i = 1; i < g.n - 1; ++i)
    for (int j = 1; j < g.n - 1; ++j) d = std::max(d, double(std::abs(a.at(i, j) - b.at(i, j))));
  return d;
}

std::vector<double> grid_residual(const GridField& f, const GridSpec& g, int jobs) {
  if (f.n != g.n || f.K.size() != size_t(g.n) * g.n)
    throw Error(ErrorCode::kInvalidArgument, "field does not match the grid");
  std::vector<double> res(f.K.size(), 0.0);
  const int m = g.n - 2;
  parallel_for(m * m, jobs, [&](int k) {
    const int i = 1 + k / m, j = 1 + k % m;
    const Background bg = background_from_jet(lift_reduced_jet(reduced_jet_at(f, g, i, j), g.lambda), g.lambda);
    res[g.index(i, j)] = real_residual(bg, bg.at);
  });
  return res;
}

double max_abs(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

NewtonResult newton_solve(const GridSpec& g, const GridField& initial, const ManifoldSpec& reference,
                          const NewtonOptions& opt) {
  validate_grid(g, reference);
  if (initial.n != g.n || initial.K.size() != size_t(g.n) * g.n)
    throw Error(ErrorCode::kInvalidArgument, "initial field does not match the grid");
  for (GridValue v : initial.K)
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "initial field has non-finite values");

  const GridField ref = sample_reference(g, reference);
  GridField f = initial;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      if (g.boundary(i, j)) f.K[g.index(i, j)] = ref.at(i, j);

  const int m = g.n - 2, unknowns = m * m;
  auto unknown = [m](int i, int j) { return (i - 1) * m + (j - 1); };

  NewtonReport rep;
  double r = max_abs(grid_residual(f, g, opt.jobs));
  rep.residuals.push_back(r);
  auto fail = [&](ErrorCode code, const std::string& why) {
    rep.max_deviation = max_interior_deviation(f, ref, g);
    std::ostringstream os;
    os << why << "; residual trace:";
    for (double x : rep.residuals) os << ' ' << x;
    throw SolverError(code, os.str(), rep);
  };

  while (r >= opt.tol) {
    if (rep.iterations >= opt.max_iter) fail(ErrorCode::kNotConverged, "Newton iteration limit reached");
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(unknowns, unknowns);
    Eigen::VectorXd F(unknowns);
    parallel_for(unknowns, opt.jobs, [&](int k) {
      const int i = 1 + k / m, j = 1 + k % m;
      const NodeLinearisation lin = linearise(f, g, i, j);
      F(k) = lin.residual;
      int s = 0;
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj, ++s)
          if (!g.boundary(i + di, j + dj)) J(k, unknown(i + di, j + dj)) = lin.dres[s];
    });
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14)) fail(ErrorCode::kSingularJacobian, "Jacobian is numerically singular");
    const Eigen::VectorXd delta = lu.solve(-F);

    double step = 1;
    GridField trial = f;
    double rt = 0;
    for (int halving = 0;; ++halving) {
      for (int i = 1; i < g.n - 1; ++i)
        for (int j = 1; j < g.n - 1; ++j)
          trial.K[g.index(i, j)] = f.at(i, j) + step * delta(unknown(i, j));
      rt = max_abs(grid_residual(trial, g, opt.jobs));
      if (rt < r || halving == kMaxHalvings) break;
      step *= 0.5;
    }
    f = std::move(trial);
    r = rt;
    ++rep.iterations;
    rep.residuals.push_back(r);
    rep.step_lengths.push_back(step);
  }
  rep.converged = true;
  rep.max_deviation = max_interior_deviation(f, ref, g);
  // Rate from the last three decreasing residuals above the rounding floor.
  const auto& rs = rep.residuals;
  for (size_t k = rs.size(); k >= 3; --k) {
    const double a = rs[k - 3], b = rs[k - 2], c = rs[k - 1];
    if (c > kRateFloor && b < a && c < b) {
      rep.order_estimate = std::log(c / b) / std::log(b / a);
      break;
    }
  }
  return {std::move(f), std::move(rep)};
}

StudyTable convergence_study(const ManifoldSpec& spec, const std::vector<int>& grids, double noise, uint64_t seed,
                             const NewtonOptions& opt) {
  if (grids.empty()) throw Error(ErrorCode::kInvalidArgument, "convergence study needs at least one grid");
  for (size_t k = 1; k < grids.size(); ++k)
    if (grids[k] <= grids[k - 1] || (grids[k] - 1) % (grids[k - 1] - 1) != 0)
      throw Error(ErrorCode::kInvalidArgument, "grids must be nested (n_k - 1 divisible by n_{k-1} - 1)");
  StudyTable table;
  table.family = spec.name;
  std::vector<double> lh, ldev, lres;
  const int coarse = grids.front();
  for (int n : grids) {
    const GridSpec g = default_grid(spec, n);
    const GridField ref = sample_reference(g, spec);
    const std::vector<double> exact = grid_residual(ref, g, opt.jobs);
    NewtonResult res = newton_solve(g, perturb(ref, g, noise, seed), spec, opt);
    StudyRow row;
    row.n = n;
    row.h = g.h_rho();
    row.exact_residual_all = max_abs(exact);
    row.deviation_all = res.report.max_deviation;
    // Errors at the nodes shared with the coarsest grid.
    const int stride = (n - 1) / (coarse - 1);
    for (int I = 1; I < coarse - 1; ++I)
      for (int J = 1; J < coarse - 1; ++J) {
        const int i = I * stride, j = J * stride;
        row.exact_residual = std::max(row.exact_residual, std::abs(exact[g.index(i, j)]));
        row.deviation = std::max(row.deviation, double(std::abs(res.field.at(i, j) - ref.at(i, j))));
      }
    row.iterations = res.report.iterations;
    row.final_residual = res.report.residuals.back();
    table.rows.push_back(row);
    lh.push_back(std::log(row.h));
    ldev.push_back(std::log(row.deviation));
    lres.push_back(std::log(row.exact_residual));
  }
  if (grids.size() > 1) {
    table.deviation_order = fitted_slope(lh, ldev);
    table.residual_order = fitted_slope(lh, lres);
  }
  return table;
}

}  // namespace qkprz
