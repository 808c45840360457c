#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fpk/convex.hpp"
#include "fpk/error.hpp"
#include "fpk/fixpoint.hpp"
#include "fpk/operators.hpp"
#include "fpk/space.hpp"

namespace fpk {

/// Monotone variational inequality on M: find x0 in M with
/// <L(x0), x0 - y> <= 0 for every y in M.
struct VIProblem {
  ResidualOperator L;
  ConvexSet M;
  double lipschitz_bound = 2.0;  // L = I - A with non-expansive A gives 2
};

inline void validate(const VIProblem& p) {
  if (!(p.lipschitz_bound > 0.0))
    throw PreconditionError("VIProblem: lipschitz_bound must be > 0");
  if (p.L.space() != p.M.space())
    throw DimensionError("VIProblem: operator and set spaces differ");
}

struct VISolution {
  Element x_hat;
  ConvergenceReport report;   // residuals are the extragradient gaps ||x - y||
  double post_hoc_primal;     // max <L(x_hat), x_hat - y> over check samples
  double post_hoc_threshold;  // gap-tolerance bound scaled by step and diameter
  bool post_hoc_ok;
};

/// Both-sided residuals of Minty duality at x_hat over a finite sample.
struct MintyReport {
  double primal;              // max over samples of <L(x_hat), x_hat - y>
  double dual;                // max over samples of <L(y),     x_hat - y>
  double max_dominance_gap;   // max per-sample (dual_y - primal_y), <= 0 + eps
                              // for monotone L
  std::size_t samples;
  std::uint64_t seed;         // 0 for caller-supplied sample lists
};

/// Residuals over an explicit list of comparison points.
inline MintyReport minty_residuals_over(const VIProblem& p, const Element& x_hat,
                                        const std::vector<Element>& ys) {
  validate(p);
  if (ys.empty())
    throw PreconditionError("minty_residuals_over: need at least one sample");
  if (!p.M.contains(x_hat, 1e-8))
    throw PreconditionError("minty_residuals_over: x_hat must lie in the set");
  const Element Lx = p.L(x_hat);
  double primal = -std::numeric_limits<double>::infinity();
  double dual = -std::numeric_limits<double>::infinity();
  double gap = -std::numeric_limits<double>::infinity();
  for (const Element& y : ys) {
    const Element d = x_hat - y;
    const double pr = inner(Lx, d);
    const double du = inner(p.L(y), d);
    primal = std::max(primal, pr);
    dual = std::max(dual, du);
    gap = std::max(gap, du - pr);
  }
  return MintyReport{primal, dual, gap, ys.size(), 0};
}

/// Residuals over deterministic member samples plus every closed-form
/// extreme point (box corners, simplex vertices): by linearity in y the
/// primal form attains its maximum over a polytope at a vertex.
inline MintyReport minty_residuals(const VIProblem& p, const Element& x_hat,
                                   std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 1)
    throw PreconditionError("minty_residuals: n_samples must be >= 1");
  std::vector<Element> ys = p.M.sample_points(n_samples, seed);
  for (auto& v : p.M.extreme_points()) ys.push_back(std::move(v));
  MintyReport rep = minty_residuals_over(p, x_hat, ys);
  rep.seed = seed;
  return rep;
}

/// Extragradient iteration with step 0.9 / lipschitz_bound:
///   y_k     = P_M(x_k - tau L(x_k))       (probe point)
///   x_{k+1} = P_M(x_k - tau L(y_k))       (corrected step)
/// The gap ||x_k - y_k|| drives convergence; the probe point is returned,
/// and its primal residual is re-checked on a fresh sample afterwards.
inline VISolution solve_vi_extragradient(const VIProblem& p, const Element& x0,
                                         const IterationConfig& cfg) {
  validate(p);
  validate(cfg);
  if (x0.space != p.M.space())
    throw DimensionError("solve_vi_extragradient: x0 in wrong space");
  if (!p.M.contains(x0, 1e-9))
    throw PreconditionError("solve_vi_extragradient: x0 must lie in the set");

  const double tau = 0.9 / p.lipschitz_bound;
  Element x = x0;
  std::vector<double> hist;
  Element y = x0;
  SolveStatus status = SolveStatus::MaxIters;
  std::size_t iters = cfg.max_iters;
  double gap = 0.0;
  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    y = p.M.project(lincomb(1.0, x, -tau, p.L(x)));
    gap = distance(x, y);
    hist.push_back(gap);
    if (gap <= cfg.tol_residual) {
      status = SolveStatus::Converged;
      iters = it + 1;
      break;
    }
    if (it + 1 == cfg.max_iters) break;
    x = p.M.project(lincomb(1.0, x, -tau, p.L(y)));
  }

  ConvergenceReport rep{y, iters, {}, gap, status, {}};
  if (cfg.record_history) rep.residual_history = std::move(hist);

  // Post-hoc certificate: the converged gap bounds the primal residual by
  // (Lip + 1/tau) * gap * diam(M); check that on samples plus vertices.
  std::vector<Element> ys = p.M.sample_points(128, 0);
  for (auto& v : p.M.extreme_points()) ys.push_back(std::move(v));
  const Element Lx = p.L(y);
  double primal = -std::numeric_limits<double>::infinity();
  for (const Element& s : ys) primal = std::max(primal, inner(Lx, y - s));
  const double threshold =
      cfg.tol_residual * (p.lipschitz_bound + 1.0 / tau) * p.M.diameter_bound() +
      1e-12;
  const bool ok = status == SolveStatus::Converged && primal <= threshold;
  return VISolution{std::move(y), std::move(rep), primal, threshold, ok};
}

}  // namespace fpk
