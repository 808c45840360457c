#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "fpk/convex.hpp"
#include "fpk/error.hpp"
#include "fpk/operators.hpp"
#include "fpk/space.hpp"

namespace fpk {

/// Residual decrease below this over a 50-iteration window, while still
/// above tolerance, classifies the run as stalled (Lipschitz constant >= 1).
inline constexpr std::size_t kStallWindow = 50;
inline constexpr double kStallDecrease = 1e-15;

struct IterationConfig {
  double alpha = 0.5;          // averaging weight of the Krasnoselskii-Mann step
  std::size_t max_iters = 10000;
  double tol_residual = 1e-10;
  bool record_history = true;
};

inline void validate(const IterationConfig& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
    throw PreconditionError("IterationConfig: alpha must lie in (0, 1)");
  if (!(cfg.tol_residual > 0.0))
    throw PreconditionError("IterationConfig: tol_residual must be > 0");
  if (cfg.max_iters < 1)
    throw PreconditionError("IterationConfig: max_iters must be >= 1");
}

enum class SolveStatus { Converged, MaxIters, Stalled };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIters: return "max-iters";
    case SolveStatus::Stalled: return "stalled";
  }
  return "unknown";
}

struct ConvergenceReport {
  Element final_point;
  std::size_t iterations;                // operator evaluations performed
  std::vector<double> residual_history;  // filled when cfg.record_history
  double final_residual;
  SolveStatus status;                    // converged iff final_residual <= tol
  // k/(1-k) * final_residual when a Lipschitz constant k < 1 was claimed;
  // bounds the distance from the post-map point to the fixed point.
  std::optional<double> error_bound;
};

/// ||x - A(x)||: zero exactly at fixed points.
inline double residual(const OperatorSpec& A, const Element& x) {
  return distance(x, A(x));
}

/// Picard iteration x_{n+1} = A(x_n), intended for contractions. Stall
/// detection catches Lipschitz constant >= 1 (the orbit stops making
/// progress); on convergence the post-map point is returned, since the
/// claimed-contraction error bound applies to it.
inline ConvergenceReport picard(const OperatorSpec& A, const Element& x0,
                                const IterationConfig& cfg) {
  validate(cfg);
  if (x0.space != A.space()) throw DimensionError("picard: x0 in wrong space");

  std::optional<double> bound_rate;
  if (A.claimed_lipschitz() && *A.claimed_lipschitz() < 1.0) {
    const double k = *A.claimed_lipschitz();
    bound_rate = k / (1.0 - k);
  }

  Element x = x0;
  std::vector<double> hist;
  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    Element ax = A(x);
    const double r = distance(x, ax);
    hist.push_back(r);

    auto finish = [&](Element point, SolveStatus status) {
      ConvergenceReport rep{std::move(point), it + 1, {}, r, status, {}};
      if (bound_rate) rep.error_bound = *bound_rate * r;
      if (cfg.record_history) rep.residual_history = std::move(hist);
      return rep;
    };

    if (r <= cfg.tol_residual) return finish(std::move(ax), SolveStatus::Converged);
    if (hist.size() > kStallWindow &&
        hist[hist.size() - 1 - kStallWindow] - r < kStallDecrease)
      return finish(std::move(x), SolveStatus::Stalled);
    if (it + 1 == cfg.max_iters) return finish(std::move(x), SolveStatus::MaxIters);
    x = std::move(ax);
  }
  throw Error("picard: unreachable");
}

/// Projected averaged iteration x_{n+1} = P_M((1-alpha) x_n + alpha A(x_n))
/// for non-expansive A. The projection runs every step, so iterates stay in
/// M even when A only approximately maps M into itself. The optional
/// observer sees each post-projection iterate.
inline ConvergenceReport krasnoselskii_mann(
    const OperatorSpec& A, const ConvexSet& M, const Element& x0,
    const IterationConfig& cfg,
    const std::function<void(const Element&)>& on_iterate = {}) {
  validate(cfg);
  if (x0.space != A.space())
    throw DimensionError("krasnoselskii_mann: x0 in wrong space");
  if (M.space() != A.space())
    throw DimensionError("krasnoselskii_mann: set in wrong space");
  if (!M.contains(x0, 1e-9))
    throw PreconditionError("krasnoselskii_mann: x0 must lie in the set");

  Element x = x0;
  std::vector<double> hist;
  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    Element ax = A(x);
    const double r = distance(x, ax);
    hist.push_back(r);

    auto finish = [&](SolveStatus status) {
      ConvergenceReport rep{std::move(x), it + 1, {}, r, status, {}};
      if (cfg.record_history) rep.residual_history = std::move(hist);
      return rep;
    };

    if (r <= cfg.tol_residual) return finish(SolveStatus::Converged);
    if (it + 1 == cfg.max_iters) return finish(SolveStatus::MaxIters);
    x = M.project(lincomb(1.0 - cfg.alpha, x, cfg.alpha, ax));
    if (on_iterate) on_iterate(x);
  }
  throw Error("krasnoselskii_mann: unreachable");
}

}  // namespace fpk
