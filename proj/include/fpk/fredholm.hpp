#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fpk/convex.hpp"
#include "fpk/error.hpp"
#include "fpk/expression.hpp"
#include "fpk/fixpoint.hpp"
#include "fpk/operators.hpp"
#include "fpk/space.hpp"

namespace fpk {

/// Kernel K(x, y) of the linear integral operator: a closed-form expression
/// in x and y, or a matrix of samples bound to one specific grid.
class Kernel {
 public:
  static Kernel expression(Expression e) {
    Kernel k;
    k.expr_ = std::move(e);
    return k;
  }

  static Kernel expression(const std::string& source) {
    return expression(parse_expression(source));
  }

  /// values(i, j) = K(x_i, y_j) on the tensor nodes of the intended grid.
  static Kernel grid_samples(Eigen::MatrixXd values) {
    if (values.rows() != values.cols() || values.rows() < 2)
      throw DimensionError("Kernel: sample matrix must be square, size >= 2");
    if (!values.allFinite())
      throw EvalError("Kernel: sample matrix contains non-finite values");
    Kernel k;
    k.samples_ = std::move(values);
    return k;
  }

  bool is_expression() const { return expr_.has_value(); }

  Eigen::MatrixXd sample(const QuadratureGrid& grid) const {
    const auto n = static_cast<Eigen::Index>(grid.size());
    if (samples_) {
      if (samples_->rows() != n)
        throw DimensionError("Kernel: sample matrix size does not match the grid");
      return *samples_;
    }
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        const double v = expr_->eval(grid.nodes[static_cast<std::size_t>(i)],
                                     grid.nodes[static_cast<std::size_t>(j)]);
        if (!std::isfinite(v))
          throw EvalError("Kernel: non-finite value at node pair (" +
                          std::to_string(grid.nodes[static_cast<std::size_t>(i)]) +
                          ", " +
                          std::to_string(grid.nodes[static_cast<std::size_t>(j)]) + ")");
        m(i, j) = v;
      }
    return m;
  }

  std::string describe() const {
    if (expr_) return expr_->source();
    return "samples(" + std::to_string(samples_->rows()) + "x" +
           std::to_string(samples_->cols()) + ")";
  }

 private:
  Kernel() = default;
  std::optional<Expression> expr_;
  std::optional<Eigen::MatrixXd> samples_;
};

/// Source term f(x): an expression in x alone, or explicit node values.
class SourceTerm {
 public:
  static SourceTerm expression(Expression e) {
    if (e.uses_y())
      throw PreconditionError("SourceTerm: f must not depend on y");
    SourceTerm s;
    s.expr_ = std::move(e);
    return s;
  }

  static SourceTerm expression(const std::string& source) {
    return expression(parse_expression(source));
  }

  static SourceTerm node_values(std::vector<double> values) {
    for (const double v : values)
      if (!std::isfinite(v))
        throw EvalError("SourceTerm: node values contain non-finite entries");
    SourceTerm s;
    s.values_ = std::move(values);
    return s;
  }

  std::vector<double> sample(const QuadratureGrid& grid) const {
    if (values_) {
      if (values_->size() != grid.size())
        throw DimensionError("SourceTerm: node-value count does not match the grid");
      return *values_;
    }
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      out[i] = expr_->eval(grid.nodes[i]);
      if (!std::isfinite(out[i]))
        throw EvalError("SourceTerm: non-finite value at node " +
                        std::to_string(grid.nodes[i]));
    }
    return out;
  }

  std::string describe() const {
    if (expr_) return expr_->source();
    return "values(" + std::to_string(values_->size()) + ")";
  }

 private:
  SourceTerm() = default;
  std::optional<Expression> expr_;
  std::optional<std::vector<double>> values_;
};

/// u(x) = lambda * Int_a^b K(x, y) u(y) dy + f(x), discretized on `grid`.
/// The kernel matrix and source vector are sampled once at construction.
struct IntegralProblem {
  double a;
  double b;
  double lambda;
  Kernel kernel;
  SourceTerm f;
  QuadratureGrid grid;
  Space space;            // discretized L2 view of the grid
  Eigen::MatrixXd kmat;   // K at tensor nodes
  std::vector<double> fvec;
};

inline IntegralProblem make_integral_problem(double a, double b, double lambda,
                                             Kernel kernel, SourceTerm f,
                                             QuadratureGrid grid) {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(lambda))
    throw PreconditionError("IntegralProblem: a, b, lambda must be finite");
  if (grid.a != a || grid.b != b)
    throw PreconditionError("IntegralProblem: grid endpoints must equal (a, b)");
  Space space = Space::discretized_l2(grid);  // validates the grid
  Eigen::MatrixXd kmat = kernel.sample(grid);
  std::vector<double> fvec = f.sample(grid);
  return IntegralProblem{a,
                         b,
                         lambda,
                         std::move(kernel),
                         std::move(f),
                         std::move(grid),
                         std::move(space),
                         std::move(kmat),
                         std::move(fvec)};
}

/// Grid maximum of |K| over the tensor nodes: a lower bound on the true sup.
inline double gamma_sup(const Kernel& K, const QuadratureGrid& grid) {
  return K.sample(grid).cwiseAbs().maxCoeff();
}

/// Tensor-quadrature L2([a,b]^2) norm: (sum_ij w_i w_j K(x_i, y_j)^2)^(1/2).
inline double kernel_l2_norm(const Kernel& K, const QuadratureGrid& grid) {
  const Eigen::MatrixXd m = K.sample(grid);
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (std::size_t j = 0; j < grid.size(); ++j)
      acc += grid.weights[i] * grid.weights[j] *
             m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
             m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return std::sqrt(acc);
}

/// Solvability data for the two condition sets. The sup-norm condition uses
/// the square-root (norm) form |lambda| * ||K||_L2 for the L2 branch: that
/// is the form under which the integral operator is non-expansive, with
/// equality allowed only for f = 0.
struct ConditionReport {
  double gamma;           // grid max of |K|, endpoint-including scan
  double kernel_l2;
  double f_norm;
  bool f_zero;            // f_norm <= 1e-14
  double banach_product;  // (b - a) * |lambda| * gamma
  bool banach_ok;         // banach_product < 1
  bool banach_marginal;   // banach_product within 1e-6 of the threshold
  double l2_product;      // |lambda| * kernel_l2
  bool l2_ok;             // < 1, or <= 1 + 1e-12 when f_zero
  std::optional<double> r_min;  // f_norm / (1 - l2_product) when defined
};

inline constexpr double kFZeroThreshold = 1e-14;

/// ||f|| / (1 - |lambda| * ||K||): the smallest invariant-ball radius.
inline double min_radius(const IntegralProblem& p) {
  const double l2 = kernel_l2_norm(p.kernel, p.grid);
  const double product = std::abs(p.lambda) * l2;
  double f2 = 0.0;
  for (std::size_t i = 0; i < p.grid.size(); ++i)
    f2 += p.grid.weights[i] * p.fvec[i] * p.fvec[i];
  const double f_norm = std::sqrt(f2);
  if (f_norm <= kFZeroThreshold)
    throw NotApplicableError("min_radius: f is zero, any ball radius works");
  if (!(product < 1.0 - 1e-12))
    throw NotApplicableError("min_radius: |lambda| * ||K|| must be < 1");
  return f_norm / (1.0 - product);
}

inline ConditionReport check_conditions(const IntegralProblem& p) {
  ConditionReport rep{};
  // The sup scan must see the endpoints: node-only grids (gauss) would
  // understate Gamma for kernels peaking at the corner of [a,b]^2.
  if (p.kernel.is_expression()) {
    const std::size_t scan_n = std::max<std::size_t>(101, p.grid.size());
    rep.gamma = gamma_sup(p.kernel, make_grid(p.a, p.b, scan_n, QuadRule::Trapezoid));
  } else {
    rep.gamma = gamma_sup(p.kernel, p.grid);
  }
  rep.kernel_l2 = kernel_l2_norm(p.kernel, p.grid);

  double f2 = 0.0;
  for (std::size_t i = 0; i < p.grid.size(); ++i)
    f2 += p.grid.weights[i] * p.fvec[i] * p.fvec[i];
  rep.f_norm = std::sqrt(f2);
  rep.f_zero = rep.f_norm <= kFZeroThreshold;

  rep.banach_product = (p.b - p.a) * std::abs(p.lambda) * rep.gamma;
  rep.banach_ok = rep.banach_product < 1.0;
  rep.banach_marginal = std::abs(rep.banach_product - 1.0) <= 1e-6;

  rep.l2_product = std::abs(p.lambda) * rep.kernel_l2;
  // quadrature rounding can place an analytically-unit product on either
  // side of 1: treat the 1e-12 band around 1 as the boundary itself, which
  // is admissible only when f vanishes
  rep.l2_ok = rep.f_zero ? rep.l2_product <= 1.0 + 1e-12
                         : rep.l2_product < 1.0 - 1e-12;

  if (!rep.f_zero && rep.l2_product < 1.0 - 1e-12)
    rep.r_min = rep.f_norm / (1.0 - rep.l2_product);
  return rep;
}

/// One Nystrom application: (Au)_i = lambda * sum_j w_j K(x_i, y_j) u_j + f_i.
inline Element apply_operator(const IntegralProblem& p, const Element& u) {
  if (u.space != p.space)
    throw DimensionError("apply_operator: u does not live on the problem grid");
  const auto n = static_cast<Eigen::Index>(p.grid.size());
  Eigen::VectorXd wu(n);
  for (Eigen::Index j = 0; j < n; ++j)
    wu(j) = p.grid.weights[static_cast<std::size_t>(j)] *
            u.coords[static_cast<std::size_t>(j)];
  const Eigen::VectorXd integral = p.kmat * wu;
  Element out = zero(p.space);
  for (Eigen::Index i = 0; i < n; ++i)
    out.coords[static_cast<std::size_t>(i)] =
        p.lambda * integral(i) + p.fvec[static_cast<std::size_t>(i)];
  return out;
}

/// The discretized integral operator as a first-class map; its claimed
/// Lipschitz constant is |lambda| * ||K||_L2 (exact for the weighted norm
/// by the discrete Cauchy-Schwarz chain).
inline OperatorSpec make_fredholm_operator(const IntegralProblem& p) {
  const double lip = std::abs(p.lambda) * kernel_l2_norm(p.kernel, p.grid);
  // capture the pieces by value; the operator outlives the problem
  const Space space = p.space;
  const Eigen::MatrixXd kmat = p.kmat;
  const std::vector<double> fvec = p.fvec;
  const std::vector<double> weights = p.grid.weights;
  const double lambda = p.lambda;
  return OperatorSpec::custom(
      space,
      "fredholm(lambda=" + std::to_string(p.lambda) + ", K=" + p.kernel.describe() +
          ", f=" + p.f.describe() + ")",
      [space, kmat, fvec, weights, lambda](const Element& u) {
        const auto n = static_cast<Eigen::Index>(weights.size());
        Eigen::VectorXd wu(n);
        for (Eigen::Index j = 0; j < n; ++j)
          wu(j) = weights[static_cast<std::size_t>(j)] *
                  u.coords[static_cast<std::size_t>(j)];
        const Eigen::VectorXd integral = kmat * wu;
        Element out = zero(space);
        for (Eigen::Index i = 0; i < n; ++i)
          out.coords[static_cast<std::size_t>(i)] =
              lambda * integral(i) + fvec[static_cast<std::size_t>(i)];
        return out;
      },
      lip);
}

enum class SolveMethod { Auto, Picard, KM };

inline const char* to_string(SolveMethod m) {
  switch (m) {
    case SolveMethod::Auto: return "auto";
    case SolveMethod::Picard: return "picard";
    case SolveMethod::KM: return "km";
  }
  return "unknown";
}

struct FredholmSolveOptions {
  SolveMethod method = SolveMethod::Auto;
  std::optional<double> radius;       // invariant-ball radius for km
  bool override_conditions = false;   // run best-effort when both checks fail
  std::optional<Element> initial;     // default: the source term at nodes
};

struct FredholmSolution {
  Element u;
  ConvergenceReport report;
  ConditionReport conditions;
  SolveMethod method_used;  // Picard or KM
  bool overridden;          // true when conditions failed but override forced
};

/// Solve the discretized equation. Auto picks Picard whenever the L2
/// contraction or the sup-norm condition holds, otherwise projected
/// averaging on the invariant ball of radius r_min (or the supplied radius).
/// Refuses when both condition sets fail, unless overridden.
inline FredholmSolution solve_fredholm(const IntegralProblem& p,
                                       const FredholmSolveOptions& opts,
                                       const IterationConfig& cfg) {
  validate(cfg);
  const ConditionReport cond = check_conditions(p);
  bool overridden = false;
  if (!cond.banach_ok && !cond.l2_ok) {
    if (!opts.override_conditions)
      throw ConditionsViolatedError(
          "solve_fredholm: neither the sup-norm nor the L2 condition holds "
          "(pass override to attempt anyway)");
    overridden = true;
  }

  SolveMethod method = opts.method;
  if (method == SolveMethod::Auto) {
    // Quadrature rounding can land an analytically-unit product on either
    // side of 1; inside the 1e-12 band there is no usable contraction, so
    // route to the projected averaging scheme instead of plain iteration.
    const bool strict_contraction = cond.l2_product < 1.0 - 1e-12;
    method = (strict_contraction || cond.banach_ok) ? SolveMethod::Picard
                                                    : SolveMethod::KM;
  }

  OperatorSpec A = make_fredholm_operator(p);
  Element x0 = opts.initial.value_or(Element(p.space, p.fvec));
  if (x0.space != p.space)
    throw DimensionError("solve_fredholm: initial guess not on the problem grid");

  if (method == SolveMethod::Picard) {
    ConvergenceReport rep = picard(A, x0, cfg);
    return FredholmSolution{rep.final_point, std::move(rep), cond, method,
                            overridden};
  }

  double r;
  if (opts.radius) {
    if (!(*opts.radius > 0.0))
      throw PreconditionError("solve_fredholm: radius must be > 0");
    r = *opts.radius;
  } else {
    r = min_radius(p);  // NotApplicableError when f = 0: radius required
  }
  ConvexSet M = ConvexSet::ball(zero(p.space), r);
  ConvergenceReport rep = krasnoselskii_mann(A, M, x0, cfg);
  return FredholmSolution{rep.final_point, std::move(rep), cond, method,
                          overridden};
}

struct DirectSolution {
  Element u;
  double condition_number;  // spectral condition of I - lambda K W
  double residual_rel;      // ||(I - lambda K W) u - f|| / max(1, ||f||)
};

/// Dense factorization of (I - lambda K W) u = f: the reference answer the
/// iterative paths are checked against. Refuses near-singular systems,
/// which genuinely occur at the |lambda| ||K|| = 1, f = 0 boundary.
inline DirectSolution direct_solve_oracle(const IntegralProblem& p) {
  const auto n = static_cast<Eigen::Index>(p.grid.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      A(i, j) -= p.lambda * p.kmat(i, j) * p.grid.weights[static_cast<std::size_t>(j)];

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smin = svd.singularValues()(n - 1);
  const double smax = svd.singularValues()(0);
  if (smin <= 0.0 || smax / smin > 1e12)
    throw OracleUnavailableError(
        "direct_solve_oracle: system is singular or has condition number > 1e12");

  Eigen::VectorXd f(n);
  for (Eigen::Index i = 0; i < n; ++i) f(i) = p.fvec[static_cast<std::size_t>(i)];
  const Eigen::VectorXd u = svd.solve(f);
  const double res = (A * u - f).norm() / std::max(1.0, f.norm());
  if (!(res <= 1e-12))
    throw OracleUnavailableError(
        "direct_solve_oracle: factorization residual exceeds 1e-12");

  Element out = zero(p.space);
  for (Eigen::Index i = 0; i < n; ++i) out.coords[static_cast<std::size_t>(i)] = u(i);
  return DirectSolution{std::move(out), smax / smin, res};
}

}  // namespace fpk
