#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "fpk/error.hpp"

namespace fpk {

enum class QuadRule { Trapezoid, GaussLegendre };

inline const char* to_string(QuadRule r) {
  return r == QuadRule::Trapezoid ? "composite-trapezoid" : "gauss-legendre";
}

/// Quadrature rule on [a, b]: nodes x_i and positive weights w_i with
/// sum(w) = b - a. Doubles as the coordinate system of a discretized
/// L2 space: a function is stored by its node values.
struct QuadratureGrid {
  double a = 0.0;
  double b = 1.0;
  std::vector<double> nodes;
  std::vector<double> weights;
  QuadRule rule = QuadRule::Trapezoid;

  std::size_t size() const { return nodes.size(); }
};

namespace detail {

/// P_n(x) and P_n'(x) by the three-term recurrence. Valid for |x| < 1.
inline std::pair<double, double> legendre(std::size_t n, double x) {
  double p0 = 1.0;
  double p1 = x;
  for (std::size_t k = 2; k <= n; ++k) {
    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  const double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

/// Nodes/weights of the n-point Gauss-Legendre rule on [-1, 1],
/// by Newton iteration on P_n to 1e-15.
inline void gauss_legendre_reference(std::size_t n, std::vector<double>& nodes,
                                     std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const double pi = 3.141592653589793238462643383279;
  for (std::size_t i = 1; i <= n; ++i) {
    double x = std::cos(pi * (static_cast<double>(i) - 0.25) /
                        (static_cast<double>(n) + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, d] = legendre(n, x);
      dp = d;
      const double dx = p / d;
      x -= dx;
      if (std::abs(dx) <= 1e-15) break;
    }
    dp = legendre(n, x).second;
    // i counts from the right; store ascending.
    nodes[n - i] = x;
    weights[n - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

}  // namespace detail

/// Build a quadrature grid on [a, b] with n >= 2 nodes.
inline QuadratureGrid make_grid(double a, double b, std::size_t n, QuadRule rule) {
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
    throw InvalidGridError("make_grid: requires finite a < b");
  if (n < 2) throw InvalidGridError("make_grid: requires n >= 2 nodes");

  QuadratureGrid g;
  g.a = a;
  g.b = b;
  g.rule = rule;
  if (rule == QuadRule::Trapezoid) {
    const double h = (b - a) / static_cast<double>(n - 1);
    g.nodes.resize(n);
    g.weights.assign(n, h);
    for (std::size_t i = 0; i < n; ++i) g.nodes[i] = a + static_cast<double>(i) * h;
    g.nodes.back() = b;
    g.weights.front() = h / 2.0;
    g.weights.back() = h / 2.0;
  } else {
    std::vector<double> xs, ws;
    detail::gauss_legendre_reference(n, xs, ws);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    g.nodes.resize(n);
    g.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      g.nodes[i] = mid + half * xs[i];
      g.weights[i] = half * ws[i];
    }
  }
  return g;
}

namespace detail {

inline void validate_grid(const QuadratureGrid& g) {
  if (g.nodes.size() != g.weights.size() || g.nodes.size() < 2)
    throw InvalidGridError("grid: need matching nodes/weights, at least 2");
  if (!(g.a < g.b)) throw InvalidGridError("grid: requires a < b");
  double sum = 0.0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (!(g.weights[i] > 0.0)) throw InvalidGridError("grid: weights must be positive");
    if (g.nodes[i] < g.a || g.nodes[i] > g.b)
      throw InvalidGridError("grid: nodes must lie in [a, b]");
    if (i > 0 && !(g.nodes[i] > g.nodes[i - 1]))
      throw InvalidGridError("grid: nodes must be strictly increasing");
    sum += g.weights[i];
  }
  const double tol = 1e-12 * std::max(1.0, std::abs(g.b - g.a));
  if (std::abs(sum - (g.b - g.a)) > tol)
    throw InvalidGridError("grid: weights must sum to b - a");
}

}  // namespace detail

/// Ambient space: Euclidean R^n, or L2[a, b] discretized by a quadrature
/// grid. The grid payload is shared, so copies are cheap.
class Space {
 public:
  Space() : dim_(0) {}

  static Space euclidean(std::size_t dim) {
    if (dim < 1) throw PreconditionError("Space: euclidean dimension must be >= 1");
    Space s;
    s.dim_ = dim;
    return s;
  }

  static Space discretized_l2(QuadratureGrid grid) {
    detail::validate_grid(grid);
    Space s;
    s.dim_ = grid.size();
    s.grid_ = std::make_shared<const QuadratureGrid>(std::move(grid));
    return s;
  }

  std::size_t dim() const { return dim_; }
  bool is_euclidean() const { return grid_ == nullptr; }

  const QuadratureGrid& grid() const {
    if (!grid_) throw PreconditionError("Space: euclidean space has no grid");
    return *grid_;
  }

  /// Inner-product weight of coordinate i (1 for Euclidean).
  double weight(std::size_t i) const { return grid_ ? grid_->weights[i] : 1.0; }

  std::string describe() const {
    if (is_euclidean()) return "euclidean(" + std::to_string(dim_) + ")";
    return std::string("discretized-L2[") + std::to_string(grid_->a) + "," +
           std::to_string(grid_->b) + "](" + to_string(grid_->rule) + "," +
           std::to_string(dim_) + ")";
  }

  friend bool operator==(const Space& x, const Space& y) {
    if (x.dim_ != y.dim_) return false;
    if (x.grid_ == y.grid_) return true;  // covers euclidean == euclidean
    if (!x.grid_ || !y.grid_) return false;
    return x.grid_->nodes == y.grid_->nodes && x.grid_->weights == y.grid_->weights;
  }
  friend bool operator!=(const Space& x, const Space& y) { return !(x == y); }

 private:
  std::size_t dim_;
  std::shared_ptr<const QuadratureGrid> grid_;
};

/// A point of a Space: coordinate vector plus the space it belongs to.
struct Element {
  Space space;
  std::vector<double> coords;

  Element() = default;
  Element(Space s, std::vector<double> c) : space(std::move(s)), coords(std::move(c)) {
    if (coords.size() != space.dim())
      throw DimensionError("Element: coordinate count must equal the space dimension");
  }

  std::size_t dim() const { return coords.size(); }
  double& operator[](std::size_t i) { return coords[i]; }
  double operator[](std::size_t i) const { return coords[i]; }
};

inline Element zero(const Space& s) {
  return Element(s, std::vector<double>(s.dim(), 0.0));
}

namespace detail {
inline void require_same_space(const Element& x, const Element& y, const char* op) {
  if (x.space != y.space)
    throw DimensionError(std::string(op) + ": elements belong to different spaces");
}
}  // namespace detail

/// <x, y>: plain dot product in R^n, weighted dot product in discretized L2.
inline double inner(const Element& x, const Element& y) {
  detail::require_same_space(x, y, "inner");
  double s = 0.0;
  if (x.space.is_euclidean()) {
    for (std::size_t i = 0; i < x.coords.size(); ++i) s += x.coords[i] * y.coords[i];
  } else {
    const auto& w = x.space.grid().weights;
    for (std::size_t i = 0; i < x.coords.size(); ++i) s += w[i] * x.coords[i] * y.coords[i];
  }
  return s;
}

inline double norm(const Element& x) { return std::sqrt(inner(x, x)); }

inline Element operator+(const Element& x, const Element& y) {
  detail::require_same_space(x, y, "operator+");
  Element r = x;
  for (std::size_t i = 0; i < r.coords.size(); ++i) r.coords[i] += y.coords[i];
  return r;
}

inline Element operator-(const Element& x, const Element& y) {
  detail::require_same_space(x, y, "operator-");
  Element r = x;
  for (std::size_t i = 0; i < r.coords.size(); ++i) r.coords[i] -= y.coords[i];
  return r;
}

inline Element operator*(double c, const Element& x) {
  Element r = x;
  for (double& v : r.coords) v *= c;
  return r;
}

inline Element& operator+=(Element& x, const Element& y) {
  detail::require_same_space(x, y, "operator+=");
  for (std::size_t i = 0; i < x.coords.size(); ++i) x.coords[i] += y.coords[i];
  return x;
}

inline Element& operator-=(Element& x, const Element& y) {
  detail::require_same_space(x, y, "operator-=");
  for (std::size_t i = 0; i < x.coords.size(); ++i) x.coords[i] -= y.coords[i];
  return x;
}

inline double distance(const Element& x, const Element& y) { return norm(x - y); }

/// a*x + b*y in one pass.
inline Element lincomb(double a, const Element& x, double b, const Element& y) {
  detail::require_same_space(x, y, "lincomb");
  Element r = x;
  for (std::size_t i = 0; i < r.coords.size(); ++i)
    r.coords[i] = a * x.coords[i] + b * y.coords[i];
  return r;
}

}  // namespace fpk
