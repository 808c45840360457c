#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fpk/error.hpp"
#include "fpk/rng.hpp"
#include "fpk/space.hpp"

namespace fpk {

/// Bounded closed convex feasible set with an exact or iterative projection.
/// Variants: ball, box, simplex (convex hull of affinely independent
/// vertices) and finite intersections, projected by Dykstra's scheme.
class ConvexSet {
 public:
  static constexpr std::size_t kDykstraMaxSweeps = 10000;
  static constexpr double kDykstraFeasibilityTol = 1e-10;
  static constexpr std::size_t kSimplexMaxVertices = 13;

  static ConvexSet ball(Element center, double radius) {
    if (!(radius > 0.0) || !std::isfinite(radius))
      throw PreconditionError("ball: radius must be positive and finite");
    ConvexSet s;
    s.v_ = std::make_shared<const V>(Ball{std::move(center), radius});
    return s;
  }

  static ConvexSet box(Element lower, Element upper) {
    detail::require_same_space(lower, upper, "box");
    for (std::size_t i = 0; i < lower.dim(); ++i)
      if (!(lower[i] <= upper[i]))
        throw PreconditionError("box: requires lower <= upper componentwise");
    ConvexSet s;
    s.v_ = std::make_shared<const V>(Box{std::move(lower), std::move(upper)});
    return s;
  }

  static ConvexSet simplex(std::vector<Element> vertices) {
    if (vertices.size() < 2)
      throw PreconditionError("simplex: need at least 2 vertices");
    if (vertices.size() > kSimplexMaxVertices)
      throw SizeError("simplex: face enumeration is capped at 13 vertices");
    for (std::size_t i = 1; i < vertices.size(); ++i)
      detail::require_same_space(vertices[0], vertices[i], "simplex");
    Simplex sx{std::move(vertices), false};
    sx.standard_basis = is_standard_basis(sx.vertices);
    if (!sx.standard_basis) check_affinely_independent(sx.vertices);
    ConvexSet s;
    s.v_ = std::make_shared<const V>(std::move(sx));
    return s;
  }

  /// Members must share a space; feasibility is certified at construction
  /// by projecting the origin (throws ProjectionError if that fails).
  static ConvexSet intersection(std::vector<ConvexSet> members) {
    if (members.empty())
      throw PreconditionError("intersection: need at least one member");
    for (std::size_t i = 1; i < members.size(); ++i)
      if (members[i].space() != members[0].space())
        throw DimensionError("intersection: members belong to different spaces");
    ConvexSet s;
    s.v_ = std::make_shared<const V>(Intersection{std::move(members)});
    s.project(zero(s.space()));  // certify nonempty
    return s;
  }

  const Space& space() const {
    return std::visit(
        [](const auto& v) -> const Space& { return space_of(v); }, *v_);
  }

  /// Nearest point of the set in the space's norm.
  Element project(const Element& x) const {
    if (x.space != space()) throw DimensionError("project: wrong space");
    return std::visit([&](const auto& v) { return project_impl(v, x); }, *v_);
  }

  /// distance(x, set) <= tol, with the distance realized through project().
  bool contains(const Element& x, double tol) const {
    if (tol < 0.0) throw PreconditionError("contains: tol must be >= 0");
    return distance(x, project(x)) <= tol;
  }

  /// k deterministic member points; the same (k, seed) yields the same list.
  std::vector<Element> sample_points(std::size_t k, std::uint64_t seed) const {
    if (k < 1) throw PreconditionError("sample_points: k must be >= 1");
    detail::Rng rng(seed);
    std::vector<Element> out;
    out.reserve(k);
    std::visit([&](const auto& v) { sample_impl(v, k, rng, out); }, *v_);
    return out;
  }

  /// Closed-form extreme points: box corners (dimension capped at 12) and
  /// simplex vertices. Balls and intersections return an empty list.
  std::vector<Element> extreme_points() const {
    std::vector<Element> out;
    if (const auto* bx = std::get_if<Box>(v_.get())) {
      const std::size_t d = bx->lower.dim();
      if (d > 12) return out;
      for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
        Element c = bx->lower;
        for (std::size_t i = 0; i < d; ++i)
          if (mask & (std::uint64_t{1} << i)) c[i] = bx->upper[i];
        out.push_back(std::move(c));
      }
    } else if (const auto* sx = std::get_if<Simplex>(v_.get())) {
      out = sx->vertices;
    }
    return out;
  }

  /// Upper bound on the set diameter.
  double diameter_bound() const {
    return std::visit([](const auto& v) { return diameter_impl(v); }, *v_);
  }

  std::string describe() const {
    return std::visit([](const auto& v) { return describe_impl(v); }, *v_);
  }

 private:
  struct Ball {
    Element center;
    double radius;
  };
  struct Box {
    Element lower, upper;
  };
  struct Simplex {
    std::vector<Element> vertices;
    bool standard_basis;
  };
  struct Intersection {
    std::vector<ConvexSet> members;
  };
  using V = std::variant<Ball, Box, Simplex, Intersection>;

  ConvexSet() = default;

  static const Space& space_of(const Ball& b) { return b.center.space; }
  static const Space& space_of(const Box& b) { return b.lower.space; }
  static const Space& space_of(const Simplex& s) { return s.vertices[0].space; }
  static const Space& space_of(const Intersection& s) { return s.members[0].space(); }

  static bool is_standard_basis(const std::vector<Element>& vs) {
    const Space& sp = vs[0].space;
    if (!sp.is_euclidean() || vs.size() != sp.dim()) return false;
    std::vector<bool> seen(sp.dim(), false);
    for (const auto& v : vs) {
      std::size_t ones = 0, pos = 0;
      for (std::size_t i = 0; i < v.dim(); ++i) {
        if (v[i] == 1.0) {
          ++ones;
          pos = i;
        } else if (v[i] != 0.0) {
          return false;
        }
      }
      if (ones != 1 || seen[pos]) return false;
      seen[pos] = true;
    }
    return true;
  }

  static void check_affinely_independent(const std::vector<Element>& vs) {
    const Space& sp = vs[0].space;
    const std::size_t d = sp.dim();
    const std::size_t k = vs.size() - 1;
    Eigen::MatrixXd D(d, k);
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t i = 0; i < d; ++i)
        D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            std::sqrt(sp.weight(i)) * (vs[j + 1][i] - vs[0][i]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(D);
    if (static_cast<std::size_t>(qr.rank()) != k)
      throw PreconditionError("simplex: vertices must be affinely independent");
  }

  // -- projections ---------------------------------------------------------

  static Element project_impl(const Ball& b, const Element& x) {
    Element d = x - b.center;
    const double n = norm(d);
    if (n <= b.radius) return x;
    return lincomb(1.0, b.center, b.radius / n, d);
  }

  static Element project_impl(const Box& b, const Element& x) {
    Element r = x;
    for (std::size_t i = 0; i < r.dim(); ++i)
      r[i] = std::min(std::max(r[i], b.lower[i]), b.upper[i]);
    return r;
  }

  // Sort-and-threshold projection onto {p >= 0, sum p = 1}.
  static Element project_standard_simplex(const Element& x) {
    std::vector<double> u = x.coords;
    std::sort(u.begin(), u.end(), std::greater<>());
    double css = 0.0, tau = 0.0;
    std::size_t rho = 0;
    for (std::size_t j = 0; j < u.size(); ++j) {
      css += u[j];
      const double t = (1.0 - css) / static_cast<double>(j + 1);
      if (u[j] + t > 0.0) {
        rho = j + 1;
        tau = t;
      }
    }
    (void)rho;
    Element r = x;
    for (double& v : r.coords) v = std::max(v + tau, 0.0);
    return r;
  }

  // Exact projection onto the hull of affinely independent vertices by
  // enumerating faces: on the optimal face the affine-hull least-squares
  // minimizer coincides with the constrained projection.
  static Element project_general_simplex(const Simplex& s, const Element& x) {
    const auto& vs = s.vertices;
    const Space& sp = vs[0].space;
    const std::size_t d = sp.dim();
    const std::size_t nv = vs.size();

    Eigen::VectorXd sw(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i)
      sw(static_cast<Eigen::Index>(i)) = std::sqrt(sp.weight(i));

    auto weighted = [&](const Element& e) {
      Eigen::VectorXd v(static_cast<Eigen::Index>(d));
      for (std::size_t i = 0; i < d; ++i)
        v(static_cast<Eigen::Index>(i)) = sw(static_cast<Eigen::Index>(i)) * e[i];
      return v;
    };
    const Eigen::VectorXd xw = weighted(x);
    std::vector<Eigen::VectorXd> vw(nv);
    for (std::size_t j = 0; j < nv; ++j) vw[j] = weighted(vs[j]);

    double best_dist2 = std::numeric_limits<double>::infinity();
    Element best = vs[0];
    for (std::uint32_t mask = 1; mask < (1u << nv); ++mask) {
      std::vector<std::size_t> idx;
      for (std::size_t j = 0; j < nv; ++j)
        if (mask & (1u << j)) idx.push_back(j);
      const std::size_t k = idx.size() - 1;

      Eigen::VectorXd mu;
      if (k > 0) {
        Eigen::MatrixXd D(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k));
        for (std::size_t j = 0; j < k; ++j)
          D.col(static_cast<Eigen::Index>(j)) = vw[idx[j + 1]] - vw[idx[0]];
        mu = (D.transpose() * D).ldlt().solve(D.transpose() * (xw - vw[idx[0]]));
      }

      double lam0 = 1.0;
      bool feasible = true;
      for (std::size_t j = 0; j < k; ++j) {
        lam0 -= mu(static_cast<Eigen::Index>(j));
        if (mu(static_cast<Eigen::Index>(j)) < -1e-12) feasible = false;
      }
      if (lam0 < -1e-12 || !feasible) continue;

      Element cand = lam0 * vs[idx[0]];
      for (std::size_t j = 0; j < k; ++j)
        cand += mu(static_cast<Eigen::Index>(j)) * vs[idx[j + 1]];
      const double d2 = inner(x - cand, x - cand);
      if (d2 < best_dist2) {
        best_dist2 = d2;
        best = std::move(cand);
      }
    }
    return best;
  }

  static Element project_impl(const Simplex& s, const Element& x) {
    if (s.standard_basis) return project_standard_simplex(x);
    return project_general_simplex(s, x);
  }

  // Dykstra's alternating projections with per-member corrections. A merely
  // feasible iterate is not the nearest point, so the loop runs until the
  // sweep-to-sweep change dies out, then feasibility is certified.
  static Element project_impl(const Intersection& s, const Element& x) {
    const std::size_t m = s.members.size();
    Element cur = x;
    std::vector<Element> corr(m, zero(x.space));
    const double scale = std::max(1.0, norm(x));
    for (std::size_t sweep = 0; sweep < kDykstraMaxSweeps; ++sweep) {
      const Element before = cur;
      for (std::size_t j = 0; j < m; ++j) {
        const Element target = cur + corr[j];
        Element proj = s.members[j].project(target);
        corr[j] = target - proj;
        cur = std::move(proj);
      }
      if (distance(cur, before) <= 1e-15 * scale) break;
    }
    double infeas = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      infeas = std::max(infeas, distance(cur, s.members[j].project(cur)));
    if (infeas <= kDykstraFeasibilityTol) return cur;
    throw ProjectionError("intersection: Dykstra did not reach feasibility 1e-10");
  }

  // -- sampling ------------------------------------------------------------

  static void sample_impl(const Ball& b, std::size_t k, detail::Rng& rng,
                          std::vector<Element>& out) {
    const Space& sp = b.center.space;
    const double inv_dim = 1.0 / static_cast<double>(sp.dim());
    for (std::size_t t = 0; t < k; ++t) {
      Element dir = zero(sp);
      double n = 0.0;
      do {
        for (double& c : dir.coords) c = rng.normal();
        n = norm(dir);
      } while (n == 0.0);
      const double r = b.radius * std::pow(rng.uniform01(), inv_dim);
      out.push_back(lincomb(1.0, b.center, r / n, dir));
    }
  }

  static void sample_impl(const Box& b, std::size_t k, detail::Rng& rng,
                          std::vector<Element>& out) {
    for (std::size_t t = 0; t < k; ++t) {
      Element p = b.lower;
      for (std::size_t i = 0; i < p.dim(); ++i)
        p[i] += rng.uniform01() * (b.upper[i] - b.lower[i]);
      out.push_back(std::move(p));
    }
  }

  static void sample_impl(const Simplex& s, std::size_t k, detail::Rng& rng,
                          std::vector<Element>& out) {
    const std::size_t nv = s.vertices.size();
    std::vector<double> e(nv);
    for (std::size_t t = 0; t < k; ++t) {
      double total = 0.0;
      for (double& v : e) {
        v = rng.exponential();
        total += v;
      }
      Element p = (e[0] / total) * s.vertices[0];
      for (std::size_t j = 1; j < nv; ++j) p += (e[j] / total) * s.vertices[j];
      out.push_back(std::move(p));
    }
  }

  static void sample_impl(const Intersection& s, std::size_t k, detail::Rng& rng,
                          std::vector<Element>& out) {
    // Ambient points from the first member, pulled into the intersection.
    std::vector<Element> ambient;
    std::visit([&](const auto& v) { sample_impl(v, k, rng, ambient); },
               *s.members[0].v_);
    for (auto& p : ambient) out.push_back(project_impl(s, p));
  }

  // -- diameter ------------------------------------------------------------

  static double diameter_impl(const Ball& b) { return 2.0 * b.radius; }
  static double diameter_impl(const Box& b) { return distance(b.lower, b.upper); }
  static double diameter_impl(const Simplex& s) {
    double d = 0.0;
    for (std::size_t i = 0; i < s.vertices.size(); ++i)
      for (std::size_t j = i + 1; j < s.vertices.size(); ++j)
        d = std::max(d, distance(s.vertices[i], s.vertices[j]));
    return d;
  }
  static double diameter_impl(const Intersection& s) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& m : s.members) d = std::min(d, m.diameter_bound());
    return d;
  }

  static std::string describe_impl(const Ball& b) {
    return "ball(r=" + std::to_string(b.radius) + ")";
  }
  static std::string describe_impl(const Box&) { return "box"; }
  static std::string describe_impl(const Simplex& s) {
    return "simplex(" + std::to_string(s.vertices.size()) + " vertices)";
  }
  static std::string describe_impl(const Intersection& s) {
    return "intersection(" + std::to_string(s.members.size()) + " members)";
  }

  std::shared_ptr<const V> v_;
};

}  // namespace fpk
