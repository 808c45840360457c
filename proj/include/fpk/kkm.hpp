#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fpk/error.hpp"
#include "fpk/operators.hpp"
#include "fpk/space.hpp"

namespace fpk {

/// Subset enumeration is exponential in the anchor count; verification is
/// meant for desk scale.
inline constexpr std::size_t kKkmMaxOrder = 8;  // n, for n + 1 anchors

/// Closed sets G(x_0), ..., G(x_n) given by a tolerance-parameterized
/// membership predicate; member(i, z, tol) must never flip true -> false
/// as tol grows. `defect` optionally gives inf{t : member(i, z, t)} in
/// closed form; otherwise it is recovered by bisection over tol.
struct SetValuedMap {
  std::vector<Element> anchors;
  std::function<bool(std::size_t, const Element&, double)> member;
  std::function<double(std::size_t, const Element&)> defect;
};

namespace detail {

inline void validate_map(const SetValuedMap& map) {
  if (map.anchors.size() < 2)
    throw PreconditionError("SetValuedMap: need at least two anchors");
  for (std::size_t i = 1; i < map.anchors.size(); ++i)
    require_same_space(map.anchors[0], map.anchors[i], "SetValuedMap");
  if (!map.member) throw PreconditionError("SetValuedMap: member predicate missing");
}

inline void check_scan_inputs(const SetValuedMap& map, std::size_t m, double tol) {
  validate_map(map);
  if (map.anchors.size() - 1 > kKkmMaxOrder)
    throw SizeError("kkm: more than 9 anchors, subset enumeration refused");
  if (m < 1) throw PreconditionError("kkm: resolution m must be >= 1");
  if (!(tol >= 0.0)) throw PreconditionError("kkm: tol must be >= 0");
}

template <typename Emit>
void compositions(std::size_t total, std::size_t parts,
                  std::vector<std::size_t>& cur, Emit&& emit) {
  if (parts == 1) {
    cur.push_back(total);
    emit(cur);
    cur.pop_back();
    return;
  }
  for (std::size_t k = 0; k <= total; ++k) {
    cur.push_back(k);
    compositions(total - k, parts - 1, cur, emit);
    cur.pop_back();
  }
}

inline double defect_of(const SetValuedMap& map, std::size_t i, const Element& z) {
  if (map.defect) return map.defect(i, z);
  if (map.member(i, z, 0.0)) return 0.0;
  double hi = 1.0;
  while (!map.member(i, z, hi)) {
    hi *= 2.0;
    if (hi > 1e12) return std::numeric_limits<double>::infinity();
  }
  double lo = 0.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (map.member(i, z, mid) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace detail

/// All convex combinations of the anchors with weights k_i / m; exactly
/// C(m + n, n) points for n + 1 anchors.
struct BarycentricGrid {
  std::size_t m;
  std::vector<Element> points;
};

inline BarycentricGrid make_barycentric_grid(const std::vector<Element>& anchors,
                                             std::size_t m) {
  if (anchors.empty())
    throw PreconditionError("make_barycentric_grid: need at least one anchor");
  for (std::size_t i = 1; i < anchors.size(); ++i)
    detail::require_same_space(anchors[0], anchors[i], "make_barycentric_grid");
  if (m < 1) throw PreconditionError("make_barycentric_grid: m must be >= 1");
  BarycentricGrid grid{m, {}};
  std::vector<std::size_t> cur;
  detail::compositions(m, anchors.size(), cur, [&](const std::vector<std::size_t>& k) {
    Element p = zero(anchors[0].space);
    for (std::size_t i = 0; i < anchors.size(); ++i)
      if (k[i] > 0)
        p += (static_cast<double>(k[i]) / static_cast<double>(m)) * anchors[i];
    grid.points.push_back(std::move(p));
  });
  return grid;
}

struct KKMViolation {
  std::vector<std::size_t> subset;  // anchor indices of the uncovered face
  Element point;
};

struct IntersectionWitness {
  Element point;
  double max_defect;  // max over anchors of the membership defect
  bool within_tol;
};

struct KKMReport {
  bool covering_ok;
  std::vector<KKMViolation> violations;
  std::optional<IntersectionWitness> intersection_witness;
};

/// Covering check: every barycentric grid point of every face spanned by a
/// subset S of anchors must belong to some G(x_i) with i in S.
/// Violations come out in subset-mask order, then grid enumeration order.
inline KKMReport check_kkm_covering(const SetValuedMap& map, std::size_t m,
                                    double tol) {
  detail::check_scan_inputs(map, m, tol);
  const std::size_t count = map.anchors.size();
  KKMReport rep{true, {}, {}};
  for (std::uint32_t mask = 1; mask < (1u << count); ++mask) {
    std::vector<std::size_t> subset;
    std::vector<Element> face;
    for (std::size_t i = 0; i < count; ++i)
      if (mask & (1u << i)) {
        subset.push_back(i);
        face.push_back(map.anchors[i]);
      }
    for (auto& z : make_barycentric_grid(face, m).points) {
      bool covered = false;
      for (const std::size_t i : subset)
        if (map.member(i, z, tol)) {
          covered = true;
          break;
        }
      if (!covered) rep.violations.push_back(KKMViolation{subset, std::move(z)});
    }
  }
  rep.covering_ok = rep.violations.empty();
  return rep;
}

/// Exhaustive scan of the full barycentric grid for the point minimizing
/// the maximum membership defect over all anchors; resolution limits the
/// witness quality to about diameter / m.
inline IntersectionWitness find_intersection(const SetValuedMap& map,
                                             std::size_t m, double tol) {
  detail::check_scan_inputs(map, m, tol);
  auto grid = make_barycentric_grid(map.anchors, m);
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_idx = 0;
  for (std::size_t p = 0; p < grid.points.size(); ++p) {
    double d = 0.0;
    for (std::size_t i = 0; i < map.anchors.size(); ++i) {
      d = std::max(d, detail::defect_of(map, i, grid.points[p]));
      if (d >= best) break;  // cannot improve on the incumbent
    }
    if (d < best) {
      best = d;
      best_idx = p;
    }
  }
  return IntersectionWitness{std::move(grid.points[best_idx]), best, best <= tol};
}

/// Covering plus intersection scan in one report.
inline KKMReport run_kkm(const SetValuedMap& map, std::size_t m, double tol) {
  KKMReport rep = check_kkm_covering(map, m, tol);
  rep.intersection_witness = find_intersection(map, m, tol);
  return rep;
}

/// The sublevel mapping P(y) = {x : <L(x), x - y> <= 0} over the given
/// anchors; base_tol is an additive slack on the defining inequality.
/// Its covering property holds for any L by convex averaging of the
/// pairings, and the intersection approximates the VI solution.
inline SetValuedMap build_p_mapping(const ResidualOperator& L,
                                    std::vector<Element> anchors,
                                    double base_tol = 0.0) {
  if (!(base_tol >= 0.0))
    throw PreconditionError("build_p_mapping: base_tol must be >= 0");
  for (const auto& a : anchors)
    if (a.space != L.space())
      throw DimensionError("build_p_mapping: anchors in wrong space");
  SetValuedMap map;
  map.anchors = std::move(anchors);
  const auto anchors_ref = map.anchors;  // lambdas own a stable copy
  map.member = [L, anchors_ref, base_tol](std::size_t i, const Element& z,
                                          double tol) {
    return inner(L(z), z - anchors_ref[i]) <= tol + base_tol;
  };
  map.defect = [L, anchors_ref, base_tol](std::size_t i, const Element& z) {
    return std::max(0.0, inner(L(z), z - anchors_ref[i]) - base_tol);
  };
  return map;
}

namespace scenarios {

/// G(e_i) = {x in the standard simplex : x_i >= 1/(n+1)}: the textbook
/// covering example on n + 1 basis anchors.
inline SetValuedMap canonical_cover(std::size_t n) {
  if (n < 1) throw PreconditionError("canonical_cover: n must be >= 1");
  const Space sp = Space::euclidean(n + 1);
  SetValuedMap map;
  for (std::size_t i = 0; i <= n; ++i) {
    Element e = zero(sp);
    e[i] = 1.0;
    map.anchors.push_back(std::move(e));
  }
  const double level = 1.0 / static_cast<double>(n + 1);
  map.member = [level](std::size_t i, const Element& z, double tol) {
    return z[i] >= level - tol;
  };
  map.defect = [level](std::size_t i, const Element& z) {
    return std::max(0.0, level - z[i]);
  };
  return map;
}

/// Negative control: G(e_i) = {x : x_i >= c} on the segment between e_1
/// and e_2; for c > 1/2 the midpoint is uncovered and no common point exists.
inline SetValuedMap threshold_cover(double c) {
  if (!(c > 0.0 && c <= 1.0))
    throw PreconditionError("threshold_cover: c must lie in (0, 1]");
  const Space sp = Space::euclidean(2);
  SetValuedMap map;
  map.anchors = {Element(sp, {1.0, 0.0}), Element(sp, {0.0, 1.0})};
  map.member = [c](std::size_t i, const Element& z, double tol) {
    return z[i] >= c - tol;
  };
  map.defect = [c](std::size_t i, const Element& z) {
    return std::max(0.0, c - z[i]);
  };
  return map;
}

/// P(y) mapping of L = I - rotation(theta) with the four unit-circle
/// anchors; its unique common point is the origin.
inline SetValuedMap rotation_p_mapping(double theta) {
  const Space sp = Space::euclidean(2);
  ResidualOperator L{OperatorSpec::rotation(sp, theta)};
  std::vector<Element> anchors = {
      Element(sp, {1.0, 0.0}), Element(sp, {-1.0, 0.0}),
      Element(sp, {0.0, 1.0}), Element(sp, {0.0, -1.0})};
  return build_p_mapping(L, std::move(anchors));
}

}  // namespace scenarios
}  // namespace fpk
