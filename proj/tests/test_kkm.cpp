#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "fpk/kkm.hpp"
#include "fpk/operators.hpp"
#include "fpk/rng.hpp"
#include "fpk/space.hpp"

using namespace fpk;

namespace {

// Pascal-triangle binomial, independent of any library helper.
std::uint64_t binom(std::size_t a, std::size_t b) {
  if (b > a) return 0;
  std::vector<std::uint64_t> row(a + 1, 0);
  row[0] = 1;
  for (std::size_t r = 1; r <= a; ++r)
    for (std::size_t c = std::min(r, b); c > 0; --c) row[c] += row[c - 1];
  return row[b];
}

std::vector<Element> basis_anchors(std::size_t count) {
  const Space sp = Space::euclidean(count);
  std::vector<Element> out;
  for (std::size_t i = 0; i < count; ++i) {
    Element e = zero(sp);
    e[i] = 1.0;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

TEST_CASE("barycentric grid has C(m+n, n) points inside the hull") {
  for (const std::size_t count : {2u, 3u, 4u}) {
    for (const std::size_t m : {1u, 2u, 5u, 9u}) {
      auto grid = make_barycentric_grid(basis_anchors(count), m);
      CHECK(grid.points.size() == binom(m + count - 1, count - 1));
      for (const auto& p : grid.points) {
        double sum = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
          CHECK(p[i] >= -1e-15);
          sum += p[i];
        }
        CHECK(sum == Catch::Approx(1.0).margin(1e-12));
      }
    }
  }
  // resolution 1 enumerates exactly the anchors
  auto grid1 = make_barycentric_grid(basis_anchors(3), 1);
  REQUIRE(grid1.points.size() == 3);
}

TEST_CASE("canonical simplex cover passes at desk scale") {
  auto map = scenarios::canonical_cover(2);
  auto rep = check_kkm_covering(map, 20, 1e-9);
  CHECK(rep.covering_ok);
  CHECK(rep.violations.empty());

  // oracle: on the face spanned by S the coordinates sum to 1, so the
  // largest coordinate over S is at least 1/|S| >= 1/3
  auto grid = make_barycentric_grid(map.anchors, 20);
  for (const auto& z : grid.points) {
    double mx = 0.0;
    for (std::size_t i = 0; i < 3; ++i) mx = std::max(mx, z[i]);
    CHECK(mx >= 1.0 / 3.0 - 1e-12);
  }
}

TEST_CASE("whole-hull sets cover trivially and intersect at the first point") {
  SetValuedMap map;
  map.anchors = basis_anchors(3);
  map.member = [](std::size_t, const Element&, double) { return true; };
  auto rep = check_kkm_covering(map, 10, 0.0);
  CHECK(rep.covering_ok);
  auto w = find_intersection(map, 10, 0.0);
  CHECK(w.within_tol);
  CHECK(w.max_defect == 0.0);
}

TEST_CASE("threshold cover fails with the midpoint as witness") {
  auto map = scenarios::threshold_cover(0.99);
  auto rep = check_kkm_covering(map, 20, 1e-9);
  CHECK_FALSE(rep.covering_ok);
  REQUIRE_FALSE(rep.violations.empty());
  bool midpoint_seen = false;
  for (const auto& v : rep.violations)
    if (std::abs(v.point[0] - 0.5) < 1e-12 && std::abs(v.point[1] - 0.5) < 1e-12)
      midpoint_seen = true;
  CHECK(midpoint_seen);

  auto w = find_intersection(map, 20, 1e-6);
  CHECK_FALSE(w.within_tol);
  // best possible point is the midpoint, 0.49 away from both thresholds
  CHECK(w.max_defect == Catch::Approx(0.49).margin(1e-12));
}

TEST_CASE("violations are ordered by subset then grid enumeration") {
  auto map = scenarios::threshold_cover(0.99);
  auto rep = check_kkm_covering(map, 4, 0.0);
  REQUIRE(rep.violations.size() == 3);
  // the two-anchor face enumerates k_0 = 0..4; uncovered interior points
  // appear at k_0 = 1, 2, 3, i.e. x-coordinate 0.25, 0.5, 0.75
  const double expect[] = {0.25, 0.5, 0.75};
  for (std::size_t v = 0; v < 3; ++v) {
    CHECK(rep.violations[v].subset == std::vector<std::size_t>{0, 1});
    CHECK(rep.violations[v].point[0] == Catch::Approx(expect[v]).margin(1e-12));
  }
}

TEST_CASE("canonical cover intersects at the barycenter") {
  auto map = scenarios::canonical_cover(2);
  auto w = find_intersection(map, 30, 1e-12);
  CHECK(w.within_tol);
  CHECK(w.max_defect <= 1e-12);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(w.point[i] == Catch::Approx(1.0 / 3.0).margin(1e-15));
}

TEST_CASE("P-mapping of L = I is the disc on the diameter segment") {
  auto sp = Space::euclidean(2);
  ResidualOperator L{OperatorSpec::constant(zero(sp))};  // L = I
  std::vector<Element> anchors = {
      Element(sp, {1.0, 0.0}), Element(sp, {-1.0, 0.0}),
      Element(sp, {0.0, 1.0}), Element(sp, {0.0, -1.0})};
  auto map = build_p_mapping(L, anchors);

  // geometric oracle: <z, z - y> <= 0 is the disc of diameter [0, y]
  detail::Rng rng(5);
  for (int t = 0; t < 300; ++t) {
    Element z(sp, {rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)});
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      const Element center = 0.5 * anchors[i];
      const double gap = distance(z, center) - 0.5 * norm(anchors[i]);
      if (std::abs(gap) < 1e-12) continue;  // boundary: either answer is fine
      CHECK(map.member(i, z, 0.0) == (gap < 0.0));
    }
  }

  // the four discs meet only at the origin
  auto w = find_intersection(map, 20, 1e-12);
  CHECK(w.within_tol);
  CHECK(w.max_defect == 0.0);
  CHECK(norm(w.point) <= 1e-15);
}

TEST_CASE("rotation P-mapping covers and pins the origin") {
  auto map = scenarios::rotation_p_mapping(M_PI / 2.0);
  auto rep = check_kkm_covering(map, 20, 1e-9);
  CHECK(rep.covering_ok);

  auto w = find_intersection(map, 20, 1e-8);
  CHECK(w.within_tol);
  CHECK(norm(w.point) <= 2.0 / 20.0);  // within one grid spacing of the origin

  auto full = run_kkm(map, 20, 1e-8);
  CHECK(full.covering_ok);
  REQUIRE(full.intersection_witness.has_value());
  CHECK(full.intersection_witness->within_tol);
}

TEST_CASE("P-mappings of monotone residuals always cover") {
  auto sp = Space::euclidean(2);
  std::vector<Element> anchors = {
      Element(sp, {1.0, 0.0}), Element(sp, {-0.5, 0.8}),
      Element(sp, {0.0, -1.0})};
  std::vector<ResidualOperator> ops;
  ops.emplace_back(OperatorSpec::constant(zero(sp)));
  ops.emplace_back(OperatorSpec::rotation(sp, M_PI / 6.0));
  ops.emplace_back(OperatorSpec::rotation(sp, M_PI));
  ops.emplace_back(OperatorSpec::averaged(
      OperatorSpec::identity(sp), OperatorSpec::rotation(sp, M_PI / 2.0), 0.5));
  for (const auto& L : ops) {
    auto rep = check_kkm_covering(build_p_mapping(L, anchors), 10, 1e-8);
    CHECK(rep.covering_ok);
  }
}

TEST_CASE("defect bisection fallback matches the closed form") {
  auto map = scenarios::canonical_cover(2);
  SetValuedMap blind = map;
  blind.defect = nullptr;  // force the bisection path
  auto w_closed = find_intersection(map, 15, 1e-6);
  auto w_blind = find_intersection(blind, 15, 1e-6);
  CHECK(w_blind.within_tol == w_closed.within_tol);
  CHECK(w_blind.max_defect == Catch::Approx(w_closed.max_defect).margin(1e-9));
  CHECK(distance(w_blind.point, w_closed.point) <= 1e-12);
}

TEST_CASE("scan preconditions are enforced") {
  auto map = scenarios::canonical_cover(2);
  CHECK_THROWS_AS(check_kkm_covering(map, 0, 1e-9), PreconditionError);
  CHECK_THROWS_AS(check_kkm_covering(map, 10, -1.0), PreconditionError);
  CHECK_THROWS_AS(find_intersection(map, 0, 1e-9), PreconditionError);

  // ten basis anchors exceed the subset-enumeration cap
  SetValuedMap big;
  big.anchors = basis_anchors(10);
  big.member = [](std::size_t, const Element&, double) { return true; };
  CHECK_THROWS_AS(check_kkm_covering(big, 2, 0.0), SizeError);
  CHECK_THROWS_AS(find_intersection(big, 2, 0.0), SizeError);

  SetValuedMap tiny;
  tiny.anchors = {zero(Space::euclidean(2))};
  tiny.member = big.member;
  CHECK_THROWS_AS(check_kkm_covering(tiny, 2, 0.0), PreconditionError);

  SetValuedMap nofn;
  nofn.anchors = basis_anchors(2);
  CHECK_THROWS_AS(check_kkm_covering(nofn, 2, 0.0), PreconditionError);

  auto sp = Space::euclidean(2);
  ResidualOperator L{OperatorSpec::identity(sp)};
  CHECK_THROWS_AS(build_p_mapping(L, {zero(Space::euclidean(3))}), DimensionError);
  CHECK_THROWS_AS(scenarios::canonical_cover(0), PreconditionError);
  CHECK_THROWS_AS(scenarios::threshold_cover(0.0), PreconditionError);
  CHECK_THROWS_AS(scenarios::threshold_cover(1.5), PreconditionError);
}
