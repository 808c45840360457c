#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fpk/convex.hpp"
#include "fpk/rng.hpp"
#include "fpk/space.hpp"

using namespace fpk;

namespace {

Element e2(double x, double y) {
  return Element(Space::euclidean(2), {x, y});
}

Element random_element(const Space& sp, detail::Rng& rng, double scale) {
  Element x = zero(sp);
  for (double& c : x.coords) c = rng.uniform(-scale, scale);
  return x;
}

// Quarter-disc oracle: nearest point of {‖p‖<=1, p>=0} to x, by direct
// case analysis (clamp to the nonnegative quadrant, then radial scaling).
Element quarter_disc_oracle(const Element& x) {
  Element q = x;
  q[0] = std::max(q[0], 0.0);
  q[1] = std::max(q[1], 0.0);
  const double n = norm(q);
  if (n > 1.0) q = (1.0 / n) * q;
  return q;
}

}  // namespace

TEST_CASE("ball projection is radial scaling") {
  auto M = ConvexSet::ball(e2(0, 0), 1.0);
  Element p = M.project(e2(2, 0));
  CHECK(p[0] == Catch::Approx(1.0).margin(1e-15));
  CHECK(p[1] == Catch::Approx(0.0).margin(1e-15));

  // interior point is untouched
  Element q = M.project(e2(0.3, -0.2));
  CHECK(q[0] == 0.3);
  CHECK(q[1] == -0.2);

  Element r = M.project(e2(3, 4));
  CHECK(norm(r) == Catch::Approx(1.0).margin(1e-14));
  CHECK(r[0] == Catch::Approx(0.6).margin(1e-14));
  CHECK(r[1] == Catch::Approx(0.8).margin(1e-14));
}

TEST_CASE("box projection is componentwise clamp") {
  auto M = ConvexSet::box(e2(0, 0), e2(1, 1));
  Element p = M.project(e2(2, -1));
  CHECK(p[0] == 1.0);
  CHECK(p[1] == 0.0);
  Element q = M.project(e2(0.5, 0.25));
  CHECK(q[0] == 0.5);
  CHECK(q[1] == 0.25);
}

TEST_CASE("standard simplex projection by sort-and-threshold") {
  auto M = ConvexSet::simplex({e2(1, 0), e2(0, 1)});
  Element p = M.project(e2(1, 1));
  CHECK(p[0] == Catch::Approx(0.5).margin(1e-15));
  CHECK(p[1] == Catch::Approx(0.5).margin(1e-15));

  // beyond a vertex the projection lands on that vertex
  Element q = M.project(e2(2, -3));
  CHECK(q[0] == Catch::Approx(1.0).margin(1e-15));
  CHECK(q[1] == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("general simplex projection matches hand geometry") {
  // Triangle (0,0), (2,0), (0,2): projecting (2,2) hits the midpoint (1,1)
  // of the hypotenuse x+y=2.
  auto M = ConvexSet::simplex({e2(0, 0), e2(2, 0), e2(0, 2)});
  Element p = M.project(e2(2, 2));
  CHECK(p[0] == Catch::Approx(1.0).margin(1e-12));
  CHECK(p[1] == Catch::Approx(1.0).margin(1e-12));

  // interior point
  Element q = M.project(e2(0.5, 0.5));
  CHECK(q[0] == Catch::Approx(0.5).margin(1e-12));
  CHECK(q[1] == Catch::Approx(0.5).margin(1e-12));

  // far past the vertex (2,0)
  Element r = M.project(e2(5, -1));
  CHECK(r[0] == Catch::Approx(2.0).margin(1e-12));
  CHECK(r[1] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("segment projection in R^3") {
  auto sp = Space::euclidean(3);
  auto M = ConvexSet::simplex(
      {Element(sp, {0, 0, 0}), Element(sp, {1, 1, 1})});
  // Projection of (1,0,0) onto the segment t*(1,1,1) is t = 1/3.
  Element p = M.project(Element(sp, {1, 0, 0}));
  CHECK(p[0] == Catch::Approx(1.0 / 3).margin(1e-12));
  CHECK(p[1] == Catch::Approx(1.0 / 3).margin(1e-12));
  CHECK(p[2] == Catch::Approx(1.0 / 3).margin(1e-12));
}

TEST_CASE("contains uses the projection distance") {
  auto M = ConvexSet::ball(e2(0, 0), 1.0);
  CHECK(M.contains(e2(0.5, 0), 0.0));
  CHECK_FALSE(M.contains(e2(1.0 + 1e-6, 0), 1e-9));
  CHECK(M.contains(e2(1.0 + 1e-6, 0), 1e-3));
  CHECK_THROWS_AS(M.contains(e2(0, 0), -1.0), PreconditionError);
}

TEST_CASE("construction rejects bad data") {
  CHECK_THROWS_AS(ConvexSet::ball(e2(0, 0), 0.0), PreconditionError);
  CHECK_THROWS_AS(ConvexSet::ball(e2(0, 0), -1.0), PreconditionError);
  CHECK_THROWS_AS(ConvexSet::box(e2(1, 0), e2(0, 1)), PreconditionError);
  // collinear vertices are affinely dependent
  CHECK_THROWS_AS(ConvexSet::simplex({e2(0, 0), e2(1, 1), e2(2, 2)}),
                  PreconditionError);
  CHECK_THROWS_AS(ConvexSet::simplex({e2(0, 0)}), PreconditionError);
  CHECK_THROWS_AS(ConvexSet::intersection({}), PreconditionError);
}

TEST_CASE("disjoint intersection fails its feasibility certificate") {
  auto A = ConvexSet::ball(e2(0, 0), 1.0);
  auto B = ConvexSet::ball(e2(5, 0), 1.0);
  CHECK_THROWS_AS(ConvexSet::intersection({A, B}), ProjectionError);
}

TEST_CASE("Dykstra reproduces the quarter-disc projection") {
  auto disc = ConvexSet::ball(e2(0, 0), 1.0);
  auto quad = ConvexSet::box(e2(0, 0), e2(10, 10));
  auto M = ConvexSet::intersection({disc, quad});

  // (2,2) projects onto the arc at (1/sqrt2, 1/sqrt2).
  Element p = M.project(e2(2, 2));
  const double inv_sqrt2 = 0.7071067811865476;
  CHECK(p[0] == Catch::Approx(inv_sqrt2).margin(1e-9));
  CHECK(p[1] == Catch::Approx(inv_sqrt2).margin(1e-9));

  detail::Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    Element x = random_element(Space::euclidean(2), rng, 3.0);
    Element got = M.project(x);
    Element want = quarter_disc_oracle(x);
    CHECK(distance(got, want) <= 1e-8);
    CHECK(M.contains(got, 1e-10));
  }
}

TEST_CASE("transversal lens corner is recovered") {
  // Unit balls centered (0,0) and (1,0) overlap in a lens whose upper
  // corner is (0.5, sqrt(3)/2); (0.2, 2) projects onto that corner.
  auto A = ConvexSet::ball(e2(0, 0), 1.0);
  auto B = ConvexSet::ball(e2(1, 0), 1.0);
  auto M = ConvexSet::intersection({A, B});
  Element p = M.project(e2(0.2, 2.0));
  CHECK(p[0] == Catch::Approx(0.5).margin(1e-8));
  CHECK(p[1] == Catch::Approx(0.8660254037844386).margin(1e-8));
}

TEST_CASE("tangency defeats the feasibility certificate") {
  // Balls touching at a single point: Dykstra's sweeps approach the
  // tangent point too slowly, and the 1e-10 certificate must refuse.
  auto A = ConvexSet::ball(e2(0, 0), 1.0);
  auto B = ConvexSet::ball(e2(2, 0), 1.0);
  auto M = ConvexSet::intersection({A, B});  // origin certifies exactly
  CHECK_THROWS_AS(M.project(e2(0.3, 0.8)), ProjectionError);
}

TEST_CASE("sampling is deterministic and stays inside the set") {
  auto sp5 = Space::euclidean(5);
  std::vector<ConvexSet> sets = {
      ConvexSet::ball(e2(0, 0), 1.0),
      ConvexSet::box(e2(0, 0), e2(1, 1)),
      ConvexSet::simplex({e2(1, 0), e2(0, 1)}),
      ConvexSet::simplex({e2(0, 0), e2(2, 0), e2(0, 2)}),
      ConvexSet::intersection({ConvexSet::ball(e2(0, 0), 1.0),
                               ConvexSet::box(e2(0, 0), e2(10, 10))}),
      ConvexSet::ball(zero(sp5), 2.5),
  };
  for (const auto& M : sets) {
    auto a = M.sample_points(100, 42);
    auto b = M.sample_points(100, 42);
    auto c = M.sample_points(100, 43);
    REQUIRE(a.size() == 100);
    bool all_equal = true, any_differs = false;
    for (std::size_t i = 0; i < 100; ++i) {
      if (a[i].coords != b[i].coords) all_equal = false;
      if (a[i].coords != c[i].coords) any_differs = true;
      CHECK(M.contains(a[i], 1e-10));
    }
    CHECK(all_equal);
    CHECK(any_differs);
  }
  CHECK_THROWS_AS(sets[0].sample_points(0, 1), PreconditionError);
}

TEST_CASE("ball samples cover the radius, not just the surface") {
  auto M = ConvexSet::ball(e2(0, 0), 1.0);
  auto pts = M.sample_points(200, 7);
  int inner_half = 0;
  for (const auto& p : pts) {
    CHECK(norm(p) <= 1.0 + 1e-10);
    if (norm(p) < 0.5) ++inner_half;
  }
  // r = u^{1/2} puts 25% of mass below radius 0.5 in 2-D
  CHECK(inner_half > 20);
  CHECK(inner_half < 80);
}

TEST_CASE("sampling works in discretized L2") {
  auto sp = Space::discretized_l2(make_grid(0.0, 1.0, 16, QuadRule::GaussLegendre));
  auto M = ConvexSet::ball(zero(sp), 2.0);
  for (const auto& p : M.sample_points(50, 3)) {
    CHECK(norm(p) <= 2.0 + 1e-10);
    CHECK(p.space == sp);
  }
}

TEST_CASE("projection properties hold on sampled pairs") {
  auto spL2 = Space::discretized_l2(make_grid(0.0, 1.0, 8, QuadRule::Trapezoid));
  std::vector<ConvexSet> sets = {
      ConvexSet::ball(e2(0.5, -0.25), 2.0),
      ConvexSet::box(e2(-1, -2), e2(2, 1)),
      ConvexSet::simplex({e2(1, 0), e2(0, 1)}),
      ConvexSet::simplex({e2(-1, 0), e2(2, 0.5), e2(0, 3)}),
      ConvexSet::intersection({ConvexSet::ball(e2(0, 0), 2.0),
                               ConvexSet::box(e2(-1, -1), e2(1, 1))}),
      ConvexSet::ball(zero(spL2), 1.5),
  };
  detail::Rng rng(2024);
  for (const auto& M : sets) {
    const Space& sp = M.space();
    auto members = M.sample_points(40, 99);
    for (int t = 0; t < 120; ++t) {
      Element x = random_element(sp, rng, 4.0);
      Element y = random_element(sp, rng, 4.0);
      Element px = M.project(x);
      Element py = M.project(y);
      // non-expansive
      CHECK(distance(px, py) <= distance(x, y) + 1e-12);
      // idempotent
      CHECK(distance(M.project(px), px) <= 1e-10);
      // variational characterization against sampled members
      const Element& z = members[static_cast<std::size_t>(t) % members.size()];
      CHECK(inner(x - px, z - px) <= 1e-8);
    }
  }
}

TEST_CASE("extreme points and diameter bounds") {
  auto box = ConvexSet::box(e2(0, 0), e2(1, 2));
  auto corners = box.extreme_points();
  REQUIRE(corners.size() == 4);
  CHECK(box.diameter_bound() == Catch::Approx(std::sqrt(5.0)).margin(1e-15));

  auto sx = ConvexSet::simplex({e2(1, 0), e2(0, 1)});
  REQUIRE(sx.extreme_points().size() == 2);
  CHECK(sx.diameter_bound() == Catch::Approx(std::sqrt(2.0)).margin(1e-15));

  auto ball = ConvexSet::ball(e2(0, 0), 3.0);
  CHECK(ball.extreme_points().empty());
  CHECK(ball.diameter_bound() == 6.0);

  auto inter = ConvexSet::intersection({ball, box});
  CHECK(inter.diameter_bound() <= std::sqrt(5.0) + 1e-15);
}

TEST_CASE("space mismatches are rejected") {
  auto M = ConvexSet::ball(e2(0, 0), 1.0);
  auto sp3 = Space::euclidean(3);
  CHECK_THROWS_AS(M.project(zero(sp3)), DimensionError);
  CHECK_THROWS_AS(ConvexSet::box(e2(0, 0), zero(sp3)), DimensionError);
  auto B3 = ConvexSet::ball(zero(sp3), 1.0);
  CHECK_THROWS_AS(ConvexSet::intersection({M, B3}), DimensionError);
}
