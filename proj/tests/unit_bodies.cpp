#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "toruscover/analytic.hpp"
#include "toruscover/bodies.hpp"

using namespace toruscover;
using bodies::Body;
using Catch::Approx;

TEST_CASE("volumes of the four body families") {
  CHECK(bodies::volume(Body::ball(2, 1.0)) == Approx(kPi).epsilon(1e-12));
  CHECK(bodies::volume(Body::ball(3, 1.0)) == Approx(4.0 * kPi / 3.0).epsilon(1e-12));
  CHECK(bodies::volume(Body::ball(3, 0.620350490899400017)) == Approx(1.0).epsilon(1e-12));
  CHECK(bodies::volume(Body::cube(4, 0.5)) == Approx(0.0625).epsilon(1e-12));
  // cross-polytope: (2a)^n / n!
  CHECK(bodies::volume(Body::cross_polytope(3, 1.0)) == Approx(8.0 / 6.0).epsilon(1e-12));
  CHECK(bodies::volume(Body::cross_polytope(3, 0.908560296416069829)) ==
        Approx(1.0).epsilon(1e-12));
  // ellipsoid: nu_n * prod(axes)
  CHECK(bodies::volume(Body::ellipsoid({1.0, 2.0, 3.0})) ==
        Approx(4.0 * kPi / 3.0 * 6.0).epsilon(1e-12));
  CHECK_THROWS_AS(Body::ball(0, 1.0), input_error);
  CHECK_THROWS_AS(Body::ball(2, -1.0), input_error);
  CHECK_THROWS_AS(Body::ellipsoid({1.0, -2.0}), input_error);
}

TEST_CASE("difference body doubles every family") {
  CHECK(bodies::volume(bodies::difference_body(Body::ball(3, 0.5))) ==
        Approx(bodies::volume(Body::ball(3, 1.0))).epsilon(1e-12));
  CHECK(bodies::volume(bodies::difference_body(Body::cube(2, 1.5))) ==
        Approx(9.0).epsilon(1e-12));
  CHECK(bodies::circumradius(bodies::difference_body(Body::cross_polytope(3, 0.7))) ==
        Approx(1.4).epsilon(1e-12));
  const Body e2 = bodies::difference_body(Body::ellipsoid({1.0, 2.0}));
  CHECK(bodies::circumradius(e2) == Approx(4.0).epsilon(1e-12));
}

TEST_CASE("circumradius and inradius") {
  CHECK(bodies::circumradius(Body::ball(5, 0.3)) == Approx(0.3).epsilon(1e-12));
  CHECK(bodies::inradius(Body::ball(5, 0.3)) == Approx(0.3).epsilon(1e-12));
  CHECK(bodies::circumradius(Body::cube(4, 1.0)) == Approx(1.0).epsilon(1e-12));
  CHECK(bodies::inradius(Body::cube(4, 1.0)) == Approx(0.5).epsilon(1e-12));
  CHECK(bodies::circumradius(Body::cross_polytope(4, 0.8)) == Approx(0.8).epsilon(1e-12));
  CHECK(bodies::inradius(Body::cross_polytope(4, 0.8)) == Approx(0.4).epsilon(1e-12));
  CHECK(bodies::circumradius(Body::ellipsoid({0.5, 2.0})) == Approx(2.0).epsilon(1e-12));
  CHECK(bodies::inradius(Body::ellipsoid({0.5, 2.0})) == Approx(0.5).epsilon(1e-12));
}

TEST_CASE("membership is closed on the boundary") {
  const Vec on_ball = {0.6, 0.8};  // norm exactly 1
  CHECK(bodies::contains(Body::ball(2, 1.0), on_ball));
  CHECK_FALSE(bodies::contains(Body::ball(2, 0.999), on_ball));
  const Vec corner = {0.5, 0.5, 0.5};
  CHECK(bodies::contains(Body::cube(3, 1.0), corner));
  CHECK_FALSE(bodies::contains(Body::cube(3, 0.999), corner));
  const Vec vertex = {0.0, 0.7};
  CHECK(bodies::contains(Body::cross_polytope(2, 0.7), vertex));
  CHECK_FALSE(bodies::contains(Body::cross_polytope(2, 0.699), vertex));
  const Vec tip = {0.0, 2.0};
  CHECK(bodies::contains(Body::ellipsoid({1.0, 2.0}), tip));
}

TEST_CASE("cube translate overlap: product formula") {
  const Vec o1 = {0.5, 0.0};
  CHECK(bodies::cube_overlap_volume(1.0, o1) == Approx(0.5).epsilon(1e-12));
  const Vec o2 = {1.0, 0.3};
  CHECK(bodies::cube_overlap_volume(1.0, o2) == 0.0);
  const Vec o3 = {0.25, 0.25, 0.25};
  CHECK(bodies::cube_overlap_volume(1.0, o3) == Approx(0.421875).epsilon(1e-12));
  // scaling: overlap(s, x) = s^n * overlap(1, x/s)
  const Vec o4 = {0.6, 0.2};
  const Vec o4s = {0.3, 0.1};
  CHECK(bodies::cube_overlap_volume(2.0, o4) ==
        Approx(4.0 * bodies::cube_overlap_volume(1.0, o4s)).epsilon(1e-12));
}

TEST_CASE("ball translate overlap: frozen quadrature values") {
  CHECK(bodies::ball_overlap_volume(2, 1.0, 0.5) ==
        Approx(2.15210922502970882).epsilon(1e-10));
  CHECK(bodies::ball_overlap_volume(3, 1.0, 0.5) ==
        Approx(2.65071880146638804).epsilon(1e-10));
  CHECK(bodies::ball_overlap_volume(4, 1.0, 0.5) ==
        Approx(2.90523870194742056).epsilon(1e-10));
  CHECK(bodies::ball_overlap_volume(4, 1.0, 1.0) ==
        Approx(1.24934384893295779).epsilon(1e-10));
  CHECK(bodies::ball_overlap_volume(4, 1.0, 1.5) ==
        Approx(0.257504889802992424).epsilon(1e-10));
  CHECK(bodies::ball_overlap_volume(4, 1.0, 0.0) ==
        Approx(4.93480220054467931).epsilon(1e-12));
  CHECK(bodies::ball_overlap_volume(4, 1.0, 2.0) == 0.0);
  CHECK(bodies::ball_overlap_volume(4, 1.0, 5.0) == 0.0);
  // scaling law: overlap(n, r, d) = r^n overlap(n, 1, d/r)
  CHECK(bodies::ball_overlap_volume(3, 2.0, 1.0) ==
        Approx(8.0 * bodies::ball_overlap_volume(3, 1.0, 0.5)).epsilon(1e-10));
  // monotone decreasing in distance
  double prev = bodies::ball_overlap_volume(5, 1.0, 0.0);
  for (int k = 1; k <= 20; ++k) {
    const double cur = bodies::ball_overlap_volume(5, 1.0, 0.1 * k);
    CHECK(cur <= prev + 1e-12);
    prev = cur;
  }
}

TEST_CASE("near-translate volume difference bound (frozen margins)") {
  // nu_n - vol(B1 cap (B1 + d e1)) <= d nu_{n-1} at d = n^{-0.6}
  {
    const double d = std::pow(10.0, -0.6);
    const double value = analytic::nu_exact(10) - bodies::ball_overlap_volume(10, 1.0, d);
    const double bound = bodies::ball_symmetric_difference_bound(10, 1.0, d);
    CHECK(value == Approx(0.809265446873966708).epsilon(1e-9));
    CHECK(bound == Approx(0.828547975700291106).epsilon(1e-12));
    CHECK(value <= bound);
  }
  {
    const double d = std::pow(20.0, -0.6);
    const double value = analytic::nu_exact(20) - bodies::ball_overlap_volume(20, 1.0, d);
    const double bound = bodies::ball_symmetric_difference_bound(20, 1.0, d);
    CHECK(value == Approx(0.00756117610689374562).epsilon(1e-7));
    CHECK(bound == Approx(0.00772625764144995237).epsilon(1e-12));
    CHECK(value <= bound);
  }
}

TEST_CASE("isotropic constants (frozen)") {
  CHECK(bodies::isotropic_constant(Body::cube(3, 1.0)) ==
        Approx(0.288675134594812882).epsilon(1e-12));
  CHECK(bodies::isotropic_constant(Body::cube(7, 1.0)) ==
        Approx(0.288675134594812882).epsilon(1e-12));
  CHECK(bodies::isotropic_constant(Body::ball(3, 0.620350490899400017)) ==
        Approx(0.277429173505284618).epsilon(1e-12));
  CHECK(bodies::isotropic_constant(Body::cross_polytope(3, 0.908560296416069829)) ==
        Approx(0.287311992827249846).epsilon(1e-12));
  // equal-axes ellipsoid reduces to the ball; unequal axes are anisotropic
  CHECK(bodies::isotropic_constant(Body::ellipsoid({0.62, 0.62, 0.62})) ==
        Approx(bodies::isotropic_constant(Body::ball(3, 0.62))).epsilon(1e-12));
  CHECK_THROWS_AS(bodies::isotropic_constant(Body::ellipsoid({1.0, 2.0})), input_error);
}

TEST_CASE("far-translate overlap bound 3^(-s/8L)") {
  const double L = 1.0 / std::sqrt(12.0);
  CHECK(bodies::small_overlap_bound(L, 1.2) ==
        Approx(0.565041730914354336).epsilon(1e-12));
  CHECK_THROWS_AS(bodies::small_overlap_bound(L, 1.0), input_error);  // < 4L
  // the bound dominates the cube overlap at diagonal offsets with ||x|| >= 4L
  for (double c : {0.68, 0.75, 0.85, 0.95}) {
    const Vec off = {c, c, c};
    const double s = c * std::sqrt(3.0);
    REQUIRE(s >= 4.0 * L);
    CHECK(bodies::cube_overlap_volume(1.0, off) <= bodies::small_overlap_bound(L, s));
  }
}

TEST_CASE("overlap dispatch per body family") {
  const Vec off = {0.5, 0.0, 0.0};
  CHECK(bodies::overlap_volume(Body::cube(3, 1.0), off) == Approx(0.5).epsilon(1e-12));
  CHECK(bodies::overlap_volume(Body::ball(3, 1.0), off) ==
        Approx(2.65071880146638804).epsilon(1e-10));
  // ellipsoid reduces to a ball through the axis map
  const Vec off2 = {0.5, 0.0};
  CHECK(bodies::overlap_volume(Body::ellipsoid({1.0, 1.0}), off2) ==
        Approx(2.15210922502970882).epsilon(1e-10));
  const Vec off3 = {1.0, 0.0};
  CHECK(bodies::overlap_volume(Body::ellipsoid({2.0, 1.0}), off3) ==
        Approx(2.0 * 2.15210922502970882).epsilon(1e-10));
  CHECK_THROWS_AS(bodies::overlap_volume(Body::cross_polytope(3, 1.0), off),
                  input_error);
}

TEST_CASE("uniform body samples stay inside and are symmetric") {
  const std::vector<Body> zoo = {
      Body::ball(3, 0.7), Body::cube(4, 1.3), Body::cross_polytope(3, 0.9),
      Body::ellipsoid({0.5, 1.5})};
  for (const auto& b : zoo) {
    Stream rng(SeedSpec{42, 7});
    Vec x(b.dim()), mean(b.dim(), 0.0);
    const int trials = 4000;
    for (int i = 0; i < trials; ++i) {
      bodies::sample_point(b, rng, x);
      REQUIRE(bodies::contains(b, x));
      for (int k = 0; k < b.dim(); ++k) mean[k] += x[k];
    }
    // symmetric bodies have mean 0; allow 5 sigma with sd <= circumradius
    for (int k = 0; k < b.dim(); ++k) {
      CHECK(std::fabs(mean[k] / trials) <=
            5.0 * bodies::circumradius(b) / std::sqrt(double(trials)));
    }
  }
}

TEST_CASE("slab tail volume by Monte Carlo vs exact cube tails") {
  const Body cube = Body::cube(3, 1.0);
  Vec e1 = {1.0, 0.0, 0.0};
  const auto est = bodies::slab_tail_volume_mc(cube, bodies::SlabSpec{e1, 0.2},
                                               200000, SeedSpec{11, 3});
  // exact: vol{|x1| >= 0.2} = 1 - 0.4 = 0.6
  CHECK(std::fabs(est.value - 0.6) <= 5.0 * est.std_error);
  const auto zero = bodies::slab_tail_volume_mc(cube, bodies::SlabSpec{e1, 0.6},
                                                20000, SeedSpec{11, 4});
  CHECK(zero.value == 0.0);
  CHECK_THROWS_AS(
      bodies::slab_tail_volume_mc(cube, bodies::SlabSpec{e1, 0.2}, 100, SeedSpec{1, 1}),
      input_error);
  // direction scaling must not change the geometry (w scales with ||dir||)
  Vec e1s = {10.0, 0.0, 0.0};
  const auto est2 = bodies::slab_tail_volume_mc(cube, bodies::SlabSpec{e1s, 0.2},
                                                200000, SeedSpec{11, 3});
  CHECK(est2.value == Approx(est.value).epsilon(1e-12));
}
