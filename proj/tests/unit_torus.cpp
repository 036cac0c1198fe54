#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <optional>

#include "toruscover/bodies.hpp"
#include "toruscover/nets.hpp"
#include "toruscover/pointset.hpp"
#include "toruscover/rng.hpp"
#include "toruscover/torus.hpp"

using namespace toruscover;
using bodies::Body;
using torus::CandidateStream;
using torus::PointSet;
using torus::Torus;
using Catch::Approx;

TEST_CASE("torus construction and basic geometry") {
  const Torus t({4.0, 4.0});
  CHECK(t.dim() == 2);
  CHECK(t.volume() == Approx(16.0).epsilon(1e-12));
  CHECK(t.min_side() == Approx(4.0).epsilon(1e-12));
  CHECK_THROWS_AS(Torus({1.0, -1.0}), input_error);
  CHECK_THROWS_AS(Torus({}), input_error);
}

TEST_CASE("fundamental-domain reduction") {
  const Torus t({4.0, 4.0});
  Vec p = {5.0, -1.0};
  t.reduce_inplace(p);
  CHECK(p[0] == Approx(1.0).epsilon(1e-12));
  CHECK(p[1] == Approx(3.0).epsilon(1e-12));
  Vec q = {4.0, 4.0};
  t.reduce_inplace(q);
  CHECK(q[0] == 0.0);
  CHECK(q[1] == 0.0);
  Vec r = {1.25, 3.75};
  Vec r2 = r;
  t.reduce_inplace(r2);
  CHECK(r2[0] == r[0]);
  CHECK(r2[1] == r[1]);
  // idempotent on random points
  Stream rng(SeedSpec{5, 0});
  for (int i = 0; i < 500; ++i) {
    Vec x = {20.0 * (rng.next_unit() - 0.5), 20.0 * (rng.next_unit() - 0.5)};
    t.reduce_inplace(x);
    Vec y = x;
    t.reduce_inplace(y);
    REQUIRE(x[0] == y[0]);
    REQUIRE(x[1] == y[1]);
    REQUIRE(x[0] >= 0.0);
    REQUIRE(x[0] < 4.0);
  }
}

TEST_CASE("quotient metric") {
  const Torus circle({1.0});
  const Vec a = {0.0}, b = {0.9};
  CHECK(circle.distance(a, b) == Approx(0.1).epsilon(1e-12));
  CHECK(circle.distance(b, a) == Approx(0.1).epsilon(1e-12));
  CHECK(circle.distance(a, a) == 0.0);
  const Torus t({4.0, 4.0});
  const Vec x = {0.0, 0.0}, y = {2.0, 2.0};
  CHECK(t.distance(x, y) == Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
  // metric properties on random triples
  Stream rng(SeedSpec{6, 0});
  for (int i = 0; i < 2000; ++i) {
    Vec u = {4.0 * rng.next_unit(), 4.0 * rng.next_unit()};
    Vec v = {4.0 * rng.next_unit(), 4.0 * rng.next_unit()};
    Vec w = {4.0 * rng.next_unit(), 4.0 * rng.next_unit()};
    REQUIRE(t.distance(u, v) == Approx(t.distance(v, u)).margin(1e-12));
    REQUIRE(t.distance(u, w) <= t.distance(u, v) + t.distance(v, w) + 1e-12);
    REQUIRE(t.distance(u, v) <= t.distance_l1(u, v) + 1e-12);
  }
  CHECK(circle.distance_l1(a, b) == Approx(0.1).epsilon(1e-12));
}

TEST_CASE("symmetric difference representative") {
  const Torus t({4.0, 6.0});
  Vec out(2);
  t.symmetric_diff(Vec{0.5, 0.5}, Vec{3.9, 5.9}, out);
  CHECK(out[0] == Approx(0.6).epsilon(1e-9));
  CHECK(out[1] == Approx(0.6).epsilon(1e-9));
  Stream rng(SeedSpec{7, 0});
  for (int i = 0; i < 1000; ++i) {
    Vec a = {4.0 * rng.next_unit(), 6.0 * rng.next_unit()};
    Vec b = {4.0 * rng.next_unit(), 6.0 * rng.next_unit()};
    t.symmetric_diff(a, b, out);
    REQUIRE(out[0] >= -2.0);
    REQUIRE(out[0] < 2.0);
    REQUIRE(out[1] >= -3.0);
    REQUIRE(out[1] < 3.0);
    // the representative matches the quotient distance
    REQUIRE(std::sqrt(sq(out[0]) + sq(out[1])) == Approx(t.distance(a, b)).margin(1e-12));
  }
}

TEST_CASE("packing torus detection with closed tangency") {
  CHECK_FALSE(torus::is_packing_torus(Torus({4.0, 4.0}), Body::ball(2, 2.0)));
  CHECK(torus::is_packing_torus(Torus({4.01, 4.01}), Body::ball(2, 2.0)));
  CHECK_FALSE(torus::is_packing_torus(Torus({2.0, 2.0}), Body::cube(2, 2.0)));
  CHECK(torus::is_packing_torus(Torus({2.01, 2.01}), Body::cube(2, 2.0)));
  CHECK(torus::is_packing_torus(Torus({10.0, 10.0}), Body::cross_polytope(2, 1.0)));
  // mixed sides: the short axis decides
  CHECK_FALSE(torus::is_packing_torus(Torus({8.0, 4.0}), Body::ball(2, 2.0)));
}

TEST_CASE("packing torus of the difference body gives unique overlapping lifts") {
  const double r = 0.9;
  const Torus t({3.7, 3.7, 3.7});
  const Body k = Body::ball(3, r);
  REQUIRE(torus::is_packing_torus(t, bodies::difference_body(k)));
  Stream rng(SeedSpec{8, 0});
  Vec diff(3);
  for (int i = 0; i < 2000; ++i) {
    Vec p = {3.7 * rng.next_unit(), 3.7 * rng.next_unit(), 3.7 * rng.next_unit()};
    Vec q = {3.7 * rng.next_unit(), 3.7 * rng.next_unit(), 3.7 * rng.next_unit()};
    t.symmetric_diff(p, q, diff);
    int overlapping_lifts = 0;
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b)
        for (int c = -1; c <= 1; ++c) {
          const double dx = diff[0] + 3.7 * a;
          const double dy = diff[1] + 3.7 * b;
          const double dz = diff[2] + 3.7 * c;
          if (std::sqrt(sq(dx) + sq(dy) + sq(dz)) <= 2.0 * r) ++overlapping_lifts;
        }
    REQUIRE(overlapping_lifts <= 1);
  }
}

TEST_CASE("point set: reduction on insert and exact range queries") {
  const Torus t({2.0, 3.0});
  PointSet ps(t);
  ps.add(Vec{2.5, -0.5});
  CHECK(ps.point(0)[0] == Approx(0.5).epsilon(1e-12));
  CHECK(ps.point(0)[1] == Approx(2.5).epsilon(1e-12));

  Stream rng(SeedSpec{9, 0});
  for (int i = 0; i < 400; ++i)
    ps.add(Vec{2.0 * rng.next_unit(), 3.0 * rng.next_unit()});

  for (int q = 0; q < 300; ++q) {
    Vec c = {2.0 * rng.next_unit(), 3.0 * rng.next_unit()};
    const double R = 1.8 * rng.next_unit();
    long long brute = 0;
    std::size_t brute_nearest = 0;
    double best = kNaN;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const double d = t.distance(c, ps.point(i));
      if (d <= R) ++brute;
      if (!(d >= best)) {  // strictly better (NaN-safe first pass)
        best = d;
        brute_nearest = i;
      }
    }
    REQUIRE(ps.count_within(c, R) == brute);
    REQUIRE(ps.exists_within(c, R) == (brute > 0));
    long long visited = 0;
    ps.for_each_within(c, R, [&](std::size_t) { ++visited; });
    REQUIRE(visited == brute);
    const auto idx = ps.nearest(c);
    REQUIRE(idx.has_value());
    REQUIRE(t.distance(c, ps.point(*idx)) == Approx(best).margin(1e-12));
    // certified nearest can only differ from brute force by an exact tie
    if (*idx != brute_nearest)
      REQUIRE(t.distance(c, ps.point(*idx)) ==
              t.distance(c, ps.point(brute_nearest)));
  }

  const PointSet empty(t);
  CHECK_FALSE(empty.nearest(Vec{0.0, 0.0}).has_value());
}

TEST_CASE("nearest tie-break is lexicographic by coordinates") {
  const Torus circle({1.0});
  PointSet ps(circle);
  ps.add(Vec{0.5});
  ps.add(Vec{0.0});
  const auto idx = ps.nearest(Vec{0.25});
  REQUIRE(idx.has_value());
  // both candidates sit at distance 0.25; the lexicographically smaller
  // coordinate vector (0.0) wins regardless of insertion order
  CHECK(ps.point(*idx)[0] == 0.0);
}

TEST_CASE("probe nets: construction examples and certification") {
  const Torus circle({1.0});
  const auto net1 = torus::build_probe_net(circle, 0.25, torus::NetNorm::l2);
  REQUIRE(net1.size() == 2);
  Vec p(1);
  net1.point(0, p);
  CHECK(p[0] == 0.0);
  net1.point(1, p);
  CHECK(p[0] == Approx(0.5).epsilon(1e-12));
  CHECK(net1.covering_radius() == Approx(0.25).epsilon(1e-12));

  // h at least half the diameter -> a single point suffices
  const auto net2 = torus::build_probe_net(circle, 0.5, torus::NetNorm::l2);
  CHECK(net2.size() == 1);

  const Torus t44({4.0, 4.0});
  const auto net3 = torus::build_probe_net(t44, 0.1, torus::NetNorm::linf);
  CHECK(net3.dims() == std::vector<long>{20, 20});
  CHECK(net3.covering_radius() == Approx(0.1).epsilon(1e-12));

  // certification: every random point is within h of the materialized net
  const auto net4 = torus::build_probe_net(t44, 0.35, torus::NetNorm::l2);
  const PointSet pts = net4.materialize();
  Stream rng(SeedSpec{10, 0});
  for (int i = 0; i < 10000; ++i) {
    Vec c = {4.0 * rng.next_unit(), 4.0 * rng.next_unit()};
    const auto idx = pts.nearest(c);
    REQUIRE(t44.distance(c, pts.point(*idx)) <= net4.covering_radius() + 1e-12);
  }

  CHECK_THROWS_AS(torus::build_probe_net(t44, 1e-6, torus::NetNorm::l2, 1000),
                  resource_error);
  CHECK_THROWS_AS(torus::build_probe_net(t44, -0.1, torus::NetNorm::l2), input_error);
  const auto big = torus::build_probe_net(t44, 0.002, torus::NetNorm::linf);
  CHECK_THROWS_AS(big.materialize(100), resource_error);
}

TEST_CASE("greedy packing on the circle (frozen grid-stream output)") {
  const Torus circle({1.0});
  const auto one = torus::greedy_maximal_packing(circle, 0.6, CandidateStream::grid(0.01));
  CHECK(one.size() == 1);

  const auto ps = torus::greedy_maximal_packing(circle, 0.3, CandidateStream::grid(0.01));
  REQUIRE(ps.size() == 3);
  CHECK(ps.point(0)[0] == Approx(0.0).margin(1e-12));
  CHECK(ps.point(1)[0] == Approx(0.31).margin(1e-9));
  CHECK(ps.point(2)[0] == Approx(0.62).margin(1e-9));
}

TEST_CASE("greedy packing: separation and maximality properties") {
  const Torus t({3.0, 3.0});
  const double sep = 0.5;
  const auto ps = torus::greedy_maximal_packing(
      t, sep, CandidateStream::grid(sep / (2.0 * std::sqrt(2.0))));
  REQUIRE(ps.size() >= 4);
  for (std::size_t i = 0; i < ps.size(); ++i)
    for (std::size_t j = i + 1; j < ps.size(); ++j)
      REQUIRE(t.distance(ps.point(i), ps.point(j)) > sep);
  // maximality: every grid candidate lies within sep of an accepted point,
  // and any torus point is within half a cell diagonal of a candidate, so
  // the covering radius is at most sep + step * sqrt(n) / 2
  const double step = sep / (2.0 * std::sqrt(2.0));
  const double cover_bound = sep + step * std::sqrt(2.0) / 2.0;
  Stream rng(SeedSpec{12, 0});
  for (int i = 0; i < 10000; ++i) {
    Vec c = {3.0 * rng.next_unit(), 3.0 * rng.next_unit()};
    const auto idx = ps.nearest(c);
    REQUIRE(t.distance(c, ps.point(*idx)) <= cover_bound + 1e-12);
  }
  // seeded uniform stream: deterministic and separated
  const auto u1 = torus::greedy_maximal_packing(
      t, sep, CandidateStream::seeded_uniform(SeedSpec{77, 1}, 5000));
  const auto u2 = torus::greedy_maximal_packing(
      t, sep, CandidateStream::seeded_uniform(SeedSpec{77, 1}, 5000));
  REQUIRE(u1.size() == u2.size());
  for (std::size_t i = 0; i < u1.size(); ++i) {
    REQUIRE(u1.point(i)[0] == u2.point(i)[0]);
    REQUIRE(u1.point(i)[1] == u2.point(i)[1]);
  }
}

TEST_CASE("greedy packing in the quotient l1 metric") {
  const Torus t({3.0, 3.0});
  const double sep = 0.8;
  const auto ps = torus::greedy_maximal_packing(t, sep, CandidateStream::grid(0.1),
                                                torus::SeparationNorm::l1);
  REQUIRE(ps.size() >= 4);
  for (std::size_t i = 0; i < ps.size(); ++i)
    for (std::size_t j = i + 1; j < ps.size(); ++j)
      REQUIRE(t.distance_l1(ps.point(i), ps.point(j)) > sep);
}

TEST_CASE("nearest assignment with lexicographic ties") {
  const Torus circle({1.0});
  PointSet to(circle);
  to.add(Vec{0.0});
  to.add(Vec{0.5});

  PointSet id(circle);
  id.add(Vec{0.0});
  id.add(Vec{0.5});
  const auto self = torus::nearest_assignment(id, to);
  CHECK(self.max_distance == 0.0);
  CHECK(self.target_index[0] == 0);
  CHECK(self.target_index[1] == 1);

  PointSet from(circle);
  from.add(Vec{0.2});
  const auto near = torus::nearest_assignment(from, to);
  CHECK(near.target_index[0] == 0);
  CHECK(near.max_distance == Approx(0.2).epsilon(1e-12));

  PointSet tie(circle);
  tie.add(Vec{0.25});
  const auto t2 = torus::nearest_assignment(tie, to);
  CHECK(to.point(t2.target_index[0])[0] == 0.0);
  CHECK(t2.max_distance == Approx(0.25).epsilon(1e-12));

  const PointSet none(circle);
  CHECK_THROWS_AS(torus::nearest_assignment(from, none), input_error);
}

TEST_CASE("fine-to-coarse assignment distance is bounded by the coarse separation") {
  const Torus t({2.0, 2.0});
  const auto fine = torus::greedy_maximal_packing(t, 0.1, CandidateStream::grid(0.03));
  const auto coarse = torus::greedy_maximal_packing(t, 0.4, CandidateStream::grid(0.1));
  const auto phi = torus::nearest_assignment(fine, coarse);
  CHECK(phi.max_distance <= 0.4 + 1e-12);
}
