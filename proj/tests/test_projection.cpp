#include <cmath>

#include "doctest.h"
#include "sdot/errors.hpp"
#include "sdot/projection.hpp"

using namespace sdot;

TEST_SUITE_BEGIN("projection");

TEST_CASE("box_radius: ball formulas") {
  // Quadratic cost, unit ball around the single target point 0: sup = 1/2.
  DiscreteTarget single({0.0}, 1, {1.0});
  const auto quad = CostFunction::quadratic();
  CHECK(box_radius(quad, single, CompactSet::ball({0.0}, 1.0)) ==
        doctest::Approx(0.5).epsilon(1e-15));

  // Ball(0,6) in d=3 with a vertex target at (1,1,1): 0.5*(6+sqrt(3))^2.
  DiscreteTarget corner({1.0, 1.0, 1.0, 0.0, 0.0, 0.0}, 3, {0.5, 0.5});
  const double expected = 0.5 * std::pow(6.0 + std::sqrt(3.0), 2.0);
  CHECK(box_radius(quad, corner, CompactSet::ball({0.0, 0.0, 0.0}, 6.0)) ==
        doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("box_radius: cube with power cost") {
  // K = [0,1]^10 and a target point at a vertex: sup distance = sqrt(10),
  // so the power-1.5 radius is 10^0.75.
  const int d = 10;
  Vec pts(2 * d, 0.5);
  for (int k = 0; k < d; ++k) pts[static_cast<std::size_t>(k)] = 0.0;  // vertex point
  DiscreteTarget target(std::move(pts), d, {0.5, 0.5});
  const auto cost = CostFunction::power(1.5);
  const auto k = CompactSet::cube(Vec(d, 0.0), Vec(d, 1.0));
  CHECK(box_radius(cost, target, k) ==
        doctest::Approx(std::pow(10.0, 0.75)).epsilon(1e-14));

  // Interior points stay strictly below the vertex bound.
  DiscreteTarget inner(Vec(d, 0.5), d, {1.0});
  CHECK(box_radius(cost, inner, k) < std::pow(10.0, 0.75));
}

TEST_CASE("box_radius: degenerate compacts are rejected") {
  CHECK_THROWS_AS(CompactSet::ball({0.0}, -1.0), ConfigError);
  CHECK_THROWS_AS(CompactSet::cube({1.0}, {0.0}), ConfigError);
  DiscreteTarget t({0.0}, 1, {1.0});
  CHECK_THROWS_AS(
      box_radius(CostFunction::quadratic(), t, CompactSet::ball({0.0, 0.0}, 1.0)),
      ConfigError);
}

TEST_CASE("estimate_radius: DKW sample size formula") {
  const auto src = make_uniform_cube(1, 0.0, 1.0);
  const auto est = estimate_radius(*src, 0.1, 0.05, RngStream(1));
  // ceil(32 * ln(40) / 0.01) = ceil(11804.414...) = 11805.
  CHECK(est.n_used == 11805);
  CHECK_FALSE(est.capped);
  CHECK(est.radius <= 1.0);  // bounded support caps the quantile

  const auto capped = estimate_radius(*src, 0.1, 0.05, RngStream(1), 1000);
  CHECK(capped.n_used == 1000);
  CHECK(capped.capped);

  CHECK_THROWS_AS((void)estimate_radius(*src, 0.0, 0.5, RngStream(1)),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)estimate_radius(*src, 0.5, 1.5, RngStream(1)),
                  std::invalid_argument);
}

TEST_CASE("estimate_radius: Gaussian quantile lands in the DKW band") {
  // w_min = 0.5, delta = 0.05 -> n = 473 and the target order is 0.9375.
  // DKW: |F_n - F| <= sqrt(ln(2/delta)/(2n)) = 0.0625 with prob >= 1-delta,
  // so R lies between the 0.875 and ~1.0 half-normal quantiles. Frozen band
  // endpoints: q(0.875) = 1.5341, upper guard 2.7 (beyond q(0.9999)).
  const auto src = make_gaussian(1, 0.0, 1.0);
  int hits = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto est =
        estimate_radius(*src, 0.5, 0.05, RngStream(2000 + static_cast<std::uint64_t>(trial)));
    CHECK(est.n_used == 473);
    if (est.radius >= 1.5341 && est.radius <= 2.7) ++hits;
  }
  CHECK(hits >= 95);
}

TEST_CASE("clip_to_box basics and properties") {
  const ProjectionBox box{1.0, 3};
  CHECK(clipped_to_box(box, {2.0, -3.0, 0.5}) == Vec{1.0, -1.0, 0.5});
  CHECK(clipped_to_box(box, {0.2, -0.3, 0.9}) == Vec{0.2, -0.3, 0.9});
  const ProjectionBox zero{0.0, 3};
  CHECK(clipped_to_box(zero, {2.0, -3.0, 0.5}) == Vec{0.0, 0.0, 0.0});

  RngStream rng(4);
  const ProjectionBox b{0.7, 5};
  for (int rep = 0; rep < 100; ++rep) {
    Vec g(5), h(5);
    for (auto& v : g) v = 4.0 * rng.next_double() - 2.0;
    for (auto& v : h) v = 4.0 * rng.next_double() - 2.0;
    const Vec cg = clipped_to_box(b, g);
    const Vec ch = clipped_to_box(b, h);
    CHECK(clipped_to_box(b, cg) == cg);  // idempotent
    // nonexpansive in the Euclidean norm
    double d_before = 0.0, d_after = 0.0;
    for (int i = 0; i < 5; ++i) {
      d_before += (g[static_cast<std::size_t>(i)] - h[static_cast<std::size_t>(i)]) *
                  (g[static_cast<std::size_t>(i)] - h[static_cast<std::size_t>(i)]);
      d_after += (cg[static_cast<std::size_t>(i)] - ch[static_cast<std::size_t>(i)]) *
                 (cg[static_cast<std::size_t>(i)] - ch[static_cast<std::size_t>(i)]);
    }
    CHECK(d_after <= d_before + 1e-15);
  }
}

TEST_CASE("project_gauge: examples and linearity") {
  CHECK(project_gauge({1.0, 1.0, 1.0}) == Vec{0.0, 0.0, 0.0});
  CHECK(project_gauge({1.0, 0.0}) == Vec{0.5, -0.5});

  RngStream rng(9);
  for (int rep = 0; rep < 50; ++rep) {
    Vec g(7);
    for (auto& v : g) v = rng.next_double() - 0.5;
    const Vec p = project_gauge(g);
    double sum = 0.0;
    for (double v : p) sum += v;
    CHECK(std::abs(sum) <= 1e-12 * 7);
    const Vec pp = project_gauge(p);  // idempotent up to rounding
    for (int i = 0; i < 7; ++i)
      CHECK(std::abs(pp[static_cast<std::size_t>(i)] - p[static_cast<std::size_t>(i)]) <=
            1e-15);
    // ||proj(g)|| equals the gauge seminorm of g by definition
    Vec shifted(g);
    for (auto& v : shifted) v += 3.25;
    const Vec ps = project_gauge(shifted);
    for (int i = 0; i < 7; ++i)
      CHECK(ps[static_cast<std::size_t>(i)] ==
            doctest::Approx(p[static_cast<std::size_t>(i)]).epsilon(1e-12));
  }
}

TEST_CASE("euclidean diameter") {
  const ProjectionBox box{2.0, 9};
  CHECK(box.euclidean_diameter() == doctest::Approx(2.0 * 2.0 * 3.0).epsilon(1e-15));
}

TEST_SUITE_END();
