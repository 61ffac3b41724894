#include "doctest.h"

#include <cmath>
#include <numbers>

#include "gibbslab/measures.hpp"

using namespace gibbs;

namespace {

GridMeasure random_grid_measure(const std::shared_ptr<const Space>& s, Rng& rng) {
  std::vector<double> m(s->size());
  for (double& v : m) v = 0.05 + uniform01(rng);
  return GridMeasure::from_masses(s, m);
}

std::vector<Point> equispaced(int n) {
  std::vector<Point> pts;
  for (int j = 0; j < n; ++j) pts.push_back(Point{{2.0 * std::numbers::pi * j / n, 0, 0}});
  return pts;
}

}  // namespace

TEST_CASE("relative entropy examples") {
  auto s = Space::manifold(SpaceKind::Circle, 64, 8);
  CHECK(relative_entropy(GridMeasure::uniform(s)) == 0.0);

  std::vector<double> half{0.5, 0.5}, point{1.0, 0.0};
  CHECK(relative_entropy(point, half) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(relative_entropy(half, point) == kInf);

  auto e = EmpiricalMeasure::from_points(s, equispaced(3));
  CHECK(relative_entropy(e) == kInf);
  CHECK_THROWS_AS(relative_entropy(std::vector<double>{1.0}, half), Error);
}

TEST_CASE("relative entropy is nonnegative and jointly convex") {
  auto s = Space::manifold(SpaceKind::Torus, 16, 4);
  Rng rng = make_stream(7, "entropy");
  for (int trial = 0; trial < 100; ++trial) {
    auto a = random_grid_measure(s, rng);
    auto b = random_grid_measure(s, rng);
    CHECK(relative_entropy(a) > 0.0);
    for (double t : {0.25, 0.5, 0.75}) {
      const double mixed = relative_entropy(b.mix(a, t));
      CHECK(mixed <= t * relative_entropy(a) + (1 - t) * relative_entropy(b) + 1e-14);
    }
  }
}

TEST_CASE("grid measure validation") {
  auto s = Space::manifold(SpaceKind::Circle, 64, 8);
  CHECK_THROWS_AS(GridMeasure::from_density(s, std::vector<double>(64, 2.0)), Error);
  std::vector<double> neg(64, 1.0);
  neg[0] = -1.0;
  neg[1] = 3.0;
  CHECK_THROWS_AS(GridMeasure::from_density(s, neg), Error);
  CHECK_THROWS_AS(EmpiricalMeasure::from_points(s, {}), Error);
}

TEST_CASE("Legendre identity examples") {
  std::vector<double> pi{0.5, 0.5};
  SUBCASE("constant shift") {
    std::vector<double> g{1.5, 1.5};
    auto r = legendre_check(pi, g);
    CHECK(r.lhs == doctest::Approx(-1.5).epsilon(1e-14));
    CHECK(r.rhs_closed == doctest::Approx(-1.5).epsilon(1e-14));
    CHECK(r.tilt[0] == doctest::Approx(0.5));
  }
  SUBCASE("g = (0, 1)") {
    std::vector<double> g{0.0, 1.0};
    auto r = legendre_check(pi, g);
    CHECK(std::fabs(r.lhs - std::log((1.0 + std::exp(-1.0)) / 2.0)) < 1e-14);
    CHECK(std::fabs(r.lhs - (-0.379885)) < 1e-6);
    CHECK(std::fabs(r.rhs_closed - r.lhs) < 1e-12);
    CHECK(std::fabs(r.rhs_grid - r.lhs) < 1e-4);
  }
  SUBCASE("g = (0, inf)") {
    std::vector<double> g{0.0, kInf};
    auto r = legendre_check(pi, g);
    CHECK(std::fabs(r.lhs - std::log(0.5)) < 1e-15);
    CHECK(r.tilt[1] == 0.0);
    CHECK(r.grid_minimizer[0] == 1.0);
    CHECK(std::fabs(r.rhs_grid - r.lhs) < 1e-12);
  }
  SUBCASE("all infinite") {
    std::vector<double> g{kInf, kInf};
    CHECK_THROWS_AS(legendre_check(pi, g), Error);
  }
}

TEST_CASE("simplex grid oracle improves with refinement") {
  std::vector<double> pi{0.2, 0.3, 0.5}, g{0.4, -0.7, 1.1};
  auto coarse = legendre_check(pi, g, 10);
  auto fine = legendre_check(pi, g, 200);
  CHECK(std::fabs(fine.rhs_grid - fine.lhs) <= std::fabs(coarse.rhs_grid - coarse.lhs) + 1e-15);
  CHECK(std::fabs(fine.rhs_grid - fine.lhs) < 1e-10);
}

TEST_CASE("bounded-Lipschitz distance") {
  auto s = Space::manifold(SpaceKind::Circle, 256, 16);
  auto u = GridMeasure::uniform(s);
  CHECK(bounded_lipschitz_distance(u, u) == 0.0);

  double previous = kInf;
  for (int n : {4, 8, 16, 32}) {
    auto e = EmpiricalMeasure::from_points(s, equispaced(n));
    const double d = bounded_lipschitz_distance(e, u);
    CHECK(d < previous);
    CHECK(d <= 4.0 / n);
    previous = d;
  }

  // Two atoms at grid nodes a few cells apart.
  const Point x = s->node(0), y = s->node(5);
  const double r = s->distance(x, y);
  auto a = EmpiricalMeasure::from_points(s, {x});
  auto b = EmpiricalMeasure::from_points(s, {y});
  CHECK(bounded_lipschitz_distance(a, b) >= r / 2.0);

  Rng rng = make_stream(11, "bl");
  for (int t = 0; t < 20; ++t) {
    auto p = random_grid_measure(s, rng), q = random_grid_measure(s, rng),
         w = random_grid_measure(s, rng);
    const double pq = bounded_lipschitz_distance(p, q);
    CHECK(pq == bounded_lipschitz_distance(q, p));
    CHECK(pq <= bounded_lipschitz_distance(p, w) + bounded_lipschitz_distance(w, q) + 1e-15);
  }
}

TEST_CASE("grid projection") {
  auto s = Space::manifold(SpaceKind::Circle, 256, 16);
  auto one = EmpiricalMeasure::from_points(s, {Point{{1.0, 0, 0}}});
  auto wide = grid_projection(one, s->diameter());
  CHECK(relative_entropy(wide) < 0.05);

  const double h = 0.3;
  auto spread = grid_projection(EmpiricalMeasure::from_points(s, equispaced(8)), h);
  CHECK(relative_entropy(spread) < relative_entropy(grid_projection(one, h)));
  CHECK_THROWS_AS(grid_projection(one, 0.0), Error);
}
