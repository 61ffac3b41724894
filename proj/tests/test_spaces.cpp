#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "gibbslab/spaces.hpp"

using namespace gibbs;

namespace {

// Closed form of sum_{m>=1} 2 cos(m d) / m^2 on [0, 2pi].
double circle_series_closed(double d) {
  return std::numbers::pi * std::numbers::pi / 3.0 - std::numbers::pi * d + d * d / 2.0;
}

double circle_series_brute(double d, long terms) {
  // Summed from the smallest terms upward to limit rounding.
  double s = 0.0;
  for (long m = terms; m >= 1; --m) s += 2.0 * std::cos(static_cast<double>(m) * d) / (static_cast<double>(m) * m);
  return s;
}

}  // namespace

TEST_CASE("circle spectrum is m squared") {
  auto s = Space::manifold(SpaceKind::Circle, 256, 64);
  CHECK(s->basis_size() == 129);
  CHECK(s->basis(0).eigenvalue == 0.0);
  for (std::size_t k = 1; k < s->basis_size(); ++k) {
    const double m = static_cast<double>((k + 1) / 2);
    CHECK(s->basis(k).eigenvalue == m * m);
    CHECK(s->basis(k).eigenvalue >= s->basis(k - 1).eigenvalue);
  }
  double total = 0.0;
  for (double w : s->weights()) total += w;
  CHECK(std::fabs(total - 1.0) < 1e-12);
}

TEST_CASE("torus grid weights are uniform") {
  auto s = Space::manifold(SpaceKind::Torus, 64, 16);
  CHECK(s->size() == 4096);
  for (double w : s->weights()) CHECK(w == doctest::Approx(1.0 / 4096).epsilon(1e-15));
  for (std::size_t k = 1; k < s->basis_size(); ++k)
    CHECK(s->basis(k).eigenvalue >= s->basis(k - 1).eigenvalue);
}

TEST_CASE("sphere harmonics are orthonormal on the icosahedral grid") {
  auto s = Space::manifold(SpaceKind::Sphere, 4, 12);
  const std::size_t b = s->basis_size();
  CHECK(b == 169);
  double total = 0.0;
  for (double w : s->weights()) {
    CHECK(w > 0.0);
    total += w;
  }
  CHECK(std::fabs(total - 1.0) < 1e-12);
  double worst_off = 0.0, worst_diag = 0.0;
  for (std::size_t a = 0; a < b; ++a)
    for (std::size_t c = a; c < b; ++c) {
      double g = 0.0;
      for (std::size_t i = 0; i < s->size(); ++i)
        g += s->weight(i) * s->basis_at_node(i, a) * s->basis_at_node(i, c);
      if (a == c) worst_diag = std::max(worst_diag, std::fabs(g - 1.0));
      else worst_off = std::max(worst_off, std::fabs(g));
    }
  CHECK(worst_off < 1e-3);
  CHECK(worst_diag < 1e-3);
}

TEST_CASE("aliasing guard and bad kinds") {
  CHECK_THROWS_AS(Space::manifold(SpaceKind::Circle, 16, 8), Error);
  CHECK_THROWS_AS(Space::manifold(SpaceKind::Circle, 4, 1), Error);
  CHECK_THROWS_AS(Space::manifold(SpaceKind::Box, 16, 2), Error);
  CHECK_THROWS_AS(space_kind_from_string("hyperbolic"), Error);
}

TEST_CASE("circle Green function matches the brute-force series") {
  // Antipodal truncation error is ~ 1/K^2, so K must be large for 1e-8.
  auto s = Space::manifold(SpaceKind::Circle, 40000, 16000);
  GreenModel g(s, BackgroundCharge::uniform(*s), 16000);
  const double d = std::numbers::pi;
  const double h = g.evaluate(Point{{0, 0, 0}}, Point{{d, 0, 0}});
  const double brute = circle_series_brute(d, 1'000'000);
  // The series oracle and the closed form agree with each other.
  CHECK(std::fabs(brute - circle_series_closed(d)) < 1e-9);
  CHECK(std::fabs(h - brute) < 1e-8);
}

TEST_CASE("Green symmetry, diagonal and identity") {
  auto s = Space::manifold(SpaceKind::Circle, 256, 32);
  GreenModel g(s, BackgroundCharge::uniform(*s), 32);
  const Point x{{0.3, 0, 0}}, y{{2.1, 0, 0}};
  CHECK(g.evaluate(x, y) == g.evaluate(y, x));
  CHECK_THROWS_AS(g.evaluate(x, x), Error);

  std::vector<double> one{1.0};
  CHECK(g.identity_residual(one, x) == 0.0);
  std::vector<double> cosine{0.0, 1.0 / std::sqrt(2.0)};
  CHECK(g.identity_residual(cosine, x) < 1e-8);
  std::vector<double> too_high(s->basis_size(), 0.0);
  too_high.back() = 1.0;
  GreenModel low(s, BackgroundCharge::uniform(*s), 8);
  CHECK_THROWS_AS(low.identity_residual(too_high, x), Error);
}

TEST_CASE("sphere identity for Y10") {
  auto s = Space::manifold(SpaceKind::Sphere, 4, 12);
  GreenModel g(s, BackgroundCharge::uniform(*s), 12);
  std::vector<double> f(4, 0.0);
  f[2] = 1.0;  // l = 1, m = 0
  CHECK(g.identity_residual(f, s->node(17)) < 1e-6);
}

TEST_CASE("non-uniform charge on the torus is normalized") {
  auto s = Space::manifold(SpaceKind::Torus, 64, 16);
  auto charge = BackgroundCharge::from_function(*s, [](const Point& p) {
    return 1.0 + 0.5 * std::cos(2.0 * std::numbers::pi * p.c[0]);
  });
  GreenModel g(s, charge, 16);
  double worst = 0.0;
  for (std::size_t i = 0; i < s->size(); i += 37) {
    auto r = g.row(s->node(i));
    double integral = 0.0;
    for (std::size_t j = 0; j < s->size(); ++j)
      integral += s->weight(j) * charge.density()[j] * r[j];
    worst = std::max(worst, std::fabs(integral));
  }
  CHECK(worst < 1e-8);
  CHECK(std::isfinite(g.lower_bound()));
}

TEST_CASE("uniform charge gives mean-zero kernel rows") {
  auto s = Space::manifold(SpaceKind::Sphere, 3, 8);
  GreenModel g(s, BackgroundCharge::uniform(*s), 8);
  auto r = g.row(s->node(5));
  double integral = 0.0;
  for (std::size_t j = 0; j < s->size(); ++j) integral += s->weight(j) * r[j];
  CHECK(std::fabs(integral) < 1e-10);
}

TEST_CASE("truncations K and 2K differ by a constant on resolved modes") {
  auto s = Space::manifold(SpaceKind::Circle, 512, 32);
  auto charge = BackgroundCharge::from_function(*s, [](const Point& p) {
    return 1.0 + 0.4 * std::sin(p.c[0]);
  });
  GreenModel a(s, charge, 16), b(s, charge, 32);
  // Project the difference of rows onto order <= 16 and look at the spread.
  const std::size_t keep = s->basis_count_up_to(16);
  double worst = 0.0;
  for (std::size_t i = 0; i < s->size(); i += 31) {
    auto ra = a.row(s->node(i));
    auto rb = b.row(s->node(i));
    std::vector<double> diff(s->size());
    for (std::size_t j = 0; j < s->size(); ++j) diff[j] = rb[j] - ra[j];
    std::vector<double> coeff(keep);
    s->project(diff, coeff);
    for (std::size_t k = 1; k < keep; ++k) worst = std::max(worst, std::fabs(coeff[k]));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("cache round trip") {
  auto s = Space::manifold(SpaceKind::Sphere, 3, 6);
  auto charge = BackgroundCharge::from_function(*s, [](const Point& p) { return 1.0 + 0.5 * p.c[2]; });
  GreenModel g(s, charge, 6);
  const std::string path = "gibbslab_cache_test.bin";
  SpaceCache::write(path, *s, &g);
  auto g2 = SpaceCache::read_green(path);
  CHECK(g2.space().size() == s->size());
  const Point x = s->node(3), y = s->node(40);
  CHECK(g2.evaluate(x, y) == g.evaluate(x, y));
  std::remove(path.c_str());
  CHECK_THROWS_AS(SpaceCache::read_space("does-not-exist.bin"), Error);
}
