#include "doctest.h"

#include <cmath>
#include <numbers>

#include "gibbslab/fekete.hpp"

using namespace gibbs;

TEST_CASE("circle log-gas optima") {
  auto s = Space::manifold(SpaceKind::Circle, 256, 8);
  EnergyModel e(s, std::make_shared<LogChordKernel>(s), BetaSchedule::linear(1.0));
  FeketeOptions opt;
  opt.restarts = 3;
  auto r3 = fekete_minimize(e, 3, {}, opt);
  CHECK(r3.value == doctest::Approx(-std::log(3.0) / 6.0).epsilon(1e-9));
  // Equilateral: consecutive gaps of 2 pi / 3.
  for (std::size_t i = 0; i + 1 < 3; ++i)
    CHECK(r3.best[i + 1].c[0] - r3.best[i].c[0] == doctest::Approx(2.0 * std::numbers::pi / 3.0).epsilon(1e-6));
  CHECK(r3.gradient_norm < 1e-8);
  for (int n : {2, 7, 20}) {
    auto r = fekete_minimize(e, n, {}, opt);
    CHECK(std::fabs(r.value + std::log(double(n)) / (2.0 * n)) < 1e-6);
    CHECK(r.restarts == 3);
    CHECK(r.value == *std::min_element(r.finals.begin(), r.finals.end()));
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] <= r.trace[i - 1]);
    for (std::size_t i = 1; i < r.best.size(); ++i) CHECK(r.best[i - 1].c[0] <= r.best[i].c[0]);
  }
}

TEST_CASE("two particles find the unique minimizing pair") {
  auto box = Space::box(0.0, 1.0, 1, 200);
  // Zero exactly at {x, y} = {0.2, 0.7}, positive elsewhere.
  EnergyModel e(box, std::make_shared<ExpressionKernel>("((x1 + x2) - 0.9)^2 + ((x1 - x2)^2 - 0.25)^2"),
                BetaSchedule::constant(1.0));
  // Grid oracle over all node pairs.
  double best = kInf;
  std::pair<double, double> where;
  for (const auto& p : box->nodes())
    for (const auto& q : box->nodes()) {
      const double w = e.w_n(std::vector<Point>{p, q});
      if (w < best) {
        best = w;
        where = {std::min(p.c[0], q.c[0]), std::max(p.c[0], q.c[0])};
      }
    }
  CHECK(where.first == doctest::Approx(0.2).epsilon(0.02));
  CHECK(where.second == doctest::Approx(0.7).epsilon(0.02));
  auto r = fekete_minimize(e, 2);
  CHECK(r.best[0].c[0] == doctest::Approx(0.2).epsilon(1e-4));
  CHECK(r.best[1].c[0] == doctest::Approx(0.7).epsilon(1e-4));
  CHECK(r.value <= best);
}

TEST_CASE("constant kernel infima") {
  auto s = Space::manifold(SpaceKind::Circle, 64, 4);
  EnergyModel e(s, std::make_shared<ConstantPairKernel>(2.0), BetaSchedule::constant(1.0));
  FeketeOptions opt;
  opt.restarts = 1;
  auto t = infima_convergence_table(e, {2, 4, 8, 16}, 0.2, {}, opt);
  CHECK(t.macro == doctest::Approx(1.0));
  for (const auto& row : t.rows) {
    CHECK(row.inf_n == doctest::Approx(2.0 * binomial(row.n, 2) / (row.n * row.n)));
    CHECK(row.gap == doctest::Approx(std::fabs(2.0 * binomial(row.n, 2) / (row.n * row.n) - 1.0)));
  }
  CHECK(t.slope < 0.0);
  CHECK(t.passes);
}

TEST_CASE("finite space infima by exhaustive search") {
  auto s = Space::finite({0.2, 0.3, 0.5});
  std::vector<std::vector<double>> g{{0.0, -0.6, 0.8}, {-0.6, 0.0, 0.3}, {0.8, 0.3, 0.0}};
  EnergyModel e(s, std::make_shared<TableKernel>(g), BetaSchedule::constant(1.0));
  auto t = infima_convergence_table(e, {2, 4, 6, 8, 10, 12}, 1e-3);
  // Mass split evenly between atoms 0 and 1: W = -0.6 / 4.
  CHECK(t.macro == doctest::Approx(-0.15).epsilon(1e-9));
  for (const auto& row : t.rows) CHECK(row.gap < 1e-9);
  auto r = fekete_minimize(e, 5);
  CHECK(r.exhaustive);
  CHECK(std::isnan(r.gradient_norm));
  // Brute force over all 3^5 ordered configurations.
  double brute = kInf;
  for (int code = 0; code < 243; ++code) {
    std::vector<Point> cfg;
    for (int c = code, i = 0; i < 5; ++i, c /= 3) cfg.push_back(s->node(std::size_t(c % 3)));
    brute = std::min(brute, e.w_n(cfg));
  }
  CHECK(r.value == doctest::Approx(brute).epsilon(1e-14));
}

TEST_CASE("a nonnegative functional never lowers the infimum") {
  auto s = Space::manifold(SpaceKind::Circle, 128, 8);
  EnergyModel e(s, std::make_shared<LogChordKernel>(s), BetaSchedule::linear(1.0));
  FeketeOptions opt;
  opt.restarts = 2;
  const int n = 6;
  const double plain = fekete_minimize(e, n, {}, opt).value;
  auto lin = Functional::integral([](const Point& p) { return 0.3 * (1.0 + std::cos(p.c[0])); });
  auto with_lin = fekete_minimize(e, n, lin, opt);
  CHECK(with_lin.value >= plain);
  // The tilt pushes particles away from theta = 0.
  double mean_cos = 0.0;
  for (const auto& p : with_lin.best) mean_cos += std::cos(p.c[0]) / n;
  CHECK(mean_cos < 0.0);
  auto dens = Functional::of_density(
      [](const GridMeasure& mu) {
        double s2 = 0.0;
        for (double r : mu.density()) s2 += r * r;
        return 1e-3 * s2 / double(mu.density().size());
      },
      0.3);
  auto with_dens = fekete_minimize(e, n, dens, opt);
  CHECK(with_dens.value >= plain);
  CHECK(std::isnan(with_dens.gradient_norm));
}

TEST_CASE("four points on the sphere") {
  auto s = Space::manifold(SpaceKind::Sphere, 3, 4);
  EnergyModel e(s, std::make_shared<LogChordKernel>(s), BetaSchedule::linear(1.0));
  FeketeOptions opt;
  opt.restarts = 3;
  auto r = fekete_minimize(e, 4, {}, opt);
  // Regular tetrahedron, edge sqrt(8/3).
  CHECK(r.value == doctest::Approx(-6.0 / 16.0 * 0.5 * std::log(8.0 / 3.0)).epsilon(1e-8));
}

TEST_CASE("macroscopic infimum of the circle log-gas") {
  auto s = Space::manifold(SpaceKind::Circle, 512, 8);
  EnergyModel e(s, std::make_shared<LogChordKernel>(s), BetaSchedule::linear(1.0));
  CHECK(std::fabs(macro_infimum(e)) < 1e-3);
  EnergyModel riesz(s, std::make_shared<ExpressionKernel>("cos(x1 - x2)"), BetaSchedule::constant(1.0));
  CHECK_THROWS_AS(macro_infimum(riesz), Error);
}
