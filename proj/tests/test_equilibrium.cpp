#include "doctest.h"

#include <cmath>
#include <numbers>

#include "gibbslab/equilibrium.hpp"

using namespace gibbs;

namespace {

EnergyModel green_model(std::shared_ptr<const Space> s, BackgroundCharge charge, int k) {
  auto g = std::make_shared<GreenModel>(s, std::move(charge), k);
  return EnergyModel(s, std::make_shared<GreenKernel>(g), BetaSchedule::constant(1.0));
}

GridMeasure bumpy(std::shared_ptr<const Space> s) {
  std::vector<double> m(s->size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& p = s->node(i).c;
    m[i] = s->weight(i) * (1.0 + 0.4 * std::sin(3.0 * p[0] + 1.0) + 0.2 * std::cos(5.0 * p[1]));
  }
  return GridMeasure::from_masses(s, m);
}

}  // namespace

TEST_CASE("uniform charge on the torus gives the uniform equilibrium") {
  auto s = Space::manifold(SpaceKind::Torus, 32, 8);
  FreeEnergyModel f(green_model(s, BackgroundCharge::uniform(*s), 8), 2.0);
  auto r = minimize_free_energy(f, bumpy(s));
  CHECK(r.converged);
  CHECK(r.residual < 1e-6);
  double worst = 0.0;
  for (double d : r.mu.density()) worst = std::max(worst, std::fabs(d - 1.0));
  CHECK(worst < 1e-5);
  // The trace never increases.
  for (std::size_t i = 1; i < r.trace.size(); ++i)
    CHECK(r.trace[i] <= r.trace[i - 1] + 1e-14 * (1.0 + std::fabs(r.trace[i - 1])));
}

TEST_CASE("non-uniform charge on the sphere") {
  auto s = Space::manifold(SpaceKind::Sphere, 4, 12);
  auto charge = BackgroundCharge::from_function(
      *s, [&](const Point& p) { return 1.0 + 0.5 * s->basis_value(2, p); });
  FreeEnergyModel f(green_model(s, charge, 12), 4.0);
  auto r = minimize_free_energy(f, GridMeasure::uniform(s));
  CHECK(r.residual < 1e-3);
  // Negative control: the uniform measure does not solve the equation.
  CHECK(mean_field_residual(f, GridMeasure::uniform(s)).residual > 0.01);
  // The equilibrium leans toward the charge.
  CHECK(r.mu.integrate(std::vector<double>(charge.density().begin(), charge.density().end())) >
        1.0);
}

TEST_CASE("zero interaction on a finite set returns pi") {
  auto s = Space::finite({0.5, 0.3, 0.2});
  EnergyModel e(s, std::make_shared<ConstantPairKernel>(0.0), BetaSchedule::constant(1.0));
  FreeEnergyModel f(e, 1.5);
  auto r = minimize_free_energy(f, GridMeasure::from_masses(s, std::vector<double>{0.1, 0.1, 0.8}));
  CHECK(r.converged);
  for (std::size_t i = 0; i < 3; ++i) CHECK(r.mu.masses()[i] == doctest::Approx(s->weight(i)).epsilon(1e-8));
  CHECK(r.value == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  CHECK(std::isnan(r.residual));
}

TEST_CASE("semicircle at zero temperature") {
  auto box = Space::box(-3.0, 3.0, 1, 300);
  EnergyModel base(box, std::make_shared<LogChordKernel>(box, 2.0), BetaSchedule::constant(1.0));
  EuclideanData data;
  data.v = Potential("x^2 / 2");
  auto weak = euclidean_transform(base, data, 300);
  FreeEnergyModel f(weak, kInf);
  EquilibriumOptions opt;
  opt.max_steps = 500;
  auto r = minimize_free_energy(f, GridMeasure::uniform(weak.space_ptr()), opt);
  const auto& sp = weak.space();
  const auto m = r.mu.masses();
  const double h = 6.0 / 300.0;
  double l1 = 0.0;
  for (std::size_t i = 0; i < sp.size(); ++i) {
    const double x = sp.node(i).c[0];
    const double exact = std::fabs(x) < 2.0 ? std::sqrt(4.0 - x * x) / (2.0 * std::numbers::pi) : 0.0;
    l1 += std::fabs(m[i] / h - exact) * h;
  }
  CHECK(l1 < 0.02);
  // Logarithmic energy of the semicircle with this field is 3/4.
  CHECK(r.value == doctest::Approx(0.75).epsilon(5e-3));
}

TEST_CASE("zero temperature needs a strictly convex kernel") {
  auto s = Space::finite({0.5, 0.5});
  EnergyModel e(s, std::make_shared<ConstantPairKernel>(1.0), BetaSchedule::constant(1.0));
  FreeEnergyModel f(e, kInf);
  CHECK_THROWS_AS(minimize_free_energy(f, GridMeasure::uniform(s)), Error);
}

TEST_CASE("directional derivatives at the equilibrium") {
  auto s = Space::manifold(SpaceKind::Circle, 256, 16);
  auto charge = BackgroundCharge::from_function(
      *s, [](const Point& p) { return 1.0 + 0.6 * std::cos(p.c[0]); });
  FreeEnergyModel f(green_model(s, charge, 16), 3.0);
  auto eq = minimize_free_energy(f, GridMeasure::uniform(s));
  REQUIRE(eq.converged);
  auto other = bumpy(s);
  auto d = directional_derivative_check(f, eq.mu, other);
  // At the minimizer the first variation vanishes.
  CHECK(std::fabs(d.analytic) < 1e-8);
  CHECK(d.curvature > 0.0);
  for (std::size_t i = 0; i < d.steps.size(); ++i) {
    const double err = std::fabs(d.numeric[i] - d.analytic);
    CHECK(err <= d.steps[i] * d.curvature * 0.5 * 1.01 + 1e-9);
  }
  // Away from the equilibrium the derivative is still matched.
  auto mid = eq.mu.mix(other, 0.5);
  auto d2 = directional_derivative_check(f, mid, GridMeasure::uniform(s), {1e-4, 1e-5});
  for (std::size_t i = 0; i < d2.steps.size(); ++i)
    CHECK(std::fabs(d2.numeric[i] - d2.analytic) <= d2.steps[i] * std::fabs(d2.curvature) + 1e-8);
}

TEST_CASE("free energy is convex along segments and the minimizer is unique") {
  auto s = Space::manifold(SpaceKind::Circle, 128, 12);
  FreeEnergyModel f(green_model(s, BackgroundCharge::uniform(*s), 12), 1.0);
  auto a = bumpy(s);
  auto b = GridMeasure::uniform(s).mix(a, -0.5);
  for (double t : {0.25, 0.5, 0.75}) {
    const double lhs = free_energy(f, a.mix(b, t));
    CHECK(lhs <= (1 - t) * free_energy(f, a) + t * free_energy(f, b) + 1e-12);
  }
  auto r1 = minimize_free_energy(f, a);
  auto r2 = minimize_free_energy(f, b);
  double diff = 0.0;
  for (std::size_t i = 0; i < s->size(); ++i)
    diff = std::max(diff, std::fabs(r1.mu.density()[i] - r2.mu.density()[i]));
  CHECK(diff < 1e-6);
}
