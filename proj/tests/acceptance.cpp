// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "gibbslab/equilibrium.hpp"
#include "gibbslab/fekete.hpp"
#include "gibbslab/ldp.hpp"
#include "gibbslab/sampler.hpp"

using namespace gibbs;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

EnergyModel green_model(std::shared_ptr<const Space> s, BackgroundCharge charge, int k,
                        double beta = 1.0) {
  auto g = std::make_shared<GreenModel>(s, std::move(charge), k);
  return EnergyModel(s, std::make_shared<GreenKernel>(g), BetaSchedule::constant(beta));
}

// Green identity over 100 random points and coefficient vectors.
Outcome green_identity() {
  struct Case {
    std::string label;
    std::shared_ptr<const Space> space;
    int k;
  };
  std::vector<Case> cases{{"circle", Space::manifold(SpaceKind::Circle, 256, 32), 32},
                          {"torus", Space::manifold(SpaceKind::Torus, 32, 8), 8},
                          {"sphere", Space::manifold(SpaceKind::Sphere, 4, 12), 12}};
  double worst = 0.0;
  Rng rng = make_stream(101, "acceptance-green");
  for (const auto& c : cases) {
    const auto& s = *c.space;
    std::vector<BackgroundCharge> charges{BackgroundCharge::uniform(s)};
    // 1 + 0.5 (first non-constant basis function), normalized on the grid.
    std::vector<double> dens(s.size());
    double mass = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      dens[i] = 1.0 + 0.5 * s.basis_value(1, s.node(i));
      mass += s.weight(i) * dens[i];
    }
    for (double& d : dens) d /= mass;
    charges.push_back(BackgroundCharge::from_values(s, dens));
    for (const auto& charge : charges) {
      GreenModel g(c.space, charge, c.k);
      const std::size_t count = s.basis_count_up_to(c.k);
      for (int t = 0; t < 100; ++t) {
        const Point x = s.sample_reference(rng);
        std::vector<double> coeffs(count);
        for (double& a : coeffs) a = standard_normal(rng);
        worst = std::max(worst, g.identity_residual(coeffs, x));
      }
    }
  }
  return {worst < 1e-6, "max residual " + fmt("%.3g", worst) + " on circle, torus, sphere, two charges each"};
}

// Closed-form and grid Legendre values against log sum pi e^-g.
Outcome legendre_identity() {
  Rng rng = make_stream(102, "acceptance-legendre");
  double closed = 0.0, grid = 0.0;
  int with_inf = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t m = 2 + uniform_index(rng, 3);
    std::vector<double> pi(m), g(m);
    double total = 0.0;
    for (double& p : pi) total += (p = 0.05 + uniform01(rng));
    for (double& p : pi) p /= total;
    bool any_finite = false;
    for (double& v : g) {
      v = uniform01(rng) < 0.2 ? kInf : 3.0 * standard_normal(rng);
      any_finite = any_finite || std::isfinite(v);
    }
    if (!any_finite) g[0] = standard_normal(rng);
    if (std::isinf(*std::max_element(g.begin(), g.end()))) ++with_inf;
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) sum += pi[i] * std::exp(-g[i]);
    const double oracle = std::log(sum);
    auto r = legendre_check(pi, g);
    closed = std::max(closed, std::fabs(r.rhs_closed - oracle));
    grid = std::max(grid, std::fabs(r.rhs_grid - oracle));
  }
  return {closed < 1e-12 && grid < 1e-4 && with_inf > 0,
          "closed " + fmt("%.3g", closed) + ", grid " + fmt("%.3g", grid) + ", " +
              std::to_string(with_inf) + " cases with +inf"};
}

// Circle log-gas optima for every n in 2..64.
Outcome fekete_regression() {
  auto s = Space::manifold(SpaceKind::Circle, 256, 8);
  EnergyModel e(s, std::make_shared<LogChordKernel>(s), BetaSchedule::linear(1.0));
  FeketeOptions opt;
  opt.restarts = 2;
  double worst = 0.0;
  bool decreasing = true;
  double prev = kInf;
  for (int n = 2; n <= 64; ++n) {
    const double v = fekete_minimize(e, n, {}, opt).value;
    worst = std::max(worst, std::fabs(v + std::log(double(n)) / (2.0 * n)));
    const double gap = std::fabs(v);
    if (n >= 4 && !(gap < prev)) decreasing = false;
    prev = gap;
  }
  return {worst < 1e-6 && decreasing,
          "max error " + fmt("%.3g", worst) + (decreasing ? ", gaps strictly decreasing" : ", gaps not decreasing")};
}

// Infima tables: circle log-gas and a 3-atom space.
Outcome infima_tables() {
  auto s = Space::manifold(SpaceKind::Circle, 512, 8);
  EnergyModel e(s, std::make_shared<LogChordKernel>(s), BetaSchedule::linear(1.0));
  FeketeOptions opt;
  opt.restarts = 2;
  auto t = infima_convergence_table(e, {2, 4, 8, 16, 32, 64}, 0.04, {}, opt);
  const double last = t.rows.back().gap;

  // Zero diagonal: W_n has no self pairs, so the lattice can reach W's minimum.
  Rng rng = make_stream(104, "acceptance-three-atom");
  std::vector<std::vector<double>> g(3, std::vector<double>(3, 0.0));
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b) g[a][b] = g[b][a] = 2.0 * uniform01(rng) - 1.0;
  auto atoms = Space::finite({1.0 / 3, 1.0 / 3, 1.0 / 3});
  EnergyModel f(atoms, std::make_shared<TableKernel>(g), BetaSchedule::constant(1.0));
  std::vector<int> ns;
  for (int n = 2; n <= 12; ++n) ns.push_back(n);
  auto t3 = infima_convergence_table(f, ns, 1e-3);
  const double last3 = t3.rows.back().gap;
  return {t.slope < 0.0 && last < 0.04 && last3 < 1e-3,
          "circle slope " + fmt("%.3g", t.slope) + ", gap(64) " + fmt("%.4f", last) + "; 3-atom gap(12) " +
              fmt("%.3g", last3)};
}

// Exact Laplace values on two atoms.
Outcome laplace_finite() {
  auto s = Space::finite({0.5, 0.5});
  EnergyModel e(s, std::make_shared<TableKernel>(std::vector<std::vector<double>>{{0, 1}, {1, 0}}),
                BetaSchedule::constant(1.0));
  auto f = Functional::integral([](const Point& p) { return p.c[0]; });
  std::vector<int> ns;
  for (int n = 2; n <= 12; ++n) ns.push_back(n);
  auto v = laplace_verify_finite(e, f, ns, 0.05);
  bool decreasing = true;
  for (std::size_t i = 1; i < v.gaps.size(); ++i) decreasing = decreasing && v.gaps[i] < v.gaps[i - 1];

  EnergyModel zero(s, std::make_shared<ConstantPairKernel>(0.0), BetaSchedule::constant(1.0));
  auto z = laplace_verify_finite(zero, {}, ns, 0.05);
  bool exact = z.limit == 0.0;
  for (double g : z.gaps) exact = exact && g == 0.0;
  return {decreasing && v.gaps.back() < 0.05 && exact,
          "final gap " + fmt("%.4f", v.gaps.back()) + (decreasing ? ", decreasing" : ", not decreasing") +
              (exact ? "; G = 0, f = 0 gaps exactly 0" : "; G = 0, f = 0 gaps nonzero")};
}

// Semicircle at zero temperature and the uniform torus equilibrium.
Outcome equilibrium_oracles() {
  auto box = Space::box(-3.0, 3.0, 1, 300);
  EnergyModel base(box, std::make_shared<LogChordKernel>(box, 2.0), BetaSchedule::constant(1.0));
  EuclideanData data;
  data.v = Potential("x^2 / 2");
  auto weak = euclidean_transform(base, data, 300);
  EquilibriumOptions opt;
  opt.max_steps = 500;
  auto r = minimize_free_energy(FreeEnergyModel(weak, kInf), GridMeasure::uniform(weak.space_ptr()), opt);
  const auto& sp = weak.space();
  const auto m = r.mu.masses();
  double l1 = 0.0;
  for (std::size_t i = 0; i < sp.size(); ++i) {
    const double x = sp.node(i).c[0], h = sp.cell_size(i);
    const double exact = std::fabs(x) < 2.0 ? std::sqrt(4.0 - x * x) / (2.0 * std::numbers::pi) : 0.0;
    l1 += std::fabs(m[i] / h - exact) * h;
  }

  auto torus = Space::manifold(SpaceKind::Torus, 32, 8);
  FreeEnergyModel tf(green_model(torus, BackgroundCharge::uniform(*torus), 8), 2.0);
  std::vector<double> bumpy(torus->size());
  for (std::size_t i = 0; i < bumpy.size(); ++i)
    bumpy[i] = torus->weight(i) * (1.0 + 0.4 * std::sin(3.0 * torus->node(i).c[0] + 1.0));
  auto te = minimize_free_energy(tf, GridMeasure::from_masses(torus, bumpy));
  double dev = 0.0;
  for (double d : te.mu.density()) dev = std::max(dev, std::fabs(d - 1.0));
  const double at_uniform = mean_field_residual(tf, GridMeasure::uniform(torus)).residual;
  return {l1 < 0.02 && te.residual < 1e-6 && at_uniform < 1e-6 && dev < 1e-5,
          "semicircle L1 " + fmt("%.4g", l1) + "; torus residual " + fmt("%.3g", te.residual) +
              ", max |rho - 1| " + fmt("%.3g", dev)};
}

// Directional derivatives on random pairs and at the solved minimizer.
Outcome derivative_checks() {
  auto s = Space::manifold(SpaceKind::Circle, 256, 16);
  auto charge = BackgroundCharge::from_function(*s, [](const Point& p) { return 1.0 + 0.6 * std::cos(p.c[0]); });
  FreeEnergyModel f(green_model(s, charge, 16), 3.0);
  auto eq = minimize_free_energy(f, GridMeasure::uniform(s));
  Rng rng = make_stream(107, "acceptance-derivative");
  auto random_measure = [&] {
    std::vector<double> m(s->size());
    double a[3], ph[3];
    for (int j = 0; j < 3; ++j) {
      a[j] = 0.3 * uniform01(rng);
      ph[j] = 2.0 * std::numbers::pi * uniform01(rng);
    }
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double x = s->node(i).c[0];
      m[i] = s->weight(i) * (1.0 + a[0] * std::cos(x + ph[0]) + a[1] * std::cos(2 * x + ph[1]) +
                             a[2] * std::cos(5 * x + ph[2]));
    }
    return GridMeasure::from_masses(s, m);
  };
  bool consistent = true;
  double worst_ratio = 0.0, at_min = 0.0;
  for (int t = 0; t < 50; ++t) {
    auto base = random_measure();
    auto other = random_measure();
    auto d = directional_derivative_check(f, base, other, {1e-3, 1e-4});
    for (std::size_t i = 0; i < d.steps.size(); ++i) {
      // One-sided truncation error is h |F''| / 2 to leading order.
      const double err = std::fabs(d.numeric[i] - d.analytic);
      const double bound = 0.5 * d.steps[i] * std::fabs(d.curvature);
      worst_ratio = std::max(worst_ratio, err / (bound + 1e-12));
      consistent = consistent && err <= 1.05 * bound + 1e-9;
    }
    at_min = std::max(at_min, std::fabs(directional_derivative_check(f, eq.mu, other).analytic));
  }
  return {consistent && at_min < 1e-6 && eq.converged,
          "max err / (h |F''| / 2) " + fmt("%.3f", worst_ratio) + ", |dF| at minimizer " + fmt("%.3g", at_min)};
}

std::size_t atom(const Point& p) { return static_cast<std::size_t>(p.c[0]); }

// Chain frequencies against exact enumeration, then byte-exact reruns.
Outcome sampler_validity() {
  Rng trng = make_stream(108, "acceptance-table");
  std::vector<std::vector<double>> table(4, std::vector<double>(4, 0.0));
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = a; b < 4; ++b) table[a][b] = table[b][a] = 2.0 * uniform01(trng);
  auto s = Space::finite({0.1, 0.2, 0.3, 0.4});
  EnergyModel e(s, std::make_shared<TableKernel>(table), BetaSchedule::constant(1.0));
  const int n = 6;
  auto exact = exact_enumerate(e, n);
  std::vector<double> expect(4, 0.0);
  for (const auto& tc : exact.classes)
    for (std::size_t a = 0; a < 4; ++a) expect[a] += tc.probability * tc.counts[a] / double(n);

  SamplerOptions opt;
  opt.steps = 1000000;
  opt.thin = n;
  opt.seed = 8;
  auto r = mcmc_run(e, n, opt);
  double worst = 0.0;
  for (std::size_t a = 0; a < 4; ++a) {
    std::vector<double> series;
    for (const auto& cfg : r.samples) {
      double c = 0.0;
      for (const auto& p : cfg) c += atom(p) == a ? 1.0 : 0.0;
      series.push_back(c / n);
    }
    auto est = batch_means(series, 40);
    worst = std::max(worst, std::fabs(est.mean - expect[a]) / est.standard_error);
  }
  auto again = mcmc_run(e, n, opt);
  bool same = r.energies.size() == again.energies.size() && r.samples.size() == again.samples.size() &&
              std::memcmp(r.energies.data(), again.energies.data(), r.energies.size() * sizeof(double)) == 0;
  for (std::size_t i = 0; same && i < r.samples.size(); ++i)
    same = std::memcmp(r.samples[i].data(), again.samples[i].data(), r.samples[i].size() * sizeof(Point)) == 0;
  return {worst <= 3.0 && same,
          "max |freq - exact| / se " + fmt("%.2f", worst) + (same ? ", reruns byte-identical" : ", reruns differ")};
}

// Confining bound on random configurations of the weak Euclidean log-gas.
Outcome confining_bound() {
  auto box = Space::box(-3.0, 3.0, 1, 200);
  EnergyModel base(box, std::make_shared<LogChordKernel>(box), BetaSchedule::constant(1.0));
  EuclideanData data;
  data.v = Potential("x^2 / 2");
  auto weak = euclidean_transform(base, data);
  // -log|x - y| + (x^2 + y^2)/2 >= 1 when |x|, |y| > 1.5.
  auto inside = [](const Point& p) { return std::fabs(p.c[0]) <= 1.5; };
  Rng rng = make_stream(109, "acceptance-confining");
  int held = 0;
  double worst = -kInf;
  for (int t = 0; t < 1000; ++t) {
    const int n = 2 + static_cast<int>(uniform_index(rng, 40));
    std::vector<Point> cfg;
    for (int i = 0; i < n; ++i) cfg.push_back(Point{{-3.0 + 6.0 * uniform01(rng), 0, 0}});
    auto r = confining_bound_check(weak, cfg, inside, weak.w_n(cfg), 1.0);
    held += r.holds ? 1 : 0;
    worst = std::max(worst, r.mass_outside - r.bound);
  }
  return {held == 1000, std::to_string(held) + "/1000 hold, max mass - bound " + fmt("%.3f", worst)};
}

// Strong coefficient against its formula; weak kernel bounded below on the grid.
Outcome transforms() {
  Rng rng = make_stream(110, "acceptance-strong");
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + static_cast<int>(uniform_index(rng, 1000));
    const double xi = 0.1 + 2.0 * uniform01(rng);
    const double eps = 0.9 * uniform01(rng);
    const double beta = 0.5 + 100.0 * uniform01(rng);
    const double cn = (n - n * xi / beta) / (n - 1.0);
    const double expect = (cn - eps) / (1.0 - eps);
    worst = std::max(worst, std::fabs(strong_a(n, beta, xi, eps) - expect) / std::max(1.0, std::fabs(expect)));
  }
  bool to_one = true;
  double prev = kInf;
  for (int n : {10, 100, 1000, 10000, 100000, 1000000}) {
    const double gap = std::fabs(strong_a(n, std::pow(n, 1.5), 0.7, 0.3) - 1.0);
    to_one = to_one && gap < prev;
    prev = gap;
  }
  to_one = to_one && prev < 1e-3;

  // The semicircle example: -2 log|x - y| + (x^2 + y^2)/2 >= 1 - log 4.
  auto box = Space::box(-3.0, 3.0, 1, 300);
  EnergyModel base(box, std::make_shared<LogChordKernel>(box, 2.0), BetaSchedule::constant(1.0));
  EuclideanData data;
  data.v = Potential("x^2 / 2");
  auto weak = euclidean_transform(base, data, 300);
  const double grid_min = grid_lower_bound(*weak.pair_kernel_for(0), weak.space());
  const bool bounded = std::isfinite(grid_min) && grid_min >= 1.0 - std::log(4.0) - 1e-12;
  return {worst < 1e-12 && to_one && bounded,
          "max formula error " + fmt("%.3g", worst) + ", |a_n - 1| at n = 1e6 " + fmt("%.3g", prev) +
              ", weak grid min " + fmt("%.5f", grid_min)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Green identity", green_identity},
      {"Legendre identity", legendre_identity},
      {"Fekete regression", fekete_regression},
      {"convergence of infima", infima_tables},
      {"finite-space Laplace principle", laplace_finite},
      {"equilibrium oracles", equilibrium_oracles},
      {"derivative checks", derivative_checks},
      {"sampler validity", sampler_validity},
      {"confining bound", confining_bound},
      {"Euclidean transforms", transforms},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %zu (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
