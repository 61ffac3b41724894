#include "gibbslab/ldp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <thread>

namespace gibbs {

namespace {

constexpr double kEnumerationCap = 1e8;

void check_cap(const Space& s, int n) {
  if (std::pow(double(s.size()), double(n)) > kEnumerationCap)
    fail(ErrorCode::CapExceeded, "m^n exceeds the enumeration cap of 1e8");
}

double beta_at(const EnergyModel& model, int n) {
  const double b = model.beta().at(n);
  require(std::isfinite(b) && b > 0.0, ErrorCode::InvalidArgument,
          "beta_n must be finite and positive");
  return b;
}

// n! / prod c_a! as a product of binomials, exact while below 2^53.
double multinomial(const std::vector<int>& counts) {
  double r = 1.0;
  int left = 0;
  for (int c : counts) left += c;
  for (int c : counts) {
    r *= binomial(left, c);
    left -= c;
  }
  return r;
}

void finish(LaplaceVerdict& v) {
  v.gaps.clear();
  std::vector<double> xs;
  for (std::size_t i = 0; i < v.ns.size(); ++i) {
    v.gaps.push_back(std::fabs(v.values[i] - v.limit));
    xs.push_back(v.ns[i]);
  }
  v.slope = v.ns.size() >= 2 ? least_squares_slope(xs, v.gaps) : 0.0;
  const double last = v.gaps.empty() ? kInf : v.gaps.back();
  const double slack = v.advisory && !v.errors.empty() ? 3.0 * v.errors.back() : 0.0;
  // An identically zero gap sequence has nothing left to decrease.
  const bool exact = std::all_of(v.gaps.begin(), v.gaps.end(), [](double g) { return g == 0.0; });
  v.passes = last - slack < v.threshold && (v.slope < 0.0 || exact);
}

}  // namespace

double laplace_value_finite(const EnergyModel& model, const Functional& f, int n) {
  const Space& s = model.space();
  require(s.kind() == SpaceKind::Finite, ErrorCode::UnsupportedKind,
          "exact Laplace values need a finite space");
  require(n >= model.arity(), ErrorCode::InvalidArgument, "need at least k particles");
  check_cap(s, n);
  const double nb = n * beta_at(model, n);
  std::vector<double> log_w, linear;
  bool linear_ok = true;
  for_each_type_class(s, n, [&](const std::vector<int>& counts, const std::vector<Point>& config,
                                double lw) {
    const double w = model.w_n(config);
    const double fv = f(model.space_ptr(), config);
    require(std::isfinite(fv), ErrorCode::InvalidArgument, "f is not finite on a type class");
    const double e = w == kInf ? kInf : fv + w;
    log_w.push_back(e == kInf ? -kInf : lw - nb * e);
    // Direct product when every factor is representable; sums of exact
    // terms then stay exact (G = 0 and dyadic pi give L_n = 0 exactly).
    double term = multinomial(counts);
    for (std::size_t a = 0; a < counts.size(); ++a) term *= std::pow(s.weight(a), counts[a]);
    term *= e == kInf ? 0.0 : std::exp(-nb * e);
    if (!(term > 1e-300 || e == kInf) || !std::isfinite(term)) linear_ok = false;
    linear.push_back(term);
  });
  if (linear_ok) {
    double z = 0.0;
    for (double t : linear) z += t;
    if (z > 0.0 && std::isfinite(z)) return std::log(z) / nb;
  }
  const double top = *std::max_element(log_w.begin(), log_w.end());
  require(top > -kInf, ErrorCode::InvalidArgument, "every configuration has W_n = +inf");
  double sum = 0.0;
  for (double lw : log_w) sum += std::exp(lw - top);
  return (top + std::log(sum)) / nb;
}

double free_energy_infimum(const EnergyModel& model, const Functional& f, int divisions) {
  const Space& s = model.space();
  const double beta = model.beta().limit();
  if (s.kind() == SpaceKind::Finite) {
    const auto space = model.space_ptr();
    auto objective = [&](std::span<const double> m) {
      auto mu = GridMeasure::from_masses(space, m);
      double v = model.w_macro(mu) + f.on_measure(mu);
      if (std::isfinite(beta)) v += relative_entropy(mu) / beta;
      return v;
    };
    return simplex_grid_minimize(s.size(), objective, divisions).value;
  }
  require(f.empty() || f.is_integral(), ErrorCode::Unavailable,
          "inf{f + F} off finite spaces needs an integral functional");
  FreeEnergyModel fm(model, beta);
  EquilibriumOptions opt;
  if (f.is_integral())
    for (const auto& p : s.nodes()) opt.tilt.push_back(f.density_at(p));
  return minimize_free_energy(fm, GridMeasure::uniform(model.space_ptr()), opt).value;
}

LaplaceVerdict laplace_verify_finite(const EnergyModel& model, const Functional& f,
                                     const std::vector<int>& ns, double threshold) {
  require(model.space().kind() == SpaceKind::Finite, ErrorCode::UnsupportedKind,
          "laplace_verify_finite needs a finite space");
  require(!ns.empty(), ErrorCode::InvalidArgument, "empty n-list");
  check_cap(model.space(), *std::max_element(ns.begin(), ns.end()));
  LaplaceVerdict v;
  v.ns = ns;
  v.threshold = threshold;
  v.values.resize(ns.size());
  v.errors.assign(ns.size(), 0.0);
  {
    std::vector<std::future<double>> jobs;
    for (int n : ns)
      jobs.push_back(std::async(std::launch::async, [&model, &f, n] {
        return laplace_value_finite(model, f, n);
      }));
    for (std::size_t i = 0; i < ns.size(); ++i) v.values[i] = jobs[i].get();
  }
  // Nested lattices (each divides the next), keeping the best value seen.
  double best = kInf;
  for (int d : {25, 50, 100, 200}) {
    best = std::min(best, free_energy_infimum(model, f, d));
    v.limit_refinements.push_back(-best);
  }
  v.limit = best == 0.0 ? 0.0 : -best;
  finish(v);
  return v;
}

void gauss_legendre_unit(int count, std::vector<double>& nodes, std::vector<double>& weights) {
  require(count >= 1, ErrorCode::InvalidArgument, "need at least one quadrature node");
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(count, count);
  for (int i = 1; i < count; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    j(i, i - 1) = j(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  nodes.resize(std::size_t(count));
  weights.resize(std::size_t(count));
  for (int i = 0; i < count; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    nodes[std::size_t(i)] = 0.5 * (es.eigenvalues()(i) + 1.0);
    weights[std::size_t(i)] = v0 * v0;  // 2 v0^2 on [-1, 1], halved for [0, 1]
  }
}

McEstimate laplace_estimate(const EnergyModel& model, const Functional& f, int n,
                            const McOptions& options) {
  require(f.empty() || f.is_integral(), ErrorCode::Unavailable,
          "the Monte Carlo estimator supports integral functionals only");
  require(n <= 64, ErrorCode::CapExceeded, "Monte Carlo runs are capped at 64 particles");
  McEstimate out;
  gauss_legendre_unit(options.rungs, out.rung_s, out.rung_weight);
  const std::size_t r = out.rung_s.size();
  out.rung_mean.resize(r);
  out.rung_error.resize(r);
  out.rung_ess.resize(r);
  auto run = [&](std::size_t j) {
    SamplerOptions so;
    so.steps = options.steps;
    so.seed = derive_seed(options.seed, "laplace-rung", std::uint64_t(n) * 1024 + j);
    so.proposal_scale = options.proposal_scale;
    so.multiplier = out.rung_s[j];
    so.thin = options.thin > 0 ? options.thin : n;
    so.ladder = options.ladder;
    if (f.is_integral()) so.field = [&f](const Point& p) { return f.density_at(p); };
    const auto rep = mcmc_run(model, n, so);
    if (rep.effective_sample_size < options.ess_floor)
      fail(ErrorCode::LowEffectiveSampleSize,
           "effective sample size " + std::to_string(rep.effective_sample_size) + " at rung s = " +
               std::to_string(out.rung_s[j]) + " is below the floor");
    const auto est = batch_means(rep.energies, options.batches);
    out.rung_mean[j] = est.mean;
    out.rung_error[j] = est.standard_error;
    out.rung_ess[j] = rep.effective_sample_size;
  };
  const unsigned threads = options.threads > 0 ? unsigned(options.threads)
                                               : std::max(1u, std::thread::hardware_concurrency());
  for (std::size_t start = 0; start < r; start += threads) {
    std::vector<std::future<void>> jobs;
    for (std::size_t j = start; j < std::min(r, start + threads); ++j)
      jobs.push_back(std::async(std::launch::async, run, j));
    for (auto& job : jobs) job.get();
  }
  double var = 0.0;
  for (std::size_t j = 0; j < r; ++j) {
    out.value -= out.rung_weight[j] * out.rung_mean[j];
    var += out.rung_weight[j] * out.rung_weight[j] * out.rung_error[j] * out.rung_error[j];
  }
  out.standard_error = std::sqrt(var);
  return out;
}

LaplaceVerdict laplace_estimate_mc(const EnergyModel& model, const Functional& f,
                                   const std::vector<int>& ns, double threshold,
                                   const McOptions& options, std::optional<double> limit) {
  require(!ns.empty(), ErrorCode::InvalidArgument, "empty n-list");
  LaplaceVerdict v;
  v.ns = ns;
  v.threshold = threshold;
  v.advisory = true;
  v.limit = limit ? *limit : -free_energy_infimum(model, f);
  for (int n : ns) {
    const auto e = laplace_estimate(model, f, n, options);
    v.values.push_back(e.value);
    v.errors.push_back(e.standard_error);
  }
  finish(v);
  return v;
}

double circular_log_gas_laplace(int n, double b) {
  require(n >= 1 && b > 0.0, ErrorCode::InvalidArgument, "need n >= 1 and b > 0");
  return (std::lgamma(1.0 + b * n / 2.0) - n * std::lgamma(1.0 + b / 2.0)) / (double(n) * n);
}

RateProfile rate_function_profile(const EnergyModel& model, double beta,
                                  const std::optional<LinearConstraint>& set) {
  FreeEnergyModel fm(model, beta);
  const auto space = model.space_ptr();
  const auto uniform = GridMeasure::uniform(space);
  EquilibriumOptions base;
  const auto eq = minimize_free_energy(fm, uniform, base);
  RateProfile out{0.0, eq.mu, eq.value, 0.0, false, std::numeric_limits<double>::quiet_NaN()};
  if (!set) return out;

  const auto& g = set->g;
  require(g.size() == space->size(), ErrorCode::MismatchedSpaces,
          "constraint needs one value per grid node");
  const double gmax = *std::max_element(g.begin(), g.end());
  if (gmax < set->c || (set->strict && gmax <= set->c))
    fail(ErrorCode::Infeasible, "no grid measure satisfies the constraint");
  auto mean_g = [&](const GridMeasure& mu) { return mu.integrate(g); };

  if (space->kind() == SpaceKind::Finite && space->size() <= 4) {
    auto objective = [&](std::span<const double> m) {
      double s = 0.0;
      for (std::size_t i = 0; i < m.size(); ++i) s += m[i] * g[i];
      if (s < set->c) return kInf;
      return fm.value(m);
    };
    out.grid_value = simplex_grid_minimize(space->size(), objective).value - eq.value;
  }
  if (mean_g(eq.mu) > set->c || (!set->strict && mean_g(eq.mu) == set->c)) return out;

  // Active constraint: mu_lambda minimizes F - lambda int g, and int g dmu_lambda
  // increases with lambda; bisect for int g = c.
  out.active = true;
  auto solve = [&](double lambda, const GridMeasure& init) {
    EquilibriumOptions opt;
    opt.tilt.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) opt.tilt[i] = -lambda * g[i];
    return minimize_free_energy(fm, init, opt).mu;
  };
  double lo = 0.0, hi = 1.0;
  GridMeasure hi_mu = solve(hi, eq.mu);
  while (mean_g(hi_mu) < set->c) {
    hi *= 2.0;
    if (hi > 1e8) fail(ErrorCode::Infeasible, "constraint not reachable by tilting");
    hi_mu = solve(hi, hi_mu);
  }
  GridMeasure mid_mu = hi_mu;
  for (int it = 0; it < 80 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    mid_mu = solve(mid, hi_mu);
    if (mean_g(mid_mu) < set->c) lo = mid;
    else {
      hi = mid;
      hi_mu = mid_mu;
    }
  }
  out.multiplier = hi;
  out.witness = hi_mu;
  out.value = fm.value(hi_mu.masses()) - eq.value;
  return out;
}

double enumerated_decay(const EnergyModel& model, int n, const LinearConstraint& set) {
  const Space& s = model.space();
  require(s.kind() == SpaceKind::Finite, ErrorCode::UnsupportedKind,
          "enumerated decay needs a finite space");
  require(set.g.size() == s.size(), ErrorCode::MismatchedSpaces,
          "constraint needs one value per atom");
  check_cap(s, n);
  const double nb = n * beta_at(model, n);
  std::vector<double> all, inside;
  for_each_type_class(s, n, [&](const std::vector<int>& counts, const std::vector<Point>& config,
                                double lw) {
    const double w = model.w_n(config);
    if (w == kInf) return;
    const double l = lw - nb * w;
    all.push_back(l);
    double mean = 0.0;
    for (std::size_t a = 0; a < counts.size(); ++a) mean += counts[a] * set.g[a];
    mean /= n;
    // Type-class averages are exact rationals up to rounding in g.
    const double tol = 1e-12 * (1.0 + std::fabs(set.c));
    if (set.strict ? mean > set.c + tol : mean >= set.c - tol) inside.push_back(l);
  });
  if (inside.empty()) return kInf;
  auto lse = [](const std::vector<double>& v) {
    const double top = *std::max_element(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += std::exp(x - top);
    return top + std::log(s);
  };
  return -(lse(inside) - lse(all)) / nb;
}

LaplaceVerdict conditional_particle_verify(const OneParticleModel& m, const std::vector<int>& ns,
                                           double threshold) {
  require(m.space && m.v && m.v_n && m.beta_n, ErrorCode::InvalidArgument,
          "one-particle model needs a space, V, V_n and beta_n");
  const Space& s = *m.space;
  LaplaceVerdict out;
  out.ns = ns;
  out.threshold = threshold;
  double best = kInf;
  for (const auto& p : s.nodes()) {
    const double h = (m.f ? m.f(p) : 0.0) + m.v(p);
    require(std::isfinite(h), ErrorCode::InvalidArgument, "V is not finite on the grid");
    best = std::min(best, h);
  }
  out.limit = -best;
  for (int n : ns) {
    const double beta = m.beta_n(n);
    const double lambda = m.lambda_n ? m.lambda_n(n) : 0.0;
    std::vector<double> lw(s.size());
    std::size_t arg = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const Point& p = s.node(i);
      double h = (m.f ? m.f(p) : 0.0) + m.v_n(n, p);
      if (m.self_energy) h += lambda * m.self_energy(p);
      require(std::isfinite(h), ErrorCode::InvalidArgument, "V_n is not finite on the grid");
      lw[i] = std::log(s.weight(i)) - beta * h;
      if (lw[i] > lw[arg]) arg = i;
    }
    double sum = 0.0;
    for (double x : lw) sum += std::exp(x - lw[arg]);
    out.values.push_back((lw[arg] + std::log(sum)) / beta);
    out.errors.push_back(0.0);
    out.witnesses.push_back(s.node(arg));
  }
  finish(out);
  return out;
}

LaplaceVerdict conditional_gas_verify(const EnergyModel& model, const Functional& f,
                                      const std::vector<int>& ns, double threshold,
                                      const McOptions& options, std::optional<double> limit) {
  require(model.has_external(), ErrorCode::InvalidArgument,
          "the conditional gas needs an environment kernel");
  return laplace_estimate_mc(model, f, ns, threshold, options, limit);
}

}  // namespace gibbs
