#include "gibbslab/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gibbs {

namespace {

constexpr int kMaxBackoffs = 10;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != 0.0) s += a[i] * b[i];
  return s;
}

double kl(std::span<const double> p, std::span<const double> q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) s += p[i] * std::log(p[i] / q[i]);
  return s;
}

// KL(p || q) summed as p log(p/q) - p + q per node, with a series for
// nearby values so that tiny steps are not lost to cancellation.
double kl_stable(std::span<const double> p, std::span<const double> q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (q[i] <= 0.0) continue;
    const double r = (p[i] - q[i]) / q[i];
    double t;
    if (std::fabs(r) < 1e-3)
      t = r * r * (0.5 - r * (1.0 / 6.0 - r * (1.0 / 12.0 - r / 20.0)));
    else
      t = (1.0 + r) * std::log1p(r) - r;
    s += q[i] * t;
  }
  return s;
}

double frank_wolfe_gap(std::span<const double> m, std::span<const double> g) {
  return dot(m, g) - *std::min_element(g.begin(), g.end());
}

}  // namespace

FreeEnergyModel::FreeEnergyModel(EnergyModel energy, double beta)
    : energy_(std::move(energy)), beta_(beta) {
  require(beta_ > 0.0, ErrorCode::InvalidArgument, "beta must be positive");
  require(energy_.arity() == 2, ErrorCode::InvalidArgument,
          "free-energy minimization supports pair interactions");
  op_ = std::make_shared<PairOperator>(energy_.space_ptr(), energy_.pair_kernel_for(0));
  external_ = energy_.external_limit_on_grid();
}

std::vector<double> FreeEnergyModel::potential(std::span<const double> masses) const {
  auto u = op_->apply(masses);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] += external_[i];
  return u;
}

double FreeEnergyModel::interaction(std::span<const double> d) const {
  return dot(d, op_->apply(d));
}

double FreeEnergyModel::value(std::span<const double> m, std::span<const double> tilt) const {
  const auto u = op_->apply(m);
  double f = 0.5 * dot(m, u) + dot(m, external_);
  if (std::isfinite(beta_)) {
    const auto w = space().weights();
    f += kl(m, w) / beta_;
  }
  if (!tilt.empty()) f += dot(m, tilt);
  return f;
}

std::vector<double> FreeEnergyModel::gradient(std::span<const double> m,
                                              std::span<const double> tilt) const {
  auto g = potential(m);
  if (std::isfinite(beta_)) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double rho = m[i] / space().weight(i);
      g[i] += (1.0 + (rho > 0.0 ? std::log(rho) : -1e300)) / beta_;
    }
  }
  if (!tilt.empty())
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += tilt[i];
  return g;
}

double free_energy(const FreeEnergyModel& model, const GridMeasure& mu) {
  require(&mu.space() == &model.space(), ErrorCode::MismatchedSpaces,
          "measure lives on another space");
  const auto m = mu.masses();
  return model.value(m);
}

EquilibriumResult minimize_free_energy(const FreeEnergyModel& model, const GridMeasure& init,
                                       const EquilibriumOptions& options) {
  require(&init.space() == &model.space(), ErrorCode::MismatchedSpaces,
          "initial measure lives on another space");
  if (!std::isfinite(model.beta())) {
    const auto kernel = model.energy().pair_kernel_for(0);
    const PairKernel* base = kernel.get();
    if (const auto* aug = dynamic_cast<const PotentialAugmentedKernel*>(base)) base = &aug->base();
    if (!base->strictly_convex())
      fail(ErrorCode::HypothesisViolated,
           "zero-temperature equilibrium requires a strictly convex kernel");
  }
  const std::span<const double> tilt = options.tilt;
  if (!tilt.empty())
    require(tilt.size() == model.space().size(), ErrorCode::MismatchedSpaces,
            "tilt needs one value per grid node");

  std::vector<double> m = init.masses();
  if (std::isfinite(model.beta())) {
    // Entropy needs full support: mix in a little of pi.
    bool zero = std::any_of(m.begin(), m.end(), [](double x) { return x <= 0.0; });
    if (zero) {
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = 0.999 * m[i] + 0.001 * model.space().weight(i);
    }
  }
  EquilibriumResult r{init, 0.0, {}, 0.0, std::numeric_limits<double>::quiet_NaN(), 0, false};
  double f = model.value(m, tilt);
  require(std::isfinite(f), ErrorCode::InvalidArgument, "initial free energy is not finite");
  r.trace.push_back(f);
  double eta = options.initial_step;
  std::vector<double> next(m.size()), delta(m.size());
  for (int step = 0; step < options.max_steps; ++step) {
    const auto g = model.gradient(m, tilt);
    const double gap = frank_wolfe_gap(m, g);
    r.optimality_gap = gap;
    if (gap < options.tolerance) {
      r.converged = true;
      break;
    }
    const double gmin = *std::min_element(g.begin(), g.end());
    int backoffs = 0;
    while (true) {
      double total = 0.0;
      for (std::size_t i = 0; i < m.size(); ++i) {
        next[i] = m[i] > 0.0 ? m[i] * std::exp(-eta * (g[i] - gmin)) : 0.0;
        total += next[i];
      }
      for (std::size_t i = 0; i < m.size(); ++i) {
        next[i] /= total;
        delta[i] = next[i] - m[i];
      }
      // F(p+) <= F(p) + <g, p+ - p> + KL(p+ || p) / eta. The Bregman
      // divergence of F is (1/2) d'Gd + KL / beta exactly, so the test is
      // done on that form, which is free of cancellation near the optimum.
      const double div = kl_stable(next, m);
      const double quad = 0.5 * model.interaction(delta);
      const double room = std::isfinite(model.beta()) ? (1.0 / eta - 1.0 / model.beta()) * div
                                                      : div / eta;
      if (quad <= room) {
        m.swap(next);
        f = model.value(m, tilt);
        eta *= 1.5;
        break;
      }
      eta *= 0.5;
      if (++backoffs >= kMaxBackoffs) {
        const double fn = model.value(next, tilt);
        if (fn <= f + 1e-14 * (1.0 + std::fabs(f))) {
          // Progress below rounding: the iterate is as good as it gets.
          r.iterations = step;
          goto done;
        }
        fail(ErrorCode::StepSizeFailure,
             "free energy increased under " + std::to_string(kMaxBackoffs) + " step reductions");
      }
    }
    r.trace.push_back(f);
    r.iterations = step + 1;
  }
done:
  {
    const auto g = model.gradient(m, tilt);
    r.optimality_gap = frank_wolfe_gap(m, g);
    r.converged = r.optimality_gap < options.tolerance;
  }
  r.mu = GridMeasure::from_masses(model.energy().space_ptr(), m);
  r.value = f;
  if (dynamic_cast<const GreenKernel*>(model.energy().pair_kernel_for(0).get()) &&
      std::isfinite(model.beta()))
    r.residual = mean_field_residual(model, r.mu).residual;
  return r;
}

MeanFieldResidual mean_field_residual(const FreeEnergyModel& model, const GridMeasure& mu) {
  const auto* green = dynamic_cast<const GreenKernel*>(model.energy().pair_kernel_for(0).get());
  require(green != nullptr, ErrorCode::UnsupportedKind,
          "the mean-field residual needs a Green kernel");
  require(std::isfinite(model.beta()), ErrorCode::InvalidArgument,
          "the mean-field equation needs finite beta");
  const Space& s = model.space();
  require(s.has_basis(), ErrorCode::UnsupportedKind, "the space has no spectral basis");
  const auto rho = mu.density();
  std::vector<double> log_rho(rho.size()), source(rho.size());
  const auto lambda = green->green().charge().density();
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (!(rho[i] > 1e-300))
      fail(ErrorCode::InvalidArgument, "density touches zero; log is undefined");
    log_rho[i] = std::log(rho[i]);
    source[i] = model.beta() * (rho[i] - lambda[i]);
  }
  std::vector<double> a(s.basis_size()), b(s.basis_size());
  s.project(log_rho, a);
  s.project(source, b);
  const int order = green->green().truncation();
  MeanFieldResidual r;
  double inside = 0.0, outside = 0.0;
  for (std::size_t k = 1; k < s.basis_size(); ++k) {
    const double d = -s.basis(k).eigenvalue * a[k] - b[k];
    (s.basis(k).order <= order ? inside : outside) += d * d;
  }
  r.residual = std::sqrt(inside);
  r.tail = std::sqrt(outside);
  return r;
}

DerivativeCheck directional_derivative_check(const FreeEnergyModel& model,
                                             const GridMeasure& mu_eq, const GridMeasure& mu,
                                             std::vector<double> steps) {
  require(&mu_eq.space() == &model.space() && &mu.space() == &model.space(),
          ErrorCode::MismatchedSpaces, "measures live on another space");
  const auto e = mu_eq.masses();
  const auto m = mu.masses();
  const bool entropy = std::isfinite(model.beta());
  if (entropy) {
    for (std::size_t i = 0; i < e.size(); ++i)
      if (e[i] <= 0.0) fail(ErrorCode::InvalidArgument, "mu_eq must have full support");
  }
  std::vector<double> d(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) d[i] = m[i] - e[i];

  DerivativeCheck r;
  // d/dt W = int int G dmu_eq (dmu - dmu_eq) (+ V), d/dt D = int log rho (dmu - dmu_eq).
  const auto u = model.potential(e);
  double analytic = dot(d, u);
  if (entropy) {
    double ent = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) ent += std::log(e[i] / model.space().weight(i)) * d[i];
    analytic += ent / model.beta();
  }
  r.analytic = analytic;

  const auto ud = model.potential(d);
  double curvature = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) curvature += d[i] * (ud[i] - 0.0);
  // potential() adds V, which is linear: remove it from the quadratic form.
  const auto v = model.energy().external_limit_on_grid();
  curvature -= dot(d, v);
  if (entropy) {
    double c = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) c += d[i] * d[i] / e[i];
    curvature += c / model.beta();
  }
  r.curvature = curvature;

  const double f0 = model.value(e);
  require(std::isfinite(f0), ErrorCode::InvalidArgument, "F(mu_eq) is not finite");
  std::vector<double> mt(e.size());
  for (double h : steps) {
    require(h > 0.0 && h <= 1.0, ErrorCode::InvalidArgument, "steps must lie in (0, 1]");
    for (std::size_t i = 0; i < e.size(); ++i) mt[i] = e[i] + h * d[i];
    r.steps.push_back(h);
    r.numeric.push_back((model.value(mt) - f0) / h);
  }
  return r;
}

}  // namespace gibbs
