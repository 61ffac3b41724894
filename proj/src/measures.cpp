#include "gibbslab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gibbs {

namespace {

constexpr std::size_t kMaxAnchors = 256;
constexpr int kDictionaryOrder = 8;

void require_same(const Space& a, const Space& b) {
  if (&a != &b)
    fail(ErrorCode::MismatchedSpaces, "measures live on different spaces");
}

}  // namespace

GridMeasure GridMeasure::from_density(std::shared_ptr<const Space> space,
                                      std::vector<double> density) {
  require(space != nullptr, ErrorCode::InvalidArgument, "grid measure needs a space");
  require(density.size() == space->size(), ErrorCode::MismatchedSpaces,
          "density must have one entry per grid node");
  double total = 0.0;
  for (std::size_t i = 0; i < density.size(); ++i) {
    require(density[i] >= 0.0 && std::isfinite(density[i]), ErrorCode::InvalidArgument,
            "density must be finite and nonnegative");
    total += space->weight(i) * density[i];
  }
  require(std::fabs(total - 1.0) <= 1e-10, ErrorCode::InvalidArgument,
          "density does not integrate to 1 against the reference measure");
  GridMeasure g;
  g.space_ = std::move(space);
  g.density_ = std::move(density);
  return g;
}

GridMeasure GridMeasure::from_masses(std::shared_ptr<const Space> space,
                                     std::span<const double> masses) {
  require(space != nullptr, ErrorCode::InvalidArgument, "grid measure needs a space");
  require(masses.size() == space->size(), ErrorCode::MismatchedSpaces,
          "masses must have one entry per grid node");
  double total = 0.0;
  for (double m : masses) {
    require(m >= 0.0 && std::isfinite(m), ErrorCode::InvalidArgument,
            "masses must be finite and nonnegative");
    total += m;
  }
  require(total > 0.0, ErrorCode::InvalidArgument, "masses sum to zero");
  std::vector<double> density(masses.size());
  for (std::size_t i = 0; i < masses.size(); ++i)
    density[i] = masses[i] / (total * space->weight(i));
  GridMeasure g;
  g.space_ = std::move(space);
  g.density_ = std::move(density);
  return g;
}

GridMeasure GridMeasure::uniform(std::shared_ptr<const Space> space) {
  std::vector<double> ones(space->size(), 1.0);
  return from_density(std::move(space), std::move(ones));
}

std::vector<double> GridMeasure::masses() const {
  std::vector<double> m(density_.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = space_->weight(i) * density_[i];
  return m;
}

double GridMeasure::integrate(std::span<const double> values) const {
  require(values.size() == density_.size(), ErrorCode::MismatchedSpaces,
          "integrand must have one value per grid node");
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (density_[i] != 0.0) s += space_->weight(i) * density_[i] * values[i];
  return s;
}

GridMeasure GridMeasure::mix(const GridMeasure& other, double t) const {
  require_same(*space_, *other.space_);
  GridMeasure g;
  g.space_ = space_;
  g.density_.resize(density_.size());
  for (std::size_t i = 0; i < density_.size(); ++i)
    g.density_[i] = (1.0 - t) * density_[i] + t * other.density_[i];
  return g;
}

EmpiricalMeasure EmpiricalMeasure::from_points(std::shared_ptr<const Space> space,
                                               std::vector<Point> points) {
  require(space != nullptr, ErrorCode::InvalidArgument, "empirical measure needs a space");
  require(!points.empty(), ErrorCode::InvalidArgument, "empirical measure needs points");
  for (const auto& p : points) space->require_contains(p);
  EmpiricalMeasure e;
  e.space_ = std::move(space);
  e.points_ = std::move(points);
  return e;
}

double EmpiricalMeasure::integrate(const std::function<double(const Point&)>& f) const {
  double s = 0.0;
  for (const auto& p : points_) s += f(p);
  return s / static_cast<double>(points_.size());
}

double relative_entropy(const GridMeasure& mu) {
  double d = 0.0;
  const auto rho = mu.density();
  for (std::size_t i = 0; i < rho.size(); ++i)
    if (rho[i] > 0.0) d += mu.space().weight(i) * rho[i] * std::log(rho[i]);
  return std::max(d, 0.0);
}

double relative_entropy(std::span<const double> mu, std::span<const double> nu) {
  require(mu.size() == nu.size(), ErrorCode::MismatchedSpaces,
          "distributions have different supports");
  double d = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu[i] <= 0.0) continue;
    if (nu[i] <= 0.0) return kInf;
    d += mu[i] * std::log(mu[i] / nu[i]);
  }
  return std::max(d, 0.0);
}

double relative_entropy(const EmpiricalMeasure&) { return kInf; }

GridMeasure grid_projection(const EmpiricalMeasure& e, double bandwidth) {
  require(bandwidth > 0.0 && std::isfinite(bandwidth), ErrorCode::InvalidArgument,
          "bandwidth must be positive");
  const Space& s = e.space();
  std::vector<double> rho(s.size(), 0.0);
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  for (std::size_t i = 0; i < s.size(); ++i) {
    double v = 0.0;
    for (const auto& p : e.points()) {
      const double d = s.distance(s.node(i), p);
      v += std::exp(-d * d * inv);
    }
    rho[i] = v;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) total += s.weight(i) * rho[i];
  require(total > 0.0, ErrorCode::InvalidArgument,
          "bandwidth too small: smoothed measure vanishes on the grid");
  for (double& r : rho) r /= total;
  return GridMeasure::from_density(e.space_ptr(), std::move(rho));
}

// ---------------------------------------------------------------------------

LipschitzDictionary::LipschitzDictionary(std::shared_ptr<const Space> space)
    : space_(std::move(space)) {
  const Space& s = *space_;
  const std::size_t stride = std::max<std::size_t>(1, (s.size() + kMaxAnchors - 1) / kMaxAnchors);
  for (std::size_t i = 0; i < s.size(); i += stride) anchors_.push_back(s.node(i));
  if (s.has_basis()) {
    for (std::size_t k = 1; k < s.basis_size(); ++k) {
      const auto& f = s.basis(k);
      if (f.order > kDictionaryOrder) continue;
      double sup = 0.0, lip = 0.0;
      switch (s.kind()) {
        case SpaceKind::Circle:
          sup = std::sqrt(2.0);
          lip = std::sqrt(2.0) * f.order;
          break;
        case SpaceKind::Torus:
          sup = 2.0;
          lip = 2.0 * std::sqrt(f.eigenvalue);
          break;
        default: {
          // Real harmonics of degree l: |Y| <= sqrt(2(2l+1)), and the
          // gradient is bounded by sqrt(l(l+1)) times that (crude but safe
          // for a surrogate).
          const double l = f.order;
          sup = std::sqrt(2.0 * (2.0 * l + 1.0));
          lip = sup * std::sqrt(l * (l + 1.0));
          break;
        }
      }
      basis_.push_back(k);
      scale_.push_back(1.0 / std::max(sup, lip));
    }
  }
  node_values_.resize(size() * s.size());
  for (std::size_t j = 0; j < size(); ++j)
    for (std::size_t i = 0; i < s.size(); ++i)
      node_values_[j * s.size() + i] =
          j < anchors_.size()
              ? std::min(s.distance(s.node(i), anchors_[j]), 1.0)
              : scale_[j - anchors_.size()] * s.basis_at_node(i, basis_[j - anchors_.size()]);
}

double LipschitzDictionary::evaluate(std::size_t j, const Point& x) const {
  if (j < anchors_.size()) return std::min(space_->distance(x, anchors_[j]), 1.0);
  const std::size_t b = j - anchors_.size();
  return scale_[b] * space_->basis_value(basis_[b], x);
}

namespace {

std::vector<double> dictionary_integrals(const LipschitzDictionary& dict,
                                         const GridMeasure& m) {
  const std::size_t n = dict.space().size();
  const auto mass = m.masses();
  std::vector<double> out(dict.size(), 0.0);
  for (std::size_t j = 0; j < dict.size(); ++j) {
    const double* row = dict.node_values().data() + j * n;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += mass[i] * row[i];
    out[j] = s;
  }
  return out;
}

std::vector<double> dictionary_integrals(const LipschitzDictionary& dict,
                                         const EmpiricalMeasure& e) {
  std::vector<double> out(dict.size(), 0.0);
  for (std::size_t j = 0; j < dict.size(); ++j)
    out[j] = e.integrate([&](const Point& p) { return dict.evaluate(j, p); });
  return out;
}

double sup_gap(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) d = std::max(d, std::fabs(a[j] - b[j]));
  return d;
}

}  // namespace

double bounded_lipschitz_distance(const GridMeasure& a, const GridMeasure& b) {
  require_same(a.space(), b.space());
  LipschitzDictionary dict(a.space_ptr());
  return sup_gap(dictionary_integrals(dict, a), dictionary_integrals(dict, b));
}

double bounded_lipschitz_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  require_same(a.space(), b.space());
  LipschitzDictionary dict(a.space_ptr());
  return sup_gap(dictionary_integrals(dict, a), dictionary_integrals(dict, b));
}

double bounded_lipschitz_distance(const EmpiricalMeasure& a, const GridMeasure& b) {
  require_same(a.space(), b.space());
  LipschitzDictionary dict(a.space_ptr());
  return sup_gap(dictionary_integrals(dict, a), dictionary_integrals(dict, b));
}

// ---------------------------------------------------------------------------

namespace {

void enumerate_lattice(std::size_t m, int divisions,
                       const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> counts(m, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int remaining) {
    if (i + 1 == m) {
      counts[i] = remaining;
      visit(counts);
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      counts[i] = c;
      rec(i + 1, remaining - c);
    }
  };
  rec(0, divisions);
}

// Local refinement: the largest incumbent coordinate absorbs the slack, the
// others move on a (2R+1)^(m-1) lattice of the current step.
SimplexOptimum refine(std::size_t m, SimplexOptimum best, double step, double min_step,
                      const std::function<double(std::span<const double>)>& objective) {
  constexpr int kRadius = 10;
  constexpr double kShrink = 5.0;
  std::vector<double> trial(m);
  while (step > min_step) {
    step /= kShrink;
    const std::size_t pivot = static_cast<std::size_t>(
        std::max_element(best.point.begin(), best.point.end()) - best.point.begin());
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < m; ++i)
      if (i != pivot) free.push_back(i);
    std::vector<int> offset(free.size(), -kRadius);
    const std::vector<double> center = best.point;
    while (true) {
      double sum = 0.0;
      bool ok = true;
      for (std::size_t a = 0; a < free.size(); ++a) {
        const double v = center[free[a]] + offset[a] * step;
        if (v < 0.0) {
          if (v > -1e-15) {
            trial[free[a]] = 0.0;
            continue;
          }
          ok = false;
          break;
        }
        trial[free[a]] = v;
        sum += v;
      }
      if (ok) {
        trial[pivot] = 1.0 - sum;
        if (trial[pivot] >= 0.0) {
          const double v = objective(trial);
          if (v < best.value) {
            best.value = v;
            best.point = trial;
          }
        }
      }
      std::size_t a = 0;
      while (a < offset.size() && ++offset[a] > kRadius) offset[a++] = -kRadius;
      if (a == offset.size()) break;
    }
  }
  return best;
}

}  // namespace

SimplexOptimum simplex_grid_minimize(
    std::size_t m, const std::function<double(std::span<const double>)>& objective,
    int divisions, double min_step) {
  require(m >= 1, ErrorCode::InvalidArgument, "simplex needs at least one atom");
  require(divisions >= 1, ErrorCode::InvalidArgument, "simplex grid needs divisions >= 1");
  SimplexOptimum best;
  best.point.assign(m, 0.0);
  best.point[0] = 1.0;
  std::vector<double> tau(m);
  enumerate_lattice(m, divisions, [&](const std::vector<int>& c) {
    for (std::size_t i = 0; i < m; ++i) tau[i] = static_cast<double>(c[i]) / divisions;
    const double v = objective(tau);
    if (v < best.value) {
      best.value = v;
      best.point = tau;
    }
  });
  if (!std::isfinite(best.value) || m == 1) return best;
  return refine(m, best, 1.0 / divisions, min_step, objective);
}

SimplexOptimum simplex_grid_minimize_separable(
    std::size_t m, const std::function<double(std::size_t, double)>& h, int divisions,
    double min_step) {
  require(m >= 1, ErrorCode::InvalidArgument, "simplex needs at least one atom");
  std::vector<std::vector<double>> table(m, std::vector<double>(static_cast<std::size_t>(divisions) + 1));
  for (std::size_t i = 0; i < m; ++i)
    for (int j = 0; j <= divisions; ++j)
      table[i][static_cast<std::size_t>(j)] = h(i, static_cast<double>(j) / divisions);

  SimplexOptimum best;
  std::vector<int> counts(m, 0), best_counts(m, 0);
  best_counts[0] = divisions;
  std::function<void(std::size_t, int, double)> rec = [&](std::size_t i, int remaining,
                                                          double partial) {
    if (i + 1 == m) {
      const double v = partial + table[i][static_cast<std::size_t>(remaining)];
      counts[i] = remaining;
      if (v < best.value) {
        best.value = v;
        best_counts = counts;
      }
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      const double t = table[i][static_cast<std::size_t>(c)];
      if (t == kInf) continue;
      counts[i] = c;
      rec(i + 1, remaining - c, partial + t);
    }
  };
  rec(0, divisions, 0.0);
  best.point.resize(m);
  for (std::size_t i = 0; i < m; ++i)
    best.point[i] = static_cast<double>(best_counts[i]) / divisions;
  if (!std::isfinite(best.value) || m == 1) return best;
  auto objective = [&](std::span<const double> tau) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += h(i, tau[i]);
    return s;
  };
  return refine(m, best, 1.0 / divisions, min_step, objective);
}

double legendre_objective(std::span<const double> tau, std::span<const double> pi,
                          std::span<const double> g) {
  double s = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (tau[i] <= 0.0) continue;
    if (g[i] == kInf) return kInf;
    s += tau[i] * g[i] + tau[i] * std::log(tau[i] / pi[i]);
  }
  return s;
}

LegendreCheck legendre_check(std::span<const double> pi, std::span<const double> g,
                             int divisions) {
  require(pi.size() == g.size() && !pi.empty(), ErrorCode::MismatchedSpaces,
          "g must have one entry per atom");
  double gmin = kInf;
  for (std::size_t i = 0; i < g.size(); ++i) {
    require(pi[i] > 0.0, ErrorCode::InvalidArgument, "reference probabilities must be positive");
    require(!std::isnan(g[i]) && g[i] > -kInf, ErrorCode::InvalidArgument,
            "g must be bounded below");
    gmin = std::min(gmin, g[i]);
  }
  require(gmin < kInf, ErrorCode::Infeasible, "g is +inf everywhere");

  LegendreCheck out;
  // log-sum-exp, shifted by the smallest finite g.
  double z = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i] < kInf) z += pi[i] * std::exp(-(g[i] - gmin));
  out.lhs = std::log(z) - gmin;

  out.tilt.assign(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i] < kInf) out.tilt[i] = pi[i] * std::exp(-(g[i] - gmin)) / z;
  out.rhs_closed = -legendre_objective(out.tilt, pi, g);

  auto h = [&](std::size_t i, double t) -> double {
    if (t <= 0.0) return 0.0;
    if (g[i] == kInf) return kInf;
    return t * g[i] + t * std::log(t / pi[i]);
  };
  auto best = simplex_grid_minimize_separable(g.size(), h, divisions);
  out.rhs_grid = -best.value;
  out.grid_minimizer = std::move(best.point);
  return out;
}

}  // namespace gibbs
