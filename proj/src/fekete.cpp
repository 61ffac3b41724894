#include "gibbslab/fekete.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>
#include <thread>

#include "gibbslab/equilibrium.hpp"
#include "gibbslab/rng.hpp"

namespace gibbs {

Functional Functional::integral(std::function<double(const Point&)> g, std::string label) {
  require(static_cast<bool>(g), ErrorCode::InvalidArgument, "integral functional needs g");
  Functional f;
  f.kind_ = Kind::Integral;
  f.g_ = std::move(g);
  f.label_ = std::move(label);
  return f;
}

Functional Functional::of_density(std::function<double(const GridMeasure&)> F, double bandwidth,
                                  std::string label) {
  require(static_cast<bool>(F), ErrorCode::InvalidArgument, "density functional needs F");
  require(bandwidth > 0.0, ErrorCode::InvalidArgument, "smoothing bandwidth must be positive");
  Functional f;
  f.kind_ = Kind::Density;
  f.F_ = std::move(F);
  f.bandwidth_ = bandwidth;
  f.label_ = std::move(label);
  return f;
}

double Functional::operator()(std::shared_ptr<const Space> space,
                              std::span<const Point> config) const {
  switch (kind_) {
    case Kind::None: return 0.0;
    case Kind::Integral: {
      double s = 0.0;
      for (const auto& p : config) s += g_(p);
      return s / static_cast<double>(config.size());
    }
    case Kind::Density: {
      auto e = EmpiricalMeasure::from_points(std::move(space),
                                             std::vector<Point>(config.begin(), config.end()));
      return F_(grid_projection(e, bandwidth_));
    }
  }
  return 0.0;
}

double Functional::on_measure(const GridMeasure& mu) const {
  switch (kind_) {
    case Kind::None: return 0.0;
    case Kind::Integral: {
      std::vector<double> v;
      v.reserve(mu.space().size());
      for (const auto& p : mu.space().nodes()) v.push_back(g_(p));
      return mu.integrate(v);
    }
    case Kind::Density: return F_(mu);
  }
  return 0.0;
}

namespace {

constexpr double kCollision = 1e-12;

struct Collision {
  std::size_t i, j;
};

bool point_less(const Point& a, const Point& b) {
  return std::lexicographical_compare(a.c.begin(), a.c.end(), b.c.begin(), b.c.end());
}

void canonicalize(std::vector<Point>& config) { std::sort(config.begin(), config.end(), point_less); }

bool config_less(const std::vector<Point>& a, const std::vector<Point>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), point_less);
}

class Objective {
 public:
  Objective(const EnergyModel& model, int n, const Functional& f)
      : model_(model), n_(n), f_(f), kernel_(model.arity() == 2 ? model.pair_kernel_for(n) : nullptr) {}

  const Space& space() const { return model_.space(); }

  bool smooth() const {
    return kernel_ && kernel_->smooth() && (f_.empty() || f_.is_integral()) &&
           space().kind() != SpaceKind::Finite;
  }

  double value(std::span<const Point> config) const {
    const double w = model_.w_n(config);
    if (w == kInf) return kInf;
    return f_.empty() ? w : w + f_(model_.space_ptr(), config);
  }

  double w_n(std::span<const Point> config) const { return model_.w_n(config); }

  double delta(std::vector<Point>& config, std::size_t i, const Point& x) const {
    const double dw = model_.delta_move(config, i, x);
    if (dw == kInf || f_.empty()) return dw;
    if (f_.is_integral()) return dw + (f_.density_at(x) - f_.density_at(config[i])) / n_;
    const double before = f_(model_.space_ptr(), config);
    const Point old = config[i];
    config[i] = x;
    const double after = f_(model_.space_ptr(), config);
    config[i] = old;
    return dw + after - before;
  }

  /// Frame coefficients of the gradient, n x dim row-major. Throws
  /// Collision when a pair is closer than the collision threshold or the
  /// gradient is not finite.
  std::vector<double> gradient(const std::vector<Point>& config) const {
    const Space& s = space();
    const std::size_t n = config.size();
    const double inv_n2 = 1.0 / (double(n_) * double(n_));
    std::vector<double> out;
    for (std::size_t i = 0; i < n; ++i) {
      const auto frame = s.tangent_frame(config[i]);
      Tangent g{0, 0, 0};
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        if (s.distance(config[i], config[j]) < kCollision) throw Collision{std::min(i, j), std::max(i, j)};
        const Tangent d = kernel_->gradient_first(s, config[i], config[j]);
        for (int c = 0; c < 3; ++c) g[std::size_t(c)] += d[std::size_t(c)] * inv_n2;
      }
      for (const auto& e : frame) {
        double c = g[0] * e[0] + g[1] * e[1] + g[2] * e[2];
        c += numeric_slope(config[i], e);
        if (!std::isfinite(c)) throw Collision{i, nearest(config, i)};
        out.push_back(c);
      }
    }
    return out;
  }

 private:
  // Directional derivative of V_n(x)/n + g(x)/n along e.
  double numeric_slope(const Point& x, const Tangent& e) const {
    const bool ext = model_.has_external();
    const bool lin = f_.is_integral();
    if (!ext && !lin) return 0.0;
    const double h = 1e-6;
    const Tangent up{h * e[0], h * e[1], h * e[2]}, down{-h * e[0], -h * e[1], -h * e[2]};
    const Point a = space().retract(x, up), b = space().retract(x, down);
    double fa = 0.0, fb = 0.0;
    if (ext) {
      fa += model_.external_potential(n_, a);
      fb += model_.external_potential(n_, b);
    }
    if (lin) {
      fa += f_.density_at(a);
      fb += f_.density_at(b);
    }
    const double span = space().distance(a, b);
    return span > 0.0 ? (fa - fb) / span / n_ : 0.0;
  }

  std::size_t nearest(const std::vector<Point>& config, std::size_t i) const {
    std::size_t best = i == 0 ? 1 : 0;
    for (std::size_t j = 0; j < config.size(); ++j)
      if (j != i && space().distance(config[i], config[j]) < space().distance(config[i], config[best]))
        best = j;
    return best;
  }

  const EnergyModel& model_;
  int n_;
  const Functional& f_;
  PairKernelPtr kernel_;
};

struct Outcome {
  std::vector<Point> config;
  double value = kInf;
  std::vector<double> trace;
  std::vector<std::string> notes;
};

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<Point> step_along(const Space& s, const std::vector<Point>& config,
                              const std::vector<double>& coeff, double t) {
  std::vector<Point> out(config.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < config.size(); ++i) {
    const auto frame = s.tangent_frame(config[i]);
    Tangent v{0, 0, 0};
    for (const auto& e : frame) {
      for (int c = 0; c < 3; ++c) v[std::size_t(c)] -= t * coeff[k] * e[std::size_t(c)];
      ++k;
    }
    out[i] = s.retract(config[i], v);
  }
  return out;
}

void check_collisions(const Space& s, const std::vector<Point>& config) {
  for (std::size_t i = 0; i < config.size(); ++i)
    for (std::size_t j = i + 1; j < config.size(); ++j)
      if (s.distance(config[i], config[j]) < kCollision) throw Collision{i, j};
}

// Gradient descent with Barzilai-Borwein steps and Armijo backtracking.
void gradient_descent(const Objective& obj, Outcome& o, const FeketeOptions& opt) {
  const Space& s = obj.space();
  auto g = obj.gradient(o.config);
  double gn = norm(g);
  double t = gn > 0.0 ? 1e-2 * s.diameter() / gn : 1.0;
  int flat = 0;
  for (int it = 0; it < opt.max_iterations && gn > opt.gradient_tolerance; ++it) {
    bool accepted = false;
    std::vector<Point> next;
    double fn = kInf;
    for (int tries = 0; tries < 60; ++tries) {
      next = step_along(s, o.config, g, t);
      fn = obj.value(next);
      if (fn <= o.value - 1e-4 * t * gn * gn) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    check_collisions(s, next);
    auto g2 = obj.gradient(next);
    // BB1 step from the frame coefficients; frames move with the points,
    // which only perturbs the estimate.
    double sy = 0.0, ss = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double dx = -t * g[k];
      sy += dx * (g2[k] - g[k]);
      ss += dx * dx;
    }
    const double gain = o.value - fn;
    t = sy > 0.0 ? ss / sy : 2.0 * t;
    o.config = std::move(next);
    o.value = fn;
    o.trace.push_back(fn);
    g = std::move(g2);
    gn = norm(g);
    flat = gain <= 1e-15 * std::max(1.0, std::fabs(fn)) ? flat + 1 : 0;
    if (flat >= 5) break;
  }
}

// Coordinate pattern search along the tangent frame.
void pattern_search(const Objective& obj, Outcome& o, const FeketeOptions& opt) {
  const Space& s = obj.space();
  double delta = 0.1 * s.diameter();
  const double floor = 1e-10 * s.diameter();
  for (int it = 0; it < opt.max_iterations && delta > floor; ++it) {
    bool improved = false;
    for (std::size_t i = 0; i < o.config.size(); ++i) {
      for (const auto& e : s.tangent_frame(o.config[i])) {
        for (double sign : {1.0, -1.0}) {
          const Tangent v{sign * delta * e[0], sign * delta * e[1], sign * delta * e[2]};
          const Point x = s.retract(o.config[i], v);
          const double d = obj.delta(o.config, i, x);
          if (d < -1e-15 * std::max(1.0, std::fabs(o.value))) {
            o.config[i] = x;
            o.value += d;
            o.trace.push_back(o.value);
            improved = true;
            break;
          }
        }
      }
    }
    if (!improved) delta *= 0.5;
  }
  o.value = obj.value(o.config);
}

void local_search(const Objective& obj, Outcome& o, const FeketeOptions& opt) {
  if (obj.smooth()) gradient_descent(obj, o, opt);
  else pattern_search(obj, o, opt);
}

// Moves single particles to better grid nodes, then searches locally again.
void polish(const Objective& obj, Outcome& o, const FeketeOptions& opt) {
  const Space& s = obj.space();
  const std::size_t stride = std::max<std::size_t>(1, s.size() / 4096);
  for (int round = 0; round < 3; ++round) {
    bool moved = false;
    for (std::size_t i = 0; i < o.config.size(); ++i) {
      double best = -1e-12 * std::max(1.0, std::fabs(o.value));
      std::size_t where = s.size();
      for (std::size_t v = 0; v < s.size(); v += stride) {
        const double d = obj.delta(o.config, i, s.node(v));
        if (d < best) {
          best = d;
          where = v;
        }
      }
      if (where < s.size()) {
        o.config[i] = s.node(where);
        o.value = obj.value(o.config);
        o.trace.push_back(o.value);
        moved = true;
      }
    }
    if (!moved) break;
    local_search(obj, o, opt);
  }
}

Outcome run_restart(const Objective& obj, int n, int restart, const FeketeOptions& opt) {
  const Space& s = obj.space();
  Outcome o;
  for (int attempt = 0; attempt < 4; ++attempt) {
    Rng rng = make_stream(opt.seed, "fekete", std::uint64_t(restart) * 16 + std::uint64_t(attempt));
    o = Outcome{{}, kInf, {}, std::move(o.notes)};
    for (int draw = 0; draw < 100 && !std::isfinite(o.value); ++draw) {
      o.config.assign(std::size_t(n), Point{});
      for (auto& p : o.config) p = s.sample_reference(rng);
      try {
        check_collisions(s, o.config);
      } catch (const Collision&) {
        continue;
      }
      o.value = obj.value(o.config);
    }
    if (!std::isfinite(o.value)) {
      o.notes.push_back("restart " + std::to_string(restart) + ": no finite starting configuration");
      return o;
    }
    o.trace.push_back(o.value);
    try {
      local_search(obj, o, opt);
      if (opt.polish) polish(obj, o, opt);
      canonicalize(o.config);
      return o;
    } catch (const Collision& c) {
      std::ostringstream os;
      os << "restart " << restart << ": particles " << c.i << " and " << c.j
         << " collided; re-seeded";
      o.notes.push_back(os.str());
    }
  }
  o.value = kInf;
  return o;
}

// Exhaustive search over occupation numbers on a finite space.
Outcome exhaustive(const Objective& obj, int n) {
  const Space& s = obj.space();
  const std::size_t m = s.size();
  Outcome best;
  std::vector<int> counts(m, 0);
  std::vector<Point> config(static_cast<std::size_t>(n));
  auto visit = [&](auto&& self, std::size_t atom, int left) -> void {
    if (atom + 1 == m) {
      counts[atom] = left;
      std::size_t pos = 0;
      for (std::size_t a = 0; a < m; ++a)
        for (int c = 0; c < counts[a]; ++c) config[pos++] = s.node(a);
      const double v = obj.value(config);
      if (v < best.value) {
        best.value = v;
        best.config = config;
      }
      return;
    }
    for (int c = left; c >= 0; --c) {
      counts[atom] = c;
      self(self, atom + 1, left - c);
    }
  };
  visit(visit, 0, n);
  best.trace.push_back(best.value);
  canonicalize(best.config);
  return best;
}

}  // namespace

FeketeResult fekete_minimize(const EnergyModel& model, int n, const Functional& f,
                             const FeketeOptions& options) {
  require(n >= model.arity(), ErrorCode::InvalidArgument, "need at least k particles");
  require(options.restarts >= 1, ErrorCode::InvalidArgument, "need at least one restart");
  const Objective obj(model, n, f);
  const Space& s = model.space();
  FeketeResult result;

  std::vector<Outcome> outcomes;
  const bool finite = s.kind() == SpaceKind::Finite;
  if (finite && binomial(n + int(s.size()) - 1, int(s.size()) - 1) <= 2e6) {
    outcomes.push_back(exhaustive(obj, n));
    result.exhaustive = true;
  } else {
    require(!finite, ErrorCode::CapExceeded, "finite space too large for exhaustive search");
    unsigned threads = options.threads > 0 ? unsigned(options.threads)
                                           : std::max(1u, std::thread::hardware_concurrency());
    outcomes.resize(std::size_t(options.restarts));
    for (int start = 0; start < options.restarts; start += int(threads)) {
      std::vector<std::future<Outcome>> jobs;
      const int stop = std::min(options.restarts, start + int(threads));
      for (int r = start; r < stop; ++r)
        jobs.push_back(std::async(std::launch::async, run_restart, std::cref(obj), n, r,
                                  std::cref(options)));
      for (int r = start; r < stop; ++r) outcomes[std::size_t(r)] = jobs[std::size_t(r - start)].get();
    }
  }

  const Outcome* best = nullptr;
  for (const auto& o : outcomes) {
    result.finals.push_back(o.value);
    result.notes.insert(result.notes.end(), o.notes.begin(), o.notes.end());
    if (!std::isfinite(o.value)) continue;
    if (!best || o.value < best->value ||
        (o.value == best->value && config_less(o.config, best->config)))
      best = &o;
  }
  result.restarts = int(outcomes.size());
  require(best != nullptr, ErrorCode::Infeasible, "no restart reached a finite energy");
  result.best = best->config;
  result.value = best->value;
  result.trace = best->trace;
  result.w_n = obj.w_n(result.best);
  if (obj.smooth()) {
    try {
      result.gradient_norm = norm(obj.gradient(result.best));
    } catch (const Collision&) {
      result.gradient_norm = kInf;
    }
  } else {
    result.gradient_norm = std::numeric_limits<double>::quiet_NaN();
  }
  return result;
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorCode::InvalidArgument,
          "slope needs two or more matching points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(x.size());
  my /= double(y.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  require(sxx > 0.0, ErrorCode::InvalidArgument, "slope needs distinct abscissae");
  return sxy / sxx;
}

double macro_infimum(const EnergyModel& model, const Functional& f) {
  const Space& s = model.space();
  const Kernel& k = model.base_kernel();
  const bool constant = dynamic_cast<const ConstantKernel*>(&k) ||
                        dynamic_cast<const ConstantPairKernel*>(&k);
  if (constant && f.empty() && !model.has_external()) {
    std::vector<Point> tuple(std::size_t(k.arity()), s.node(0));
    double fact = 1.0;
    for (int i = 2; i <= k.arity(); ++i) fact *= i;
    return k.evaluate(tuple) / fact;
  }
  if (s.kind() == SpaceKind::Finite) {
    const auto space = model.space_ptr();
    auto objective = [&](std::span<const double> m) {
      auto mu = GridMeasure::from_masses(space, m);
      return model.w_macro(mu) + f.on_measure(mu);
    };
    return simplex_grid_minimize(s.size(), objective).value;
  }
  if (model.arity() == 2) {
    const auto pk = model.pair_kernel_for(0);
    const PairKernel* base = pk.get();
    if (const auto* aug = dynamic_cast<const PotentialAugmentedKernel*>(base)) base = &aug->base();
    if (base->strictly_convex() && (f.empty() || f.is_integral())) {
      FreeEnergyModel fm(model, kInf);
      EquilibriumOptions opt;
      if (f.is_integral())
        for (const auto& p : s.nodes()) opt.tilt.push_back(f.density_at(p));
      return minimize_free_energy(fm, GridMeasure::uniform(model.space_ptr()), opt).value;
    }
  }
  fail(ErrorCode::Unavailable, "macroscopic infimum unavailable for this kernel class");
}

InfimaTable infima_convergence_table(const EnergyModel& model, const std::vector<int>& ns,
                                     double threshold, const Functional& f,
                                     const FeketeOptions& options, std::optional<double> macro) {
  require(ns.size() >= 2, ErrorCode::InvalidArgument, "the table needs two or more n");
  InfimaTable t;
  t.threshold = threshold;
  t.macro = macro ? *macro : macro_infimum(model, f);
  std::vector<double> xs, gaps;
  for (int n : ns) {
    const auto r = fekete_minimize(model, n, f, options);
    InfimaRow row{n, r.value, t.macro, std::fabs(r.value - t.macro)};
    t.rows.push_back(row);
    xs.push_back(n);
    gaps.push_back(row.gap);
  }
  t.slope = least_squares_slope(xs, gaps);
  t.passes = gaps.back() < threshold && t.slope < 0.0;
  return t;
}

}  // namespace gibbs
