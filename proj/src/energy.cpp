#include "gibbslab/energy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace gibbs {

namespace {

constexpr std::size_t kMacroTripleLimit = 512;

// Visits every k-subset i_1 < ... < i_k of {0..n-1} in lexicographic order.
template <class F>
void for_each_subset(int n, int k, F&& visit) {
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int a = 0; a < k; ++a) idx[static_cast<std::size_t>(a)] = a;
  while (true) {
    visit(idx);
    int a = k - 1;
    while (a >= 0 && idx[static_cast<std::size_t>(a)] == n - k + a) --a;
    if (a < 0) return;
    ++idx[static_cast<std::size_t>(a)];
    for (int b = a + 1; b < k; ++b)
      idx[static_cast<std::size_t>(b)] = idx[static_cast<std::size_t>(b - 1)] + 1;
  }
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

// Caches shared by copies of a model; guarded for concurrent readers.
struct EnergyCache {
  std::mutex mutex;
  std::map<int, std::shared_ptr<PairOperator>> ops;
  std::map<int, std::vector<Point>> streams;
  std::optional<std::vector<double>> external_limit;
};

// ---------------------------------------------------------------------------

BetaSchedule BetaSchedule::constant(double beta) {
  require(beta > 0.0, ErrorCode::InvalidArgument, "beta must be positive");
  BetaSchedule b;
  b.kind_ = Kind::Constant;
  b.value_ = beta;
  b.limit_ = beta;
  return b;
}

BetaSchedule BetaSchedule::linear(double slope) {
  require(slope > 0.0 && std::isfinite(slope), ErrorCode::InvalidArgument,
          "beta slope must be positive");
  BetaSchedule b;
  b.kind_ = Kind::Linear;
  b.value_ = slope;
  b.limit_ = kInf;
  return b;
}

BetaSchedule BetaSchedule::expression(const std::string& source, double limit) {
  require(limit > 0.0, ErrorCode::InvalidArgument, "beta limit must be positive");
  BetaSchedule b;
  b.kind_ = Kind::Expression;
  b.expr_ = Expression(source, {"n"});
  b.limit_ = limit;
  return b;
}

double BetaSchedule::at(int n) const {
  double v = value_;
  if (kind_ == Kind::Linear) v = value_ * n;
  if (kind_ == Kind::Expression) v = expr_({static_cast<double>(n)});
  require(v > 0.0 && !std::isnan(v), ErrorCode::InvalidArgument,
          "beta_n must be positive (n = " + std::to_string(n) + ")");
  return v;
}

double strong_coefficient(int n, double beta_n, double xi) {
  require(n >= 2, ErrorCode::InvalidArgument, "strong coefficient needs n >= 2");
  const double nd = static_cast<double>(n);
  return (nd - nd * xi / beta_n) / (nd - 1.0);
}

double strong_a(int n, double beta_n, double xi, double epsilon) {
  require(epsilon >= 0.0 && epsilon < 1.0, ErrorCode::InvalidArgument,
          "epsilon must lie in [0, 1)");
  return (strong_coefficient(n, beta_n, xi) - epsilon) / (1.0 - epsilon);
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double tuple_coefficient(int n, int k) { return binomial(n, k) / std::pow(n, k); }

// ---------------------------------------------------------------------------

EnergyModel::EnergyModel(std::shared_ptr<const Space> space, KernelPtr kernel,
                         BetaSchedule beta)
    : space_(std::move(space)),
      kernel_(std::move(kernel)),
      beta_(std::move(beta)),
      cache_(std::make_shared<EnergyCache>()) {
  require(space_ && kernel_, ErrorCode::InvalidArgument, "energy model needs a space and kernel");
  require(kernel_->arity() >= 2, ErrorCode::InvalidArgument, "kernel arity must be at least 2");
  lower_bound_ = kernel_lower_bound(*kernel_, *space_);
}

EnergyModel EnergyModel::with_external(PairKernelPtr kernel, Environment env) const {
  require(kernel != nullptr, ErrorCode::InvalidArgument, "external kernel missing");
  require(env.fixed.has_value() || static_cast<bool>(env.stream), ErrorCode::InvalidArgument,
          "environment needs a fixed measure or a point stream");
  if (env.fixed) {
    require(&env.fixed->space() == space_.get(), ErrorCode::MismatchedSpaces,
            "environment measure lives on another space");
    if (!env.limit) env.limit = env.fixed;
  }
  EnergyModel m(*this);
  m.cache_ = std::make_shared<EnergyCache>();
  m.external_kernel_ = std::move(kernel);
  m.env_ = std::move(env);
  if (m.env_.limit) {
    const auto v = m.external_limit_on_grid();
    for (double x : v)
      require(std::isfinite(x), ErrorCode::DivergentIntegral,
              "external potential is not finite on the grid");
  }
  return m;
}

EnergyModel EnergyModel::with_beta(BetaSchedule beta) const {
  EnergyModel m(*this);
  m.cache_ = std::make_shared<EnergyCache>();
  m.beta_ = std::move(beta);
  return m;
}

KernelPtr EnergyModel::kernel_for(int n) const {
  if (!euclidean_ || euclidean_->mode == EuclideanData::Mode::Weak || n == 0) return kernel_;
  const double c = strong_coefficient(n, beta_.at(n), euclidean_->xi);
  return std::make_shared<PotentialAugmentedKernel>(euclidean_base_, euclidean_->v, c);
}

PairKernelPtr EnergyModel::pair_kernel_for(int n) const {
  return std::dynamic_pointer_cast<const PairKernel>(kernel_for(n));
}

double EnergyModel::external_potential(int n, const Point& x) const {
  if (!external_kernel_) return 0.0;
  const PairKernel& ge = *external_kernel_;
  if (env_.stream) {
    EnergyCache& cache = *cache_;
    const std::vector<Point>* pts = nullptr;
    {
      std::lock_guard<std::mutex> lock(cache.mutex);
      auto it = cache.streams.find(n);
      if (it == cache.streams.end()) {
        auto p = env_.stream(n);
        require(!p.empty(), ErrorCode::InvalidArgument, "environment stream returned no points");
        it = cache.streams.emplace(n, std::move(p)).first;
      }
      pts = &it->second;
    }
    double s = 0.0;
    for (const auto& p : *pts) {
      const double g = ge.pair(x, p);
      if (g == kInf) return kInf;
      s += g;
    }
    return s / static_cast<double>(pts->size());
  }
  const GridMeasure& nu = *env_.fixed;
  const auto mass = nu.masses();
  double s = 0.0;
  for (std::size_t j = 0; j < mass.size(); ++j) {
    if (mass[j] == 0.0) continue;
    const double g = space_->distance(x, space_->node(j)) < 1e-12 ? ge.self_average(*space_, j)
                                                                 : ge.pair(x, space_->node(j));
    if (g == kInf) return kInf;
    s += mass[j] * g;
  }
  return s;
}

std::vector<double> EnergyModel::external_limit_on_grid() const {
  if (!external_kernel_) return std::vector<double>(space_->size(), 0.0);
  require(env_.limit.has_value(), ErrorCode::Unavailable,
          "the environment has no limit measure");
  EnergyCache& cache = *cache_;
  std::lock_guard<std::mutex> lock(cache.mutex);
  if (!cache.external_limit) {
    PairOperator op(space_, external_kernel_);
    cache.external_limit = op.apply(env_.limit->masses());
  }
  return *cache.external_limit;
}

EnergyReport EnergyModel::w_n_report(std::span<const Point> config) const {
  const int n = static_cast<int>(config.size());
  const int k = arity();
  require(n >= k, ErrorCode::InvalidArgument,
          "configuration has fewer points than the kernel arity");
  for (const auto& p : config) space_->require_contains(p);
  EnergyReport r;
  r.lower_bound = lower_bound_;
  const double scale = 1.0 / std::pow(static_cast<double>(n), k);
  const KernelPtr kernel = kernel_for(n);
  std::vector<Point> tuple(static_cast<std::size_t>(k));
  for_each_subset(n, k, [&](const std::vector<int>& idx) {
    for (int a = 0; a < k; ++a)
      tuple[static_cast<std::size_t>(a)] = config[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])];
    const double g = kernel->evaluate(tuple);
    if (g == kInf) r.infinite = true;
    r.decomposition.push_back(g * scale);
  });
  if (external_kernel_)
    for (const auto& p : config) {
      const double v = external_potential(n, p);
      if (v == kInf) r.infinite = true;
      r.decomposition.push_back(v / n);
    }
  if (r.infinite) {
    r.value = kInf;
  } else {
    double s = 0.0;
    for (double d : r.decomposition) s += d;
    r.value = s;
  }
  return r;
}

double EnergyModel::w_n(std::span<const Point> config) const {
  const int n = static_cast<int>(config.size());
  const int k = arity();
  require(n >= k, ErrorCode::InvalidArgument,
          "configuration has fewer points than the kernel arity");
  for (const auto& p : config) space_->require_contains(p);
  const KernelPtr kernel = kernel_for(n);
  double s = 0.0;
  if (const auto* pk = dynamic_cast<const PairKernel*>(kernel.get())) {
    for (std::size_t i = 0; i < config.size(); ++i)
      for (std::size_t j = i + 1; j < config.size(); ++j) {
        const double g = pk->pair(config[i], config[j]);
        if (g == kInf) return kInf;
        s += g;
      }
  } else {
    bool inf = false;
    std::vector<Point> tuple(static_cast<std::size_t>(k));
    for_each_subset(n, k, [&](const std::vector<int>& idx) {
      if (inf) return;
      for (int a = 0; a < k; ++a)
        tuple[static_cast<std::size_t>(a)] = config[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])];
      const double g = kernel->evaluate(tuple);
      if (g == kInf) inf = true;
      s += g;
    });
    if (inf) return kInf;
  }
  s /= std::pow(static_cast<double>(n), k);
  if (external_kernel_) {
    double e = 0.0;
    for (const auto& p : config) {
      const double v = external_potential(n, p);
      if (v == kInf) return kInf;
      e += v;
    }
    s += e / n;
  }
  return s;
}

double EnergyModel::delta_move(std::span<const Point> config, std::size_t i,
                               const Point& x) const {
  const int n = static_cast<int>(config.size());
  const int k = arity();
  const KernelPtr kernel = kernel_for(n);
  double old_sum = 0.0, new_sum = 0.0;
  bool old_inf = false, new_inf = false;
  if (const auto* pk = dynamic_cast<const PairKernel*>(kernel.get())) {
    for (std::size_t j = 0; j < config.size(); ++j) {
      if (j == i) continue;
      const double go = pk->pair(config[i], config[j]);
      const double gn = pk->pair(x, config[j]);
      if (go == kInf) old_inf = true; else old_sum += go;
      if (gn == kInf) new_inf = true; else new_sum += gn;
    }
  } else {
    std::vector<Point> told(static_cast<std::size_t>(k)), tnew(static_cast<std::size_t>(k));
    // Subsets of the other n-1 particles of size k-1, completed by particle i.
    for_each_subset(n - 1, k - 1, [&](const std::vector<int>& idx) {
      for (int a = 0; a < k - 1; ++a) {
        int j = idx[static_cast<std::size_t>(a)];
        if (j >= static_cast<int>(i)) ++j;
        told[static_cast<std::size_t>(a)] = config[static_cast<std::size_t>(j)];
        tnew[static_cast<std::size_t>(a)] = config[static_cast<std::size_t>(j)];
      }
      told.back() = config[i];
      tnew.back() = x;
      const double go = kernel->evaluate(told);
      const double gn = kernel->evaluate(tnew);
      if (go == kInf) old_inf = true; else old_sum += go;
      if (gn == kInf) new_inf = true; else new_sum += gn;
    });
  }
  if (external_kernel_) {
    const double vo = external_potential(n, config[i]);
    const double vn = external_potential(n, x);
    const double w = std::pow(static_cast<double>(n), k - 1);
    if (vo == kInf) old_inf = true; else old_sum += vo * w;
    if (vn == kInf) new_inf = true; else new_sum += vn * w;
  }
  if (new_inf) return kInf;
  if (old_inf) return -kInf;
  return (new_sum - old_sum) / std::pow(static_cast<double>(n), k);
}

double EnergyModel::internal_macro(std::span<const double> mass, int n) const {
  const int k = arity();
  require(k <= 3, ErrorCode::InvalidArgument,
          "macroscopic quadrature supports arity k <= 3");
  double internal = 0.0;
  if (k == 2) {
    // The strong Euclidean mode has one kernel per n; every other model
    // shares the limit kernel.
    const bool per_n = euclidean_ && euclidean_->mode == EuclideanData::Mode::Strong;
    const int key = per_n ? n : 0;
    std::shared_ptr<PairOperator> op;
    {
      std::lock_guard<std::mutex> lock(cache_->mutex);
      auto& slot = cache_->ops[key];
      if (!slot) slot = std::make_shared<PairOperator>(space_, pair_kernel_for(key));
      op = slot;
    }
    const auto u = op->apply(mass);
    for (std::size_t i = 0; i < mass.size(); ++i)
      if (mass[i] != 0.0) internal += mass[i] * u[i];
    return 0.5 * internal;
  }
  const std::size_t nodes = space_->size();
  require(nodes <= kMacroTripleLimit, ErrorCode::InvalidArgument,
          "three-body quadrature is limited to 512 grid nodes");
  std::vector<Point> t(3);
  for (std::size_t a = 0; a < nodes; ++a)
    for (std::size_t b = 0; b < nodes; ++b)
      for (std::size_t c = 0; c < nodes; ++c) {
        const double w = mass[a] * mass[b] * mass[c];
        if (w == 0.0) continue;
        t[0] = space_->node(a);
        t[1] = space_->node(b);
        t[2] = space_->node(c);
        internal += w * kernel_->evaluate(t);
      }
  return internal / 6.0;
}

double EnergyModel::w_macro(const GridMeasure& mu) const {
  require(&mu.space() == space_.get(), ErrorCode::MismatchedSpaces,
          "measure lives on another space");
  const auto mass = mu.masses();
  const double internal = internal_macro(mass, 0);
  if (!external_kernel_) return internal;
  const auto v = external_limit_on_grid();
  double e = 0.0;
  for (std::size_t i = 0; i < mass.size(); ++i) e += mass[i] * v[i];
  return internal + e;
}

double EnergyModel::expected_energy(const GridMeasure& mu, int n) const {
  require(&mu.space() == space_.get(), ErrorCode::MismatchedSpaces,
          "measure lives on another space");
  const int k = arity();
  require(n >= k, ErrorCode::InvalidArgument, "n must be at least the kernel arity");
  const auto mass = mu.masses();
  const double internal = internal_macro(mass, n);
  require(std::isfinite(internal), ErrorCode::DivergentIntegral,
          "k-fold integral of the kernel diverges on the grid");
  double result = tuple_coefficient(n, k) * factorial(k) * internal;
  if (external_kernel_) {
    double e = 0.0;
    for (std::size_t i = 0; i < mass.size(); ++i)
      if (mass[i] != 0.0) e += mass[i] * external_potential(n, space_->node(i));
    result += e;
  }
  return result;
}

// ---------------------------------------------------------------------------

ConfiningCheck confining_bound_check(const EnergyModel& model, std::span<const Point> config,
                                     const std::function<bool(const Point&)>& inside_k,
                                     double a, double c) {
  const int n = static_cast<int>(config.size());
  const int k = model.arity();
  if (!(c > 0.0)) fail(ErrorCode::HypothesisViolated, "the constant C must be positive");
  if (model.lower_bound() < 0.0)
    fail(ErrorCode::HypothesisViolated, "the kernel is not nonnegative");
  const double w = model.w_n(config);
  if (!(w <= a * (1.0 + 1e-12) + 1e-300))
    fail(ErrorCode::HypothesisViolated, "the configuration energy exceeds A");

  std::vector<Point> outside;
  for (const auto& p : config)
    if (!inside_k(p)) outside.push_back(p);
  if (static_cast<int>(outside.size()) >= k) {
    const KernelPtr kernel = model.kernel_for(n);
    std::vector<Point> tuple(static_cast<std::size_t>(k));
    bool violated = false;
    for_each_subset(static_cast<int>(outside.size()), k, [&](const std::vector<int>& idx) {
      for (int j = 0; j < k; ++j)
        tuple[static_cast<std::size_t>(j)] = outside[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
      if (kernel->evaluate(tuple) < c) violated = true;
    });
    if (violated)
      fail(ErrorCode::HypothesisViolated, "G < C on a tuple of points outside K");
  }
  ConfiningCheck r;
  r.mass_outside = static_cast<double>(outside.size()) / n;
  r.bound = std::pow(a * factorial(k) / c, 1.0 / k) + static_cast<double>(k) / n;
  r.holds = r.mass_outside <= r.bound;
  return r;
}

EnergyModel euclidean_transform(const EnergyModel& model, EuclideanData data, int resolution) {
  const Space& old = model.space();
  require(old.kind() == SpaceKind::Box, ErrorCode::UnsupportedKind,
          "Euclidean transforms apply to box spaces");
  require(!data.v.empty(), ErrorCode::InvalidArgument, "Euclidean transform needs a potential V");
  auto base = std::dynamic_pointer_cast<const PairKernel>(model.base_kernel_ptr());
  require(base != nullptr, ErrorCode::UnsupportedKind, "Euclidean transforms need a pair kernel");
  if (resolution <= 0) resolution = old.resolution();

  const bool strong = data.mode == EuclideanData::Mode::Strong;
  const double weight = strong ? data.xi : 1.0;
  if (strong) {
    require(data.xi > 0.0, ErrorCode::InvalidArgument, "xi must be positive");
    require(data.epsilon >= 0.0 && data.epsilon < 1.0, ErrorCode::InvalidArgument,
            "epsilon must lie in [0, 1)");
  }
  Potential v = data.v;
  auto density = [v, weight](const Point& p) { return std::exp(-weight * v(p)); };
  auto space = Space::box(old.box_lo(), old.box_hi(), old.dimension(), resolution, density);
  for (const auto& p : space->nodes()) {
    const double vp = v(p);
    if (std::isnan(vp) || vp == -kInf)
      fail(ErrorCode::IntegrabilityFailure, "V is not bounded below on the grid");
  }

  PairKernelPtr limit;
  if (!strong) {
    limit = std::make_shared<PotentialAugmentedKernel>(base, v, 1.0);
  } else {
    const PotentialAugmentedKernel with_eps(base, v, data.epsilon);
    if (!(grid_lower_bound(with_eps, *space) > -kInf))
      fail(ErrorCode::HypothesisViolated, "G + eps V(x) + eps V(y) is not bounded below");
    const double beta_limit = model.beta().limit();
    const double c_limit = 1.0 - data.xi / beta_limit;
    limit = std::make_shared<PotentialAugmentedKernel>(base, v, c_limit);
  }
  EnergyModel out(space, limit, model.beta());
  out.cache_ = std::make_shared<EnergyCache>();
  if (!(out.lower_bound_ > -kInf) || std::isnan(out.lower_bound_))
    fail(ErrorCode::HypothesisViolated, "transformed kernel is not bounded below on the grid");
  out.euclidean_ = std::move(data);
  out.euclidean_base_ = base;
  return out;
}

}  // namespace gibbs
