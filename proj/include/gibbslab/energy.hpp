#pragma once

// k-body interaction energies W_n on configurations, the macroscopic energy
// W on grid measures, external (background) energies, stability and
// confinement diagnostics, and the Euclidean reweighting transforms.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "gibbslab/expression.hpp"
#include "gibbslab/kernels.hpp"
#include "gibbslab/measures.hpp"

namespace gibbs {

struct EnergyCache;

/// beta_n as a function of n, with its limit.
class BetaSchedule {
 public:
  enum class Kind { Constant, Linear, Expression };

  static BetaSchedule constant(double beta);
  /// beta_n = slope * n.
  static BetaSchedule linear(double slope = 1.0);
  /// Expression in n; the limit must be supplied (may be +inf).
  static BetaSchedule expression(const std::string& source, double limit);

  double at(int n) const;
  double limit() const { return limit_; }
  Kind kind() const { return kind_; }
  double parameter() const { return value_; }
  const std::string& source() const { return expr_.source(); }

 private:
  Kind kind_ = Kind::Constant;
  double value_ = 1.0;
  double limit_ = 1.0;
  Expression expr_;
};

/// Environment nu_n of the external energy V_n(x) = int G^E(x, y) dnu_n(y).
struct Environment {
  /// Fixed measure nu_n = nu for every n.
  std::optional<GridMeasure> fixed;
  /// Deterministic point stream: nu_n is the empirical measure of stream(n).
  std::function<std::vector<Point>(int)> stream;
  /// Limit nu (used by the macroscopic energy); defaults to `fixed`.
  std::optional<GridMeasure> limit;
};

struct EuclideanData {
  enum class Mode { Weak, Strong };
  Mode mode = Mode::Weak;
  Potential v;
  double xi = 1.0;
  double epsilon = 0.0;
};

/// Coefficient c_n = (n - n xi / beta_n) / (n - 1) of V in the strong mode.
double strong_coefficient(int n, double beta_n, double xi);
/// a_n = (c_n - epsilon) / (1 - epsilon).
double strong_a(int n, double beta_n, double xi, double epsilon);

struct EnergyReport {
  double value = 0.0;
  /// Per-tuple contributions G(x_{i1}, ..., x_{ik}) / n^k in lexicographic
  /// tuple order, then per-particle external terms V_n(x_i) / n.
  std::vector<double> decomposition;
  bool infinite = false;
  double lower_bound = -kInf;
};

class EnergyModel {
 public:
  EnergyModel(std::shared_ptr<const Space> space, KernelPtr kernel, BetaSchedule beta);

  const Space& space() const { return *space_; }
  const std::shared_ptr<const Space>& space_ptr() const { return space_; }
  int arity() const { return kernel_->arity(); }
  const Kernel& base_kernel() const { return *kernel_; }
  KernelPtr base_kernel_ptr() const { return kernel_; }
  const BetaSchedule& beta() const { return beta_; }
  double lower_bound() const { return lower_bound_; }

  EnergyModel with_external(PairKernelPtr kernel, Environment env) const;
  EnergyModel with_beta(BetaSchedule beta) const;
  bool has_external() const { return external_kernel_ != nullptr; }
  const PairKernel* external_kernel() const { return external_kernel_.get(); }
  const Environment& environment() const { return env_; }
  const std::optional<EuclideanData>& euclidean() const { return euclidean_; }

  /// Internal kernel at particle number n (n-dependent only in the strong
  /// Euclidean mode). n = 0 asks for the limit kernel.
  KernelPtr kernel_for(int n) const;
  PairKernelPtr pair_kernel_for(int n) const;

  /// V_n(x); zero without external data.
  double external_potential(int n, const Point& x) const;
  /// V(x) = int G^E(x, y) dnu(y) for the limit environment, at every node.
  std::vector<double> external_limit_on_grid() const;

  double w_n(std::span<const Point> config) const;
  EnergyReport w_n_report(std::span<const Point> config) const;
  /// W_n(config with particle i moved to x) - W_n(config).
  double delta_move(std::span<const Point> config, std::size_t i, const Point& x) const;

  /// Macroscopic energy by tensor quadrature (k <= 3) plus the external
  /// term against the limit environment.
  double w_macro(const GridMeasure& mu) const;
  /// E_{mu^n}[W_n] = C(n,k)/n^k * k! * W_int(mu) + int V_n dmu.
  double expected_energy(const GridMeasure& mu, int n) const;

 private:
  friend EnergyModel euclidean_transform(const EnergyModel&, EuclideanData, int);
  double internal_macro(std::span<const double> mass, int n) const;

  std::shared_ptr<const Space> space_;
  KernelPtr kernel_;
  BetaSchedule beta_;
  double lower_bound_ = -kInf;
  PairKernelPtr external_kernel_;
  Environment env_;
  std::optional<EuclideanData> euclidean_;
  PairKernelPtr euclidean_base_;
  std::shared_ptr<EnergyCache> cache_;
};

/// Binomial coefficient as a double.
double binomial(int n, int k);

/// C(n, k) / n^k.
double tuple_coefficient(int n, int k);

struct ConfiningCheck {
  double mass_outside = 0.0;
  double bound = 0.0;
  bool holds = false;
};

/// Checks mu(K^c) <= (A k! / C)^(1/k) + k/n for mu = i_n(config).
/// Signals HypothesisViolated when G has a negative lower bound, W_n > A,
/// C <= 0, or an all-outside tuple of the configuration has G < C.
ConfiningCheck confining_bound_check(const EnergyModel& model, std::span<const Point> config,
                                     const std::function<bool(const Point&)>& inside_k,
                                     double a, double c);

/// Weak mode: kernel G + V(x) + V(y) on the box with reference e^{-V} l.
/// Strong mode: kernel G + c_n (V(x) + V(y)) with reference e^{-xi V} l.
/// The model's space must be a box; `resolution` sets the new grid.
EnergyModel euclidean_transform(const EnergyModel& model, EuclideanData data,
                                int resolution = 0);

}  // namespace gibbs
