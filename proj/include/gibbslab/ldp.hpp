#pragma once

// Numerical checks of the Laplace principle and the large deviation
// principle: exact enumeration on finite spaces, thermodynamic integration
// on manifolds, the constrained rate function, and the conditional gas.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gibbslab/equilibrium.hpp"
#include "gibbslab/fekete.hpp"
#include "gibbslab/sampler.hpp"

namespace gibbs {

struct LaplaceVerdict {
  std::vector<int> ns;
  /// L_n = (1/(n beta_n)) log int exp(-n beta_n f(i_n)) d gamma_n.
  std::vector<double> values;
  /// Standard errors of the values (zero when exact).
  std::vector<double> errors;
  /// -inf{f + F}.
  double limit = 0.0;
  /// Running best of the limit over successive grid refinements (finite
  /// spaces only).
  std::vector<double> limit_refinements;
  std::vector<double> gaps;
  double slope = 0.0;
  double threshold = 0.0;
  bool passes = false;
  /// Monte Carlo verdicts are advisory: the gap test subtracts 3 errors.
  bool advisory = false;
  /// Maximizers of the one-particle integrand (conditional particle only).
  std::vector<Point> witnesses;
};

/// Exact L_n on a finite space by summing over type classes.
double laplace_value_finite(const EnergyModel& model, const Functional& f, int n);

/// inf{f + F} with F = W + (1/beta) D(. || pi), beta = lim beta_n. On finite
/// spaces by simplex grid search at the given lattice divisions; elsewhere
/// by mirror descent (pair kernels, integral f).
double free_energy_infimum(const EnergyModel& model, const Functional& f = {},
                           int divisions = 200);

LaplaceVerdict laplace_verify_finite(const EnergyModel& model, const Functional& f,
                                     const std::vector<int>& ns, double threshold);

struct McOptions {
  /// Gauss-Legendre nodes on the multiplier path s in [0, 1].
  int rungs = 8;
  std::int64_t steps = 100000;
  std::uint64_t seed = 1;
  double proposal_scale = 0.3;
  /// Smallest effective sample size accepted at any rung.
  double ess_floor = 50.0;
  int batches = 20;
  /// Thinning of every rung; 0 keeps one state per sweep of n proposals.
  std::int64_t thin = 0;
  /// Optional tempering ladder used at every rung.
  std::vector<double> ladder;
  int threads = 0;
};

struct McEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::vector<double> rung_s, rung_weight, rung_mean, rung_error, rung_ess;
};

/// Gauss-Legendre nodes and weights on [0, 1] (Golub-Welsch).
void gauss_legendre_unit(int count, std::vector<double>& nodes, std::vector<double>& weights);

/// L_n by thermodynamic integration: L_n = -int_0^1 E_s[f(i_n) + W_n] ds.
/// f must be empty or an integral functional.
McEstimate laplace_estimate(const EnergyModel& model, const Functional& f, int n,
                            const McOptions& options = {});

LaplaceVerdict laplace_estimate_mc(const EnergyModel& model, const Functional& f,
                                   const std::vector<int>& ns, double threshold,
                                   const McOptions& options = {},
                                   std::optional<double> limit = std::nullopt);

/// (1/n^2) log(Gamma(1 + b n / 2) / Gamma(1 + b / 2)^n): L_n of the circle
/// log-gas with beta_n = b n and f = 0, from the circular ensemble
/// normalization.
double circular_log_gas_laplace(int n, double b = 1.0);

/// {mu : int g dmu >= c} (or > c when strict) with g given at the nodes.
struct LinearConstraint {
  std::vector<double> g;
  double c = 0.0;
  bool strict = false;
};

struct RateProfile {
  /// inf of I = F - inf F over the set.
  double value = 0.0;
  GridMeasure witness;
  double inf_free_energy = 0.0;
  /// Lagrange multiplier of the active constraint (0 when inactive).
  double multiplier = 0.0;
  bool active = false;
  /// Simplex-grid value on finite spaces with at most 4 atoms, else NaN.
  double grid_value = 0.0;
};

RateProfile rate_function_profile(const EnergyModel& model, double beta,
                                  const std::optional<LinearConstraint>& set = std::nullopt);

/// -(1/(n beta_n)) log P_n(int g di_n >= c) by exact enumeration (> c when
/// strict). +inf when the event is empty.
double enumerated_decay(const EnergyModel& model, int n, const LinearConstraint& set);

/// One particle in a varying environment: quadrature of
/// (1/beta_n) log int exp(-beta_n (f + V_n + lambda_n G_self)) dPi against
/// -min (f + V) on the grid.
struct OneParticleModel {
  std::shared_ptr<const Space> space;
  std::function<double(const Point&)> f;
  /// Limit potential V and its approximants V_n.
  std::function<double(const Point&)> v;
  std::function<double(int, const Point&)> v_n;
  std::function<double(int)> beta_n;
  std::function<double(int)> lambda_n;
  /// Self-interaction term; may be empty.
  std::function<double(const Point&)> self_energy;
};

LaplaceVerdict conditional_particle_verify(const OneParticleModel& model,
                                           const std::vector<int>& ns, double threshold);

/// Gas in an environment: the model carries G^E and the point stream nu_n.
/// Same estimator as laplace_estimate_mc with W_n = W^E_n + W^I_n.
LaplaceVerdict conditional_gas_verify(const EnergyModel& model, const Functional& f,
                                      const std::vector<int>& ns, double threshold,
                                      const McOptions& options = {},
                                      std::optional<double> limit = std::nullopt);

}  // namespace gibbs
