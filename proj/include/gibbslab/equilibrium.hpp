#pragma once

// Free energy F = W + (1/beta) D(. || pi) on grid measures, its minimization
// by entropic mirror descent, the mean-field residual for Green kernels and
// directional-derivative checks along segments.

#include <span>
#include <vector>

#include "gibbslab/energy.hpp"

namespace gibbs {

/// Pair-interaction free energy. beta = +inf drops the entropy term
/// (0 * inf = 0).
class FreeEnergyModel {
 public:
  FreeEnergyModel(EnergyModel energy, double beta);

  const EnergyModel& energy() const { return energy_; }
  double beta() const { return beta_; }
  const Space& space() const { return energy_.space(); }

  /// W + (1/beta) D + sum_i m_i tilt_i (tilt may be empty).
  double value(std::span<const double> masses, std::span<const double> tilt = {}) const;
  /// Gradient in the masses: u + V + (1/beta)(1 + log rho) + tilt.
  std::vector<double> gradient(std::span<const double> masses,
                               std::span<const double> tilt = {}) const;
  /// u_i = sum_j G_ij m_j + V_i.
  std::vector<double> potential(std::span<const double> masses) const;
  /// sum_ij d_i G_ij d_j for a signed mass vector d.
  double interaction(std::span<const double> d) const;

 private:
  EnergyModel energy_;
  double beta_;
  std::shared_ptr<PairOperator> op_;
  std::vector<double> external_;
};

double free_energy(const FreeEnergyModel& model, const GridMeasure& mu);

struct EquilibriumOptions {
  int max_steps = 20000;
  /// Stop when the Frank-Wolfe gap <g, m> - min g falls below this.
  double tolerance = 1e-10;
  double initial_step = 1.0;
  /// Optional linear term sum_i m_i tilt_i added to F.
  std::vector<double> tilt;
};

struct EquilibriumResult {
  GridMeasure mu;
  double value = 0.0;
  std::vector<double> trace;
  double optimality_gap = 0.0;
  /// Mean-field residual when the kernel is a Green kernel, else NaN.
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

EquilibriumResult minimize_free_energy(const FreeEnergyModel& model, const GridMeasure& init,
                                       const EquilibriumOptions& options = {});

struct MeanFieldResidual {
  /// L2(pi) norm of Lap log rho - beta (rho - lambda) on modes within the
  /// Green truncation order.
  double residual = 0.0;
  /// L2 norm of the same expression on modes above the truncation order
  /// (content the truncated kernel cannot see).
  double tail = 0.0;
};

MeanFieldResidual mean_field_residual(const FreeEnergyModel& model, const GridMeasure& mu);

struct DerivativeCheck {
  double analytic = 0.0;
  std::vector<double> steps;
  std::vector<double> numeric;
  /// d^2/dt^2 F(mu_t) at t = 0, the scale of the one-sided truncation error.
  double curvature = 0.0;
};

/// dF(mu_t)/dt at t = 0 for mu_t = (1 - t) mu_eq + t mu, analytically and by
/// one-sided differences.
DerivativeCheck directional_derivative_check(const FreeEnergyModel& model,
                                             const GridMeasure& mu_eq, const GridMeasure& mu,
                                             std::vector<double> steps = {1e-3, 1e-4});

}  // namespace gibbs
