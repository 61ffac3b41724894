#pragma once

// Probability measures on a Space: empirical measures (n atoms of mass 1/n)
// and grid measures (a density relative to the reference measure at the
// quadrature nodes). Relative entropy, a bounded-Lipschitz surrogate for the
// weak topology, and the finite-space Legendre identity of the entropy.

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "gibbslab/spaces.hpp"

namespace gibbs {

class GridMeasure {
 public:
  /// Density relative to pi at the grid nodes. Rejects negative entries and
  /// total mass off 1 by more than 1e-10.
  static GridMeasure from_density(std::shared_ptr<const Space> space,
                                  std::vector<double> density);
  /// Normalizes nonnegative node masses (mass_i = w_i rho_i up to scale).
  static GridMeasure from_masses(std::shared_ptr<const Space> space,
                                 std::span<const double> masses);
  static GridMeasure uniform(std::shared_ptr<const Space> space);

  const Space& space() const { return *space_; }
  const std::shared_ptr<const Space>& space_ptr() const { return space_; }
  std::span<const double> density() const { return density_; }
  std::vector<double> masses() const;
  double integrate(std::span<const double> values_at_nodes) const;

  /// (1 - t) * this + t * other.
  GridMeasure mix(const GridMeasure& other, double t) const;

 private:
  std::shared_ptr<const Space> space_;
  std::vector<double> density_;
};

class EmpiricalMeasure {
 public:
  static EmpiricalMeasure from_points(std::shared_ptr<const Space> space,
                                      std::vector<Point> points);

  const Space& space() const { return *space_; }
  const std::shared_ptr<const Space>& space_ptr() const { return space_; }
  std::span<const Point> points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  double integrate(const std::function<double(const Point&)>& f) const;

 private:
  std::shared_ptr<const Space> space_;
  std::vector<Point> points_;
};

/// D(mu || pi) for a grid measure (always finite on a grid).
double relative_entropy(const GridMeasure& mu);
/// D(mu || nu) for distributions on the same finite support; +inf when mu
/// charges an atom that nu does not.
double relative_entropy(std::span<const double> mu, std::span<const double> nu);
/// Atoms are singular with respect to pi, so the entropy is +inf.
double relative_entropy(const EmpiricalMeasure& mu);

/// Gaussian smoothing in geodesic distance with an explicit bandwidth,
/// renormalized to a grid measure.
GridMeasure grid_projection(const EmpiricalMeasure& e, double bandwidth);

/// Fixed test-function dictionary: min(d(., a), 1) for up to 256 grid
/// anchors, plus low-order basis functions rescaled to be 1-Lipschitz with
/// sup-norm at most 1.
class LipschitzDictionary {
 public:
  explicit LipschitzDictionary(std::shared_ptr<const Space> space);
  std::size_t size() const { return anchors_.size() + basis_.size(); }
  double evaluate(std::size_t j, const Point& x) const;
  /// Values of every dictionary function at every grid node (cached).
  const std::vector<double>& node_values() const { return node_values_; }
  const Space& space() const { return *space_; }

 private:
  std::shared_ptr<const Space> space_;
  std::vector<Point> anchors_;
  std::vector<std::size_t> basis_;
  std::vector<double> scale_;
  std::vector<double> node_values_;  // function-major
};

double bounded_lipschitz_distance(const GridMeasure& a, const GridMeasure& b);
double bounded_lipschitz_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b);
double bounded_lipschitz_distance(const EmpiricalMeasure& a, const GridMeasure& b);

// ---------------------------------------------------------------------------
// Finite simplex utilities.

struct SimplexOptimum {
  double value = kInf;
  std::vector<double> point;
};

/// Minimum of an objective over the probability simplex with m atoms by
/// exhaustive search on the lattice of step 1/divisions, then nested local
/// refinement around the incumbent until the step falls below min_step.
SimplexOptimum simplex_grid_minimize(
    std::size_t m, const std::function<double(std::span<const double>)>& objective,
    int divisions = 200, double min_step = 1e-9);

/// Same search for a separable objective sum_i h_i(tau_i), which allows the
/// coarse stage to run from tables.
SimplexOptimum simplex_grid_minimize_separable(
    std::size_t m, const std::function<double(std::size_t, double)>& h,
    int divisions = 200, double min_step = 1e-9);

struct LegendreCheck {
  double lhs = 0.0;          // log sum pi_i exp(-g_i)
  double rhs_closed = 0.0;   // -(E_tau g + D(tau || pi)) at the Gibbs tilt
  double rhs_grid = 0.0;     // -min over the simplex grid
  std::vector<double> tilt;  // tau_i proportional to pi_i exp(-g_i)
  std::vector<double> grid_minimizer;
};

/// g may contain +inf entries (0 * inf = 0); at least one must be finite.
LegendreCheck legendre_check(std::span<const double> probabilities,
                             std::span<const double> g, int divisions = 200);

/// sum_i tau_i g_i + D(tau || pi) with the convention 0 * inf = 0.
double legendre_objective(std::span<const double> tau, std::span<const double> pi,
                          std::span<const double> g);

}  // namespace gibbs
