#pragma once

// Minimization of W_n (+ f o i_n) over configurations: multi-start local
// search with a node re-seating polish, and the table of inf W_n against
// the macroscopic infimum.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gibbslab/energy.hpp"

namespace gibbs {

/// f on probability measures, restricted to the two classes the optimizer
/// can evaluate on atoms: integrals of g, and functionals of the smoothed
/// grid projection.
class Functional {
 public:
  Functional() = default;
  /// f(mu) = int g dmu.
  static Functional integral(std::function<double(const Point&)> g, std::string label = "g");
  /// f(mu) = F(grid_projection(mu, bandwidth)).
  static Functional of_density(std::function<double(const GridMeasure&)> F, double bandwidth,
                               std::string label = "F");

  bool empty() const { return kind_ == Kind::None; }
  bool is_integral() const { return kind_ == Kind::Integral; }
  const std::string& label() const { return label_; }
  double operator()(std::shared_ptr<const Space> space, std::span<const Point> config) const;
  /// g at a point (integral class only).
  double density_at(const Point& p) const { return g_(p); }
  /// F on a grid measure (either class).
  double on_measure(const GridMeasure& mu) const;

 private:
  enum class Kind { None, Integral, Density };
  Kind kind_ = Kind::None;
  std::function<double(const Point&)> g_;
  std::function<double(const GridMeasure&)> F_;
  double bandwidth_ = 0.0;
  std::string label_;
};

struct FeketeOptions {
  int restarts = 8;
  std::uint64_t seed = 1;
  int max_iterations = 5000;
  /// Stop the gradient phase when the Riemannian gradient norm of the
  /// objective drops below this.
  double gradient_tolerance = 1e-11;
  /// Worker threads for restarts; 0 uses the hardware count.
  int threads = 0;
  bool polish = true;
};

struct FeketeResult {
  std::vector<Point> best;
  double value = kInf;
  double w_n = kInf;
  int restarts = 0;
  std::vector<double> finals;
  /// Objective along accepted steps of the winning restart.
  std::vector<double> trace;
  /// NaN for non-smooth kernels and finite spaces.
  double gradient_norm = 0.0;
  bool exhaustive = false;
  std::vector<std::string> notes;
};

FeketeResult fekete_minimize(const EnergyModel& model, int n, const Functional& f = {},
                             const FeketeOptions& options = {});

struct InfimaRow {
  int n = 0;
  double inf_n = 0.0;
  double inf_macro = 0.0;
  double gap = 0.0;
};

struct InfimaTable {
  std::vector<InfimaRow> rows;
  double macro = 0.0;
  /// Least-squares slope of gap against n.
  double slope = 0.0;
  double threshold = 0.0;
  bool passes = false;
};

/// inf W + f: closed form for constant kernels, simplex grid on finite
/// spaces, zero-temperature mirror descent for strictly convex pair
/// kernels. Unavailable otherwise.
double macro_infimum(const EnergyModel& model, const Functional& f = {});

InfimaTable infima_convergence_table(const EnergyModel& model, const std::vector<int>& ns,
                                     double threshold, const Functional& f = {},
                                     const FeketeOptions& options = {},
                                     std::optional<double> macro = std::nullopt);

/// Least-squares slope of y against x.
double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace gibbs
