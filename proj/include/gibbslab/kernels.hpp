#pragma once

// Interaction kernels G : M^k -> (-inf, +inf]. Pair kernels (k = 2) carry
// the extras needed by quadrature and optimizers: a self-cell average for
// the macroscopic diagonal and a gradient in the first argument.

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gibbslab/expression.hpp"
#include "gibbslab/spaces.hpp"

namespace gibbs {

class Kernel {
 public:
  virtual ~Kernel() = default;
  virtual int arity() const = 0;
  virtual std::string name() const = 0;
  /// May return +inf. Symmetric under permutations of the arguments.
  virtual double evaluate(std::span<const Point> points) const = 0;
  /// A closed-form lower bound on the given space, or -inf when none is
  /// known (callers then estimate one on the grid).
  virtual double known_lower_bound(const Space& space) const;
  /// +inf on the diagonal.
  virtual bool singular() const { return false; }
};

class PairKernel : public Kernel {
 public:
  int arity() const override { return 2; }
  double evaluate(std::span<const Point> points) const override {
    return pair(points[0], points[1]);
  }
  virtual double pair(const Point& x, const Point& y) const = 0;

  /// Mean of G over two independent uniform points of the quadrature cell of
  /// node i (only the diagonal of the macroscopic quadrature uses this).
  virtual double self_average(const Space& space, std::size_t node) const;
  /// Gradient of G(., y) at x in chart coordinates (ambient on S^2). The
  /// default is a central difference along the tangent frame.
  virtual Tangent gradient_first(const Space& space, const Point& x, const Point& y) const;
  /// Whether W is strictly convex on probability measures (positive
  /// definite kernel), which admits zero-temperature equilibrium runs.
  virtual bool strictly_convex() const { return false; }
  /// Non-smooth kernels route optimizers to pattern search.
  virtual bool smooth() const { return true; }
};

using KernelPtr = std::shared_ptr<const Kernel>;
using PairKernelPtr = std::shared_ptr<const PairKernel>;

/// G == c for any arity.
class ConstantKernel final : public Kernel {
 public:
  ConstantKernel(double c, int arity) : c_(c), arity_(arity) {}
  int arity() const override { return arity_; }
  std::string name() const override { return "constant"; }
  double evaluate(std::span<const Point>) const override { return c_; }
  double known_lower_bound(const Space&) const override { return c_; }
  double value() const { return c_; }

 private:
  double c_;
  int arity_;
};

/// G == c as a pair kernel (fast paths, smooth, zero gradient).
class ConstantPairKernel final : public PairKernel {
 public:
  explicit ConstantPairKernel(double c) : c_(c) {}
  std::string name() const override { return "constant"; }
  double pair(const Point&, const Point&) const override { return c_; }
  double known_lower_bound(const Space&) const override { return c_; }
  double self_average(const Space&, std::size_t) const override { return c_; }
  Tangent gradient_first(const Space&, const Point&, const Point&) const override {
    return {0, 0, 0};
  }
  double value() const { return c_; }

 private:
  double c_;
};

/// G = -scale * log(chord(x, y)).
class LogChordKernel final : public PairKernel {
 public:
  LogChordKernel(std::shared_ptr<const Space> space, double scale = 1.0)
      : scale_(scale), space_(std::move(space)) {}
  std::string name() const override { return "log-chord"; }
  double pair(const Point& x, const Point& y) const override;
  bool singular() const override { return true; }
  double known_lower_bound(const Space& space) const override;
  double self_average(const Space& space, std::size_t node) const override;
  Tangent gradient_first(const Space& space, const Point& x, const Point& y) const override;
  bool strictly_convex() const override { return scale_ > 0.0; }
  double scale() const { return scale_; }

 private:
  double scale_;
  std::shared_ptr<const Space> space_;
};

/// G = chord(x, y)^(-s), s > 0.
class RieszKernel final : public PairKernel {
 public:
  RieszKernel(std::shared_ptr<const Space> space, double s);
  std::string name() const override { return "riesz"; }
  double pair(const Point& x, const Point& y) const override;
  bool singular() const override { return true; }
  double known_lower_bound(const Space& space) const override;
  double self_average(const Space& space, std::size_t node) const override;
  Tangent gradient_first(const Space& space, const Point& x, const Point& y) const override;
  bool strictly_convex() const override { return true; }
  double exponent() const { return s_; }

 private:
  double s_;
  std::shared_ptr<const Space> space_;
};

/// Truncated spectral Green function; +inf when the points coincide.
class GreenKernel final : public PairKernel {
 public:
  explicit GreenKernel(std::shared_ptr<const GreenModel> green) : green_(std::move(green)) {}
  std::string name() const override { return "green"; }
  double pair(const Point& x, const Point& y) const override;
  bool singular() const override { return true; }
  double known_lower_bound(const Space&) const override { return green_->lower_bound(); }
  double self_average(const Space& space, std::size_t node) const override;
  bool strictly_convex() const override { return true; }
  const GreenModel& green() const { return *green_; }
  std::shared_ptr<const GreenModel> green_ptr() const { return green_; }

 private:
  std::shared_ptr<const GreenModel> green_;
};

/// Symmetric table on atom indices (finite spaces).
class TableKernel final : public PairKernel {
 public:
  explicit TableKernel(std::vector<std::vector<double>> table);
  std::string name() const override { return "table"; }
  double pair(const Point& x, const Point& y) const override;
  double known_lower_bound(const Space&) const override;
  double self_average(const Space& space, std::size_t node) const override;
  bool smooth() const override { return false; }
  const std::vector<std::vector<double>>& table() const { return table_; }

 private:
  std::vector<std::vector<double>> table_;
};

/// G = |x| |y| (Euclidean norm in the box chart).
class ProductNormKernel final : public PairKernel {
 public:
  std::string name() const override { return "product-norm"; }
  double pair(const Point& x, const Point& y) const override;
  double known_lower_bound(const Space&) const override { return 0.0; }
  bool smooth() const override { return false; }
};

/// User expression in x1 y1 z1 x2 y2 z2, symmetrized as (e(a,b) + e(b,a))/2.
class ExpressionKernel final : public PairKernel {
 public:
  explicit ExpressionKernel(const std::string& source);
  std::string name() const override { return "expression"; }
  double pair(const Point& x, const Point& y) const override;
  const std::string& source() const { return expr_.source(); }

 private:
  Expression expr_;
};

/// Potential V on the space given by an expression in x y z (chart
/// coordinates).
class Potential {
 public:
  Potential() = default;
  explicit Potential(const std::string& source);
  double operator()(const Point& p) const;
  Tangent gradient(const Space& space, const Point& p) const;
  bool empty() const { return expr_.empty(); }
  const std::string& source() const { return expr_.source(); }

 private:
  Expression expr_;
};

/// G(x, y) + a (V(x) + V(y)).
class PotentialAugmentedKernel final : public PairKernel {
 public:
  PotentialAugmentedKernel(PairKernelPtr base, Potential v, double a)
      : base_(std::move(base)), v_(std::move(v)), a_(a) {}
  std::string name() const override { return base_->name() + "+V"; }
  double pair(const Point& x, const Point& y) const override;
  bool singular() const override { return base_->singular(); }
  double self_average(const Space& space, std::size_t node) const override;
  Tangent gradient_first(const Space& space, const Point& x, const Point& y) const override;
  bool strictly_convex() const override { return base_->strictly_convex(); }
  bool smooth() const override { return base_->smooth(); }
  const PairKernel& base() const { return *base_; }
  double coefficient() const { return a_; }

 private:
  PairKernelPtr base_;
  Potential v_;
  double a_;
};

/// Minimum of a pair kernel over distinct grid node pairs (deterministic,
/// subsampled to at most ~4e6 pairs).
double grid_lower_bound(const PairKernel& kernel, const Space& space);

/// Lower bound used by stability checks: the closed form when known, else
/// the grid estimate.
double kernel_lower_bound(const Kernel& kernel, const Space& space);

/// Builds u_i = sum_j G(node_i, node_j) m_j with the self-cell average on
/// the diagonal. Dense for small grids, spectral for Green kernels, and
/// streamed otherwise.
class PairOperator {
 public:
  PairOperator(std::shared_ptr<const Space> space, PairKernelPtr kernel);
  std::vector<double> apply(std::span<const double> masses) const;
  /// Entry (i, j) with the diagonal convention.
  double entry(std::size_t i, std::size_t j) const;
  const Space& space() const { return *space_; }
  const PairKernel& kernel() const { return *kernel_; }

 private:
  std::shared_ptr<const Space> space_;
  PairKernelPtr kernel_;
  std::vector<double> dense_;
  std::vector<double> diagonal_;
  const GreenKernel* green_ = nullptr;
};

}  // namespace gibbs
