#pragma once

// Compact model spaces: circle, flat torus, round sphere, Euclidean box and
// finite atom sets. Each carries a reference probability measure, a
// quadrature grid whose weights are that measure, and (on the closed
// manifolds) a real orthonormal eigenbasis of the Laplacian. The Green
// function of a background charge is built on top of the eigenbasis.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gibbslab/error.hpp"
#include "gibbslab/rng.hpp"

namespace gibbs {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Chart coordinates of a point. Meaning depends on the owning space:
///   circle  c[0] = angle in [0, 2pi)
///   torus   (c[0], c[1]) in [0, 1)^2
///   sphere  unit vector (c[0], c[1], c[2])
///   box     (c[0][, c[1]]) inside the box
///   finite  c[0] = atom index
struct Point {
  std::array<double, 3> c{};
  friend bool operator==(const Point&, const Point&) = default;
};

/// Tangent vector in the same coordinates as Point (ambient 3-vector on S^2).
using Tangent = std::array<double, 3>;

enum class SpaceKind { Circle, Torus, Sphere, Box, Finite };

std::string to_string(SpaceKind kind);
SpaceKind space_kind_from_string(const std::string& name);

/// One real eigenfunction of the Laplacian. `order` is the truncation unit
/// (|m| on S^1, max(|m1|,|m2|) on T^2, degree l on S^2); (p, q) identify the
/// function within its kind.
struct BasisFunction {
  int order = 0;
  int p = 0;
  int q = 0;
  double eigenvalue = 0.0;
};

using DensityFunction = std::function<double(const Point&)>;

class Space {
 public:
  /// Circle (resolution = nodes), torus (nodes per axis) or sphere
  /// (icosahedral subdivision level).
  static std::shared_ptr<const Space> manifold(SpaceKind kind, int resolution,
                                               int basis_order);
  /// Box [lo, hi]^dim with midpoint grid and reference density relative to
  /// Lebesgue measure (normalized on the grid). dim is 1 or 2.
  static std::shared_ptr<const Space> box(double lo, double hi, int dim,
                                          int resolution,
                                          DensityFunction density = {});
  /// Finite atom set with the given reference probabilities.
  static std::shared_ptr<const Space> finite(std::vector<double> probabilities);

  SpaceKind kind() const { return kind_; }
  int dimension() const { return dimension_; }
  int resolution() const { return resolution_; }
  int basis_order() const { return basis_order_; }
  std::size_t size() const { return nodes_.size(); }

  const Point& node(std::size_t i) const { return nodes_[i]; }
  std::span<const Point> nodes() const { return nodes_; }
  double weight(std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const { return weights_; }

  double box_lo() const { return lo_; }
  double box_hi() const { return hi_; }

  double distance(const Point& a, const Point& b) const;
  /// Straight-line distance in the standard embedding (chord on S^1 and S^2,
  /// flat geodesic on T^2, Euclidean in a box, discrete on atoms).
  double chord(const Point& a, const Point& b) const;
  double diameter() const;

  bool contains(const Point& p) const;
  Point canonical(const Point& p) const;
  void require_contains(const Point& p) const;

  /// Geometric size (length or area) of the quadrature cell around node i,
  /// ignoring the reference density.
  double cell_size(std::size_t i) const;

  /// log of the reference density at p, up to an additive constant.
  double log_reference_density(const Point& p) const;
  Point sample_reference(Rng& rng) const;

  // Spectral basis (empty on boxes and finite sets).
  bool has_basis() const { return !basis_.empty(); }
  std::size_t basis_size() const { return basis_.size(); }
  const BasisFunction& basis(std::size_t k) const { return basis_[k]; }
  std::size_t basis_count_up_to(int order) const;
  double basis_value(std::size_t k, const Point& p) const;
  /// Values of the first out.size() basis functions at p.
  void basis_row(const Point& p, std::span<double> out) const;
  double basis_at_node(std::size_t node, std::size_t k) const;
  /// Quadrature coefficients <f, phi_k> for k < out.size().
  void project(std::span<const double> values_at_nodes,
               std::span<double> out) const;

  // Geometry used by optimizers and samplers.
  std::vector<Tangent> tangent_frame(const Point& p) const;
  Point retract(const Point& p, const Tangent& v) const;
  /// Symmetric geodesic Gaussian step (random walk) or, on atoms, an
  /// independent draw from the reference measure.
  Point propose(const Point& p, double scale, Rng& rng) const;
  bool independence_proposals() const { return kind_ == SpaceKind::Finite; }

 private:
  Space() = default;
  void build_basis();
  void build_table();

  SpaceKind kind_ = SpaceKind::Circle;
  int dimension_ = 1;
  int resolution_ = 0;
  int basis_order_ = 0;
  double lo_ = 0.0, hi_ = 1.0;
  std::vector<Point> nodes_;
  std::vector<double> weights_;
  std::vector<double> cell_sizes_;
  std::vector<BasisFunction> basis_;
  std::vector<double> table_;  // nodes x basis, row-major; empty if too big
  DensityFunction density_;
  double density_max_ = 1.0;

  friend class SpaceCache;
};

/// Signed measure of total mass one with smooth density with respect to pi,
/// sampled on the grid.
class BackgroundCharge {
 public:
  static BackgroundCharge uniform(const Space& space);
  static BackgroundCharge from_function(const Space& space,
                                        const DensityFunction& density);
  static BackgroundCharge from_values(const Space& space,
                                      std::vector<double> density);

  bool is_uniform() const { return uniform_; }
  std::span<const double> density() const { return density_; }
  std::uint64_t hash() const;

 private:
  bool uniform_ = true;
  std::vector<double> density_;

  friend class SpaceCache;
};

/// Truncated spectral Green function of a background charge:
///   G(x,y) = H(x,y) - phi(x) - phi(y) + c,
///   H = sum_{k>=1} phi_k(x) phi_k(y) / lambda_k,  phi(x) = int H(x,.) dLambda,
/// with c = int phi dLambda so that int G(x,.) dLambda = 0.
class GreenModel {
 public:
  GreenModel(std::shared_ptr<const Space> space, BackgroundCharge charge,
             int truncation);

  const Space& space() const { return *space_; }
  std::shared_ptr<const Space> space_ptr() const { return space_; }
  const BackgroundCharge& charge() const { return charge_; }
  int truncation() const { return truncation_; }
  std::size_t basis_count() const { return count_; }
  double offset() const { return offset_; }
  double lower_bound() const { return lower_bound_; }
  std::span<const double> charge_coefficients() const { return charge_coeffs_; }

  /// Signals DiagonalSingularity when x and y coincide.
  double evaluate(const Point& x, const Point& y) const;
  /// Truncated kernel, finite everywhere including the diagonal.
  double evaluate_truncated(const Point& x, const Point& y) const;
  double phi(const Point& x) const;
  /// G(x, node_i) for every grid node.
  std::vector<double> row(const Point& x) const;
  /// u_i = sum_j G(node_i, node_j) mass_j, evaluated spectrally.
  std::vector<double> potential(std::span<const double> mass) const;

  /// |int G_x Lap f dpi + f(x) - int f dLambda| by quadrature, for
  /// f = sum_k coeffs[k] phi_k.
  double identity_residual(std::span<const double> coeffs,
                           const Point& x) const;

 private:
  GreenModel() = default;
  void finish_build();

  std::shared_ptr<const Space> space_;
  BackgroundCharge charge_;
  int truncation_ = 0;
  std::size_t count_ = 0;
  std::vector<std::size_t> active_;      // basis indices with order <= K
  std::vector<double> charge_coeffs_;    // Lambda_k for k in active_
  std::vector<double> phi_nodes_;
  double offset_ = 0.0;
  double lower_bound_ = 0.0;

  friend class SpaceCache;
};

/// Binary cache for spectral spaces and Green models. Header: magic,
/// format version, kind, resolution, basis order, charge hash.
class SpaceCache {
 public:
  static constexpr std::uint32_t kMagic = 0x50534C47;  // "GLSP"
  static constexpr std::uint32_t kVersion = 1;

  static void write(const std::string& path, const Space& space,
                    const GreenModel* green = nullptr);
  static std::shared_ptr<const Space> read_space(const std::string& path);
  static GreenModel read_green(const std::string& path);
};

}  // namespace gibbs
