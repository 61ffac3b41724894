#include "gibbslab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gibbs {

namespace {

constexpr std::size_t kDenseLimit = 4096;

struct ChordGradient {
  double chord;
  Tangent grad;  // derivative of the chord in x (chart coordinates)
};

double wrapped(double d, double period) {
  d = std::fmod(d, period);
  if (d > period / 2) d -= period;
  if (d < -period / 2) d += period;
  return d;
}

ChordGradient chord_gradient(const Space& space, const Point& x, const Point& y) {
  switch (space.kind()) {
    case SpaceKind::Circle: {
      const double half = 0.5 * (x.c[0] - y.c[0]);
      const double s = std::sin(half);
      const double sign = s >= 0 ? 1.0 : -1.0;
      return {2.0 * std::fabs(s), {sign * std::cos(half), 0, 0}};
    }
    case SpaceKind::Torus: {
      const double du = wrapped(x.c[0] - y.c[0], 1.0);
      const double dv = wrapped(x.c[1] - y.c[1], 1.0);
      const double r = std::hypot(du, dv);
      return {r, {du / r, dv / r, 0}};
    }
    default: {
      Tangent d{x.c[0] - y.c[0], x.c[1] - y.c[1], x.c[2] - y.c[2]};
      const double r = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
      return {r, {d[0] / r, d[1] / r, d[2] / r}};
    }
  }
}

// Density of the distance between two uniform points of the unit square on
// [1, sqrt 2], written in w with r = sqrt(1 + w^2) so the integrand is smooth.
template <class F>
double unit_square_outer(F f) {
  // 48-point Gauss-Legendre on [0, 1] by composite 8 x 6 panels.
  static const double xs[6] = {-0.9324695142031521, -0.6612093864662645, -0.2386191860831969,
                               0.2386191860831969,  0.6612093864662645,  0.9324695142031521};
  static const double ws[6] = {0.1713244923791704, 0.3607615730481386, 0.4679139345726910,
                               0.4679139345726910, 0.3607615730481386, 0.1713244923791704};
  double total = 0.0;
  const int panels = 8;
  for (int p = 0; p < panels; ++p) {
    const double a = static_cast<double>(p) / panels, b = static_cast<double>(p + 1) / panels;
    for (int q = 0; q < 6; ++q) {
      const double w = 0.5 * (a + b) + 0.5 * (b - a) * xs[q];
      const double r = std::sqrt(1.0 + w * w);
      const double density =
          2.0 * r * (4.0 * w - (r * r + 2.0 - std::numbers::pi) - 4.0 * std::acos(1.0 / r));
      total += 0.5 * (b - a) * ws[q] * f(r) * density * (w / r);
    }
  }
  return total;
}

// Mean of -log|u - v| for u, v uniform in the unit square.
double unit_square_log_mean() {
  static const double value = [] {
    const double inner = 2.0 * (std::numbers::pi / 4.0 - 4.0 / 9.0 + 1.0 / 16.0);
    return inner + unit_square_outer([](double r) { return -std::log(r); });
  }();
  return value;
}

// Mean of |u - v|^-s for u, v uniform in the unit square (s < 2).
double unit_square_riesz_mean(double s) {
  const double inner =
      2.0 * (std::numbers::pi / (2.0 - s) - 4.0 / (3.0 - s) + 1.0 / (4.0 - s));
  return inner + unit_square_outer([s](double r) { return std::pow(r, -s); });
}

}  // namespace

double Kernel::known_lower_bound(const Space&) const { return -kInf; }

double PairKernel::self_average(const Space& space, std::size_t node) const {
  return pair(space.node(node), space.node(node));
}

Tangent PairKernel::gradient_first(const Space& space, const Point& x, const Point& y) const {
  const double h = 1e-6 * std::max(space.diameter(), 1e-3);
  Tangent g{0, 0, 0};
  for (const Tangent& e : space.tangent_frame(x)) {
    const Tangent plus{h * e[0], h * e[1], h * e[2]};
    const Tangent minus{-h * e[0], -h * e[1], -h * e[2]};
    const double d = (pair(space.retract(x, plus), y) - pair(space.retract(x, minus), y)) / (2 * h);
    for (int i = 0; i < 3; ++i) g[static_cast<std::size_t>(i)] += d * e[static_cast<std::size_t>(i)];
  }
  return g;
}

// ---------------------------------------------------------------------------

double LogChordKernel::pair(const Point& x, const Point& y) const {
  const double c = space_->chord(x, y);
  if (c <= 0.0) return scale_ > 0 ? kInf : (scale_ == 0 ? 0.0 : -kInf);
  return -scale_ * std::log(c);
}

double LogChordKernel::known_lower_bound(const Space& space) const {
  if (scale_ < 0) return -kInf;
  double max_chord = 0.0;
  switch (space.kind()) {
    case SpaceKind::Circle:
    case SpaceKind::Sphere: max_chord = 2.0; break;
    default: max_chord = space.diameter(); break;
  }
  return -scale_ * std::log(max_chord);
}

double LogChordKernel::self_average(const Space& space, std::size_t node) const {
  const double cell = space.cell_size(node);
  if (space.dimension() == 1) return scale_ * (-std::log(cell) + 1.5);
  if (space.dimension() == 2) return scale_ * (-0.5 * std::log(cell) + unit_square_log_mean());
  return pair(space.node(node), space.node(node));
}

Tangent LogChordKernel::gradient_first(const Space& space, const Point& x,
                                       const Point& y) const {
  if (space.kind() == SpaceKind::Finite) return {0, 0, 0};
  const auto cg = chord_gradient(space, x, y);
  const double f = -scale_ / cg.chord;
  return {f * cg.grad[0], f * cg.grad[1], f * cg.grad[2]};
}

RieszKernel::RieszKernel(std::shared_ptr<const Space> space, double s)
    : s_(s), space_(std::move(space)) {
  require(s > 0.0, ErrorCode::InvalidArgument, "Riesz exponent must be positive");
}

double RieszKernel::pair(const Point& x, const Point& y) const {
  const double c = space_->chord(x, y);
  if (c <= 0.0) return kInf;
  return std::pow(c, -s_);
}

double RieszKernel::known_lower_bound(const Space& space) const {
  switch (space.kind()) {
    case SpaceKind::Circle:
    case SpaceKind::Sphere: return std::pow(2.0, -s_);
    default: return std::pow(space.diameter(), -s_);
  }
}

double RieszKernel::self_average(const Space& space, std::size_t node) const {
  const double cell = space.cell_size(node);
  if (space.dimension() == 1) {
    if (s_ >= 1.0) return kInf;
    return 2.0 * std::pow(cell, -s_) / ((1.0 - s_) * (2.0 - s_));
  }
  if (space.dimension() == 2) {
    if (s_ >= 2.0) return kInf;
    return std::pow(cell, -0.5 * s_) * unit_square_riesz_mean(s_);
  }
  return pair(space.node(node), space.node(node));
}

Tangent RieszKernel::gradient_first(const Space& space, const Point& x, const Point& y) const {
  if (space.kind() == SpaceKind::Finite) return {0, 0, 0};
  const auto cg = chord_gradient(space, x, y);
  const double f = -s_ * std::pow(cg.chord, -s_ - 1.0);
  return {f * cg.grad[0], f * cg.grad[1], f * cg.grad[2]};
}

double GreenKernel::pair(const Point& x, const Point& y) const {
  if (green_->space().distance(x, y) < 1e-12) return kInf;
  return green_->evaluate_truncated(x, y);
}

double GreenKernel::self_average(const Space& space, std::size_t node) const {
  return green_->evaluate_truncated(space.node(node), space.node(node));
}

TableKernel::TableKernel(std::vector<std::vector<double>> table) : table_(std::move(table)) {
  const std::size_t m = table_.size();
  require(m >= 1, ErrorCode::InvalidArgument, "kernel table is empty");
  for (std::size_t i = 0; i < m; ++i) {
    require(table_[i].size() == m, ErrorCode::InvalidArgument, "kernel table must be square");
    for (std::size_t j = 0; j < m; ++j) {
      require(!std::isnan(table_[i][j]) && table_[i][j] > -kInf, ErrorCode::InvalidArgument,
              "kernel table entries must be bounded below");
      require(table_[i][j] == table_[j][i], ErrorCode::InvalidArgument,
              "kernel table must be symmetric");
    }
  }
}

double TableKernel::pair(const Point& x, const Point& y) const {
  const auto i = static_cast<std::size_t>(std::lround(x.c[0]));
  const auto j = static_cast<std::size_t>(std::lround(y.c[0]));
  return table_.at(i).at(j);
}

double TableKernel::known_lower_bound(const Space&) const {
  double lo = kInf;
  for (const auto& row : table_)
    for (double v : row) lo = std::min(lo, v);
  return lo;
}

double TableKernel::self_average(const Space& space, std::size_t node) const {
  return pair(space.node(node), space.node(node));
}

double ProductNormKernel::pair(const Point& x, const Point& y) const {
  return std::hypot(x.c[0], x.c[1], x.c[2]) * std::hypot(y.c[0], y.c[1], y.c[2]);
}

ExpressionKernel::ExpressionKernel(const std::string& source)
    : expr_(source, {"x1", "y1", "z1", "x2", "y2", "z2"}) {}

double ExpressionKernel::pair(const Point& x, const Point& y) const {
  const double a = expr_({x.c[0], x.c[1], x.c[2], y.c[0], y.c[1], y.c[2]});
  const double b = expr_({y.c[0], y.c[1], y.c[2], x.c[0], x.c[1], x.c[2]});
  return 0.5 * (a + b);
}

Potential::Potential(const std::string& source) : expr_(source, {"x", "y", "z"}) {}

double Potential::operator()(const Point& p) const {
  if (expr_.empty()) return 0.0;
  return expr_({p.c[0], p.c[1], p.c[2]});
}

Tangent Potential::gradient(const Space& space, const Point& p) const {
  if (expr_.empty()) return {0, 0, 0};
  const double h = 1e-6 * std::max(space.diameter(), 1e-3);
  Tangent g{0, 0, 0};
  for (const Tangent& e : space.tangent_frame(p)) {
    Point a = p, b = p;
    for (int i = 0; i < 3; ++i) {
      a.c[static_cast<std::size_t>(i)] += h * e[static_cast<std::size_t>(i)];
      b.c[static_cast<std::size_t>(i)] -= h * e[static_cast<std::size_t>(i)];
    }
    const double d = ((*this)(a) - (*this)(b)) / (2 * h);
    for (int i = 0; i < 3; ++i) g[static_cast<std::size_t>(i)] += d * e[static_cast<std::size_t>(i)];
  }
  return g;
}

double PotentialAugmentedKernel::pair(const Point& x, const Point& y) const {
  const double g = base_->pair(x, y);
  if (g == kInf) return kInf;
  return g + a_ * (v_(x) + v_(y));
}

double PotentialAugmentedKernel::self_average(const Space& space, std::size_t node) const {
  const double g = base_->self_average(space, node);
  if (g == kInf) return kInf;
  return g + 2.0 * a_ * v_(space.node(node));
}

Tangent PotentialAugmentedKernel::gradient_first(const Space& space, const Point& x,
                                                 const Point& y) const {
  Tangent g = base_->gradient_first(space, x, y);
  const Tangent dv = v_.gradient(space, x);
  for (int i = 0; i < 3; ++i) g[static_cast<std::size_t>(i)] += a_ * dv[static_cast<std::size_t>(i)];
  return g;
}

// ---------------------------------------------------------------------------

double grid_lower_bound(const PairKernel& kernel, const Space& space) {
  const std::size_t n = space.size();
  const std::size_t pairs = n * (n - 1) / 2;
  const std::size_t stride =
      pairs > 4'000'000 ? static_cast<std::size_t>(std::ceil(std::sqrt(pairs / 4e6))) : 1;
  double lo = kInf;
  for (std::size_t i = 0; i < n; i += stride)
    for (std::size_t j = i + 1; j < n; j += stride) {
      if (space.distance(space.node(i), space.node(j)) < 1e-12) continue;
      lo = std::min(lo, kernel.pair(space.node(i), space.node(j)));
    }
  // Finite spaces allow coincident particles, so the diagonal counts too.
  if (space.kind() == SpaceKind::Finite)
    for (std::size_t i = 0; i < n; ++i) lo = std::min(lo, kernel.pair(space.node(i), space.node(i)));
  return lo;
}

double kernel_lower_bound(const Kernel& kernel, const Space& space) {
  const double known = kernel.known_lower_bound(space);
  if (known > -kInf) return known;
  if (const auto* pk = dynamic_cast<const PairKernel*>(&kernel)) return grid_lower_bound(*pk, space);
  fail(ErrorCode::Unavailable, "no lower bound available for kernel '" + kernel.name() + "'");
}

PairOperator::PairOperator(std::shared_ptr<const Space> space, PairKernelPtr kernel)
    : space_(std::move(space)), kernel_(std::move(kernel)) {
  const std::size_t n = space_->size();
  green_ = dynamic_cast<const GreenKernel*>(kernel_.get());
  if (green_) {
    require(&green_->green().space() == space_.get(), ErrorCode::MismatchedSpaces,
            "Green kernel was built on another space");
    return;
  }
  diagonal_.resize(n);
  for (std::size_t i = 0; i < n; ++i) diagonal_[i] = kernel_->self_average(*space_, i);
  if (n > kDenseLimit) return;
  dense_.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    dense_[i * n + i] = diagonal_[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = kernel_->pair(space_->node(i), space_->node(j));
      dense_[i * n + j] = v;
      dense_[j * n + i] = v;
    }
  }
}

double PairOperator::entry(std::size_t i, std::size_t j) const {
  if (green_) {
    return green_->green().evaluate_truncated(space_->node(i), space_->node(j));
  }
  if (!dense_.empty()) return dense_[i * space_->size() + j];
  if (i == j) return diagonal_[i];
  return kernel_->pair(space_->node(i), space_->node(j));
}

std::vector<double> PairOperator::apply(std::span<const double> masses) const {
  const std::size_t n = space_->size();
  require(masses.size() == n, ErrorCode::MismatchedSpaces, "one mass per grid node expected");
  if (green_) return green_->green().potential(masses);
  std::vector<double> u(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    if (!dense_.empty()) {
      const double* row = dense_.data() + i * n;
      for (std::size_t j = 0; j < n; ++j)
        if (masses[j] != 0.0) s += row[j] * masses[j];
    } else {
      for (std::size_t j = 0; j < n; ++j)
        if (masses[j] != 0.0) s += entry(i, j) * masses[j];
    }
    u[i] = s;
  }
  return u;
}

}  // namespace gibbs
