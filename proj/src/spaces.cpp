#include "gibbslab/spaces.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <utility>

#include "harmonics.hpp"

namespace gibbs {

using detail::kPi;

namespace {

constexpr double kTwoPi = 2.0 * kPi;
constexpr std::size_t kMaxTableEntries = 8'000'000;

double wrap(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0) r += period;
  if (r >= period) r -= period;
  return r;
}

double wrapped_delta(double a, double b, double period) {
  double d = std::fabs(wrap(a - b, period));
  return std::min(d, period - d);
}

std::array<double, 3> cross(const std::array<double, 3>& a,
                            const std::array<double, 3>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

double dot(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

double norm(const std::array<double, 3>& a) { return std::sqrt(dot(a, a)); }

std::array<double, 3> normalized(std::array<double, 3> a) {
  const double r = norm(a);
  for (double& v : a) v /= r;
  return a;
}

// 1D real Fourier index on [0,1): 0 constant, 2m-1 cosine, 2m sine.
double fourier_1d(int a, double u) {
  if (a == 0) return 1.0;
  const int m = (a + 1) / 2;
  const double arg = kTwoPi * m * u;
  return std::sqrt(2.0) * ((a % 2 == 1) ? std::cos(arg) : std::sin(arg));
}

void fourier_1d_row(int modes, double u, std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(2 * modes + 1), 1.0);
  const double c1 = std::cos(kTwoPi * u), s1 = std::sin(kTwoPi * u);
  double c = 1.0, s = 0.0;
  for (int m = 1; m <= modes; ++m) {
    const double cn = c * c1 - s * s1;
    const double sn = s * c1 + c * s1;
    c = cn;
    s = sn;
    out[static_cast<std::size_t>(2 * m - 1)] = std::sqrt(2.0) * c;
    out[static_cast<std::size_t>(2 * m)] = std::sqrt(2.0) * s;
  }
}

struct Mesh {
  std::vector<std::array<double, 3>> vertices;
  std::vector<std::array<std::size_t, 3>> faces;
};

Mesh icosphere(int level) {
  Mesh mesh;
  const double g = (1.0 + std::sqrt(5.0)) / 2.0;
  const double raw[12][3] = {{-1, g, 0}, {1, g, 0},  {-1, -g, 0}, {1, -g, 0},
                             {0, -1, g}, {0, 1, g},  {0, -1, -g}, {0, 1, -g},
                             {g, 0, -1}, {g, 0, 1},  {-g, 0, -1}, {-g, 0, 1}};
  for (const auto& v : raw) mesh.vertices.push_back(normalized({v[0], v[1], v[2]}));
  const double edge = norm({raw[0][0] - raw[1][0], raw[0][1] - raw[1][1],
                            raw[0][2] - raw[1][2]}) /
                      norm({raw[0][0], raw[0][1], raw[0][2]});
  auto adjacent = [&](std::size_t a, std::size_t b) {
    const auto& p = mesh.vertices[a];
    const auto& q = mesh.vertices[b];
    return std::fabs(norm({p[0] - q[0], p[1] - q[1], p[2] - q[2]}) - edge) < 1e-9;
  };
  for (std::size_t a = 0; a < 12; ++a)
    for (std::size_t b = a + 1; b < 12; ++b)
      for (std::size_t c = b + 1; c < 12; ++c)
        if (adjacent(a, b) && adjacent(b, c) && adjacent(a, c))
          mesh.faces.push_back({a, b, c});

  for (int level_i = 0; level_i < level; ++level_i) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> midpoint;
    auto mid = [&](std::size_t a, std::size_t b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const auto& p = mesh.vertices[a];
      const auto& q = mesh.vertices[b];
      mesh.vertices.push_back(normalized({p[0] + q[0], p[1] + q[1], p[2] + q[2]}));
      midpoint.emplace(key, mesh.vertices.size() - 1);
      return mesh.vertices.size() - 1;
    };
    std::vector<std::array<std::size_t, 3>> next;
    next.reserve(mesh.faces.size() * 4);
    for (const auto& f : mesh.faces) {
      const std::size_t ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    mesh.faces = std::move(next);
  }
  return mesh;
}

double spherical_triangle_area(const std::array<double, 3>& a,
                               const std::array<double, 3>& b,
                               const std::array<double, 3>& c) {
  const double num = std::fabs(dot(a, cross(b, c)));
  const double den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
  return 2.0 * std::atan2(num, den);
}

// Vertex areas corrected (minimum-norm change) so that all spherical
// harmonics of degree <= exact_degree are integrated exactly.
std::vector<double> sphere_weights(const Mesh& mesh, int exact_degree) {
  const std::size_t n = mesh.vertices.size();
  std::vector<double> w(n, 0.0);
  for (const auto& f : mesh.faces) {
    const double area = spherical_triangle_area(
        mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
    for (std::size_t v : f) w[v] += area / 3.0;
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= total;

  const std::size_t rows = static_cast<std::size_t>((exact_degree + 1) * (exact_degree + 1));
  Eigen::MatrixXd a(rows, n);
  std::vector<double> buf(rows);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& v = mesh.vertices[i];
    detail::real_harmonics(exact_degree, v[0], v[1], v[2], buf);
    for (std::size_t r = 0; r < rows; ++r) a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = buf[r];
  }
  Eigen::VectorXd w0 = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(n));
  Eigen::VectorXd target = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows));
  target(0) = 1.0;
  Eigen::VectorXd r = target - a * w0;
  Eigen::MatrixXd gram = a * a.transpose();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  Eigen::VectorXd y = ldlt.solve(r);
  Eigen::VectorXd corrected = w0 + a.transpose() * y;
  // One refinement sweep removes most of the residual left by rounding.
  r = target - a * corrected;
  corrected += a.transpose() * ldlt.solve(r);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = corrected(static_cast<Eigen::Index>(i));
    if (!(w[i] > 0.0))
      fail(ErrorCode::ResolutionTooSmall,
           "sphere grid cannot carry a positive exact quadrature of degree " +
               std::to_string(exact_degree));
  }
  return w;
}

}  // namespace

std::string to_string(SpaceKind kind) {
  switch (kind) {
    case SpaceKind::Circle: return "circle";
    case SpaceKind::Torus: return "torus";
    case SpaceKind::Sphere: return "sphere";
    case SpaceKind::Box: return "box";
    case SpaceKind::Finite: return "finite";
  }
  return "unknown";
}

SpaceKind space_kind_from_string(const std::string& name) {
  if (name == "circle") return SpaceKind::Circle;
  if (name == "torus") return SpaceKind::Torus;
  if (name == "sphere") return SpaceKind::Sphere;
  if (name == "box") return SpaceKind::Box;
  if (name == "finite") return SpaceKind::Finite;
  fail(ErrorCode::UnsupportedKind, "unsupported space kind '" + name + "'");
}

std::shared_ptr<const Space> Space::manifold(SpaceKind kind, int resolution,
                                             int basis_order) {
  Space s;
  s.kind_ = kind;
  s.resolution_ = resolution;
  s.basis_order_ = basis_order;
  require(basis_order >= 1, ErrorCode::InvalidArgument,
          "basis order must be at least 1 on a manifold");
  switch (kind) {
    case SpaceKind::Circle: {
      require(resolution >= 8, ErrorCode::ResolutionTooSmall, "circle resolution must be >= 8");
      require(2 * basis_order < resolution, ErrorCode::ResolutionTooSmall,
              "basis order must stay below resolution/2 (aliasing guard)");
      s.dimension_ = 1;
      const auto n = static_cast<std::size_t>(resolution);
      for (std::size_t j = 0; j < n; ++j)
        s.nodes_.push_back(Point{{kTwoPi * static_cast<double>(j) / resolution, 0, 0}});
      s.weights_.assign(n, 1.0 / resolution);
      s.cell_sizes_.assign(n, kTwoPi / resolution);
      break;
    }
    case SpaceKind::Torus: {
      require(resolution >= 8, ErrorCode::ResolutionTooSmall, "torus resolution must be >= 8");
      require(2 * basis_order < resolution, ErrorCode::ResolutionTooSmall,
              "basis order must stay below resolution/2 (aliasing guard)");
      s.dimension_ = 2;
      for (int i = 0; i < resolution; ++i)
        for (int j = 0; j < resolution; ++j)
          s.nodes_.push_back(Point{{static_cast<double>(i) / resolution,
                                    static_cast<double>(j) / resolution, 0}});
      const double w = 1.0 / (static_cast<double>(resolution) * resolution);
      s.weights_.assign(s.nodes_.size(), w);
      s.cell_sizes_.assign(s.nodes_.size(), w);
      break;
    }
    case SpaceKind::Sphere: {
      require(resolution >= 1 && resolution <= 7, ErrorCode::ResolutionTooSmall,
              "sphere resolution is an icosahedral level in [1, 7]");
      s.dimension_ = 2;
      Mesh mesh = icosphere(resolution);
      const std::size_t needed =
          static_cast<std::size_t>((2 * basis_order + 1) * (2 * basis_order + 1));
      require(2 * needed <= mesh.vertices.size(), ErrorCode::ResolutionTooSmall,
              "icosahedral level too coarse for the requested degree (aliasing guard)");
      s.weights_ = sphere_weights(mesh, 2 * basis_order);
      for (const auto& v : mesh.vertices) s.nodes_.push_back(Point{v});
      for (double w : s.weights_) s.cell_sizes_.push_back(4.0 * kPi * w);
      break;
    }
    default:
      fail(ErrorCode::UnsupportedKind, "not a closed manifold: " + to_string(kind));
  }
  s.build_basis();
  s.build_table();
  return std::make_shared<const Space>(std::move(s));
}

std::shared_ptr<const Space> Space::box(double lo, double hi, int dim,
                                        int resolution, DensityFunction density) {
  require(dim == 1 || dim == 2, ErrorCode::UnsupportedKind, "box dimension must be 1 or 2");
  require(hi > lo, ErrorCode::InvalidArgument, "box needs hi > lo");
  require(resolution >= 8, ErrorCode::ResolutionTooSmall, "box resolution must be >= 8");
  Space s;
  s.kind_ = SpaceKind::Box;
  s.dimension_ = dim;
  s.resolution_ = resolution;
  s.lo_ = lo;
  s.hi_ = hi;
  s.density_ = std::move(density);
  const double h = (hi - lo) / resolution;
  std::vector<double> xs;
  for (int i = 0; i < resolution; ++i) xs.push_back(lo + (i + 0.5) * h);
  if (dim == 1) {
    for (double x : xs) s.nodes_.push_back(Point{{x, 0, 0}});
  } else {
    for (double x : xs)
      for (double y : xs) s.nodes_.push_back(Point{{x, y, 0}});
  }
  const double cell = dim == 1 ? h : h * h;
  double total = 0.0;
  s.density_max_ = 0.0;
  for (const auto& p : s.nodes_) {
    const double d = s.density_ ? s.density_(p) : 1.0;
    require(std::isfinite(d) && d >= 0.0, ErrorCode::InvalidArgument,
            "box reference density must be finite and nonnegative");
    s.weights_.push_back(d * cell);
    s.density_max_ = std::max(s.density_max_, d);
    total += d * cell;
  }
  require(total > 0.0 && std::isfinite(total), ErrorCode::IntegrabilityFailure,
          "box reference density has no mass on the grid");
  for (double& w : s.weights_) w /= total;
  s.cell_sizes_.assign(s.nodes_.size(), cell);
  // Headroom for the rejection sampler: the density may peak between nodes.
  s.density_max_ *= 1.25;
  return std::make_shared<const Space>(std::move(s));
}

std::shared_ptr<const Space> Space::finite(std::vector<double> probabilities) {
  require(!probabilities.empty(), ErrorCode::InvalidArgument, "finite space needs atoms");
  double total = 0.0;
  for (double p : probabilities) {
    require(p > 0.0 && std::isfinite(p), ErrorCode::InvalidArgument,
            "finite reference probabilities must be positive");
    total += p;
  }
  require(std::fabs(total - 1.0) < 1e-9, ErrorCode::InvalidArgument,
          "finite reference probabilities must sum to 1");
  Space s;
  s.kind_ = SpaceKind::Finite;
  s.dimension_ = 0;
  s.resolution_ = static_cast<int>(probabilities.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    s.nodes_.push_back(Point{{static_cast<double>(i), 0, 0}});
    s.weights_.push_back(probabilities[i] / total);
  }
  s.cell_sizes_.assign(probabilities.size(), 1.0);
  return std::make_shared<const Space>(std::move(s));
}

void Space::build_basis() {
  basis_.clear();
  const int k = basis_order_;
  switch (kind_) {
    case SpaceKind::Circle:
      basis_.push_back({0, 0, 0, 0.0});
      for (int m = 1; m <= k; ++m) {
        basis_.push_back({m, m, 0, static_cast<double>(m) * m});
        basis_.push_back({m, m, 1, static_cast<double>(m) * m});
      }
      break;
    case SpaceKind::Torus: {
      for (int a = 0; a <= 2 * k; ++a)
        for (int b = 0; b <= 2 * k; ++b) {
          const int ma = (a + 1) / 2, mb = (b + 1) / 2;
          basis_.push_back({std::max(ma, mb), a, b,
                            4.0 * kPi * kPi * (static_cast<double>(ma) * ma + mb * mb)});
        }
      std::stable_sort(basis_.begin(), basis_.end(),
                       [](const BasisFunction& x, const BasisFunction& y) {
                         return x.eigenvalue < y.eigenvalue;
                       });
      break;
    }
    case SpaceKind::Sphere:
      for (int l = 0; l <= k; ++l)
        for (int m = -l; m <= l; ++m)
          basis_.push_back({l, l, m, static_cast<double>(l) * (l + 1)});
      break;
    default:
      break;
  }
}

void Space::build_table() {
  table_.clear();
  const std::size_t b = basis_.size();
  if (b == 0 || nodes_.size() * b > kMaxTableEntries) return;
  table_.resize(nodes_.size() * b);
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    basis_row(nodes_[i], std::span<double>(table_.data() + i * b, b));
}

std::size_t Space::basis_count_up_to(int order) const {
  return static_cast<std::size_t>(std::count_if(
      basis_.begin(), basis_.end(),
      [order](const BasisFunction& f) { return f.order <= order; }));
}

double Space::basis_value(std::size_t k, const Point& p) const {
  const BasisFunction& f = basis_.at(k);
  switch (kind_) {
    case SpaceKind::Circle:
      if (f.p == 0) return 1.0;
      return std::sqrt(2.0) * (f.q == 0 ? std::cos(f.p * p.c[0]) : std::sin(f.p * p.c[0]));
    case SpaceKind::Torus:
      return fourier_1d(f.p, p.c[0]) * fourier_1d(f.q, p.c[1]);
    case SpaceKind::Sphere: {
      std::vector<double> row(static_cast<std::size_t>((f.p + 1) * (f.p + 1)));
      detail::real_harmonics(f.p, p.c[0], p.c[1], p.c[2], row);
      return row[detail::sh_index(f.p, f.q)];
    }
    default:
      fail(ErrorCode::UnsupportedKind, "space has no spectral basis");
  }
}

void Space::basis_row(const Point& p, std::span<double> out) const {
  const std::size_t count = std::min(out.size(), basis_.size());
  switch (kind_) {
    case SpaceKind::Circle: {
      if (count == 0) return;
      out[0] = 1.0;
      const double c1 = std::cos(p.c[0]), s1 = std::sin(p.c[0]);
      double c = 1.0, s = 0.0;
      for (std::size_t k = 1; k < count; k += 2) {
        const double cn = c * c1 - s * s1;
        const double sn = s * c1 + c * s1;
        c = cn;
        s = sn;
        out[k] = std::sqrt(2.0) * c;
        if (k + 1 < count) out[k + 1] = std::sqrt(2.0) * s;
      }
      break;
    }
    case SpaceKind::Torus: {
      std::vector<double> eu, ev;
      fourier_1d_row(basis_order_, p.c[0], eu);
      fourier_1d_row(basis_order_, p.c[1], ev);
      for (std::size_t k = 0; k < count; ++k)
        out[k] = eu[static_cast<std::size_t>(basis_[k].p)] *
                 ev[static_cast<std::size_t>(basis_[k].q)];
      break;
    }
    case SpaceKind::Sphere: {
      const int lmax = count == 0 ? 0 : basis_[count - 1].order;
      std::vector<double> row(static_cast<std::size_t>((lmax + 1) * (lmax + 1)));
      detail::real_harmonics(lmax, p.c[0], p.c[1], p.c[2], row);
      std::copy_n(row.begin(), count, out.begin());
      break;
    }
    default:
      fail(ErrorCode::UnsupportedKind, "space has no spectral basis");
  }
}

double Space::basis_at_node(std::size_t node, std::size_t k) const {
  if (!table_.empty()) return table_[node * basis_.size() + k];
  return basis_value(k, nodes_[node]);
}

void Space::project(std::span<const double> values, std::span<double> out) const {
  require(values.size() == nodes_.size(), ErrorCode::MismatchedSpaces,
          "projection needs one value per grid node");
  const std::size_t count = std::min(out.size(), basis_.size());
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<double> row(count);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const double wf = weights_[i] * values[i];
    if (wf == 0.0) continue;
    const double* r;
    if (!table_.empty()) {
      r = table_.data() + i * basis_.size();
    } else {
      basis_row(nodes_[i], row);
      r = row.data();
    }
    for (std::size_t k = 0; k < count; ++k) out[k] += wf * r[k];
  }
}

double Space::distance(const Point& a, const Point& b) const {
  switch (kind_) {
    case SpaceKind::Circle:
      return wrapped_delta(a.c[0], b.c[0], kTwoPi);
    case SpaceKind::Torus: {
      const double du = wrapped_delta(a.c[0], b.c[0], 1.0);
      const double dv = wrapped_delta(a.c[1], b.c[1], 1.0);
      return std::hypot(du, dv);
    }
    case SpaceKind::Sphere:
      return std::atan2(norm(cross(a.c, b.c)), dot(a.c, b.c));
    case SpaceKind::Box:
      return dimension_ == 1 ? std::fabs(a.c[0] - b.c[0])
                             : std::hypot(a.c[0] - b.c[0], a.c[1] - b.c[1]);
    case SpaceKind::Finite:
      return std::lround(a.c[0]) == std::lround(b.c[0]) ? 0.0 : 1.0;
  }
  return 0.0;
}

double Space::chord(const Point& a, const Point& b) const {
  switch (kind_) {
    case SpaceKind::Circle:
      return 2.0 * std::fabs(std::sin(0.5 * (a.c[0] - b.c[0])));
    case SpaceKind::Sphere:
      return norm({a.c[0] - b.c[0], a.c[1] - b.c[1], a.c[2] - b.c[2]});
    default:
      return distance(a, b);
  }
}

double Space::diameter() const {
  switch (kind_) {
    case SpaceKind::Circle: return kPi;
    case SpaceKind::Torus: return std::sqrt(0.5);
    case SpaceKind::Sphere: return kPi;
    case SpaceKind::Box: return (hi_ - lo_) * (dimension_ == 1 ? 1.0 : std::sqrt(2.0));
    case SpaceKind::Finite: return 1.0;
  }
  return 0.0;
}

bool Space::contains(const Point& p) const {
  for (double v : p.c)
    if (!std::isfinite(v)) return false;
  switch (kind_) {
    case SpaceKind::Circle:
    case SpaceKind::Torus:
      return true;
    case SpaceKind::Sphere:
      return std::fabs(norm(p.c) - 1.0) < 1e-9;
    case SpaceKind::Box: {
      const double tol = 1e-12 * (hi_ - lo_);
      for (int d = 0; d < dimension_; ++d)
        if (p.c[static_cast<std::size_t>(d)] < lo_ - tol ||
            p.c[static_cast<std::size_t>(d)] > hi_ + tol)
          return false;
      return true;
    }
    case SpaceKind::Finite: {
      const double idx = p.c[0];
      return idx == std::round(idx) && idx >= 0 &&
             idx < static_cast<double>(nodes_.size());
    }
  }
  return false;
}

void Space::require_contains(const Point& p) const {
  if (!contains(p))
    fail(ErrorCode::OffSpacePoint, "point does not lie on the " + to_string(kind_));
}

Point Space::canonical(const Point& p) const {
  Point q = p;
  switch (kind_) {
    case SpaceKind::Circle: q.c[0] = wrap(p.c[0], kTwoPi); break;
    case SpaceKind::Torus:
      q.c[0] = wrap(p.c[0], 1.0);
      q.c[1] = wrap(p.c[1], 1.0);
      break;
    case SpaceKind::Sphere: q.c = normalized(p.c); break;
    default: break;
  }
  return q;
}

double Space::cell_size(std::size_t i) const { return cell_sizes_[i]; }

double Space::log_reference_density(const Point& p) const {
  if (kind_ == SpaceKind::Box && density_) {
    const double d = density_(p);
    return d > 0.0 ? std::log(d) : -kInf;
  }
  if (kind_ == SpaceKind::Finite) {
    return std::log(weights_[static_cast<std::size_t>(std::lround(p.c[0]))]);
  }
  return 0.0;
}

Point Space::sample_reference(Rng& rng) const {
  switch (kind_) {
    case SpaceKind::Circle: return Point{{kTwoPi * uniform01(rng), 0, 0}};
    case SpaceKind::Torus: {
      const double u = uniform01(rng);
      return Point{{u, uniform01(rng), 0}};
    }
    case SpaceKind::Sphere: {
      const double x = standard_normal(rng);
      const double y = standard_normal(rng);
      const double z = standard_normal(rng);
      return Point{normalized({x, y, z})};
    }
    case SpaceKind::Box: {
      for (int attempt = 0; attempt < 1'000'000; ++attempt) {
        Point p;
        for (int d = 0; d < dimension_; ++d)
          p.c[static_cast<std::size_t>(d)] = lo_ + (hi_ - lo_) * uniform01(rng);
        if (!density_) return p;
        if (uniform01(rng) * density_max_ <= density_(p)) return p;
      }
      fail(ErrorCode::IntegrabilityFailure, "rejection sampler for the box density stalled");
    }
    case SpaceKind::Finite: {
      double u = uniform01(rng);
      for (std::size_t i = 0; i < weights_.size(); ++i) {
        u -= weights_[i];
        if (u < 0.0) return nodes_[i];
      }
      return nodes_.back();
    }
  }
  return {};
}

std::vector<Tangent> Space::tangent_frame(const Point& p) const {
  switch (kind_) {
    case SpaceKind::Circle: return {Tangent{1, 0, 0}};
    case SpaceKind::Torus: return {Tangent{1, 0, 0}, Tangent{0, 1, 0}};
    case SpaceKind::Sphere: {
      const auto& n = p.c;
      std::array<double, 3> helper =
          std::fabs(n[0]) < 0.9 ? std::array<double, 3>{1, 0, 0}
                                : std::array<double, 3>{0, 1, 0};
      auto e1 = normalized(cross(n, helper));
      auto e2 = cross(n, e1);
      return {e1, e2};
    }
    case SpaceKind::Box:
      if (dimension_ == 1) return {Tangent{1, 0, 0}};
      return {Tangent{1, 0, 0}, Tangent{0, 1, 0}};
    case SpaceKind::Finite: return {};
  }
  return {};
}

Point Space::retract(const Point& p, const Tangent& v) const {
  switch (kind_) {
    case SpaceKind::Circle: return Point{{wrap(p.c[0] + v[0], kTwoPi), 0, 0}};
    case SpaceKind::Torus:
      return Point{{wrap(p.c[0] + v[0], 1.0), wrap(p.c[1] + v[1], 1.0), 0}};
    case SpaceKind::Sphere: {
      const double radial = dot(p.c, v);
      Tangent t{v[0] - radial * p.c[0], v[1] - radial * p.c[1], v[2] - radial * p.c[2]};
      const double len = norm(t);
      if (len < 1e-300) return p;
      const double c = std::cos(len), s = std::sin(len) / len;
      return Point{normalized({c * p.c[0] + s * t[0], c * p.c[1] + s * t[1],
                               c * p.c[2] + s * t[2]})};
    }
    case SpaceKind::Box: {
      Point q = p;
      for (int d = 0; d < dimension_; ++d) {
        auto k = static_cast<std::size_t>(d);
        q.c[k] = std::clamp(p.c[k] + v[k], lo_, hi_);
      }
      return q;
    }
    case SpaceKind::Finite: return p;
  }
  return p;
}

Point Space::propose(const Point& p, double scale, Rng& rng) const {
  switch (kind_) {
    case SpaceKind::Finite: return sample_reference(rng);
    case SpaceKind::Box: {
      Point q = p;
      for (int d = 0; d < dimension_; ++d)
        q.c[static_cast<std::size_t>(d)] += scale * standard_normal(rng);
      return q;
    }
    default: {
      Tangent v{0, 0, 0};
      for (const Tangent& e : tangent_frame(p)) {
        const double z = scale * standard_normal(rng);
        for (int i = 0; i < 3; ++i) v[static_cast<std::size_t>(i)] += z * e[static_cast<std::size_t>(i)];
      }
      return retract(p, v);
    }
  }
}

// ---------------------------------------------------------------------------

BackgroundCharge BackgroundCharge::uniform(const Space& space) {
  BackgroundCharge b;
  b.uniform_ = true;
  b.density_.assign(space.size(), 1.0);
  return b;
}

BackgroundCharge BackgroundCharge::from_function(const Space& space,
                                                 const DensityFunction& density) {
  std::vector<double> values;
  values.reserve(space.size());
  for (const auto& p : space.nodes()) values.push_back(density(p));
  return from_values(space, std::move(values));
}

BackgroundCharge BackgroundCharge::from_values(const Space& space,
                                               std::vector<double> density) {
  require(density.size() == space.size(), ErrorCode::MismatchedSpaces,
          "background charge needs one value per grid node");
  double integral = 0.0;
  bool uniform = true;
  for (std::size_t i = 0; i < density.size(); ++i) {
    require(std::isfinite(density[i]), ErrorCode::InvalidArgument,
            "background charge density must be finite");
    integral += space.weight(i) * density[i];
    if (density[i] != 1.0) uniform = false;
  }
  require(std::fabs(integral - 1.0) < 1e-10, ErrorCode::InvalidArgument,
          "background charge must have total mass 1 (got " + std::to_string(integral) + ")");
  BackgroundCharge b;
  b.uniform_ = uniform;
  b.density_ = std::move(density);
  return b;
}

std::uint64_t BackgroundCharge::hash() const {
  std::string_view bytes(reinterpret_cast<const char*>(density_.data()),
                         density_.size() * sizeof(double));
  return fnv1a(bytes, uniform_ ? 1469598103934665603ULL : 7809847782465536322ULL);
}

// ---------------------------------------------------------------------------

GreenModel::GreenModel(std::shared_ptr<const Space> space, BackgroundCharge charge,
                       int truncation)
    : space_(std::move(space)), charge_(std::move(charge)), truncation_(truncation) {
  require(space_ && space_->has_basis(), ErrorCode::UnsupportedKind,
          "Green functions need a closed manifold with a spectral basis");
  require(truncation_ >= 1 && truncation_ <= space_->basis_order(),
          ErrorCode::InvalidArgument, "truncation order must be in [1, basis order]");
  require(charge_.density().size() == space_->size(), ErrorCode::MismatchedSpaces,
          "background charge was built on another grid");
  for (std::size_t k = 1; k < space_->basis_size(); ++k)
    if (space_->basis(k).order <= truncation_) active_.push_back(k);
  count_ = active_.size();
  charge_coeffs_.assign(count_, 0.0);
  if (!charge_.is_uniform()) {
    std::vector<double> all(active_.back() + 1);
    space_->project(charge_.density(), all);
    for (std::size_t a = 0; a < count_; ++a) charge_coeffs_[a] = all[active_[a]];
  }
  finish_build();
}

void GreenModel::finish_build() {
  const Space& s = *space_;
  phi_nodes_.assign(s.size(), 0.0);
  offset_ = 0.0;
  if (!charge_.is_uniform()) {
    for (std::size_t a = 0; a < count_; ++a)
      offset_ += charge_coeffs_[a] * charge_coeffs_[a] / s.basis(active_[a]).eigenvalue;
    for (std::size_t i = 0; i < s.size(); ++i) {
      double v = 0.0;
      for (std::size_t a = 0; a < count_; ++a)
        v += s.basis_at_node(i, active_[a]) * charge_coeffs_[a] /
             s.basis(active_[a]).eigenvalue;
      phi_nodes_[i] = v;
    }
  }
  // Lower bound estimate over a deterministic subsample of grid rows.
  lower_bound_ = kInf;
  const std::size_t n = s.size();
  const std::size_t stride = std::max<std::size_t>(1, n / 64);
  if (n * count_ <= 40'000'000) {
    for (std::size_t i = 0; i < n; i += stride) {
      auto r = row(s.node(i));
      for (double v : r) lower_bound_ = std::min(lower_bound_, v);
    }
  } else {
    // Very long expansions (huge circle grids): sample pairs directly.
    for (std::size_t i = 0; i < n; i += std::max<std::size_t>(1, n / 8))
      for (std::size_t j = 0; j < n; j += std::max<std::size_t>(1, n / 8))
        lower_bound_ = std::min(lower_bound_, evaluate_truncated(s.node(i), s.node(j)));
  }
}

double GreenModel::phi(const Point& x) const {
  if (charge_.is_uniform()) return 0.0;
  std::vector<double> row(active_.back() + 1);
  space_->basis_row(x, row);
  double v = 0.0;
  for (std::size_t a = 0; a < count_; ++a)
    v += row[active_[a]] * charge_coeffs_[a] / space_->basis(active_[a]).eigenvalue;
  return v;
}

double GreenModel::evaluate(const Point& x, const Point& y) const {
  if (space_->distance(x, y) < 1e-12)
    fail(ErrorCode::DiagonalSingularity, "Green function evaluated on the diagonal");
  return evaluate_truncated(x, y);
}

double GreenModel::evaluate_truncated(const Point& x, const Point& y) const {
  const std::size_t len = active_.back() + 1;
  std::vector<double> rx(len), ry(len);
  space_->basis_row(x, rx);
  space_->basis_row(y, ry);
  double h = 0.0;
  for (std::size_t a = 0; a < count_; ++a) {
    const std::size_t k = active_[a];
    h += (rx[k] * ry[k]) / space_->basis(k).eigenvalue;
  }
  if (charge_.is_uniform()) return h;
  double px = 0.0, py = 0.0;
  for (std::size_t a = 0; a < count_; ++a) {
    const std::size_t k = active_[a];
    const double c = charge_coeffs_[a] / space_->basis(k).eigenvalue;
    px += rx[k] * c;
    py += ry[k] * c;
  }
  return h - (px + py) + offset_;
}

std::vector<double> GreenModel::row(const Point& x) const {
  const Space& s = *space_;
  const std::size_t len = active_.back() + 1;
  std::vector<double> rx(len);
  s.basis_row(x, rx);
  std::vector<double> scaled(count_);
  double px = 0.0;
  for (std::size_t a = 0; a < count_; ++a) {
    const std::size_t k = active_[a];
    scaled[a] = rx[k] / s.basis(k).eigenvalue;
    px += rx[k] * charge_coeffs_[a] / s.basis(k).eigenvalue;
  }
  std::vector<double> out(s.size());
  std::vector<double> node_row(len);
  for (std::size_t i = 0; i < s.size(); ++i) {
    double h = 0.0;
    for (std::size_t a = 0; a < count_; ++a) h += scaled[a] * s.basis_at_node(i, active_[a]);
    out[i] = charge_.is_uniform() ? h : h - (px + phi_nodes_[i]) + offset_;
  }
  return out;
}

std::vector<double> GreenModel::potential(std::span<const double> mass) const {
  const Space& s = *space_;
  require(mass.size() == s.size(), ErrorCode::MismatchedSpaces,
          "potential needs one mass per grid node");
  std::vector<double> coeff(count_, 0.0);
  double total = 0.0, phi_mass = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double m = mass[i];
    total += m;
    phi_mass += phi_nodes_[i] * m;
    if (m == 0.0) continue;
    for (std::size_t a = 0; a < count_; ++a) coeff[a] += m * s.basis_at_node(i, active_[a]);
  }
  for (std::size_t a = 0; a < count_; ++a) coeff[a] /= s.basis(active_[a]).eigenvalue;
  std::vector<double> u(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    double h = 0.0;
    for (std::size_t a = 0; a < count_; ++a) h += coeff[a] * s.basis_at_node(i, active_[a]);
    u[i] = h - phi_nodes_[i] * total - phi_mass + offset_ * total;
  }
  return u;
}

double GreenModel::identity_residual(std::span<const double> coeffs,
                                     const Point& x) const {
  const Space& s = *space_;
  require(coeffs.size() <= s.basis_size(), ErrorCode::UnresolvableTestFunction,
          "test function has more coefficients than the space basis");
  for (std::size_t k = 0; k < coeffs.size(); ++k)
    if (coeffs[k] != 0.0 && s.basis(k).order > truncation_)
      fail(ErrorCode::UnresolvableTestFunction,
           "test function uses modes beyond the Green truncation order");
  std::vector<double> fx(coeffs.size());
  s.basis_row(x, fx);
  double f_at_x = 0.0;
  for (std::size_t k = 0; k < coeffs.size(); ++k) f_at_x += coeffs[k] * fx[k];

  const auto g = row(x);
  double lap_integral = 0.0, charge_integral = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    double f = 0.0, lap = 0.0;
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
      if (coeffs[k] == 0.0) continue;
      const double b = s.basis_at_node(i, k);
      f += coeffs[k] * b;
      lap -= s.basis(k).eigenvalue * coeffs[k] * b;
    }
    lap_integral += s.weight(i) * g[i] * lap;
    charge_integral += s.weight(i) * charge_.density()[i] * f;
  }
  return std::fabs(lap_integral + f_at_x - charge_integral);
}

// ---------------------------------------------------------------------------

namespace {

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
  }
  template <class T>
  void pod(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  template <class T>
  void vec(const std::vector<T>& v) {
    pod<std::uint64_t>(v.size());
    out_.write(reinterpret_cast<const char*>(v.data()),
               static_cast<std::streamsize>(v.size() * sizeof(T)));
  }
  void finish(const std::string& path) {
    out_.flush();
    if (!out_) fail(ErrorCode::Io, "write to '" + path + "' failed");
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) fail(ErrorCode::Io, "cannot open cache '" + path + "'");
  }
  template <class T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) fail(ErrorCode::Format, "truncated cache file '" + path_ + "'");
    return v;
  }
  template <class T>
  std::vector<T> vec() {
    const auto n = pod<std::uint64_t>();
    if (n > (1ULL << 34) / sizeof(T))
      fail(ErrorCode::Format, "implausible array length in cache '" + path_ + "'");
    std::vector<T> v(n);
    in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
    if (!in_) fail(ErrorCode::Format, "truncated cache file '" + path_ + "'");
    return v;
  }

 private:
  std::string path_;
  std::ifstream in_;
};

struct Header {
  std::uint32_t magic;
  std::uint32_t version;
  std::int32_t kind;
  std::int32_t resolution;
  std::int32_t basis_order;
  std::int32_t has_green;
  std::uint64_t charge_hash;
};

Header read_header(Reader& r) {
  Header h = r.pod<Header>();
  if (h.magic != SpaceCache::kMagic)
    fail(ErrorCode::Format, "not a space cache file (bad magic)");
  if (h.version != SpaceCache::kVersion)
    fail(ErrorCode::Format, "space cache format version " + std::to_string(h.version) +
                                " is not supported");
  return h;
}

}  // namespace

void SpaceCache::write(const std::string& path, const Space& space,
                       const GreenModel* green) {
  require(space.has_basis(), ErrorCode::UnsupportedKind,
          "only spectral spaces are cached");
  if (green)
    require(&green->space() == &space, ErrorCode::MismatchedSpaces,
            "Green model belongs to another space");
  Writer w(path);
  Header h{kMagic, kVersion, static_cast<std::int32_t>(space.kind_), space.resolution_,
           space.basis_order_, green ? 1 : 0, green ? green->charge_.hash() : 0};
  w.pod(h);
  w.pod(space.dimension_);
  w.vec(space.nodes_);
  w.vec(space.weights_);
  w.vec(space.cell_sizes_);
  w.vec(space.basis_);
  w.vec(space.table_);
  if (green) {
    w.pod<std::int32_t>(green->truncation_);
    w.pod<std::int32_t>(green->charge_.is_uniform() ? 1 : 0);
    w.vec(green->charge_.density_);
    w.vec(green->active_);
    w.vec(green->charge_coeffs_);
    w.vec(green->phi_nodes_);
    w.pod(green->offset_);
    w.pod(green->lower_bound_);
  }
  w.finish(path);
}

std::shared_ptr<const Space> SpaceCache::read_space(const std::string& path) {
  Reader r(path);
  const Header h = read_header(r);
  Space s;
  s.kind_ = static_cast<SpaceKind>(h.kind);
  s.resolution_ = h.resolution;
  s.basis_order_ = h.basis_order;
  s.dimension_ = r.pod<int>();
  s.nodes_ = r.vec<Point>();
  s.weights_ = r.vec<double>();
  s.cell_sizes_ = r.vec<double>();
  s.basis_ = r.vec<BasisFunction>();
  s.table_ = r.vec<double>();
  if (s.weights_.size() != s.nodes_.size() || s.cell_sizes_.size() != s.nodes_.size() ||
      (!s.table_.empty() && s.table_.size() != s.nodes_.size() * s.basis_.size()))
    fail(ErrorCode::Format, "inconsistent array sizes in cache '" + path + "'");
  return std::make_shared<const Space>(std::move(s));
}

GreenModel SpaceCache::read_green(const std::string& path) {
  auto space = read_space(path);
  Reader r(path);
  const Header h = read_header(r);
  if (!h.has_green) fail(ErrorCode::Format, "cache '" + path + "' holds no Green model");
  // Skip the space block.
  (void)r.pod<int>();
  (void)r.vec<Point>();
  (void)r.vec<double>();
  (void)r.vec<double>();
  (void)r.vec<BasisFunction>();
  (void)r.vec<double>();
  GreenModel g;
  g.space_ = space;
  g.truncation_ = r.pod<std::int32_t>();
  const bool uniform = r.pod<std::int32_t>() != 0;
  g.charge_.uniform_ = uniform;
  g.charge_.density_ = r.vec<double>();
  g.active_ = r.vec<std::size_t>();
  g.count_ = g.active_.size();
  g.charge_coeffs_ = r.vec<double>();
  g.phi_nodes_ = r.vec<double>();
  g.offset_ = r.pod<double>();
  g.lower_bound_ = r.pod<double>();
  if (g.charge_.hash() != h.charge_hash)
    fail(ErrorCode::Format, "background charge hash mismatch in cache '" + path + "'");
  if (g.charge_.density_.size() != space->size() || g.phi_nodes_.size() != space->size())
    fail(ErrorCode::Format, "inconsistent Green arrays in cache '" + path + "'");
  return g;
}

}  // namespace gibbs
