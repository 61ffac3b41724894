#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace gibbs::detail {

inline constexpr double kPi = 3.14159265358979323846;

inline std::size_t sh_index(int l, int m) {
  return static_cast<std::size_t>(l * l + l + m);
}

/// Real spherical harmonics up to degree lmax at the unit vector (x, y, z),
/// normalized so that their mean square over the sphere is 1. Output layout
/// is sh_index(l, m) with m < 0 the sine family and m > 0 the cosine family.
inline void real_harmonics(int lmax, double x, double y, double z,
                           std::span<double> out) {
  const double t = std::max(-1.0, std::min(1.0, z));
  const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
  const double lon = std::atan2(y, x);
  const int n = lmax + 1;
  // Fully normalized associated Legendre functions, column by column in m.
  std::vector<double> p(static_cast<std::size_t>(n * n), 0.0);
  auto at = [&](int l, int m) -> double& {
    return p[static_cast<std::size_t>(l * n + m)];
  };
  at(0, 0) = 1.0;
  if (lmax >= 1) at(1, 1) = std::sqrt(3.0) * s;
  for (int m = 2; m <= lmax; ++m)
    at(m, m) = std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * at(m - 1, m - 1);
  for (int m = 0; m < lmax; ++m)
    at(m + 1, m) = std::sqrt(2.0 * m + 3.0) * t * at(m, m);
  for (int m = 0; m <= lmax; ++m) {
    for (int l = m + 2; l <= lmax; ++l) {
      const double a = std::sqrt((2.0 * l - 1.0) * (2.0 * l + 1.0) /
                                 (static_cast<double>(l - m) * (l + m)));
      const double b =
          std::sqrt((2.0 * l + 1.0) * (l + m - 1.0) * (l - m - 1.0) /
                    (static_cast<double>(l - m) * (l + m) * (2.0 * l - 3.0)));
      at(l, m) = a * t * at(l - 1, m) - b * at(l - 2, m);
    }
  }
  for (int l = 0; l <= lmax; ++l) {
    out[sh_index(l, 0)] = at(l, 0);
    for (int m = 1; m <= l; ++m) {
      out[sh_index(l, m)] = at(l, m) * std::cos(m * lon);
      out[sh_index(l, -m)] = at(l, m) * std::sin(m * lon);
    }
  }
}

}  // namespace gibbs::detail
