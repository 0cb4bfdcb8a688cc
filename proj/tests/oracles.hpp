#pragma once

// Test-only reference computations. These deliberately avoid the library's
// Eigen code paths: plain arrays and scalar arithmetic only.

#include <array>
#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Geometry>

#include "qps/geometry.hpp"

namespace qps::oracle {

using Vec = std::array<double, 3>;

inline Vec vec(const Point3<double>& p) { return {p.x(), p.y(), p.z()}; }

inline double distance(const Vec& p, const Vec& q) {
  double s = 0;
  for (int i = 0; i < 3; ++i) s += (p[i] - q[i]) * (p[i] - q[i]);
  return std::sqrt(s);
}

// Midpoint-source balance equation: |u - a| - |u - b|.
inline double range_difference(const Vec& a, const Vec& b, const Vec& u) { return distance(u, a) - distance(u, b); }

inline Vec delays(const Constellation<double>& c, const Vec& u) {
  Vec s{};
  for (std::size_t i = 0; i < 3; ++i) s[i] = range_difference(vec(c[i].a), vec(c[i].b), u);
  return s;
}

using Mat = std::array<Vec, 3>;

// Central differences of the delay model: J[i][k] = ds_i / dx_k.
inline Mat finite_difference_jacobian(const Constellation<double>& c, const Vec& u, double h) {
  Mat j{};
  for (int k = 0; k < 3; ++k) {
    Vec up = u, dn = u;
    up[static_cast<std::size_t>(k)] += h;
    dn[static_cast<std::size_t>(k)] -= h;
    const Vec sp = delays(c, up), sm = delays(c, dn);
    for (std::size_t i = 0; i < 3; ++i) j[i][static_cast<std::size_t>(k)] = (sp[i] - sm[i]) / (2 * h);
  }
  return j;
}

inline Point3<double> random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Point3<double> d;
  do {
    d = {n(rng), n(rng), n(rng)};
  } while (d.norm() < 1e-6);
  return d.normalized();
}

inline Matrix3<double> random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

}  // namespace qps::oracle
