#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "qps/geometry.hpp"

namespace qps {

/// Condition number above which the delay Jacobian is treated as singular.
inline constexpr double kDegenerateCondition = 1e12;

/// SEP-to-sigma ratio for a spherically symmetric 3-D Gaussian.
inline constexpr double kSepFactor = 1.538;

/// 2-norm condition number; +inf for an exactly singular matrix.
template <typename Derived>
typename Derived::Scalar condition_number(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  Eigen::JacobiSVD<Eigen::Matrix<Scalar, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime>> svd(m);
  const auto& sv = svd.singularValues();
  const Scalar smin = sv(sv.size() - 1);
  if (!(smin > Scalar(0))) return std::numeric_limits<Scalar>::infinity();
  return sv(0) / smin;
}

template <typename Scalar>
bool is_degenerate_condition(Scalar cond) {
  using std::isfinite;
  return !isfinite(cond) || cond > Scalar(kDegenerateCondition);
}

/// Gradient of one baseline's balanced delay with respect to user position.
template <typename Scalar>
Vector3<Scalar> delay_gradient(const Baseline<Scalar>& bl, const Id<Point3<Scalar>>& user) {
  const Vector3<Scalar> da = user - bl.a;
  const Vector3<Scalar> db = user - bl.b;
  const Scalar na = da.norm();
  const Scalar nb = db.norm();
  if (!(na > Scalar(0)) || !(nb > Scalar(0))) {
    throw Error(Errc::invalid_input, "user coincides with a baseline endpoint");
  }
  return da / na - db / nb;
}

/// Forward Jacobian ds/dr. Row i is unit(user - a_i) - unit(user - b_i).
template <typename Scalar>
Matrix3<Scalar> forward_jacobian(const Constellation<Scalar>& c, const Id<Point3<Scalar>>& user) {
  require_finite(user, "user position");
  Matrix3<Scalar> j;
  for (int i = 0; i < 3; ++i) j.row(i) = delay_gradient(c[i], user).transpose();
  return j;
}

/// Position sensitivity dr/ds. Row k holds d(x_k)/d(s_1..s_3).
template <typename Scalar = double>
struct SensitivityMatrix {
  Matrix3<Scalar> m;
  Scalar condition_number;
};

/// Inverts the forward Jacobian (implicit function theorem on the balance
/// equations). Throws degenerate-geometry past kDegenerateCondition.
template <typename Scalar>
SensitivityMatrix<Scalar> sensitivity(const Constellation<Scalar>& c, const Id<Point3<Scalar>>& user) {
  const Matrix3<Scalar> j = forward_jacobian(c, user);
  const Scalar cond = condition_number(j);
  if (is_degenerate_condition(cond)) {
    throw Error(Errc::degenerate_geometry, "delay Jacobian is singular at this user position");
  }
  return {j.fullPivLu().inverse(), cond};
}

template <typename Scalar = double>
struct ErrorEstimate {
  Scalar sigma_x{0};
  Scalar sigma_y{0};
  Scalar sigma_z{0};
  Scalar r_xyz{0};
  bool degenerate{false};
  Scalar condition_number{0};

  Vector3<Scalar> sigmas() const { return {sigma_x, sigma_y, sigma_z}; }
};

/// Spherical error probable for equal per-axis sigma.
template <typename Scalar>
Scalar sep_radius(Scalar sigma) {
  if (!(sigma >= Scalar(0))) throw Error(Errc::invalid_input, "sigma must be nonnegative");
  return Scalar(kSepFactor) * sigma;
}

/// Weighted SEP approximation 1.538 * sqrt((sx^2 + sy^2 + sz^2) / 3).
template <typename Scalar>
Scalar weighted_sep(const Vector3<Scalar>& sigmas) {
  using std::sqrt;
  return Scalar(kSepFactor) * sigmas.norm() / sqrt(Scalar(3));
}

/// Per-baseline delay sigmas propagated through the sensitivity:
/// sigma_k^2 = sum_i (dx_k/ds_i)^2 sigma_si^2.
template <typename Scalar>
ErrorEstimate<Scalar> propagate_errors(const SensitivityMatrix<Scalar>& sens, const Id<Vector3<Scalar>>& sigma_s) {
  if (!(sigma_s.array() >= Scalar(0)).all()) {
    throw Error(Errc::invalid_input, "sigma_s must be nonnegative");
  }
  const Vector3<Scalar> var = sens.m.array().square().matrix() * sigma_s.array().square().matrix();
  const Vector3<Scalar> sig = var.array().sqrt();
  return {sig.x(), sig.y(), sig.z(), weighted_sep(sig), false, sens.condition_number};
}

/// Equal sigma_s on all three baselines: sigma_k = sigma_s * |row_k(m)|.
template <typename Scalar>
ErrorEstimate<Scalar> propagate_errors(const SensitivityMatrix<Scalar>& sens, Id<Scalar> sigma_s) {
  if (!(sigma_s >= Scalar(0))) throw Error(Errc::invalid_input, "sigma_s must be nonnegative");
  const Vector3<Scalar> sig = sigma_s * sens.m.rowwise().norm();
  return {sig.x(), sig.y(), sig.z(), weighted_sep(sig), false, sens.condition_number};
}

/// Full chain for one user position. Degenerate geometry is reported through
/// the flag (sigmas left NaN) instead of an exception.
template <typename Scalar>
ErrorEstimate<Scalar> evaluate_error(const Constellation<Scalar>& c, const Id<Point3<Scalar>>& user, Id<Scalar> sigma_s) {
  const Matrix3<Scalar> j = forward_jacobian(c, user);
  const Scalar cond = condition_number(j);
  if (is_degenerate_condition(cond)) {
    const Scalar nan = std::numeric_limits<Scalar>::quiet_NaN();
    return {nan, nan, nan, nan, true, cond};
  }
  return propagate_errors(SensitivityMatrix<Scalar>{j.fullPivLu().inverse(), cond}, sigma_s);
}

}  // namespace qps
