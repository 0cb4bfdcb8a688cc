#pragma once

#include <array>
#include <cmath>
#include <string>
#include <type_traits>
#include <utility>

#include <Eigen/Core>

#include "qps/error.hpp"

namespace qps {

/// Speed of light in vacuum, m/s (exact by SI definition).
template <typename Scalar = double>
inline constexpr Scalar speed_of_light = Scalar(299792458);

template <typename Scalar = double>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar = double>
using Point3 = Vector3<Scalar>;

/// Measured delays (s1, s2, s3) in meters, s_i = c * dt_i, one per baseline.
template <typename Scalar = double>
using DelayTriple = Vector3<Scalar>;

/// Blocks template deduction so Eigen expressions convert at the call site.
template <typename T>
using Id = std::type_identity_t<T>;

template <typename Scalar = double>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& v) {
  return v.allFinite();
}

/// One interferometer: reflectors at `a` and `b`, biphoton source and
/// HOM detectors collocated at `source`.
template <typename Scalar = double>
struct Baseline {
  Point3<Scalar> a;
  Point3<Scalar> b;
  Point3<Scalar> source;

  Scalar length() const { return (a - b).norm(); }

  bool is_midpoint_source(Scalar rel_tol = Scalar(1e-9)) const {
    using std::abs;
    using std::max;
    const Scalar la = (source - a).norm();
    const Scalar lb = (source - b).norm();
    return abs(la - lb) <= rel_tol * max(max(la, lb), length());
  }

  /// Constant path offset |a - source| - |source - b|. Exactly zero for a
  /// midpoint source so the balance equation reduces to a pure range difference.
  Scalar source_offset() const {
    if (is_midpoint_source()) return Scalar(0);
    return (a - source).norm() - (source - b).norm();
  }
};

template <typename Scalar>
Baseline<Scalar> make_baseline(const Point3<Scalar>& a, const Point3<Scalar>& b) {
  return {a, b, (a + b) / Scalar(2)};
}

template <typename Scalar>
void validate(const Baseline<Scalar>& bl) {
  if (!all_finite(bl.a) || !all_finite(bl.b) || !all_finite(bl.source)) {
    throw Error(Errc::invalid_input, "baseline has non-finite coordinates");
  }
  if (!(bl.length() > Scalar(0))) {
    throw Error(Errc::invalid_input, "baseline endpoints coincide");
  }
}

template <typename Scalar = double>
struct Constellation {
  std::array<Baseline<Scalar>, 3> baselines;

  const Baseline<Scalar>& operator[](std::size_t i) const { return baselines[i]; }
  Baseline<Scalar>& operator[](std::size_t i) { return baselines[i]; }
};

template <typename Scalar>
void validate(const Constellation<Scalar>& c) {
  for (const auto& bl : c.baselines) validate(bl);
}

/// Rigid transform x -> R x + t applied to every point of the constellation.
template <typename Scalar>
Constellation<Scalar> transformed(const Constellation<Scalar>& c, const Id<Matrix3<Scalar>>& rotation,
                                  const Id<Point3<Scalar>>& translation) {
  Constellation<Scalar> out = c;
  for (auto& bl : out.baselines) {
    bl.a = rotation * bl.a + translation;
    bl.b = rotation * bl.b + translation;
    bl.source = rotation * bl.source + translation;
  }
  return out;
}

/// Calibrated optical delay element of thickness d and index n.
template <typename Scalar = double>
struct OpticalDelay {
  Scalar thickness{0};
  Scalar index{1};

  Scalar delay_length() const { return (index - Scalar(1)) * thickness; }
  Scalar delay_time() const { return delay_length() / speed_of_light<Scalar>; }
};

template <typename Scalar>
void validate(const OpticalDelay<Scalar>& d) {
  using std::isfinite;
  if (!isfinite(d.thickness) || !isfinite(d.index) || d.index < Scalar(1) || d.thickness < Scalar(0)) {
    throw Error(Errc::invalid_input, "optical delay needs n >= 1 and d >= 0");
  }
}

template <typename Scalar>
void require_finite(const Point3<Scalar>& p, const char* what) {
  if (!all_finite(p)) throw Error(Errc::invalid_input, std::string(what) + " is not finite");
}

template <typename Scalar = double>
struct RoundTripTimes {
  Scalar left;   // via endpoint a
  Scalar right;  // via endpoint b, through the optical delay
};

/// Effective round-trip photon travel times for both arms of a baseline.
template <typename Scalar>
RoundTripTimes<Scalar> round_trip_times(const Baseline<Scalar>& bl, const Id<Point3<Scalar>>& user,
                                        const OpticalDelay<Scalar>& delay = {}) {
  validate(bl);
  validate(delay);
  require_finite(user, "user position");
  const Scalar k = Scalar(2) / speed_of_light<Scalar>;
  return {k * ((user - bl.a).norm() + (bl.a - bl.source).norm()),
          k * ((user - bl.b).norm() + (bl.source - bl.b).norm() + delay.delay_length())};
}

/// Optical path delay s that balances the interferometer for `user`.
///
/// s = |user - a| + |a - source| - |user - b| - |source - b|; for a midpoint
/// source this is the range difference |user - a| - |user - b|. Positive s
/// means the a-leg is the longer one, so the delay sits on the b side.
template <typename Scalar>
Scalar balanced_delay(const Baseline<Scalar>& bl, const Id<Point3<Scalar>>& user) {
  require_finite(user, "user position");
  // |u-a| - |u-b| rewritten as (|u-a|^2 - |u-b|^2) / (|u-a| + |u-b|): no
  // cancellation between two nearly equal ranges for a distant user.
  const Scalar sum = (user - bl.a).norm() + (user - bl.b).norm();
  const Scalar diff = (bl.b - bl.a).dot(Scalar(2) * user - bl.a - bl.b) / sum;
  return diff + bl.source_offset();
}

/// Delay triple (s1, s2, s3) observed by the three interferometers.
template <typename Scalar>
DelayTriple<Scalar> forward_delays(const Constellation<Scalar>& c, const Id<Point3<Scalar>>& user) {
  validate(c);
  return {balanced_delay(c[0], user), balanced_delay(c[1], user), balanced_delay(c[2], user)};
}

}  // namespace qps
