#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "qps/gdop.hpp"
#include "qps/geometry.hpp"

namespace qps {

struct SolverOptions {
  int max_iterations = 200;
  double residual_rel_tol = 1e-12;  // converged when |f| < tol * (1 + longest baseline)
  double min_step = 1e-14;          // meters
  int max_damping_trials = 40;
};

template <typename Scalar = double>
struct SolveResult {
  Point3<Scalar> position;
  Scalar residual_norm{0};
  int iterations{0};
  bool converged{false};
  Scalar condition_number{0};
};

/// f_i = balanced_delay(baseline_i, candidate) - s_i. Zero on the user.
template <typename Scalar>
Vector3<Scalar> residuals(const Constellation<Scalar>& c, const Id<Point3<Scalar>>& candidate,
                          const Id<DelayTriple<Scalar>>& delays) {
  return forward_delays(c, candidate) - delays;
}

template <typename Scalar>
void validate_delays(const Constellation<Scalar>& c, const Id<DelayTriple<Scalar>>& delays) {
  using std::abs;
  if (!all_finite(delays)) throw Error(Errc::invalid_input, "delays must be finite");
  for (int i = 0; i < 3; ++i) {
    // A range difference can never exceed the focal distance.
    if (!(abs(delays(i) - c[i].source_offset()) < c[i].length())) {
      throw Error(Errc::degenerate_input, "|s" + std::to_string(i + 1) + "| is not below its baseline length");
    }
  }
}

/// Intersects the three hyperboloids selected by `delays`.
///
/// Gauss-Newton on the analytic Jacobian; when a full step does not reduce
/// |f| the step is damped Levenberg-Marquardt style. Once inside tolerance,
/// Newton steps continue only while they still reduce |f| so the returned
/// point sits at the floating-point floor rather than just under tolerance.
template <typename Scalar>
SolveResult<Scalar> solve_position(const Constellation<Scalar>& c, const Id<DelayTriple<Scalar>>& delays,
                                   const Id<Point3<Scalar>>& initial_guess, const SolverOptions& opt = {}) {
  validate(c);
  validate_delays(c, delays);
  require_finite(initial_guess, "initial guess");

  // Delays are bounded by baseline lengths, so the residual scale is set by the
  // constellation. Scaling by |x| would let far-away iterates pass.
  Scalar longest(0);
  for (const auto& bl : c.baselines) longest = std::max(longest, bl.length());
  const Scalar tol = Scalar(opt.residual_rel_tol) * (Scalar(1) + longest);
  const auto jacobian_at = [&](const Point3<Scalar>& x) {
    try {
      return forward_jacobian(c, x);
    } catch (const Error&) {
      throw Error(Errc::singular_jacobian, "iterate reached a baseline endpoint");
    }
  };

  SolveResult<Scalar> res;
  res.position = initial_guess;
  Vector3<Scalar> f = residuals(c, res.position, delays);
  res.residual_norm = f.norm();
  Scalar lambda(0);

  for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
    if (res.residual_norm == Scalar(0)) break;
    const Matrix3<Scalar> j = jacobian_at(res.position);
    res.condition_number = condition_number(j);
    if (is_degenerate_condition(res.condition_number)) {
      throw Error(Errc::singular_jacobian, "delay Jacobian is singular at an iterate");
    }
    const bool within_tol = res.residual_norm <= tol;

    Vector3<Scalar> step = -j.partialPivLu().solve(f);
    Point3<Scalar> trial = res.position + step;
    Vector3<Scalar> f_trial = residuals(c, trial, delays);
    bool improved = f_trial.norm() < res.residual_norm;

    if (!improved && !within_tol) {
      const Matrix3<Scalar> jtj = j.transpose() * j;
      const Vector3<Scalar> g = j.transpose() * f;
      const Vector3<Scalar> diag = jtj.diagonal();
      if (lambda == Scalar(0)) lambda = Scalar(1e-3) * diag.maxCoeff();
      for (int k = 0; k < opt.max_damping_trials && !improved; ++k) {
        Matrix3<Scalar> damped = jtj;
        damped.diagonal() += lambda * diag;
        step = -damped.ldlt().solve(g);
        trial = res.position + step;
        f_trial = residuals(c, trial, delays);
        improved = f_trial.norm() < res.residual_norm;
        lambda = improved ? lambda / Scalar(10) : lambda * Scalar(10);
      }
    }
    if (!improved) break;

    res.position = trial;
    f = f_trial;
    res.residual_norm = f.norm();
    if (step.norm() < Scalar(opt.min_step)) {
      ++res.iterations;
      break;
    }
  }

  res.converged = res.residual_norm <= tol;
  if (!res.converged) {
    throw Error(Errc::not_converged, "solver stalled or hit the iteration cap");
  }
  res.condition_number = condition_number(jacobian_at(res.position));
  return res;
}

template <typename Scalar = double>
struct Box {
  Point3<Scalar> lo;
  Point3<Scalar> hi;

  Point3<Scalar> center() const { return (lo + hi) / Scalar(2); }
};

namespace detail {

inline double radical_inverse(std::uint64_t index, unsigned base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

}  // namespace detail

/// Halton points (bases 2, 3, 5) with a seeded Cranley-Patterson rotation.
template <typename Scalar>
std::vector<Point3<Scalar>> quasi_random_starts(const Box<Scalar>& region, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double shift[3] = {u(rng), u(rng), u(rng)};
  constexpr unsigned bases[3] = {2, 3, 5};
  std::vector<Point3<Scalar>> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Point3<Scalar> p;
    for (int k = 0; k < 3; ++k) {
      double t = detail::radical_inverse(static_cast<std::uint64_t>(i) + 1, bases[k]) + shift[k];
      t -= std::floor(t);
      p(k) = region.lo(k) + Scalar(t) * (region.hi(k) - region.lo(k));
    }
    pts.push_back(p);
  }
  return pts;
}

/// Solves from many starts inside `region` and returns one result per
/// distinct solution (clustered at `cluster_radius`), sorted by residual and
/// then by distance to the region center. Failed starts are dropped.
template <typename Scalar>
std::vector<SolveResult<Scalar>> multi_start_solve(const Constellation<Scalar>& c, const Id<DelayTriple<Scalar>>& delays,
                                                   const Box<Scalar>& region, int n_starts, std::uint64_t seed,
                                                   Scalar cluster_radius = Scalar(1e-6),
                                                   const SolverOptions& opt = {}) {
  if (n_starts < 1) throw Error(Errc::invalid_input, "n_starts must be at least 1");
  if (!all_finite(region.lo) || !all_finite(region.hi) || !(region.lo.array() <= region.hi.array()).all()) {
    throw Error(Errc::invalid_input, "region must be a nonempty finite box");
  }
  validate(c);
  validate_delays(c, delays);

  std::vector<SolveResult<Scalar>> found;
  for (const auto& start : quasi_random_starts(region, n_starts, seed)) {
    SolveResult<Scalar> r;
    try {
      r = solve_position(c, delays, start, opt);
    } catch (const Error&) {
      continue;
    }
    auto same = std::find_if(found.begin(), found.end(), [&](const SolveResult<Scalar>& q) {
      return (q.position - r.position).norm() <= cluster_radius;
    });
    if (same == found.end()) {
      found.push_back(r);
    } else if (r.residual_norm < same->residual_norm) {
      *same = r;
    }
  }

  const Point3<Scalar> mid = region.center();
  std::stable_sort(found.begin(), found.end(), [&](const SolveResult<Scalar>& l, const SolveResult<Scalar>& r) {
    if (l.residual_norm != r.residual_norm) return l.residual_norm < r.residual_norm;
    return (l.position - mid).norm() < (r.position - mid).norm();
  });
  return found;
}

}  // namespace qps
