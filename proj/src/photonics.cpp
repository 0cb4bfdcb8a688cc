#include "qps/photonics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "qps/error.hpp"
#include "qps/geometry.hpp"

namespace qps {

void validate(const HomConfig& config) {
  const bool ok = std::isfinite(config.plateau()) && config.alpha1 > 0 && config.alpha1 <= 1 && config.alpha2 > 0 &&
                  config.alpha2 <= 1 && config.eta_v_sq > 0 && std::isfinite(config.delta_omega) &&
                  config.delta_omega > 0;
  if (!ok) throw Error(Errc::invalid_input, "HOM config needs alpha in (0,1], eta_v_sq > 0, delta_omega > 0");
}

double coincidence_rate(const HomConfig& config, double imbalance) {
  const double u = config.delta_omega * imbalance;
  return config.plateau() * -std::expm1(-u * u);
}

namespace {

void require_increasing(const std::vector<double>& xs) {
  if (xs.empty()) throw Error(Errc::invalid_input, "offset grid is empty");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i])) throw Error(Errc::invalid_input, "offset grid has non-finite entries");
    if (i > 0 && !(xs[i] > xs[i - 1])) throw Error(Errc::invalid_input, "offset grid is not strictly increasing");
  }
}

// Parameters: plateau P, center c (m), inverse width k = delta_omega / c_light (1/m).
struct DipModel {
  double plateau;
  double center;
  double k;

  double operator()(double offset) const {
    const double u = k * (offset - center);
    return plateau * -std::expm1(-u * u);
  }

  // d rate / d(P, c, k)
  Eigen::Vector3d gradient(double offset) const {
    const double d = offset - center;
    const double u = k * d;
    const double e = std::exp(-u * u);
    return {-std::expm1(-u * u), -2.0 * plateau * u * k * e, 2.0 * plateau * u * d * e};
  }
};

struct FitState {
  DipModel model;
  int iterations = 0;
};

Eigen::VectorXd poisson_weights(const DipScan& scan, const DipModel& model) {
  const double t = scan.integration_time;
  Eigen::VectorXd w(static_cast<Eigen::Index>(scan.offsets.size()));
  for (std::size_t i = 0; i < scan.offsets.size(); ++i) {
    // var(rate) = rate / T, floored at one count.
    w(static_cast<Eigen::Index>(i)) = t / std::max(model(scan.offsets[i]), 1.0 / t);
  }
  return w;
}

double weighted_sse(const DipScan& scan, const Eigen::VectorXd& w, const DipModel& m) {
  double s = 0;
  for (std::size_t i = 0; i < scan.offsets.size(); ++i) {
    const double r = scan.rates[i] - m(scan.offsets[i]);
    s += w(static_cast<Eigen::Index>(i)) * r * r;
  }
  return s;
}

// Normal-equation pieces J^T W J and J^T W r over the free parameters.
void normal_equations(const DipScan& scan, const Eigen::VectorXd& w, const DipModel& m, int n_free,
                      Eigen::MatrixXd& a, Eigen::VectorXd& g) {
  a = Eigen::MatrixXd::Zero(n_free, n_free);
  g = Eigen::VectorXd::Zero(n_free);
  for (std::size_t i = 0; i < scan.offsets.size(); ++i) {
    const Eigen::VectorXd row = m.gradient(scan.offsets[i]).head(n_free);
    const double wi = w(static_cast<Eigen::Index>(i));
    a.noalias() += wi * row * row.transpose();
    g.noalias() += wi * (scan.rates[i] - m(scan.offsets[i])) * row;
  }
}

DipModel stepped(const DipModel& m, const Eigen::VectorXd& delta) {
  DipModel out = m;
  out.plateau += delta(0);
  out.center += delta(1);
  if (delta.size() > 2) out.k += delta(2);
  return out;
}

FitState levenberg_marquardt(const DipScan& scan, const Eigen::VectorXd& w, DipModel start, const FitOptions& opt) {
  const int n_free = opt.fit_width ? 3 : 2;
  FitState st{start, 0};
  double sse = weighted_sse(scan, w, st.model);
  double lambda = 1e-3;
  Eigen::MatrixXd a;
  Eigen::VectorXd g;

  for (st.iterations = 1; st.iterations <= opt.max_iterations; ++st.iterations) {
    normal_equations(scan, w, st.model, n_free, a, g);
    bool accepted = false;
    Eigen::VectorXd delta;
    for (int tries = 0; tries < 60 && !accepted; ++tries) {
      Eigen::MatrixXd damped = a;
      damped.diagonal() += lambda * a.diagonal();
      delta = damped.ldlt().solve(g);
      const DipModel trial = stepped(st.model, delta);
      const double trial_sse = weighted_sse(scan, w, trial);
      if (delta.allFinite() && trial.plateau > 0 && trial.k > 0 && trial_sse <= sse) {
        st.model = trial;
        sse = trial_sse;
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
      } else {
        lambda *= 10.0;
      }
    }
    // No downhill step left: sitting on the minimum.
    if (!accepted) return st;

    const double scale[3] = {st.model.plateau, 1.0 / st.model.k, st.model.k};
    double rel = 0;
    for (int j = 0; j < n_free; ++j) rel = std::max(rel, std::abs(delta(j)) / scale[j]);
    if (rel < opt.step_tol) return st;
  }
  throw Error(Errc::fit_diverged, "dip fit did not converge in " + std::to_string(opt.max_iterations) + " iterations");
}

}  // namespace

void validate(const DipScan& scan) {
  require_increasing(scan.offsets);
  if (scan.rates.size() != scan.offsets.size()) throw Error(Errc::invalid_input, "offsets and rates differ in length");
  for (double r : scan.rates) {
    if (!(r >= 0) || !std::isfinite(r)) throw Error(Errc::invalid_input, "rates must be finite and nonnegative");
  }
  if (!(scan.integration_time > 0) || !std::isfinite(scan.integration_time)) {
    throw Error(Errc::invalid_input, "integration time must be positive");
  }
}

DipScan simulate_dip_scan(const HomConfig& config, double true_balance_offset, const std::vector<double>& grid,
                          double integration_time, std::uint64_t seed, Noise noise) {
  validate(config);
  require_increasing(grid);
  if (!(integration_time > 0) || !std::isfinite(integration_time)) {
    throw Error(Errc::invalid_input, "integration time must be positive");
  }
  if (!std::isfinite(true_balance_offset)) throw Error(Errc::invalid_input, "balance offset must be finite");

  DipScan scan{grid, {}, integration_time, seed};
  scan.rates.reserve(grid.size());
  std::mt19937_64 rng(seed);
  for (double offset : grid) {
    const double rate = coincidence_rate(config, (offset - true_balance_offset) / speed_of_light<double>);
    if (noise == Noise::none) {
      scan.rates.push_back(rate);
      continue;
    }
    const double mean = rate * integration_time;
    const long long n = mean > 0 ? std::poisson_distribution<long long>(mean)(rng) : 0;
    scan.rates.push_back(static_cast<double>(n) / integration_time);
  }
  return scan;
}

BalanceEstimate estimate_balance(const DipScan& scan, const HomConfig& config, const FitOptions& options) {
  validate(config);
  validate(scan);
  const double t = scan.integration_time;
  const auto [lo, hi] = std::minmax_element(scan.rates.begin(), scan.rates.end());
  const auto counting_sd = [t](double rate) { return std::sqrt(std::max(rate, 1.0 / t) / t); };

  if (*hi - *lo < 3.0 * counting_sd(*hi)) {
    throw Error(Errc::no_dip_found, "scan shows no dip above counting noise");
  }

  const DipModel start{*hi, scan.offsets[static_cast<std::size_t>(lo - scan.rates.begin())],
                       config.delta_omega / speed_of_light<double>};
  const Eigen::VectorXd flat = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(scan.offsets.size()));
  FitState st = levenberg_marquardt(scan, flat, start, options);
  const int first_pass = st.iterations;
  st = levenberg_marquardt(scan, poisson_weights(scan, st.model), st.model, options);

  const DipModel& m = st.model;
  if (m.center < scan.offsets.front() || m.center > scan.offsets.back() || m.plateau - *lo < 3.0 * counting_sd(m.plateau)) {
    throw Error(Errc::no_dip_found, "fitted dip is not resolved inside the scanned range");
  }

  const int n_free = options.fit_width ? 3 : 2;
  Eigen::MatrixXd a;
  Eigen::VectorXd g;
  normal_equations(scan, poisson_weights(scan, m), m, n_free, a, g);
  const Eigen::MatrixXd cov = a.inverse();
  if (!cov.allFinite() || !(cov(1, 1) >= 0)) throw Error(Errc::fit_diverged, "fit covariance is singular");

  return {m.center, std::sqrt(cov(1, 1)), m.plateau, m.k * speed_of_light<double>, first_pass + st.iterations};
}

}  // namespace qps
