#pragma once

#include <cstdint>
#include <vector>

namespace qps {

/// Photonic parameters of the two-photon coincidence rate
///   R_c = alpha1 * alpha2 * eta_v_sq * [1 - exp(-(delta_omega * dt)^2)].
struct HomConfig {
  double alpha1 = 1.0;       // detector quantum efficiencies, (0, 1]
  double alpha2 = 1.0;
  double eta_v_sq = 1.0;     // |eta V|^2 |G(0)|^2, counts/s
  double delta_omega = 1.0;  // filter bandwidth, rad/s

  double plateau() const { return alpha1 * alpha2 * eta_v_sq; }
};

void validate(const HomConfig& config);

/// Coincidence counting rate (counts/s) at arm imbalance `imbalance` seconds.
double coincidence_rate(const HomConfig& config, double imbalance);

enum class Noise { poisson, none };

struct DipScan {
  std::vector<double> offsets;  // trial optical-delay offsets, meters, strictly increasing
  std::vector<double> rates;    // observed coincidence rates, counts/s
  double integration_time = 1.0;
  std::uint64_t rng_seed = 0;
};

void validate(const DipScan& scan);

/// Steps the optical delay over `grid` and records the coincidence rate at
/// each offset. Counts are Poisson with mean rate * integration_time unless
/// noise is disabled, in which case the exact expected rate is recorded.
DipScan simulate_dip_scan(const HomConfig& config, double true_balance_offset, const std::vector<double>& grid,
                          double integration_time, std::uint64_t seed, Noise noise = Noise::poisson);

struct FitOptions {
  bool fit_width = false;  // also fit delta_omega instead of fixing it from the config
  int max_iterations = 100;
  double step_tol = 1e-10;  // relative parameter step
};

struct BalanceEstimate {
  double offset = 0;   // fitted dip center, meters
  double sigma_s = 0;  // 1-sigma uncertainty of the center, meters
  double plateau = 0;  // fitted plateau rate, counts/s
  double delta_omega = 0;
  int iterations = 0;
};

/// Locates the dip minimum by a weighted Levenberg-Marquardt fit of the
/// coincidence-rate model. Weights come from Poisson variances of the fitted
/// model (floored at one count), and sigma_s is read from the resulting
/// covariance.
///
/// Throws no-dip-found when the scan does not resolve a dip and fit-diverged
/// when the fit does not converge within the iteration budget.
BalanceEstimate estimate_balance(const DipScan& scan, const HomConfig& config, const FitOptions& options = {});

}  // namespace qps
