#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "qps/geometry.hpp"
#include "qps/photonics.hpp"

namespace {

constexpr double kC = 299792458.0;

const qps::HomConfig kConfig{0.8, 0.9, 1e4 / 0.72, 3e12};  // plateau 1e4 counts/s

double width() { return kC / kConfig.delta_omega; }

std::vector<double> grid_around(double center, double half_span, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = center - half_span + 2 * half_span * i / (n - 1);
  return g;
}

TEST(CoincidenceRate, DipBottomIsZero) { EXPECT_EQ(qps::coincidence_rate(kConfig, 0.0), 0.0); }

TEST(CoincidenceRate, PlateauFarFromBalance) {
  EXPECT_DOUBLE_EQ(qps::coincidence_rate(kConfig, 1e-9), kConfig.plateau());
  EXPECT_NEAR(kConfig.plateau(), 1e4, 1e-9);
}

TEST(CoincidenceRate, UnitArgument) {
  const double dt = 1.0 / kConfig.delta_omega;
  EXPECT_NEAR(qps::coincidence_rate(kConfig, dt), kConfig.plateau() * 0.6321205588285576784, 1e-10);
}

TEST(CoincidenceRate, EvenAndMonotone) {
  double previous = -1;
  for (int i = 0; i <= 400; ++i) {
    const double dt = i * 1e-15;
    const double r = qps::coincidence_rate(kConfig, dt);
    EXPECT_EQ(r, qps::coincidence_rate(kConfig, -dt));
    if (i > 0 && r < kConfig.plateau()) EXPECT_GT(r, previous);
    EXPECT_GE(r, previous);
    previous = r;
  }
}

TEST(SimulateDipScan, NoiseFreeBottomIsExactlyZero) {
  const double truth = 0.5e-3;
  const auto scan = qps::simulate_dip_scan(kConfig, truth, grid_around(truth, 3 * width(), 41), 1.0, 1, qps::Noise::none);
  EXPECT_EQ(scan.rates[20], 0.0);
}

TEST(SimulateDipScan, NoiseFreeSymmetric) {
  const double truth = 0.0;
  const auto scan = qps::simulate_dip_scan(kConfig, truth, grid_around(truth, 3 * width(), 41), 1.0, 1, qps::Noise::none);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_NEAR(scan.rates[i], scan.rates[40 - i], 1e-9 * kConfig.plateau());
}

TEST(SimulateDipScan, DeterministicForSeed) {
  const auto g = grid_around(0.5e-3, 3 * width(), 41);
  const auto a = qps::simulate_dip_scan(kConfig, 0.5e-3, g, 1.0, 42);
  const auto b = qps::simulate_dip_scan(kConfig, 0.5e-3, g, 1.0, 42);
  const auto c = qps::simulate_dip_scan(kConfig, 0.5e-3, g, 1.0, 43);
  EXPECT_EQ(a.rates, b.rates);
  EXPECT_NE(a.rates, c.rates);
  EXPECT_EQ(a.rng_seed, 42u);
}

TEST(SimulateDipScan, RejectsBadGrid) {
  EXPECT_THROW(qps::simulate_dip_scan(kConfig, 0, {0.0, 2e-4, 1e-4}, 1.0, 1), qps::Error);
  EXPECT_THROW(qps::simulate_dip_scan(kConfig, 0, {}, 1.0, 1), qps::Error);
  EXPECT_THROW(qps::simulate_dip_scan(kConfig, 0, {0.0, 1e-4}, 0.0, 1), qps::Error);
}

TEST(EstimateBalance, NoiseFreeRecoversPlantedOffset) {
  const double truth = 0.5e-3;
  // Grid deliberately not centered on the truth so the argmin start is off.
  const auto scan =
      qps::simulate_dip_scan(kConfig, truth, grid_around(truth + 0.37 * width(), 3 * width(), 41), 1.0, 1, qps::Noise::none);
  const auto est = qps::estimate_balance(scan, kConfig);
  EXPECT_NEAR(est.offset, truth, 1e-12 * truth);
  EXPECT_NEAR(est.plateau, kConfig.plateau(), 1e-9 * kConfig.plateau());
  EXPECT_GT(est.sigma_s, 0.0);
}

TEST(EstimateBalance, FreeWidthRecoversBandwidth) {
  const double truth = -0.2e-3;
  const auto scan = qps::simulate_dip_scan(kConfig, truth, grid_around(truth, 3 * width(), 41), 1.0, 1, qps::Noise::none);
  qps::HomConfig guess = kConfig;
  guess.delta_omega *= 1.2;
  qps::FitOptions opt;
  opt.fit_width = true;
  const auto est = qps::estimate_balance(scan, guess, opt);
  EXPECT_NEAR(est.offset, truth, 1e-12 * std::abs(truth));
  EXPECT_NEAR(est.delta_omega, kConfig.delta_omega, 1e-9 * kConfig.delta_omega);
}

TEST(EstimateBalance, PoissonErrorsConsistentWithSigma) {
  const double truth = 0.5e-3;
  const auto g = grid_around(truth, 3 * width(), 41);
  int inside = 0;
  constexpr int seeds = 300;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto est = qps::estimate_balance(qps::simulate_dip_scan(kConfig, truth, g, 1.0, static_cast<std::uint64_t>(seed)), kConfig);
    if (std::abs(est.offset - truth) < 5 * est.sigma_s) ++inside;
  }
  EXPECT_GE(inside, static_cast<int>(0.99 * seeds));
}

TEST(EstimateBalance, SigmaScalesAsInverseRootTime) {
  const double truth = 0.5e-3;
  const auto g = grid_around(truth, 3 * width(), 41);
  double s1 = 0, s10 = 0;
  for (int seed = 0; seed < 50; ++seed) {
    s1 += qps::estimate_balance(qps::simulate_dip_scan(kConfig, truth, g, 1.0, static_cast<std::uint64_t>(seed)), kConfig).sigma_s;
    s10 += qps::estimate_balance(qps::simulate_dip_scan(kConfig, truth, g, 10.0, static_cast<std::uint64_t>(seed)), kConfig).sigma_s;
  }
  const double ratio = s1 / s10;
  EXPECT_GT(ratio, std::sqrt(10.0) / 1.5);
  EXPECT_LT(ratio, std::sqrt(10.0) * 1.5);
}

TEST(EstimateBalance, PlateauOnlyScanHasNoDip) {
  const auto far = grid_around(0.5e-3 + 50 * width(), 3 * width(), 41);
  const auto exact = qps::simulate_dip_scan(kConfig, 0.5e-3, far, 1.0, 1, qps::Noise::none);
  try {
    qps::estimate_balance(exact, kConfig);
    FAIL();
  } catch (const qps::Error& e) {
    EXPECT_EQ(e.code(), qps::Errc::no_dip_found);
  }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    try {
      qps::estimate_balance(qps::simulate_dip_scan(kConfig, 0.5e-3, far, 1.0, seed), kConfig);
      ADD_FAILURE() << "seed " << seed;
    } catch (const qps::Error& e) {
      EXPECT_TRUE(e.code() == qps::Errc::no_dip_found || e.code() == qps::Errc::fit_diverged) << qps::name(e.code());
    }
  }
}

TEST(EstimateBalance, IterationBudgetExhausted) {
  const double truth = 0.5e-3;
  const auto scan =
      qps::simulate_dip_scan(kConfig, truth, grid_around(truth + 0.37 * width(), 3 * width(), 41), 1.0, 1, qps::Noise::none);
  qps::FitOptions opt;
  opt.max_iterations = 1;
  try {
    qps::estimate_balance(scan, kConfig, opt);
    FAIL();
  } catch (const qps::Error& e) {
    EXPECT_EQ(e.code(), qps::Errc::fit_diverged);
  }
}

TEST(EstimateBalance, RejectsMalformedScan) {
  qps::DipScan scan{{0.0, 1e-4}, {1.0}, 1.0, 0};
  EXPECT_THROW(qps::estimate_balance(scan, kConfig), qps::Error);
  qps::HomConfig bad = kConfig;
  bad.alpha1 = 1.5;
  EXPECT_THROW(qps::validate(bad), qps::Error);
}

}  // namespace
