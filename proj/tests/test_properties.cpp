#include <gtest/gtest.h>

#include <algorithm>
#include <charconv>
#include <cstring>
#include <random>

#include "fixtures.hpp"
#include "kyle/config.hpp"
#include "kyle/csv.hpp"
#include "kyle/filter.hpp"
#include "kyle/riccati.hpp"
#include "kyle/stability.hpp"

namespace kyle {
namespace {

ModelParams random_params(std::mt19937_64& rng, double max_gamma) {
  std::uniform_real_distribution<double> u(0.1, 2.0), k(0.0, 0.5), g(-max_gamma, max_gamma);
  ModelParams p;
  p.sigma_v = u(rng);
  p.sigma_z = u(rng);
  p.sigma_m = u(rng);
  p.sigma_c = u(rng);
  p.alpha_m = u(rng);
  p.alpha_c = u(rng);
  p.kappa_m = k(rng);
  p.kappa_c = k(rng);
  p.gamma_F = g(rng);
  p.gamma_C = g(rng);
  p.var_m0 = u(rng);
  p.var_c0 = u(rng);
  return p;
}

TEST(Properties, BoundedIntensityKeepsCovariancePsd) {
  std::mt19937_64 rng(100);
  std::uniform_real_distribution<double> b(0.0, 5.0);
  for (int trial = 0; trial < 40; ++trial) {
    const ModelParams p = random_params(rng, 0.5);
    const TimeGrid grid(1.0, 500);
    const double b0 = b(rng), b1 = b(rng);
    const auto beta = IntensityPath::sample(grid, [&](double t) { return b0 + (b1 - b0) * t; });
    const CovPath path = integrate_riccati(beta, testing::random_psd(rng), p);
    ASSERT_TRUE(path.complete());
    for (std::size_t k = 0; k < path.sigmas.size(); ++k) {
      EXPECT_GE(path.psd_min_eig[k], -1e-10 * std::abs(path.sigmas[k].trace()));
      EXPECT_TRUE(path.sigmas[k].finite());
    }
  }
}

TEST(Properties, SigmaVvNonIncreasingWithoutExposure) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 40; ++trial) {
    ModelParams p = random_params(rng, 0.0);
    p.gamma_F = p.gamma_C = 0.0;
    const IntensityPath beta = testing::truncated_classical(p, 400);
    const CovPath path = integrate_riccati(beta, testing::random_psd(rng), p);
    ASSERT_TRUE(path.complete());
    for (std::size_t k = 1; k < path.sigmas.size(); ++k) EXPECT_LE(path.sigmas[k].vv(), path.sigmas[k - 1].vv());
  }
}

TEST(Properties, LambdaIsMaxOfTrajectory) {
  std::mt19937_64 rng(102);
  for (int trial = 0; trial < 20; ++trial) {
    const ModelParams p = random_params(rng, 1.0);
    const IntensityPath beta = testing::truncated_classical(p, 300);
    const CovPath cov = integrate_riccati(beta, initial_covariance(p), p);
    ASSERT_TRUE(cov.complete());
    const InstabilityReport r = lambda_sup(cov, beta, p);
    EXPECT_EQ(r.Lambda, *std::max_element(r.eigen_trajectory.begin(), r.eigen_trajectory.end()));
  }
}

TEST(Properties, StabilityOrdering) {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> g(-5.0, 5.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const ModelParams p = random_params(rng, 1.0);
    const StabilityReport r = check_stability(g(rng), g(rng), p);
    EXPECT_LE(r.rho_F, std::min(r.norm_inf, r.norm_1) + 1e-12);
    EXPECT_NEAR(r.rho_F, std::abs(p.kappa_m * r.G_m - p.kappa_c * r.G_c), 1e-12);
    if (r.norm_inf_ok || r.norm_1_ok) EXPECT_LT(r.max_re_A_eff, 0.0);
    if (r.spectral_ok && p.alpha_m == p.alpha_c) EXPECT_LT(r.max_re_A_eff, 0.0);
  }
}

TEST(Properties, CsvDoublesRoundTrip) {
  std::mt19937_64 rng(104);
  std::uniform_int_distribution<std::uint64_t> bits;
  int checked = 0;
  while (checked < 10000) {
    const std::uint64_t u = bits(rng);
    double x;
    std::memcpy(&x, &u, sizeof x);
    if (!std::isfinite(x)) continue;
    const std::string s = format_double(x);
    double y = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), y);
    EXPECT_EQ(x, y) << s;
    ++checked;
  }
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
}

TEST(Properties, ConfigRoundTrip) {
  std::mt19937_64 rng(105);
  for (int trial = 0; trial < 100; ++trial) {
    ModelConfig cfg;
    cfg.params = random_params(rng, 3.0);
    cfg.n_steps = 10 + trial;
    if (trial % 2) cfg.sigma0_override = testing::random_psd(rng).entries();
    const ModelConfig back = parse_config(config_to_json(cfg));
    EXPECT_EQ(back.params, cfg.params);
    EXPECT_EQ(back.sigma0_override, cfg.sigma0_override);
  }
}

TEST(Properties, TruncationKeepsValues) {
  const ModelParams p;
  const TimeGrid grid(1.0, 100);
  const auto full = IntensityPath::sample(grid, [](double t) { return 1.0 + t * t; });
  const auto cut = full.truncated(90);
  EXPECT_EQ(cut.grid().steps(), 90);
  EXPECT_EQ(cut.grid().horizon(), grid.time(90));
  EXPECT_NEAR(cut.grid().dt(), grid.dt(), 1e-15);
  for (int k = 0; k <= 90; ++k) EXPECT_EQ(cut.at(k), full.at(k));
  EXPECT_DOUBLE_EQ(cut.l2_norm(), full.l2_norm(90));
  EXPECT_THROW(full.truncated(101), ModelError);
}

}  // namespace
}  // namespace kyle
