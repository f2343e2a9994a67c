#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "kyle/equilibrium.hpp"
#include "kyle/simulator.hpp"
#include "kyle/stability.hpp"

namespace kyle {
namespace {

ModelParams worked_fixture() {
  ModelParams p;
  p.kappa_m = 0.2;
  p.kappa_c = 0.1;
  return p;
}

TEST(FeedbackMatrix, WorkedFixture) {
  const Mat2 F = feedback_matrix(0.5, -0.3, worked_fixture());
  Mat2 expected;
  expected << 0.1, -0.06, -0.05, 0.03;
  EXPECT_LE((F - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(feedback_matrix(0.0, 0.0, worked_fixture()), Mat2::Zero());
}

TEST(CheckStability, WorkedFixture) {
  const ModelParams p = worked_fixture();
  const StabilityReport r = check_stability(0.5, -0.3, p);
  EXPECT_NEAR(r.rho_F, 0.13, 1e-12);
  EXPECT_NEAR(r.norm_inf, 0.16, 1e-12);
  EXPECT_NEAR(r.norm_1, std::max(0.5 * 0.3, 0.3 * 0.3), 1e-12);
  EXPECT_TRUE(r.spectral_ok);
  EXPECT_TRUE(r.norm_inf_ok);
  EXPECT_TRUE(r.hurwitz);
  EXPECT_DOUBLE_EQ(r.min_alpha, 1.0);
}

TEST(CheckStability, ZeroFeedbackIsDecoupledOu) {
  ModelParams p;
  p.alpha_m = 2.0;
  p.alpha_c = 0.5;
  const StabilityReport r = check_stability(Mat2::Zero(), p);
  EXPECT_EQ(r.rho_F, 0.0);
  Mat2 d = Mat2::Zero();
  d(0, 0) = -2.0;
  d(1, 1) = -0.5;
  EXPECT_EQ(r.A_eff, d);
  EXPECT_TRUE(r.hurwitz);
  EXPECT_DOUBLE_EQ(r.max_re_A_eff, -0.5);
}

TEST(CheckStability, RandomFixtures) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> k(0.0, 2.0), g(-3.0, 3.0), a(0.1, 3.0);
  for (int i = 0; i < 1000; ++i) {
    ModelParams p;
    p.kappa_m = k(rng);
    p.kappa_c = k(rng);
    p.alpha_m = a(rng);
    p.alpha_c = a(rng);
    const double Gm = g(rng), Gc = g(rng);
    const StabilityReport r = check_stability(Gm, Gc, p);
    EXPECT_NEAR(r.rho_F, std::abs(p.kappa_m * Gm - p.kappa_c * Gc), 1e-12);
    EXPECT_LE(r.rho_F, std::min(r.norm_inf, r.norm_1) + 1e-12);
    if (r.norm_inf_ok) EXPECT_TRUE(r.spectral_ok && r.hurwitz);
    if (r.norm_1_ok) EXPECT_TRUE(r.spectral_ok && r.hurwitz);
    EXPECT_LE(std::abs(r.F.determinant()), 1e-12);
  }
}

TEST(CheckStability, SpectralConditionImpliesHurwitzForEqualRates) {
  std::mt19937_64 rng(79);
  std::uniform_real_distribution<double> k(0.0, 2.0), g(-3.0, 3.0), a(0.1, 3.0);
  int stable = 0;
  for (int i = 0; i < 1000; ++i) {
    ModelParams p;
    p.kappa_m = k(rng);
    p.kappa_c = k(rng);
    p.alpha_m = p.alpha_c = a(rng);
    const StabilityReport r = check_stability(g(rng), g(rng), p);
    if (!r.spectral_ok) continue;
    ++stable;
    EXPECT_TRUE(r.hurwitz);
  }
  EXPECT_GT(stable, 100);
}

// With unequal rates the spectral condition alone is not enough: F has zero
// trace here, so rho(F) = 0, yet det(A_eff) < 0.
TEST(CheckStability, SpectralConditionCounterexample) {
  ModelParams p;
  p.kappa_m = 1.0;
  p.kappa_c = 1.0;
  p.alpha_m = 1.0;
  p.alpha_c = 3.0;
  const StabilityReport r = check_stability(2.0, 2.0, p);
  EXPECT_NEAR(r.rho_F, 0.0, 1e-12);
  EXPECT_TRUE(r.spectral_ok);
  EXPECT_NEAR(r.A_eff.determinant(), -1.0, 1e-12);
  EXPECT_FALSE(r.hurwitz);
  EXPECT_FALSE(r.norm_inf_ok);
  EXPECT_FALSE(r.norm_1_ok);
}

TEST(CheckStability, NormFormulasMatchBruteForce) {
  std::mt19937_64 rng(78);
  std::uniform_real_distribution<double> k(0.0, 1.0), g(-2.0, 2.0);
  for (int i = 0; i < 20; ++i) {
    ModelParams p;
    p.kappa_m = k(rng);
    p.kappa_c = k(rng);
    const StabilityReport r = check_stability(g(rng), g(rng), p);
    EXPECT_NEAR(r.norm_inf, induced_norm_sampled(r.F, INFINITY, 200000), 1e-6);
    EXPECT_NEAR(r.norm_1, induced_norm_sampled(r.F, 1.0, 200000), 1e-6);
  }
}

TEST(DcGains, ZeroFeedbackHasNoChannel) {
  const ModelParams p;
  const IntensityPath beta = testing::truncated_classical(p, 500);
  const CovPath cov = integrate_riccati(beta, initial_covariance(p), p);
  const DcGains g = dc_gains(cov, beta, p);
  EXPECT_EQ(g.G_m, 0.0);
  EXPECT_EQ(g.G_c, 0.0);
}

TEST(DcGains, LinearInExposuresAtFrozenGain) {
  ModelParams p = testing::weak_feedback_params();
  const IntensityPath beta = testing::truncated_classical(p, 500);
  const CovPath cov = integrate_riccati(beta, testing::correlated_sigma0(), p);
  const DcGains g = dc_gains(cov, beta, p);
  // G = gamma * g with g fixed by (K, M); scaling gamma scales G.
  EXPECT_DOUBLE_EQ(g.G_m, p.gamma_F * g.g);
  EXPECT_DOUBLE_EQ(g.G_c, p.gamma_C * g.g);
  EXPECT_DOUBLE_EQ(g.G_m / g.G_c, p.gamma_F / p.gamma_C);
  const DcGains t = dc_gains(cov, beta, p, DcGainOptions{true});
  EXPECT_TRUE(std::isfinite(t.g));
}

TEST(DcGains, MatchesTimeSteppedStationaryResponse) {
  // Frozen filter driven by a sustained unit shift in m: the innovation picks
  // up gamma_F per unit time, and the price settles at G_m.
  ModelParams p = testing::weak_feedback_params();
  const IntensityPath beta = testing::truncated_classical(p, 500);
  const CovPath cov = integrate_riccati(beta, testing::correlated_sigma0(), p);
  const DcGains g = dc_gains(cov, beta, p);
  const int last = truncated_last_node(cov.grid);
  Vec3 K = Vec3::Zero();
  Mat3 M = Mat3::Zero();
  for (int k = 0; k <= last; ++k) {
    K += kalman_gain(cov.at(k), measurement_vec(beta.at(k), p), p.observation_variance());
    M += error_matrix(cov.at(k), beta.at(k), p);
  }
  K /= last + 1;
  M /= last + 1;
  Vec3 x = Vec3::Zero();
  const double h = 1e-3;
  for (int i = 0; i < 200000; ++i) {
    const auto f = [&](const Vec3& y) -> Vec3 { return M * y + K * p.gamma_F; };
    const Vec3 k1 = f(x), k2 = f(x + 0.5 * h * k1), k3 = f(x + 0.5 * h * k2), k4 = f(x + h * k3);
    x += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  EXPECT_NEAR(x(0), g.G_m, 1e-8 * (1.0 + std::abs(g.G_m)));
}

TEST(DcGains, RequiresCompletePath) {
  const ModelParams p;
  const TimeGrid grid(1.0, 100);
  const auto beta = classical_kyle_intensity(p, grid);
  EXPECT_THROW(dc_gains(integrate_riccati(beta, initial_covariance(p), p), beta, p), ModelError);
}

TEST(DcGains, NoStationaryGainWhenNotHurwitz) {
  // beta = 0: the static fundamental gives a zero eigenvalue in M.
  ModelParams p = testing::weak_feedback_params();
  p.gamma_F = 0.0;
  p.gamma_C = 0.0;
  const TimeGrid grid(1.0, 100);
  const auto beta = IntensityPath::constant(grid, 0.0);
  EXPECT_THROW(dc_gains(integrate_riccati(beta, initial_covariance(p), p), beta, p), StabilityError);
}

TEST(StabilityJson, ContainsVerdicts) {
  const std::string j = stability_report_json(check_stability(0.5, -0.3, worked_fixture()));
  EXPECT_NE(j.find("\"rho_F\": 0.13"), std::string::npos) << j;
  EXPECT_NE(j.find("\"spectral_ok\": true"), std::string::npos);
}

}  // namespace
}  // namespace kyle
