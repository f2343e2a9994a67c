#include <gtest/gtest.h>

#include "kyle/model.hpp"

namespace kyle {
namespace {

TEST(ValidateParams, AcceptsDefaults) {
  ModelParams p;
  EXPECT_EQ(validate_params(p), p);
}

void expect_rejected(ModelParams p, const std::string& message) {
  try {
    validate_params(p);
    FAIL() << "expected ModelError";
  } catch (const ModelError& e) {
    EXPECT_NE(std::string(e.what()).find(message), std::string::npos) << e.what();
  }
}

TEST(ValidateParams, RejectsBadFields) {
  ModelParams p;
  p.sigma_z = 0.0;
  expect_rejected(p, "sigma_z must be positive");
  p = {};
  p.alpha_m = -0.5;
  expect_rejected(p, "alpha_m must be positive");
  p = {};
  p.kappa_c = -0.1;
  expect_rejected(p, "kappa_c");
  p = {};
  p.var_m0 = -1.0;
  expect_rejected(p, "var_m0");
  p = {};
  p.sigma_eps = -1.0;
  expect_rejected(p, "sigma_eps");
  p = {};
  p.T = 0.0;
  expect_rejected(p, "T must be positive");
}

TEST(Matrices, DriftAndNoise) {
  ModelParams p;
  p.alpha_m = 1.0;
  p.alpha_c = 2.0;
  p.sigma_m = 0.2;
  p.sigma_c = 0.1;
  Mat3 A = drift_matrix(p);
  EXPECT_EQ(A, Vec3(0.0, -1.0, -2.0).asDiagonal().toDenseMatrix());
  EXPECT_EQ(A(0, 0), 0.0);
  const Mat3 Q = state_noise_cov(p);
  EXPECT_DOUBLE_EQ(Q(1, 1), 0.04);
  EXPECT_DOUBLE_EQ(Q(2, 2), 0.01);
  EXPECT_EQ(Q(0, 0), 0.0);
  EXPECT_EQ((Q - Mat3(Q.diagonal().asDiagonal())).norm(), 0.0);
}

TEST(Matrices, MeasurementVector) {
  ModelParams p;
  p.gamma_F = 0.5;
  p.gamma_C = -0.3;
  EXPECT_EQ(measurement_vec(1.0, p).vec(), Vec3(1.0, 0.5, -0.3));
  EXPECT_EQ(measurement_vec(2.0, ModelParams{}).vec(), Vec3(2.0, 0.0, 0.0));
  EXPECT_THROW(measurement_vec(std::numeric_limits<double>::infinity(), p), ModelError);
}

TEST(CovMatrix, RoundTripAndInitial) {
  const CovMatrix s(1.0, 0.2, -0.1, 0.5, 0.05, 0.3);
  EXPECT_EQ(CovMatrix::from_matrix(s.matrix()), s);
  EXPECT_EQ(s.matrix(), s.matrix().transpose());
  ModelParams p;
  p.sigma_v = 2.0;
  p.var_m0 = 0.3;
  p.var_c0 = 0.4;
  EXPECT_EQ(initial_covariance(p), CovMatrix::diagonal(4.0, 0.3, 0.4));
}

TEST(CovMatrix, PsdMonitor) {
  EXPECT_TRUE(CovMatrix::diagonal(1.0, 0.0, 0.0).is_psd());
  EXPECT_FALSE(CovMatrix(1.0, 2.0, 0.0, 1.0, 0.0, 1.0).is_psd());
  EXPECT_NEAR(CovMatrix(1.0, 2.0, 0.0, 1.0, 0.0, 1.0).min_eigenvalue(), -1.0, 1e-12);
}

TEST(Feedback, ScalingAndNorm) {
  ModelParams p;
  p.kappa_m = 3.0;
  p.gamma_F = 4.0;
  const FeedbackVector h = feedback_of(p);
  EXPECT_DOUBLE_EQ(h.norm(), 5.0);
  EXPECT_DOUBLE_EQ(h.scaled(0.5).norm(), 2.5);
  const ModelParams q = with_feedback(p, FeedbackVector{});
  EXPECT_EQ(q.gamma_F, 0.0);
  EXPECT_EQ(q.kappa_m, 0.0);
  EXPECT_EQ(q.sigma_v, p.sigma_v);
}

TEST(TimeGrid, PinsHorizon) {
  const TimeGrid g(0.7, 3);
  EXPECT_EQ(g.time(3), 0.7);
  EXPECT_DOUBLE_EQ(g.dt(), 0.7 / 3);
  EXPECT_EQ(g.times().size(), 4u);
}

}  // namespace
}  // namespace kyle
