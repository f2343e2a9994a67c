#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "kyle/linalg.hpp"

namespace kyle {
namespace {

TEST(CubicRoots, KnownPolynomials) {
  // (x - 1)(x - 2)(x - 3)
  auto r = cubic_roots(-6.0, 11.0, -6.0);
  EXPECT_NEAR(r[0].real(), 3.0, 1e-12);
  EXPECT_NEAR(r[1].real(), 2.0, 1e-12);
  EXPECT_NEAR(r[2].real(), 1.0, 1e-12);
  // (x + 1)(x^2 + 1)
  r = cubic_roots(1.0, 1.0, 1.0);
  EXPECT_NEAR(r[0].real(), -1.0, 1e-12);
  EXPECT_NEAR(std::abs(r[1].imag()), 1.0, 1e-12);
  EXPECT_NEAR(r[1].real(), 0.0, 1e-12);
  // triple root
  r = cubic_roots(-3.0, 3.0, -1.0);
  for (const auto& z : r) EXPECT_NEAR(z.real(), 1.0, 1e-5);
}

TEST(Eigenvalues, MatchEigenOnRandomMatrices) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 500; ++trial) {
    Mat3 m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = n(rng);
    const auto ref = m.eigenvalues();
    double ref_max = -1e300;
    for (int i = 0; i < 3; ++i) ref_max = std::max(ref_max, ref(i).real());
    EXPECT_NEAR(max_real_eigenvalue(m), ref_max, 1e-9 * (1.0 + m.norm()));

    const Mat3 s = m + m.transpose();
    auto ev = symmetric_eigenvalues(s);
    Eigen::SelfAdjointEigenSolver<Mat3> es(s);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(ev[static_cast<std::size_t>(i)], es.eigenvalues()(i), 1e-9 * (1.0 + s.norm()));
  }
}

TEST(Eigenvalues, TwoByTwo) {
  Mat2 m;
  m << 0.1, -0.06, -0.05, 0.03;
  auto ev = eigenvalues(m);
  const double a = std::abs(ev[0]), b = std::abs(ev[1]);
  EXPECT_NEAR(std::max(a, b), 0.13, 1e-15);
  EXPECT_NEAR(std::min(a, b), 0.0, 1e-15);
  m << 0.0, -1.0, 1.0, 0.0;
  ev = eigenvalues(m);
  EXPECT_NEAR(std::abs(ev[0].imag()), 1.0, 1e-15);
}

TEST(Eigenvalues, DiagonalMatrices) {
  const Mat3 d = Vec3(-1.0, -2.0, 0.5).asDiagonal();
  EXPECT_DOUBLE_EQ(max_real_eigenvalue(d), 0.5);
  const auto ev = symmetric_eigenvalues(d);
  EXPECT_NEAR(ev[0], -2.0, 1e-14);
  EXPECT_NEAR(ev[2], 0.5, 1e-14);
}

}  // namespace
}  // namespace kyle
