#ifndef KYLE_TESTS_FIXTURES_HPP
#define KYLE_TESTS_FIXTURES_HPP

#include <random>

#include "kyle/intensity.hpp"
#include "kyle/linalg.hpp"
#include "kyle/model.hpp"

namespace kyle::testing {

inline ModelParams classical_params() { return ModelParams{}; }

/// Weak feedback with noisy positions; the direction used by the continuity tests.
inline ModelParams weak_feedback_params() {
  ModelParams p;
  p.sigma_m = 0.5;
  p.sigma_c = 0.5;
  p.kappa_m = 0.2;
  p.kappa_c = 0.1;
  p.gamma_F = 1.0;
  p.gamma_C = 0.5;
  p.var_m0 = 0.5;
  p.var_c0 = 0.5;
  return p;
}

inline CovMatrix correlated_sigma0() { return {1.0, 0.2, 0.0, 0.5, 0.0, 0.5}; }

/// Random PSD covariance L L' with standard normal L entries, scaled.
inline CovMatrix random_psd(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n;
  Mat3 L;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) L(i, j) = n(rng);
  return CovMatrix::from_matrix(scale * L * L.transpose());
}

/// Matrix-form right-hand side A S + S A' + Q - S C' C S / R.
inline Mat3 riccati_matrix_form(const CovMatrix& sigma, double beta, const ModelParams& p) {
  const Mat3 S = sigma.matrix();
  const Mat3 A = drift_matrix(p);
  const Vec3 c = measurement_vec(beta, p).vec();
  return A * S + S * A.transpose() + state_noise_cov(p) -
         S * c * c.transpose() * S / p.observation_variance();
}

/// Classical intensity on [0, T - 10 dt].
inline IntensityPath truncated_classical(const ModelParams& p, int n_steps) {
  const TimeGrid grid(p.T, n_steps);
  return classical_kyle_intensity(p, grid).truncated(truncated_last_node(grid));
}

}  // namespace kyle::testing

#endif  // KYLE_TESTS_FIXTURES_HPP
