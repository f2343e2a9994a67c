#ifndef KYLE_MODEL_HPP
#define KYLE_MODEL_HPP

/**
 * @file model.hpp
 * @brief Primitives of the continuous-time Kyle market with momentum and
 * contrarian traders.
 *
 * State x_t = (v, m_t, c_t): the static fundamental, the momentum traders'
 * position and the contrarians' position. Positions mean-revert,
 *
 *   dm_t = -alpha_m m_t dt + kappa_m dP_t + sigma_m dB^m_t
 *   dc_t = -alpha_c c_t dt - kappa_c dP_t + sigma_c dB^c_t
 *
 * and enter aggregate order flow through the exposures gamma_F, gamma_C:
 *
 *   dY_t = theta_t dt + (gamma_F m_t + gamma_C c_t) dt + sigma_eps dE_t + sigma_z dW_t
 */

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "kyle/linalg.hpp"

namespace kyle {

/// Raised for invalid model inputs; the message names the offending field.
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ModelParams {
  double sigma_v = 1.0;    ///< std-dev of the fundamental v
  double sigma_z = 1.0;    ///< exogenous order-flow volatility
  double sigma_m = 0.0;    ///< momentum position noise
  double sigma_c = 0.0;    ///< contrarian position noise
  double sigma_eps = 0.0;  ///< drift-noise scale in order flow
  double alpha_m = 1.0;    ///< momentum mean reversion (1/time)
  double alpha_c = 1.0;    ///< contrarian mean reversion (1/time)
  double kappa_m = 0.0;    ///< momentum price sensitivity
  double kappa_c = 0.0;    ///< contrarian price sensitivity
  double gamma_F = 0.0;    ///< momentum exposure in order flow
  double gamma_C = 0.0;    ///< contrarian exposure in order flow
  double T = 1.0;          ///< horizon
  double var_m0 = 0.0;     ///< Var(m_0)
  double var_c0 = 0.0;     ///< Var(c_0)

  /// When set, sigma_eps is treated as extra white observation noise and the
  /// filter uses R = sigma_z^2 + sigma_eps^2; otherwise R = sigma_z^2.
  bool fold_eps_into_R = true;

  /// Observation noise variance R used by the filter.
  double observation_variance() const noexcept {
    return fold_eps_into_R ? sigma_z * sigma_z + sigma_eps * sigma_eps : sigma_z * sigma_z;
  }

  bool operator==(const ModelParams&) const = default;
};

/// Returns p unchanged, or throws ModelError naming the first bad field.
ModelParams validate_params(const ModelParams& p);

/// h = (kappa_m, kappa_c, gamma_F, gamma_C, sigma_eps).
struct FeedbackVector {
  double kappa_m = 0.0;
  double kappa_c = 0.0;
  double gamma_F = 0.0;
  double gamma_C = 0.0;
  double sigma_eps = 0.0;

  double norm() const noexcept;
  FeedbackVector scaled(double s) const noexcept;
};

FeedbackVector feedback_of(const ModelParams& p) noexcept;

/// Copy of p with the five feedback components replaced by h.
ModelParams with_feedback(ModelParams p, const FeedbackVector& h) noexcept;

/// Uniform grid on [0, T] with n_steps intervals.
class TimeGrid {
 public:
  TimeGrid() = default;
  TimeGrid(double T, int n_steps);

  double horizon() const noexcept { return T_; }
  int steps() const noexcept { return n_; }
  int nodes() const noexcept { return n_ + 1; }
  double dt() const noexcept { return dt_; }
  /// t_k = k * dt, with t_n pinned to T exactly.
  double time(int k) const noexcept { return k == n_ ? T_ : k * dt_; }
  std::vector<double> times() const;

  bool operator==(const TimeGrid& o) const noexcept { return T_ == o.T_ && n_ == o.n_; }

 private:
  double T_ = 1.0;
  int n_ = 1;
  double dt_ = 1.0;
};

/// Symmetric 3x3 covariance stored as its six independent entries, ordered
/// (vv, vm, vc, mm, mc, cc).
class CovMatrix {
 public:
  using Entries = std::array<double, 6>;

  CovMatrix() = default;
  explicit CovMatrix(const Entries& e) : e_(e) {}
  CovMatrix(double vv, double vm, double vc, double mm, double mc, double cc)
      : e_{vv, vm, vc, mm, mc, cc} {}

  /// Reads the upper triangle of m.
  static CovMatrix from_matrix(const Mat3& m);
  static CovMatrix diagonal(double vv, double mm, double cc) { return {vv, 0, 0, mm, 0, cc}; }

  double vv() const noexcept { return e_[0]; }
  double vm() const noexcept { return e_[1]; }
  double vc() const noexcept { return e_[2]; }
  double mm() const noexcept { return e_[3]; }
  double mc() const noexcept { return e_[4]; }
  double cc() const noexcept { return e_[5]; }

  const Entries& entries() const noexcept { return e_; }
  double operator[](int i) const { return e_[static_cast<std::size_t>(i)]; }

  Mat3 matrix() const;
  double trace() const noexcept { return e_[0] + e_[3] + e_[5]; }
  bool finite() const noexcept;
  double max_abs() const noexcept;
  double min_eigenvalue() const;
  /// min eigenvalue >= -rel_tol * |trace|.
  bool is_psd(double rel_tol = 1e-10) const;

  CovMatrix operator+(const CovMatrix& o) const;
  CovMatrix operator*(double s) const;

  bool operator==(const CovMatrix&) const = default;

 private:
  Entries e_{};
};

struct StateVec {
  double v = 0.0;
  double m = 0.0;
  double c = 0.0;

  Vec3 vec() const { return {v, m, c}; }
  static StateVec from(const Vec3& x) { return {x(0), x(1), x(2)}; }
};

/// Measurement row C_t = (beta_t, gamma_F, gamma_C).
struct MeasurementVec {
  double beta = 0.0;
  double gamma_F = 0.0;
  double gamma_C = 0.0;

  Vec3 vec() const { return {beta, gamma_F, gamma_C}; }
};

Mat3 drift_matrix(const ModelParams& p);
Mat3 state_noise_cov(const ModelParams& p);
MeasurementVec measurement_vec(double beta_t, const ModelParams& p);

/// diag(sigma_v^2, var_m0, var_c0).
CovMatrix initial_covariance(const ModelParams& p);

}  // namespace kyle

#endif  // KYLE_MODEL_HPP
