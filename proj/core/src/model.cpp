#include "kyle/model.hpp"

#include <algorithm>
#include <cmath>

namespace kyle {

namespace {

void require(bool ok, const char* message) {
  if (!ok) throw ModelError(message);
}

}  // namespace

ModelParams validate_params(const ModelParams& p) {
  const auto finite = [](double x) { return std::isfinite(x); };
  require(finite(p.sigma_v) && p.sigma_v > 0.0, "sigma_v must be positive");
  require(finite(p.sigma_z) && p.sigma_z > 0.0, "sigma_z must be positive");
  require(finite(p.T) && p.T > 0.0, "T must be positive");
  require(finite(p.alpha_m) && p.alpha_m > 0.0, "alpha_m must be positive");
  require(finite(p.alpha_c) && p.alpha_c > 0.0, "alpha_c must be positive");
  require(finite(p.sigma_m) && p.sigma_m >= 0.0, "sigma_m must be non-negative");
  require(finite(p.sigma_c) && p.sigma_c >= 0.0, "sigma_c must be non-negative");
  require(finite(p.sigma_eps) && p.sigma_eps >= 0.0, "sigma_eps must be non-negative");
  require(finite(p.kappa_m) && p.kappa_m >= 0.0, "kappa_m must be non-negative");
  require(finite(p.kappa_c) && p.kappa_c >= 0.0, "kappa_c must be non-negative");
  require(finite(p.var_m0) && p.var_m0 >= 0.0, "var_m0 must be non-negative");
  require(finite(p.var_c0) && p.var_c0 >= 0.0, "var_c0 must be non-negative");
  require(finite(p.gamma_F), "gamma_F must be finite");
  require(finite(p.gamma_C), "gamma_C must be finite");
  return p;
}

double FeedbackVector::norm() const noexcept {
  return std::sqrt(kappa_m * kappa_m + kappa_c * kappa_c + gamma_F * gamma_F +
                   gamma_C * gamma_C + sigma_eps * sigma_eps);
}

FeedbackVector FeedbackVector::scaled(double s) const noexcept {
  return {s * kappa_m, s * kappa_c, s * gamma_F, s * gamma_C, s * sigma_eps};
}

FeedbackVector feedback_of(const ModelParams& p) noexcept {
  return {p.kappa_m, p.kappa_c, p.gamma_F, p.gamma_C, p.sigma_eps};
}

ModelParams with_feedback(ModelParams p, const FeedbackVector& h) noexcept {
  p.kappa_m = h.kappa_m;
  p.kappa_c = h.kappa_c;
  p.gamma_F = h.gamma_F;
  p.gamma_C = h.gamma_C;
  p.sigma_eps = h.sigma_eps;
  return p;
}

TimeGrid::TimeGrid(double T, int n_steps) : T_(T), n_(n_steps) {
  if (!(T > 0.0) || !std::isfinite(T)) throw ModelError("grid horizon must be positive");
  if (n_steps < 1) throw ModelError("n_steps must be a positive integer");
  dt_ = T / n_steps;
}

std::vector<double> TimeGrid::times() const {
  std::vector<double> t(static_cast<std::size_t>(nodes()));
  for (int k = 0; k <= n_; ++k) t[static_cast<std::size_t>(k)] = time(k);
  return t;
}

CovMatrix CovMatrix::from_matrix(const Mat3& m) {
  return {m(0, 0), m(0, 1), m(0, 2), m(1, 1), m(1, 2), m(2, 2)};
}

Mat3 CovMatrix::matrix() const {
  Mat3 m;
  m << e_[0], e_[1], e_[2],
       e_[1], e_[3], e_[4],
       e_[2], e_[4], e_[5];
  return m;
}

bool CovMatrix::finite() const noexcept {
  return std::all_of(e_.begin(), e_.end(), [](double x) { return std::isfinite(x); });
}

double CovMatrix::max_abs() const noexcept {
  double m = 0.0;
  for (double x : e_) m = std::max(m, std::abs(x));
  return m;
}

double CovMatrix::min_eigenvalue() const { return symmetric_eigenvalues(matrix())[0]; }

bool CovMatrix::is_psd(double rel_tol) const {
  return min_eigenvalue() >= -rel_tol * std::abs(trace());
}

CovMatrix CovMatrix::operator+(const CovMatrix& o) const {
  Entries r;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = e_[i] + o.e_[i];
  return CovMatrix(r);
}

CovMatrix CovMatrix::operator*(double s) const {
  Entries r;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = e_[i] * s;
  return CovMatrix(r);
}

Mat3 drift_matrix(const ModelParams& p) {
  Mat3 a = Mat3::Zero();
  a(1, 1) = -p.alpha_m;
  a(2, 2) = -p.alpha_c;
  return a;
}

Mat3 state_noise_cov(const ModelParams& p) {
  Mat3 q = Mat3::Zero();
  q(1, 1) = p.sigma_m * p.sigma_m;
  q(2, 2) = p.sigma_c * p.sigma_c;
  return q;
}

MeasurementVec measurement_vec(double beta_t, const ModelParams& p) {
  if (!std::isfinite(beta_t)) throw ModelError("beta must be finite");
  return {beta_t, p.gamma_F, p.gamma_C};
}

CovMatrix initial_covariance(const ModelParams& p) {
  return CovMatrix::diagonal(p.sigma_v * p.sigma_v, p.var_m0, p.var_c0);
}

}  // namespace kyle
