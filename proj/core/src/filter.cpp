#include "kyle/filter.hpp"

#include <cmath>
#include <ostream>

#include "kyle/csv.hpp"

namespace kyle {

Vec3 kalman_gain(const CovMatrix& sigma, const MeasurementVec& c, double R) {
  if (!(R > 0.0)) throw ModelError("observation variance R must be positive");
  return sigma.matrix() * c.vec() / R;
}

double price_impact(const CovMatrix& sigma, const MeasurementVec& c, double R, ImpactDefinition def) {
  if (!(R > 0.0)) throw ModelError("observation variance R must be positive");
  if (def == ImpactDefinition::beta_sigma_vv) return sigma.vv() * c.beta;
  return (c.beta * sigma.vv() + c.gamma_F * sigma.vm() + c.gamma_C * sigma.vc()) / R;
}

Mat3 error_matrix(const CovMatrix& sigma, double beta_t, const ModelParams& p) {
  const MeasurementVec c = measurement_vec(beta_t, p);
  const Vec3 k = kalman_gain(sigma, c, p.observation_variance());
  return drift_matrix(p) - k * c.vec().transpose();
}

GainPath gain_path(const CovPath& cov, const IntensityPath& beta, const ModelParams& p,
                   ImpactDefinition def) {
  GainPath out;
  out.grid = cov.grid;
  const double R = p.observation_variance();
  const std::size_t n = cov.sigmas.size();
  out.gains.reserve(n);
  out.impacts.reserve(n);
  out.max_re_eig.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double b = beta.at(static_cast<int>(k));
    const MeasurementVec c{b, p.gamma_F, p.gamma_C};
    out.gains.push_back(kalman_gain(cov.sigmas[k], c, R));
    out.impacts.push_back(price_impact(cov.sigmas[k], c, R, def));
    out.max_re_eig.push_back(std::isfinite(b) ? max_real_eigenvalue(error_matrix(cov.sigmas[k], b, p))
                                              : NAN);
  }
  return out;
}

InstabilityReport lambda_sup(const CovPath& cov, const IntensityPath& beta, const ModelParams& p,
                             std::optional<int> last_node) {
  if (!cov.complete()) throw ModelError("lambda_sup: covariance path broke down");
  if (!(cov.grid == beta.grid())) throw ModelError("lambda_sup: grid mismatch");
  const int last = last_node.value_or(static_cast<int>(cov.sigmas.size()) - 1);
  if (last < 0 || last >= static_cast<int>(cov.sigmas.size()))
    throw ModelError("lambda_sup: last node out of range");

  InstabilityReport rep;
  rep.eigen_trajectory.resize(static_cast<std::size_t>(last + 1));
  rep.Lambda = -INFINITY;
  for (int k = 0; k <= last; ++k) {
    const double e = max_real_eigenvalue(error_matrix(cov.at(k), beta.at(k), p));
    rep.eigen_trajectory[static_cast<std::size_t>(k)] = e;
    if (e > rep.Lambda) {
      rep.Lambda = e;
      rep.argmax_time = cov.grid.time(k);
    }
  }
  return rep;
}

double innovation(const StateVec& xhat, double dY, const ModelParams& p, double dt) {
  return dY - (p.gamma_F * xhat.m + p.gamma_C * xhat.c) * dt;
}

StateVec filter_mean_step(const StateVec& xhat, const Vec3& gain, double dY, double dP_known,
                          const ModelParams& p, double dt) {
  const double innov = innovation(xhat, dY, p, dt);
  StateVec next;
  next.v = xhat.v + gain(0) * innov;
  next.m = xhat.m - p.alpha_m * xhat.m * dt + p.kappa_m * dP_known + gain(1) * innov;
  next.c = xhat.c - p.alpha_c * xhat.c * dt - p.kappa_c * dP_known + gain(2) * innov;
  return next;
}

FilterState filter_step(const StateVec& xhat, const CovMatrix& sigma, double dY, double dP_known,
                        double beta_t, const ModelParams& p, double dt) {
  if (!(dt > 0.0)) throw ModelError("dt must be positive");
  const Vec3 k = kalman_gain(sigma, measurement_vec(beta_t, p), p.observation_variance());
  return {filter_mean_step(xhat, k, dY, dP_known, p, dt),
          riccati_rk4_step(sigma, beta_t, beta_t, beta_t, dt, p)};
}

void write_gain_path_csv(std::ostream& os, const GainPath& g) {
  CsvWriter w(os);
  w.header({"t", "K1", "K2", "K3", "lambda_impact", "maxRe_eig_M"});
  for (std::size_t k = 0; k < g.gains.size(); ++k) {
    w.row({g.grid.time(static_cast<int>(k)), g.gains[k](0), g.gains[k](1), g.gains[k](2),
           g.impacts[k], g.max_re_eig[k]});
  }
}

}  // namespace kyle
