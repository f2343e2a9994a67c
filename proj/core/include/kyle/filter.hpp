#ifndef KYLE_FILTER_HPP
#define KYLE_FILTER_HPP

#include <iosfwd>
#include <optional>
#include <vector>

#include "kyle/intensity.hpp"
#include "kyle/model.hpp"
#include "kyle/riccati.hpp"

namespace kyle {

/// Which price-impact coefficient to report.
///  - filter_implied: lambda = e1' K = (beta Svv + gF Svm + gC Svc) / R
///  - beta_sigma_vv:  lambda = Svv * beta (no R, no cross terms)
enum class ImpactDefinition { filter_implied, beta_sigma_vv };

/// K = Sigma C' / R.
Vec3 kalman_gain(const CovMatrix& sigma, const MeasurementVec& c, double R);

double price_impact(const CovMatrix& sigma, const MeasurementVec& c, double R,
                    ImpactDefinition def = ImpactDefinition::filter_implied);

/// Filter error dynamics M = A - K C.
Mat3 error_matrix(const CovMatrix& sigma, double beta_t, const ModelParams& p);

struct GainPath {
  TimeGrid grid;
  std::vector<Vec3> gains;
  std::vector<double> impacts;
  std::vector<double> max_re_eig;  ///< largest real eigenvalue part of M_t
};

GainPath gain_path(const CovPath& cov, const IntensityPath& beta, const ModelParams& p,
                   ImpactDefinition def = ImpactDefinition::filter_implied);

struct InstabilityReport {
  double Lambda = 0.0;  ///< sup_t max Re eig(M_t)
  double argmax_time = 0.0;
  std::vector<double> eigen_trajectory;

  bool unstable() const noexcept { return Lambda > 0.0; }
};

/// Scans nodes 0..last_node (default: every stored node). Throws ModelError
/// if the covariance path broke down.
InstabilityReport lambda_sup(const CovPath& cov, const IntensityPath& beta, const ModelParams& p,
                             std::optional<int> last_node = std::nullopt);

struct FilterState {
  StateVec xhat;
  CovMatrix sigma;
};

/// dY - E[dY | F^Y]. The insider's order flow beta (v - P) has conditional
/// mean zero because P = xhat.v, so only the exposures contribute.
double innovation(const StateVec& xhat, double dY, const ModelParams& p, double dt);

/// Mean update with a given gain: dxhat = A xhat dt + u + K (innovation),
/// u = (0, kappa_m dP, -kappa_c dP) the known price-feedback input.
StateVec filter_mean_step(const StateVec& xhat, const Vec3& gain, double dY, double dP_known,
                          const ModelParams& p, double dt);

/// One filter step: mean update with the gain at the current covariance, and
/// the covariance advanced by one RK4 step with beta held at beta_t.
FilterState filter_step(const StateVec& xhat, const CovMatrix& sigma, double dY, double dP_known,
                        double beta_t, const ModelParams& p, double dt);

/// Columns: t, K1, K2, K3, lambda_impact, maxRe_eig_M.
void write_gain_path_csv(std::ostream& os, const GainPath& gains);

}  // namespace kyle

#endif  // KYLE_FILTER_HPP
