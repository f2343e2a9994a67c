#ifndef KYLE_PERTURBATION_HPP
#define KYLE_PERTURBATION_HPP

// Tangent-linear sensitivity of the Riccati flow with respect to one
// feedback parameter at fixed beta. Writing dSigma/dt = F(Sigma, q), the
// sensitivity S = dSigma/dq solves
//
//   dS/dt = L[S] + dF/dq,   S(0) = 0,
//
// with L the Frechet derivative of F in Sigma. S is co-integrated with the
// baseline by RK4 on the same grid.

#include <iosfwd>
#include <vector>

#include "kyle/equilibrium.hpp"
#include "kyle/intensity.hpp"
#include "kyle/model.hpp"
#include "kyle/riccati.hpp"

namespace kyle {

/// kappa_m and kappa_c act on the filtered mean only, so their forcing is zero.
enum class SensitivityParam { gamma_F, gamma_C, kappa_m, kappa_c };

/// L[H] = A H + H A' - (H C' C Sigma + Sigma C' C H) / R with C = (beta, gamma_F, gamma_C).
Mat3 linearized_rhs(const Mat3& H, const CovMatrix& sigma, double beta_t, const ModelParams& p);

/// dF/dq at (Sigma, beta_t): -Sigma (e c' + c e') Sigma / R for q = gamma_F
/// (e = e2) or gamma_C (e = e3); zero for the kappas.
Mat3 forcing_term(const CovMatrix& sigma, double beta_t, const ModelParams& p,
                  SensitivityParam param = SensitivityParam::gamma_F);

struct SensitivityPath {
  TimeGrid grid;
  std::vector<Mat3> sigma1;
  std::vector<double> dvv;
};

struct SensitivityOptions {
  SensitivityParam param = SensitivityParam::gamma_F;
  double forcing_scale = 1.0;
};

/// Throws ModelError on an incomplete baseline or a grid mismatch.
SensitivityPath integrate_sensitivity(const CovPath& cov0, const IntensityPath& beta0,
                                      const ModelParams& p, const SensitivityOptions& opt = {});

/// Central difference (Sigma(q + eps) - Sigma(q - eps)) / (2 eps) of two
/// full Riccati solves at fixed beta. Throws SolverError if either breaks down.
SensitivityPath finite_difference_sensitivity(const IntensityPath& beta, const CovMatrix& sigma0,
                                              const ModelParams& p, double eps,
                                              SensitivityParam param = SensitivityParam::gamma_F);

struct ComparativeStatics {
  double eps = 0.0;
  double dJ_dgammaF = 0.0;
  double dbeta_norm = 0.0;                ///< ||(beta+ - beta-) / (2 eps)||_2, truncated grid
  std::vector<double> dSigma_vv_profile;  ///< central difference of Sigma_vv(t) across re-solves
  std::vector<double> dvv_linear;         ///< tangent-linear prediction at the baseline beta
  bool converged = false;                 ///< both perturbed solves converged
};

/// Re-solves the equilibrium at gamma_F +- eps around p. Throws SolverError
/// when a perturbed solve fails.
ComparativeStatics comparative_statics(const EquilibriumSolution& sol0, const ModelParams& p,
                                       const CovMatrix& sigma0, double eps = 1e-3,
                                       const SolverOptions& opt = {}, int threads = 1);

/// Columns: t, dvv_linear, dvv_fd, abs_gap.
void write_sensitivity_csv(std::ostream& os, const SensitivityPath& linear,
                           const SensitivityPath& fd);

}  // namespace kyle

#endif  // KYLE_PERTURBATION_HPP
