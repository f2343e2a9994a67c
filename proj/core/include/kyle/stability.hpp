#ifndef KYLE_STABILITY_HPP
#define KYLE_STABILITY_HPP

// Price-feedback stability of the (m, c) block. The filtered price responds
// to a sustained shift in m or c with DC gains G_m, G_c; feeding that back
// through kappa gives the rank-one loop matrix
//
//   F = [[ kappa_m G_m,  kappa_m G_c],
//        [-kappa_c G_m, -kappa_c G_c]]
//
// and the closed-loop drift A_eff = -diag(alpha_m, alpha_c) + F.

#include <stdexcept>
#include <string>

#include "kyle/intensity.hpp"
#include "kyle/linalg.hpp"
#include "kyle/model.hpp"
#include "kyle/riccati.hpp"

namespace kyle {

class StabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DcGains {
  double G_m = 0.0;
  double G_c = 0.0;
  double g = 0.0;  ///< price response per unit of order-flow drift
};

struct DcGainOptions {
  bool terminal = false;  ///< freeze (K, M) at the last truncated node instead of averaging
  int truncation = 10;
};

/// g = e1' (-Mbar)^{-1} Kbar with (Kbar, Mbar) averaged over the truncated
/// grid; G_m = gamma_F g, G_c = gamma_C g. Throws StabilityError when Mbar is
/// not Hurwitz and ModelError when the path is incomplete.
DcGains dc_gains(const CovPath& cov, const IntensityPath& beta, const ModelParams& p,
                 const DcGainOptions& opt = {});

Mat2 feedback_matrix(double G_m, double G_c, const ModelParams& p);

struct StabilityReport {
  double G_m = 0.0;
  double G_c = 0.0;
  Mat2 F = Mat2::Zero();
  Mat2 A_eff = Mat2::Zero();
  double rho_F = 0.0;
  double norm_inf = 0.0;
  double norm_1 = 0.0;
  double min_alpha = 0.0;
  double max_re_A_eff = 0.0;
  bool spectral_ok = false;  ///< rho(F) < min alpha
  bool norm_inf_ok = false;
  bool norm_1_ok = false;
  bool hurwitz = false;      ///< A_eff Hurwitz
};

StabilityReport check_stability(const Mat2& F, const ModelParams& p);
StabilityReport check_stability(double G_m, double G_c, const ModelParams& p);

/// Induced norm of a 2x2 matrix for the p-norm on R^2, by maximizing over
/// n_angles unit vectors on the circle. Used as a brute-force cross-check.
double induced_norm_sampled(const Mat2& F, double p_norm, int n_angles);

/// Pretty-printed JSON object with every report field.
std::string stability_report_json(const StabilityReport& rep);

}  // namespace kyle

#endif  // KYLE_STABILITY_HPP
