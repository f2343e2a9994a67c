#ifndef KYLE_RICCATI_HPP
#define KYLE_RICCATI_HPP

// Forward matrix Riccati flow of the market maker's posterior covariance,
//
//   dSigma/dt = A Sigma + Sigma A' + Q - Sigma C' R^{-1} C Sigma,
//
// integrated entrywise with fixed-step RK4, with runtime monitors for loss of
// positive semidefiniteness and divergence.

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "kyle/intensity.hpp"
#include "kyle/model.hpp"

namespace kyle {

enum class BreakdownMode { psd_loss, divergence };

std::string_view to_string(BreakdownMode mode) noexcept;

struct Breakdown {
  double time = 0.0;  ///< time of the first failing node
  int node = 0;
  BreakdownMode mode = BreakdownMode::divergence;
};

struct CovPath {
  TimeGrid grid;
  std::vector<CovMatrix> sigmas;    ///< one per node; truncated at a breakdown
  std::vector<double> psd_min_eig;  ///< smallest eigenvalue at each stored node
  std::optional<Breakdown> breakdown;

  bool complete() const noexcept { return !breakdown.has_value(); }
  const CovMatrix& at(int k) const { return sigmas[static_cast<std::size_t>(k)]; }
  const CovMatrix& terminal() const { return sigmas.back(); }
};

struct RiccatiOptions {
  double psd_tol = 1e-10;            ///< relative to trace
  double divergence_factor = 1e12;   ///< times (sigma_v^2 + sigma_m^2 + sigma_c^2 + 1)
};

/// Entrywise right-hand side of the Riccati flow for the six independent
/// entries, with R = p.observation_variance().
CovMatrix riccati_rhs(const CovMatrix& sigma, double beta_t, const ModelParams& p);

/// One RK4 step of length dt with beta given at the start, middle and end.
CovMatrix riccati_rk4_step(const CovMatrix& sigma, double beta0, double beta_mid, double beta1,
                           double dt, const ModelParams& p);

/// Entry magnitude above which a path is declared divergent.
double divergence_threshold(const ModelParams& p, const RiccatiOptions& opt = {});

/// Classifies a single covariance; nullopt when it is finite, bounded and PSD.
std::optional<BreakdownMode> classify(const CovMatrix& sigma, double min_eig, double threshold,
                                      double psd_tol);

/// Integrates over beta's grid starting at sigma0. Breakdowns truncate the
/// path and are reported in the result rather than thrown; invalid inputs
/// throw ModelError.
CovPath integrate_riccati(const IntensityPath& beta, const CovMatrix& sigma0, const ModelParams& p,
                          const RiccatiOptions& opt = {});

/// Columns: t, Sigma_vv, Sigma_vm, Sigma_vc, Sigma_mm, Sigma_mc, Sigma_cc, psd_min_eig.
void write_cov_path_csv(std::ostream& os, const CovPath& path);

struct BlowupRecord {
  double H = 0.0;
  bool completed = false;
  std::optional<Breakdown> breakdown;
};

struct BlowupScanResult {
  bool found = false;          ///< a global-solution -> breakdown flip was bracketed
  bool breaks_at_start = false;  ///< the smallest H already fails
  double H_lo = 0.0;
  double H_hi = 0.0;
  double H_star = 0.0;
  std::vector<BlowupRecord> records;     ///< one per H_grid entry, ascending
  std::vector<BlowupRecord> refinement;  ///< bisection evaluations in order
  std::vector<double> monotonicity_violations;  ///< H values that complete after a failure

  bool monotone() const noexcept { return monotonicity_violations.empty(); }
};

struct BlowupScanOptions {
  double rel_width = 1e-3;
  /// Direction of (gamma_F, gamma_C); normalized internally. Defaults to the
  /// direction of p's exposures, or (1, 1)/sqrt(2) when both are zero.
  std::optional<std::pair<double, double>> direction;
  /// When set, beta is recomputed for each H (e.g. by re-solving the
  /// equilibrium); otherwise the given beta stays frozen.
  std::function<IntensityPath(const ModelParams&)> resolve_beta;
  int threads = 1;
  RiccatiOptions riccati;
};

/// Exposures (gamma_F, gamma_C) on the scan ray with gamma_F^2 + gamma_C^2 = H.
ModelParams params_at_H(const ModelParams& p, double H, std::pair<double, double> unit_direction);

BlowupScanResult scan_blowup(const ModelParams& p, const IntensityPath& beta,
                             const CovMatrix& sigma0, std::span<const double> H_grid,
                             const BlowupScanOptions& opt = {});

}  // namespace kyle

#endif  // KYLE_RICCATI_HPP
