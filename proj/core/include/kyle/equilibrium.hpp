#ifndef KYLE_EQUILIBRIUM_HPP
#define KYLE_EQUILIBRIUM_HPP

/**
 * @file equilibrium.hpp
 * @brief Insider equilibrium: the forward-backward Pontryagin system, the
 * impact fixed-point map and its Lipschitz diagnostics.
 *
 * The insider maximizes J(beta) = int_0^T beta_t Sigma_vv(t) dt subject to the
 * Riccati flow and Sigma_vv(T) = 0. With Hamiltonian
 *
 *   H = beta Sigma_vv + <Lambda, dSigma/dt>,
 *
 * the costate runs backward from Lambda_T = p e1 e1' and beta_t maximizes H
 * pointwise. The terminal multiplier p is found by shooting on Sigma_vv(T).
 */

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kyle/filter.hpp"
#include "kyle/intensity.hpp"
#include "kyle/model.hpp"
#include "kyle/riccati.hpp"

namespace kyle {

/// Raised when the equilibrium machinery cannot produce a result, e.g. the
/// Riccati flow broke down mid-iteration or the impact hit its floor.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdjointPath {
  TimeGrid grid;
  std::vector<Mat3> matrices;  ///< Lambda_t at each node
  double p_multiplier = 0.0;   ///< Lambda_T = p e1 e1'
};

struct EquilibriumResiduals {
  double terminal_gap = 0.0;  ///< Sigma_vv(T)
  double sweep_gap = 0.0;     ///< relative L2 change of beta over the last sweep
};

struct EquilibriumSolution {
  IntensityPath beta_star;
  CovPath cov_path;
  AdjointPath adjoint;
  std::vector<double> lambda_path;
  double profit_J = 0.0;
  EquilibriumResiduals residuals;
  int iterations = 0;           ///< forward-backward sweeps, all shooting rounds
  int shooting_iterations = 0;  ///< multiplier evaluations
  bool converged = false;
};

struct SolverOptions {
  double tol = 1e-5;
  int max_iters = 200;   ///< sweeps per multiplier value
  double damping = 0.5;  ///< costate relaxation weight, halved when the gap grows
  double beta_max = 1e6;
  int max_shooting = 100;
  int truncation = 10;   ///< nodes dropped before T when measuring beta gaps
  ImpactDefinition impact = ImpactDefinition::filter_implied;
  RiccatiOptions riccati;
};

/// Hamiltonian restricted to its beta-dependent part plus beta Sigma_vv.
double hamiltonian(const CovMatrix& sigma, const Mat3& adjoint, double beta, const ModelParams& p);

/// dH/dbeta = Sigma_vv + <Lambda, d(dSigma/dt)/dbeta>.
double hamiltonian_beta_derivative(const CovMatrix& sigma, const Mat3& adjoint, double beta,
                                   const ModelParams& p);

/// Maximizer of H over beta in [0, beta_max], found by safeguarded Newton on
/// dH/dbeta.
double optimal_intensity(const CovMatrix& sigma, const Mat3& adjoint, const ModelParams& p,
                         double beta_max = 1e6);

/// Costate derivative dLambda/dt = -dH/dSigma.
Mat3 adjoint_rhs(const CovMatrix& sigma, const Mat3& adjoint, double beta, const ModelParams& p);

/// Trapezoidal J over all nodes. When tail_nodes > 0 the last tail_nodes
/// nodes are excluded and the interval they span is credited at the flow
/// beta Sigma_vv of the last kept node (exact for the h = 0 solution, whose
/// beta Sigma_vv is constant).
double expected_profit(const IntensityPath& beta, const CovPath& cov, int tail_nodes = 0);

EquilibriumSolution solve_pontryagin(const ModelParams& p, const CovMatrix& sigma0,
                                     const IntensityPath& init_beta, const SolverOptions& opt = {});

struct FixedPointOptions {
  ImpactDefinition impact = ImpactDefinition::beta_sigma_vv;
  double floor = 1e-10;
  RiccatiOptions riccati;
};

/// F_h(beta)_t = 1 / (2 lambda_t(beta, h)) at every node of beta's grid,
/// with Sigma from the Riccati flow under beta.
IntensityPath fixed_point_map(const IntensityPath& beta, const ModelParams& p,
                              const CovMatrix& sigma0, const FixedPointOptions& opt = {});

/// Diagnostic variant with Sigma_vv frozen at a constant: F(beta) = 1 / (2 Sigma_vv beta).
IntensityPath fixed_point_map_frozen(const IntensityPath& beta, double sigma_vv,
                                     double floor = 1e-10);

struct LipschitzOptions {
  double eps = 1e-5;
  std::uint64_t seed = 0x6b796c65ULL;
  /// When set, uses fixed_point_map_frozen with this Sigma_vv.
  std::optional<double> frozen_sigma_vv;
  FixedPointOptions map;
};

/// max over n_probes random unit directions d of ||F(beta + eps d) - F(beta)|| / eps;
/// a lower bound on the Lipschitz constant of F around beta.
double estimate_lipschitz(const IntensityPath& beta, const ModelParams& p, const CovMatrix& sigma0,
                          int n_probes, const LipschitzOptions& opt = {});

struct ContractionProbe {
  std::vector<double> h_values;  ///< ||h|| along the ray
  std::vector<double> L_estimates;
  std::optional<double> crossing;  ///< first ||h|| with L > 1
};

/// L(h) along the ray s * feedback_of(p_base) for each scale, at a fixed beta.
ContractionProbe probe_contraction(const ModelParams& p_base, const std::vector<double>& scales,
                                   const IntensityPath& beta, const CovMatrix& sigma0, int n_probes,
                                   const LipschitzOptions& opt = {}, int threads = 1);

struct ContinuityRow {
  double scale = 0.0;
  double h_norm = 0.0;
  double deviation = 0.0;  ///< ||beta*(s h) - beta^(0)||_2 on the truncated grid
  bool converged = false;
  std::string error;       ///< empty unless the solve failed
};

struct ContinuityReport {
  std::vector<ContinuityRow> rows;
  std::vector<double> ratios;  ///< deviation[i+1] / deviation[i] over successful rows
  bool decreasing = false;
};

/// Solves at h = s * feedback_of(p_base) for each scale (descending) and
/// compares with the h = 0 solution. Solve failures are recorded per row.
ContinuityReport continuity_check(const ModelParams& p_base, const CovMatrix& sigma0,
                                  const TimeGrid& grid, const std::vector<double>& scales,
                                  const SolverOptions& opt = {}, int threads = 1);

/// Columns: t, beta_star, Sigma_vv, lambda.
void write_equilibrium_csv(std::ostream& os, const EquilibriumSolution& sol);

}  // namespace kyle

#endif  // KYLE_EQUILIBRIUM_HPP
