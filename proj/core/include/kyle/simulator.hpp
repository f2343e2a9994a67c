#ifndef KYLE_SIMULATOR_HPP
#define KYLE_SIMULATOR_HPP

// Euler-Maruyama simulation of the market with the Kalman-Bucy price. The
// market maker's covariance path is deterministic, so it is integrated once
// per beta and shared by all paths.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "kyle/intensity.hpp"
#include "kyle/model.hpp"
#include "kyle/riccati.hpp"

namespace kyle {

enum class RngChannel : std::uint64_t { W = 1, Bm = 2, Bc = 3, eps = 4, v = 5 };

/// Counter-based SplitMix64 stream; satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t state) : state_(state) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

 private:
  std::uint64_t state_;
};

std::uint64_t mix64(std::uint64_t x);

/// Seed of path i under base_seed.
std::uint64_t path_seed(std::uint64_t base_seed, std::uint64_t path_index);

/// Independent stream for one noise channel of one path.
SplitMix64 channel_stream(std::uint64_t seed, RngChannel channel);

struct PathRecord {
  std::uint64_t seed = 0;
  TimeGrid grid;
  double v = 0.0;
  std::vector<double> m, c, eps_state, Y, P, theta, wealth_increment;
  double X_T = 0.0;
  bool filter_diverged = false;  ///< covariance path unavailable before T; path cut short
  int last_node = 0;             ///< last simulated node
};

/// Prepared filter inputs shared by all paths.
class MarketSimulator {
 public:
  MarketSimulator(const IntensityPath& beta, const ModelParams& p, const CovMatrix& sigma0);
  /// Uses a covariance path computed elsewhere (e.g. by the equilibrium
  /// solver) instead of integrating the Riccati flow under beta.
  MarketSimulator(const IntensityPath& beta, const ModelParams& p, const CovMatrix& sigma0,
                  CovPath cov);

  PathRecord simulate(std::uint64_t seed) const;

  const CovPath& covariance() const noexcept { return cov_; }
  const IntensityPath& beta() const noexcept { return beta_; }
  const ModelParams& params() const noexcept { return p_; }

 private:
  IntensityPath beta_;
  ModelParams p_;
  CovMatrix sigma0_;
  Mat3 chol0_;
  CovPath cov_;
  std::vector<Vec3> gains_;

  void init_gains();
};

/// Single path with the initial state drawn from N(0, sigma0).
PathRecord simulate_path(std::uint64_t seed, const IntensityPath& beta, const ModelParams& p,
                         const CovMatrix& sigma0);
PathRecord simulate_path(std::uint64_t seed, const IntensityPath& beta, const ModelParams& p);

/// Theta_N (v - P_N) + sum_k Theta_{k+1} (P_{k+1} - P_k), Theta the cumulative position.
double terminal_wealth_by_parts(const PathRecord& rec);

struct Checkpoint {
  int node = 0;
  double t = 0.0;
  double mean_vP = 0.0;
  double se_vP = 0.0;
};

struct McSummary {
  int n_paths = 0;
  std::uint64_t base_seed = 0;
  double mean_XT = 0.0;
  double se_XT = 0.0;
  double analytic_J = std::numeric_limits<double>::quiet_NaN();
  std::vector<Checkpoint> mean_vP_profile;
  double martingale_stat = 0.0;  ///< max |z| of lag-1 price-increment correlation over checkpoints
  double theta_pred_coef = 0.0;  ///< regression of theta_k dt on dY_{k-1}
  double theta_pred_se = 0.0;    ///< clustered by path
  int diverged_paths = 0;
};

struct McOptions {
  int checkpoints = 10;  ///< evenly spaced nodes strictly inside (0, T)
  int threads = 1;
};

/// Aggregation is sequential over path index, so the summary does not depend
/// on the thread count.
McSummary monte_carlo(int n_paths, std::uint64_t base_seed, const IntensityPath& beta,
                      const ModelParams& p, const CovMatrix& sigma0, const McOptions& opt = {});
McSummary monte_carlo(int n_paths, std::uint64_t base_seed, const MarketSimulator& sim,
                      const McOptions& opt = {});

std::string mc_summary_json(const McSummary& s);

/// Columns: t, v, m, c, eps_state, Y, P, theta, wealth_increment.
void write_path_csv(std::ostream& os, const PathRecord& rec);

}  // namespace kyle

#endif  // KYLE_SIMULATOR_HPP
