#include "kyle/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "json.hpp"
#include "kyle/csv.hpp"
#include "kyle/equilibrium.hpp"
#include "kyle/filter.hpp"
#include "kyle/parallel.hpp"

namespace kyle {

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

SplitMix64::result_type SplitMix64::operator()() {
  state_ += 0x9e3779b97f4a7c15ULL;
  return mix64(state_);
}

std::uint64_t path_seed(std::uint64_t base_seed, std::uint64_t path_index) {
  return mix64(mix64(base_seed) + 0x9e3779b97f4a7c15ULL * (path_index + 1));
}

SplitMix64 channel_stream(std::uint64_t seed, RngChannel channel) {
  return SplitMix64(mix64(seed ^ (0xd1b54a32d192ed03ULL * static_cast<std::uint64_t>(channel))));
}

MarketSimulator::MarketSimulator(const IntensityPath& beta, const ModelParams& p,
                                 const CovMatrix& sigma0)
    : beta_(beta), p_(validate_params(p)), sigma0_(sigma0) {
  if (!sigma0.is_psd()) throw ModelError("initial covariance must be positive semidefinite");
  Eigen::SelfAdjointEigenSolver<Mat3> es(sigma0.matrix());
  chol0_ = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

  cov_ = integrate_riccati(beta, sigma0, p_);
  init_gains();
}

MarketSimulator::MarketSimulator(const IntensityPath& beta, const ModelParams& p,
                                 const CovMatrix& sigma0, CovPath cov)
    : beta_(beta), p_(validate_params(p)), sigma0_(sigma0), cov_(std::move(cov)) {
  if (!sigma0.is_psd()) throw ModelError("initial covariance must be positive semidefinite");
  if (!(cov_.grid == beta.grid())) throw ModelError("covariance path and beta use different grids");
  Eigen::SelfAdjointEigenSolver<Mat3> es(sigma0.matrix());
  chol0_ = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  init_gains();
}

void MarketSimulator::init_gains() {
  const double R = p_.observation_variance();
  for (std::size_t k = 0; k < cov_.sigmas.size(); ++k) {
    const double b = beta_.at(static_cast<int>(k));
    gains_.push_back(std::isfinite(b) ? kalman_gain(cov_.sigmas[k], measurement_vec(b, p_), R)
                                      : Vec3::Constant(NAN));
  }
}

PathRecord MarketSimulator::simulate(std::uint64_t seed) const {
  const TimeGrid& grid = beta_.grid();
  const int n = grid.steps();
  const double dt = grid.dt();
  const double sdt = std::sqrt(dt);
  const bool eps_on = p_.fold_eps_into_R && p_.sigma_eps > 0.0;

  SplitMix64 rw = channel_stream(seed, RngChannel::W);
  SplitMix64 rm = channel_stream(seed, RngChannel::Bm);
  SplitMix64 rc = channel_stream(seed, RngChannel::Bc);
  SplitMix64 re = channel_stream(seed, RngChannel::eps);
  SplitMix64 rv = channel_stream(seed, RngChannel::v);
  std::normal_distribution<double> nw, nm, nc, ne, nv;

  PathRecord r;
  r.seed = seed;
  r.grid = grid;
  const auto nodes = static_cast<std::size_t>(grid.nodes());
  for (auto* vec : {&r.m, &r.c, &r.eps_state, &r.Y, &r.P, &r.theta, &r.wealth_increment})
    vec->assign(nodes, 0.0);

  const double z0 = nv(rv), z1 = nv(rv), z2 = nv(rv);
  const Vec3 x0 = chol0_ * Vec3(z0, z1, z2);
  r.v = x0(0);
  double m = x0(1), c = x0(2);
  r.m[0] = m;
  r.c[0] = c;

  StateVec xhat;
  double eps_state = 0.0, Y = 0.0, X = 0.0;
  int k = 0;
  for (; k < n; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    if (ku >= gains_.size() || !gains_[ku].allFinite()) {
      r.filter_diverged = true;
      break;
    }
    const double P = xhat.v;
    const double theta = beta_.at(k) * (r.v - P);
    r.theta[ku] = theta;
    r.wealth_increment[ku] = theta * (r.v - P) * dt;
    X += r.wealth_increment[ku];

    const double dW = sdt * nw(rw);
    const double dBm = sdt * nm(rm);
    const double dBc = sdt * nc(rc);
    const double dE = eps_on ? sdt * ne(re) : 0.0;
    const double dY = theta * dt + (p_.gamma_F * m + p_.gamma_C * c) * dt + p_.sigma_eps * dE +
                      p_.sigma_z * dW;

    const Vec3& K = gains_[ku];
    const double dP = K(0) * innovation(xhat, dY, p_, dt);
    m += -p_.alpha_m * m * dt + p_.kappa_m * dP + p_.sigma_m * dBm;
    c += -p_.alpha_c * c * dt - p_.kappa_c * dP + p_.sigma_c * dBc;
    xhat = filter_mean_step(xhat, K, dY, dP, p_, dt);

    eps_state += dE;
    Y += dY;
    r.m[ku + 1] = m;
    r.c[ku + 1] = c;
    r.eps_state[ku + 1] = eps_state;
    r.Y[ku + 1] = Y;
    r.P[ku + 1] = xhat.v;
  }
  r.last_node = k;
  r.X_T = X;
  return r;
}

PathRecord simulate_path(std::uint64_t seed, const IntensityPath& beta, const ModelParams& p,
                         const CovMatrix& sigma0) {
  return MarketSimulator(beta, p, sigma0).simulate(seed);
}

PathRecord simulate_path(std::uint64_t seed, const IntensityPath& beta, const ModelParams& p) {
  return simulate_path(seed, beta, p, initial_covariance(p));
}

double terminal_wealth_by_parts(const PathRecord& rec) {
  const double dt = rec.grid.dt();
  const auto n = static_cast<std::size_t>(rec.last_node);
  double Theta = 0.0, sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    Theta += rec.theta[k] * dt;
    sum += Theta * (rec.P[k + 1] - rec.P[k]);
  }
  return Theta * (rec.v - rec.P[n]) + sum;
}

namespace {

struct PathStats {
  double X_T = 0.0;
  bool diverged = false;
  std::vector<double> vP;        // v - P at each checkpoint
  std::vector<double> theta_dt;  // theta_k dt at each regression node
  std::vector<double> dY_lag;    // dY_{k-1}
  std::vector<double> dP0, dP1;  // consecutive price increments
};

double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

}  // namespace

McSummary monte_carlo(int n_paths, std::uint64_t base_seed, const IntensityPath& beta,
                      const ModelParams& p, const CovMatrix& sigma0, const McOptions& opt) {
  return monte_carlo(n_paths, base_seed, MarketSimulator(beta, p, sigma0), opt);
}

McSummary monte_carlo(int n_paths, std::uint64_t base_seed, const MarketSimulator& sim,
                      const McOptions& opt) {
  if (n_paths < 2) throw ModelError("n_paths must be at least 2");
  if (opt.checkpoints < 1) throw ModelError("checkpoints must be positive");
  const IntensityPath& beta = sim.beta();
  const TimeGrid& grid = beta.grid();
  const int n = grid.steps();
  if (n < 3) throw ModelError("monte_carlo needs at least 3 steps");
  const double dt = grid.dt();

  std::vector<int> cps;
  // Evenly spaced inside (0, T). At T itself beta^2 Sigma_vv dt is O(1) and the
  // lagged regression carries an Euler bias of about -(beta^2 Sigma_vv dt)^2.
  for (int i = 1; i <= opt.checkpoints; ++i)
    cps.push_back(static_cast<int>((static_cast<long long>(i) * n) / (opt.checkpoints + 1)));
  const auto inner = [&](int k) { return std::clamp(k, 1, n - 2); };

  std::vector<PathStats> stats(static_cast<std::size_t>(n_paths));
  parallel_for(stats.size(), opt.threads, [&](std::size_t i) {
    const PathRecord r = sim.simulate(path_seed(base_seed, i));
    PathStats& s = stats[i];
    s.X_T = r.X_T;
    s.diverged = r.filter_diverged;
    if (s.diverged) return;
    for (int k : cps) {
      const auto ku = static_cast<std::size_t>(k);
      s.vP.push_back(r.v - r.P[ku]);
      const auto j = static_cast<std::size_t>(inner(k));
      s.theta_dt.push_back(r.theta[j] * dt);
      s.dY_lag.push_back(r.Y[j] - r.Y[j - 1]);
      s.dP0.push_back(r.P[j + 1] - r.P[j]);
      s.dP1.push_back(r.P[j + 2] - r.P[j + 1]);
    }
  });

  McSummary out;
  out.n_paths = n_paths;
  out.base_seed = base_seed;

  std::vector<double> xt;
  for (const auto& s : stats) {
    xt.push_back(s.X_T);
    if (s.diverged) ++out.diverged_paths;
  }
  out.mean_XT = mean_of(xt);
  double var = 0.0;
  for (double x : xt) var += (x - out.mean_XT) * (x - out.mean_XT);
  out.se_XT = std::sqrt(var / static_cast<double>(xt.size() - 1) / static_cast<double>(xt.size()));

  if (sim.covariance().complete() && std::all_of(beta.nodes().begin(), beta.nodes().end(),
                                                 [](double b) { return std::isfinite(b); })) {
    out.analytic_J = expected_profit(beta, sim.covariance());
  }

  std::vector<const PathStats*> ok;
  for (const auto& s : stats)
    if (!s.diverged) ok.push_back(&s);
  const auto m = static_cast<double>(ok.size());

  for (std::size_t c = 0; c < cps.size(); ++c) {
    Checkpoint cp;
    cp.node = cps[c];
    cp.t = grid.time(cps[c]);
    double s1 = 0.0, s2 = 0.0;
    for (const auto* s : ok) s1 += s->vP[c];
    cp.mean_vP = s1 / m;
    for (const auto* s : ok) s2 += (s->vP[c] - cp.mean_vP) * (s->vP[c] - cp.mean_vP);
    cp.se_vP = std::sqrt(s2 / (m - 1.0) / m);
    out.mean_vP_profile.push_back(cp);

    double mx = 0.0, my = 0.0;
    for (const auto* s : ok) {
      mx += s->dP0[c];
      my += s->dP1[c];
    }
    mx /= m;
    my /= m;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (const auto* s : ok) {
      const double dx = s->dP0[c] - mx, dy = s->dP1[c] - my;
      sxy += dx * dy;
      sxx += dx * dx;
      syy += dy * dy;
    }
    if (sxx > 0.0 && syy > 0.0)
      out.martingale_stat = std::max(out.martingale_stat, std::abs(sxy / std::sqrt(sxx * syy)) * std::sqrt(m));
  }

  // Pooled no-intercept regression with path-clustered standard error.
  double sxx = 0.0, sxy = 0.0;
  for (const auto* s : ok) {
    for (std::size_t c = 0; c < cps.size(); ++c) {
      sxx += s->dY_lag[c] * s->dY_lag[c];
      sxy += s->dY_lag[c] * s->theta_dt[c];
    }
  }
  if (sxx > 0.0) {
    out.theta_pred_coef = sxy / sxx;
    double meat = 0.0;
    for (const auto* s : ok) {
      double score = 0.0;
      for (std::size_t c = 0; c < cps.size(); ++c)
        score += s->dY_lag[c] * (s->theta_dt[c] - out.theta_pred_coef * s->dY_lag[c]);
      meat += score * score;
    }
    out.theta_pred_se = std::sqrt(meat) / sxx;
  }
  return out;
}

std::string mc_summary_json(const McSummary& s) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["n_paths"] = s.n_paths;
  j["base_seed"] = s.base_seed;
  j["mean_XT"] = s.mean_XT;
  j["se_XT"] = s.se_XT;
  j["analytic_J"] = std::isfinite(s.analytic_J) ? ordered_json(s.analytic_J) : ordered_json(nullptr);
  ordered_json prof = ordered_json::array();
  for (const auto& c : s.mean_vP_profile)
    prof.push_back({{"node", c.node}, {"t", c.t}, {"mean_vP", c.mean_vP}, {"se_vP", c.se_vP}});
  j["mean_vP_profile"] = prof;
  j["martingale_stat"] = s.martingale_stat;
  j["theta_pred_coef"] = s.theta_pred_coef;
  j["theta_pred_se"] = s.theta_pred_se;
  j["diverged_paths"] = s.diverged_paths;
  return j.dump(2);
}

void write_path_csv(std::ostream& os, const PathRecord& r) {
  CsvWriter w(os);
  w.header({"t", "v", "m", "c", "eps_state", "Y", "P", "theta", "wealth_increment"});
  for (int k = 0; k <= r.last_node; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    w.row({r.grid.time(k), r.v, r.m[ku], r.c[ku], r.eps_state[ku], r.Y[ku], r.P[ku], r.theta[ku],
           r.wealth_increment[ku]});
  }
}

}  // namespace kyle
