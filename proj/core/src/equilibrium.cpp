#include "kyle/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "kyle/csv.hpp"
#include "kyle/parallel.hpp"

namespace kyle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxHalvings = 12;
constexpr double kStiffStep = 0.5;

Vec3 exposure(const ModelParams& p) { return {0.0, p.gamma_F, p.gamma_C}; }

Mat3 terminal_costate(double p_mult) {
  Mat3 m = Mat3::Zero();
  m(0, 0) = p_mult;
  return m;
}

// dH/dbeta = svv - 2 (a beta + b) / R with a = s' L s, b = s' L Sigma g,
// s = Sigma e1 and g the exposure vector.
struct FocTerms {
  double svv;
  double a;
  double b;
};

FocTerms foc_terms(const CovMatrix& sigma, const Mat3& lam, const ModelParams& p) {
  const Mat3 S = sigma.matrix();
  const Vec3 s = S.col(0);
  const Vec3 sg = S * exposure(p);
  const Vec3 ls = lam * s;
  return {sigma.vv(), s.dot(ls), ls.dot(sg)};
}

// Safeguarded Newton for a decreasing f on [lo, hi] with f(lo) > 0 > f(hi).
template <class F, class DF>
double safeguarded_newton(F&& f, DF&& df, double lo, double hi) {
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double fx = f(x);
    if (fx == 0.0) return x;
    (fx > 0.0 ? lo : hi) = x;
    const double d = df(x);
    double next = (d != 0.0 && std::isfinite(d)) ? x - fx / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x))) return next;
    x = next;
  }
  return x;
}

// Cubic Hermite interpolant on [0, dt] at fraction th.
template <class Y>
Y hermite(const Y& y0, const Y& y1, const Y& d0, const Y& d1, double dt, double th) {
  const double t2 = th * th, t3 = t2 * th;
  return y0 * (2 * t3 - 3 * t2 + 1) + d0 * (dt * (t3 - 2 * t2 + th)) + y1 * (3 * t2 - 2 * t3) +
         d1 * (dt * (t3 - t2));
}

CovMatrix hermite_mid(const CovMatrix& y0, const CovMatrix& y1, const CovMatrix& d0,
                      const CovMatrix& d1, double dt) {
  return (y0 + y1) * 0.5 + (d0 + d1 * -1.0) * (dt / 8.0);
}

Mat3 hermite_mid(const Mat3& y0, const Mat3& y1, const Mat3& d0, const Mat3& d1, double dt) {
  return 0.5 * (y0 + y1) + (dt / 8.0) * (d0 - d1);
}

// Forward state of one sweep.
struct StateSweep {
  std::vector<CovMatrix> sig;
  std::vector<CovMatrix> sig_dot;
  std::vector<double> beta;
  std::vector<double> beta_mid;
  std::optional<Breakdown> breakdown;
};

struct CostateSweep {
  std::vector<Mat3> lam;
  std::vector<Mat3> lam_dot;
};

class PontryaginSweeper {
 public:
  PontryaginSweeper(const ModelParams& p, const CovMatrix& sigma0, const TimeGrid& grid,
                    const SolverOptions& opt)
      : p_(p), sigma0_(sigma0), grid_(grid), opt_(opt),
        threshold_(divergence_threshold(p, opt.riccati)) {}

  double beta_at(const CovMatrix& s, const Mat3& lam) const {
    return optimal_intensity(s, lam, p_, opt_.beta_max);
  }

  // Fastest decay rate of the filter error dynamics, c' Sigma c / R plus
  // the mean reversion. Steps are capped at kStiffStep / rate because beta
  // grows like 1 / (T - t) and fixed-step RK4 goes unstable near T.
  double stiffness(const CovMatrix& s, double beta) const {
    const Vec3 c(beta, p_.gamma_F, p_.gamma_C);
    return std::abs(c.dot(s.matrix() * c)) / p_.observation_variance() +
           2.0 * std::max(p_.alpha_m, p_.alpha_c);
  }

  // Sigma over [t_k, t_k+1] with Lambda from its cubic Hermite interpolant.
  // A stage with Sigma_vv < 0 has stepped past the terminal zero and the
  // step is halved; at the smallest step v counts as revealed and its row of
  // Sigma is set to zero, which the flow then preserves.
  bool forward_interval(CovMatrix& s, const CostateSweep& co, std::size_t k) const {
    const double dt = grid_.dt();
    const double h_min = std::ldexp(dt, -kMaxHalvings);
    const auto lam = [&](double t) {
      return hermite(co.lam[k], co.lam[k + 1], co.lam_dot[k], co.lam_dot[k + 1], dt, t / dt);
    };
    const auto f = [&](const CovMatrix& x, const Mat3& l, bool& ok) {
      if (!ok || !x.finite() || x.vv() < 0.0) {
        ok = false;
        return x;
      }
      return riccati_rhs(x, beta_at(x, l), p_);
    };

    double t = 0.0, h_cap = dt;
    while (dt - t > 1e-12 * dt) {
      const Mat3 l0 = lam(t);
      double h = std::min(h_cap, kStiffStep / stiffness(s, beta_at(s, l0)));
      h = std::min(std::max(h, h_min), dt - t);
      const Mat3 lm = lam(t + 0.5 * h);
      const Mat3 l1 = lam(t + h);
      bool ok = true;
      const CovMatrix k1 = f(s, l0, ok);
      const CovMatrix k2 = f(s + k1 * (0.5 * h), lm, ok);
      const CovMatrix k3 = f(s + k2 * (0.5 * h), lm, ok);
      const CovMatrix k4 = f(s + k3 * h, l1, ok);
      CovMatrix next = s;
      if (ok) next = s + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
      if (!ok || !next.finite() || next.vv() < 0.0) {
        if (h > h_min) {
          h_cap = 0.5 * h;
          continue;
        }
        if (!s.finite() || s.vv() < 0.0) return false;
        next = CovMatrix(0.0, 0.0, 0.0, s.mm(), s.mc(), s.cc());
      }
      s = next;
      t += h;
      h_cap = std::min(dt, 2.0 * h_cap);
    }
    return true;
  }

  // Lambda from t_k+1 back to t_k with Sigma from its cubic Hermite interpolant.
  Mat3 backward_interval(const Mat3& lam_end, const StateSweep& st, std::size_t k) const {
    const double dt = grid_.dt();
    const double h_min = std::ldexp(dt, -kMaxHalvings);
    const auto sig = [&](double t) {
      return hermite(st.sig[k], st.sig[k + 1], st.sig_dot[k], st.sig_dot[k + 1], dt, t / dt);
    };
    const auto f = [&](const CovMatrix& x, const Mat3& l) {
      return adjoint_rhs(x, l, beta_at(x, l), p_);
    };
    Mat3 L = lam_end;
    double t = dt;
    while (t > 1e-12 * dt) {
      const CovMatrix s1 = sig(t);
      double h = kStiffStep / stiffness(s1, beta_at(s1, L));
      h = std::min(std::max(h, h_min), t);
      const CovMatrix sm = sig(t - 0.5 * h);
      const CovMatrix s0 = sig(t - h);
      const Mat3 k1 = f(s1, L);
      const Mat3 k2 = f(sm, L - 0.5 * h * k1);
      const Mat3 k3 = f(sm, L - 0.5 * h * k2);
      const Mat3 k4 = f(s0, L - h * k3);
      const Mat3 next = L - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      L = 0.5 * (next + next.transpose());
      t -= h;
    }
    return L;
  }

  // Riccati flow with beta chosen by the first-order condition at each stage.
  StateSweep forward(const CostateSweep& co) const {
    const int n = grid_.steps();
    const double dt = grid_.dt();
    StateSweep st;
    st.sig.reserve(static_cast<std::size_t>(n + 1));
    st.sig.push_back(sigma0_);
    st.beta.push_back(beta_at(sigma0_, co.lam[0]));
    st.sig_dot.push_back(riccati_rhs(sigma0_, st.beta[0], p_));

    for (int k = 0; k < n; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      const Mat3& l1 = co.lam[ku + 1];
      CovMatrix next = st.sig[ku];
      const bool ok = forward_interval(next, co, ku);
      const double min_eig = (ok && next.finite()) ? next.min_eigenvalue() : NAN;
      if (!ok) {
        st.breakdown = Breakdown{grid_.time(k + 1), k + 1, BreakdownMode::divergence};
        return st;
      }
      if (auto mode = classify(next, min_eig, threshold_, opt_.riccati.psd_tol)) {
        st.breakdown = Breakdown{grid_.time(k + 1), k + 1, *mode};
        return st;
      }
      st.sig.push_back(next);
      st.beta.push_back(beta_at(next, l1));
      st.sig_dot.push_back(riccati_rhs(next, st.beta.back(), p_));
    }

    st.beta_mid.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      const CovMatrix sm = hermite_mid(st.sig[ku], st.sig[ku + 1], st.sig_dot[ku], st.sig_dot[ku + 1], dt);
      const Mat3 lm = hermite_mid(co.lam[ku], co.lam[ku + 1], co.lam_dot[ku], co.lam_dot[ku + 1], dt);
      st.beta_mid[ku] = (sm.finite() && sm.vv() > 0.0) ? beta_at(sm, lm)
                                                        : 0.5 * (st.beta[ku] + st.beta[ku + 1]);
    }
    return st;
  }

  // Costate backward from Lambda_T = p e1 e1', with beta re-optimized at each stage.
  CostateSweep backward(const StateSweep& st, double p_mult) const {
    const int n = grid_.steps();
    CostateSweep co;
    co.lam.assign(static_cast<std::size_t>(n + 1), Mat3::Zero());
    co.lam_dot.assign(static_cast<std::size_t>(n + 1), Mat3::Zero());
    co.lam[static_cast<std::size_t>(n)] = terminal_costate(p_mult);
    const auto f = [&](const CovMatrix& s, const Mat3& lam) {
      return adjoint_rhs(s, lam, beta_at(s, lam), p_);
    };
    for (int k = n - 1; k >= 0; --k) {
      const auto ku = static_cast<std::size_t>(k);
      co.lam[ku] = backward_interval(co.lam[ku + 1], st, ku);
    }
    for (int k = 0; k <= n; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      co.lam_dot[ku] = f(st.sig[ku], co.lam[ku]);
    }
    return co;
  }

  double relative_gap(const std::vector<double>& a, const std::vector<double>& b) const {
    const int last = truncated_last_node(grid_, opt_.truncation);
    double num = 0.0, den = 0.0;
    for (int k = 0; k <= last; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      const double w = (k == 0 || k == last) ? 0.5 : 1.0;
      num += w * (a[ku] - b[ku]) * (a[ku] - b[ku]);
      den += w * a[ku] * a[ku];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  }

  struct Shot {
    double shift = 0.0;
    StateSweep state;
  };

  // Finds the uniform shift d of Lambda_11 for which the closed-loop forward
  // sweep ends at Sigma_vv(T) = target. Larger d lowers beta everywhere, so
  // Sigma_vv(T) increases with d; a sweep that breaks down counts as below
  // target. Bracketing by geometric expansion, then Illinois regula falsi.
  std::optional<Shot> shoot(const CostateSweep& co, double p_mult, double target,
                            int& evals) const {
    CostateSweep trial = co;
    const auto run = [&](double d, double& g) {
      ++evals;
      for (std::size_t k = 0; k < co.lam.size(); ++k) {
        trial.lam[k] = co.lam[k];
        trial.lam[k](0, 0) += d;
      }
      StateSweep st = forward(trial);
      g = st.breakdown ? -kInf : st.sig.back().vv() - target;
      return st;
    };
    const double accept = 1e-6 * target;

    double g0 = 0.0;
    StateSweep s0 = run(0.0, g0);
    if (std::abs(g0) <= accept) return Shot{0.0, std::move(s0)};

    double lo = 0.0, hi = 0.0, glo = g0, ghi = g0;
    std::optional<Shot> upper;
    if (g0 > 0.0) upper = Shot{0.0, std::move(s0)};
    double step = 1e-3 * std::abs(p_mult);
    for (int i = 0;; ++i) {
      if (i == 40) return std::nullopt;
      const double d = (g0 < 0.0 ? 1.0 : -1.0) * step;
      double g = 0.0;
      StateSweep st = run(d, g);
      if (g0 < 0.0 && g >= 0.0) {
        hi = d;
        ghi = g;
        upper = Shot{d, std::move(st)};
        break;
      }
      if (g0 > 0.0 && g < 0.0) {
        lo = d;
        glo = g;
        break;
      }
      if (g0 < 0.0) {
        lo = d;
        glo = g;
      } else {
        hi = d;
        ghi = g;
        upper = Shot{d, std::move(st)};
      }
      step *= 4.0;
    }
    if (ghi <= accept) return upper;

    int side = 0;
    for (int i = 0; i < opt_.max_shooting; ++i) {
      if (hi - lo <= 1e-15 * std::max(std::abs(p_mult), 1.0)) break;
      double d = 0.5 * (lo + hi);
      if (std::isfinite(glo) && std::isfinite(ghi) && ghi > glo) {
        const double rf = (lo * ghi - hi * glo) / (ghi - glo);
        if (rf > lo && rf < hi) d = rf;
      }
      double g = 0.0;
      StateSweep st = run(d, g);
      if (g >= 0.0) {
        hi = d;
        ghi = g;
        upper = Shot{d, std::move(st)};
        if (g <= accept) break;
        if (side == 1 && std::isfinite(glo)) glo *= 0.5;
        side = 1;
      } else {
        if (g >= -accept) return Shot{d, std::move(st)};
        lo = d;
        glo = g;
        if (side == -1) ghi *= 0.5;
        side = -1;
      }
    }
    return upper;
  }

  std::optional<StateSweep> open_loop(const IntensityPath& beta) const {
    const CovPath path = integrate_riccati(beta, sigma0_, p_, opt_.riccati);
    if (!path.complete()) return std::nullopt;
    StateSweep st;
    st.sig = path.sigmas;
    for (int k = 0; k <= grid_.steps(); ++k) {
      st.beta.push_back(beta.at(k));
      st.sig_dot.push_back(riccati_rhs(st.sig[static_cast<std::size_t>(k)], beta.at(k), p_));
    }
    st.beta_mid.assign(beta.mids().begin(), beta.mids().end());
    return st;
  }

 private:
  ModelParams p_;
  CovMatrix sigma0_;
  TimeGrid grid_;
  SolverOptions opt_;
  double threshold_;
};

}  // namespace

double hamiltonian(const CovMatrix& sigma, const Mat3& adjoint, double beta, const ModelParams& p) {
  const Mat3 d = riccati_rhs(sigma, beta, p).matrix();
  return beta * sigma.vv() + (adjoint.cwiseProduct(d)).sum();
}

double hamiltonian_beta_derivative(const CovMatrix& sigma, const Mat3& adjoint, double beta,
                                   const ModelParams& p) {
  const FocTerms t = foc_terms(sigma, adjoint, p);
  return t.svv - 2.0 * (t.a * beta + t.b) / p.observation_variance();
}

double optimal_intensity(const CovMatrix& sigma, const Mat3& adjoint, const ModelParams& p,
                         double beta_max) {
  const FocTerms t = foc_terms(sigma, adjoint, p);
  const double R = p.observation_variance();
  const auto f = [&](double b) { return t.svv - 2.0 * (t.a * b + t.b) / R; };
  const auto df = [&](double) { return -2.0 * t.a / R; };

  if (t.a > 0.0) {
    if (f(0.0) <= 0.0) return 0.0;
    if (f(beta_max) >= 0.0) return beta_max;
    return safeguarded_newton(f, df, 0.0, beta_max);
  }
  // H is convex or linear in beta: the maximum sits on the boundary.
  return hamiltonian(sigma, adjoint, beta_max, p) > hamiltonian(sigma, adjoint, 0.0, p) ? beta_max
                                                                                         : 0.0;
}

Mat3 adjoint_rhs(const CovMatrix& sigma, const Mat3& adjoint, double beta, const ModelParams& p) {
  const double R = p.observation_variance();
  const Mat3 S = sigma.matrix();
  const Vec3 c(beta, p.gamma_F, p.gamma_C);
  const Vec3 w = adjoint * (S * c);
  const Mat3 A = drift_matrix(p);
  Mat3 grad = A * adjoint + adjoint * A - (w * c.transpose() + c * w.transpose()) / R;
  grad(0, 0) += beta;
  return -grad;
}

double expected_profit(const IntensityPath& beta, const CovPath& cov, int tail_nodes) {
  if (!(beta.grid() == cov.grid)) throw ModelError("expected_profit: grid mismatch");
  const int n = beta.grid().steps();
  if (static_cast<int>(cov.sigmas.size()) != n + 1)
    throw ModelError("expected_profit: covariance path is incomplete");
  if (tail_nodes < 0 || tail_nodes > n) throw ModelError("expected_profit: bad tail length");
  const int last = n - tail_nodes;
  const double dt = beta.grid().dt();
  double J = 0.0;
  for (int k = 0; k < last; ++k) {
    J += 0.5 * dt * (beta.at(k) * cov.at(k).vv() + beta.at(k + 1) * cov.at(k + 1).vv());
  }
  if (tail_nodes > 0) {
    J += (beta.grid().horizon() - beta.grid().time(last)) * beta.at(last) * cov.at(last).vv();
  }
  return J;
}

EquilibriumSolution solve_pontryagin(const ModelParams& p, const CovMatrix& sigma0,
                                     const IntensityPath& init_beta, const SolverOptions& opt) {
  validate_params(p);
  if (!(opt.tol > 0.0)) throw ModelError("tolerance must be positive");
  if (opt.max_iters < 1) throw ModelError("max_iters must be positive");
  if (!(opt.damping > 0.0 && opt.damping <= 1.0)) throw ModelError("damping must lie in (0, 1]");
  if (!(sigma0.vv() > 0.0)) throw ModelError("initial Sigma_vv must be positive");

  const TimeGrid grid = init_beta.grid();
  const PontryaginSweeper sweeper(p, sigma0, grid, opt);

  // Infinite terminal values of a closed-form guess are capped.
  std::vector<double> nodes(init_beta.nodes().begin(), init_beta.nodes().end());
  std::vector<double> mids(init_beta.mids().begin(), init_beta.mids().end());
  for (double& b : nodes) b = std::min(b, opt.beta_max);
  for (double& b : mids) b = std::min(b, opt.beta_max);
  // A guess that breaks the flow is dropped in favour of the h = 0 costate.
  std::optional<StateSweep> seed = sweeper.open_loop(IntensityPath(grid, nodes, mids));

  const double target = 0.5 * opt.tol;
  // Classical multiplier sqrt(R T / (4 Sigma_vv(0))) as the starting point.
  double p_mult = std::sqrt(p.observation_variance() * grid.horizon() / (4.0 * sigma0.vv()));

  CostateSweep co;
  std::vector<double> prev_beta;
  if (seed) {
    co = sweeper.backward(*seed, p_mult);
    prev_beta = seed->beta;
  } else {
    co.lam.assign(static_cast<std::size_t>(grid.nodes()), terminal_costate(p_mult));
    co.lam_dot.assign(static_cast<std::size_t>(grid.nodes()), Mat3::Zero());
    prev_beta.assign(static_cast<std::size_t>(grid.nodes()), 0.0);
  }

  int sweeps = 0, evaluations = 0;
  double omega = opt.damping, prev_gap = kInf, gap = kInf;
  bool converged = false;
  std::optional<StateSweep> current;
  for (int it = 0; it < opt.max_iters; ++it) {
    std::optional<PontryaginSweeper::Shot> shot = sweeper.shoot(co, p_mult, target, evaluations);
    ++sweeps;
    if (!shot) {
      if (current) break;
      throw SolverError("no terminal multiplier brings Sigma_vv(T) to the target");
    }
    p_mult += shot->shift;
    for (auto& L : co.lam) L(0, 0) += shot->shift;
    current = std::move(shot->state);

    gap = sweeper.relative_gap(current->beta, prev_beta);
    prev_beta = current->beta;
    if (gap < opt.tol) {
      converged = true;
      break;
    }
    const CostateSweep next = sweeper.backward(*current, p_mult);
    if (gap > prev_gap) omega = std::max(0.5 * omega, 1.0 / 64.0);
    prev_gap = gap;
    for (std::size_t k = 0; k < co.lam.size(); ++k) {
      co.lam[k] = (1.0 - omega) * co.lam[k] + omega * next.lam[k];
      co.lam_dot[k] = (1.0 - omega) * co.lam_dot[k] + omega * next.lam_dot[k];
    }
    p_mult = co.lam.back()(0, 0);
  }
  const StateSweep& st = *current;

  EquilibriumSolution sol;
  sol.beta_star = IntensityPath(grid, st.beta, st.beta_mid);
  sol.cov_path.grid = grid;
  sol.cov_path.sigmas = st.sig;
  for (const auto& s : st.sig) sol.cov_path.psd_min_eig.push_back(s.min_eigenvalue());
  sol.adjoint = AdjointPath{grid, co.lam, p_mult};
  const double R = p.observation_variance();
  for (int k = 0; k <= grid.steps(); ++k) {
    sol.lambda_path.push_back(price_impact(sol.cov_path.at(k), measurement_vec(st.beta[static_cast<std::size_t>(k)], p),
                                           R, opt.impact));
  }
  sol.profit_J = expected_profit(sol.beta_star, sol.cov_path);
  sol.residuals.terminal_gap = std::abs(st.sig.back().vv());
  sol.residuals.sweep_gap = gap;
  sol.iterations = sweeps;
  sol.shooting_iterations = evaluations;
  sol.converged = converged && sol.residuals.terminal_gap <= opt.tol &&
                  sol.residuals.sweep_gap < opt.tol;
  return sol;
}

IntensityPath fixed_point_map(const IntensityPath& beta, const ModelParams& p,
                              const CovMatrix& sigma0, const FixedPointOptions& opt) {
  const CovPath cov = integrate_riccati(beta, sigma0, p, opt.riccati);
  if (!cov.complete())
    throw SolverError("fixed_point_map: Riccati flow broke down at t = " +
                      format_double(cov.breakdown->time));
  const double R = p.observation_variance();
  std::vector<double> out(static_cast<std::size_t>(beta.grid().nodes()));
  for (int k = 0; k <= beta.grid().steps(); ++k) {
    const double lam = price_impact(cov.at(k), measurement_vec(beta.at(k), p), R, opt.impact);
    if (!(lam >= opt.floor) || !std::isfinite(lam))
      throw SolverError("fixed_point_map: degenerate price impact at t = " +
                        format_double(beta.grid().time(k)));
    out[static_cast<std::size_t>(k)] = 1.0 / (2.0 * lam);
  }
  return IntensityPath(beta.grid(), std::move(out));
}

IntensityPath fixed_point_map_frozen(const IntensityPath& beta, double sigma_vv, double floor) {
  const auto apply = [&](double b) {
    const double lam = sigma_vv * b;
    if (!(lam >= floor) || !std::isfinite(lam))
      throw SolverError("fixed_point_map_frozen: degenerate price impact");
    return 1.0 / (2.0 * lam);
  };
  std::vector<double> nodes, mids;
  for (double b : beta.nodes()) nodes.push_back(apply(b));
  for (double b : beta.mids()) mids.push_back(apply(b));
  return IntensityPath(beta.grid(), std::move(nodes), std::move(mids));
}

double estimate_lipschitz(const IntensityPath& beta, const ModelParams& p, const CovMatrix& sigma0,
                          int n_probes, const LipschitzOptions& opt) {
  if (n_probes < 1) throw ModelError("n_probes must be at least 1");
  if (!(opt.eps > 0.0)) throw ModelError("eps must be positive");

  const auto map = [&](const IntensityPath& b) {
    return opt.frozen_sigma_vv ? fixed_point_map_frozen(b, *opt.frozen_sigma_vv, opt.map.floor)
                               : fixed_point_map(b, p, sigma0, opt.map);
  };
  const IntensityPath base = map(beta);
  const TimeGrid& grid = beta.grid();
  const int n = grid.steps();

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;
  double best = 0.0;
  for (int probe = 0; probe < n_probes; ++probe) {
    std::vector<double> d(static_cast<std::size_t>(n + 1));
    for (double& x : d) x = normal(rng);
    double norm2 = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double w = (k == 0 || k == n) ? 0.5 : 1.0;
      norm2 += w * d[static_cast<std::size_t>(k)] * d[static_cast<std::size_t>(k)];
    }
    const double scale = opt.eps / std::sqrt(norm2 * grid.dt());

    std::vector<double> nodes(static_cast<std::size_t>(n + 1));
    std::vector<double> mids(static_cast<std::size_t>(n));
    for (int k = 0; k <= n; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      nodes[ku] = std::max(beta.at(k) + scale * d[ku], 0.0);
    }
    for (int k = 0; k < n; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      mids[ku] = std::max(beta.mid(k) + 0.5 * scale * (d[ku] + d[ku + 1]), 0.0);
    }
    const IntensityPath moved = map(IntensityPath(grid, std::move(nodes), std::move(mids)));
    best = std::max(best, l2_distance(moved, base, n) / opt.eps);
  }
  return best;
}

ContractionProbe probe_contraction(const ModelParams& p_base, const std::vector<double>& scales,
                                   const IntensityPath& beta, const CovMatrix& sigma0, int n_probes,
                                   const LipschitzOptions& opt, int threads) {
  const FeedbackVector h = feedback_of(p_base);
  ContractionProbe out;
  out.h_values.resize(scales.size());
  out.L_estimates.resize(scales.size());
  parallel_for(scales.size(), threads, [&](std::size_t i) {
    const FeedbackVector hs = h.scaled(scales[i]);
    out.h_values[i] = hs.norm();
    try {
      out.L_estimates[i] = estimate_lipschitz(beta, with_feedback(p_base, hs), sigma0, n_probes, opt);
    } catch (const SolverError&) {
      out.L_estimates[i] = kInf;
    }
  });
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (out.L_estimates[i] > 1.0) {
      out.crossing = out.h_values[i];
      break;
    }
  }
  return out;
}

ContinuityReport continuity_check(const ModelParams& p_base, const CovMatrix& sigma0,
                                  const TimeGrid& grid, const std::vector<double>& scales,
                                  const SolverOptions& opt, int threads) {
  const FeedbackVector h = feedback_of(p_base);
  const auto guess = [&](const ModelParams& q) { return classical_kyle_intensity(q, grid); };

  const ModelParams p0 = with_feedback(p_base, FeedbackVector{});
  const EquilibriumSolution base = solve_pontryagin(p0, sigma0, guess(p0), opt);
  const int last = truncated_last_node(grid, opt.truncation);

  ContinuityReport rep;
  rep.rows.resize(scales.size());
  parallel_for(scales.size(), threads, [&](std::size_t i) {
    ContinuityRow& row = rep.rows[i];
    row.scale = scales[i];
    const FeedbackVector hs = h.scaled(scales[i]);
    row.h_norm = hs.norm();
    try {
      const ModelParams q = with_feedback(p_base, hs);
      const EquilibriumSolution sol = solve_pontryagin(q, sigma0, guess(q), opt);
      row.converged = sol.converged;
      row.deviation = l2_distance(sol.beta_star, base.beta_star, last);
    } catch (const std::exception& ex) {
      row.error = ex.what();
      row.deviation = NAN;
    }
  });

  rep.decreasing = true;
  const ContinuityRow* prev = nullptr;
  for (const auto& row : rep.rows) {
    if (!row.error.empty()) continue;
    if (prev) {
      rep.ratios.push_back(prev->deviation > 0.0 ? row.deviation / prev->deviation : NAN);
      if (!(row.deviation < prev->deviation)) rep.decreasing = false;
    }
    prev = &row;
  }
  return rep;
}

void write_equilibrium_csv(std::ostream& os, const EquilibriumSolution& sol) {
  CsvWriter w(os);
  w.header({"t", "beta_star", "Sigma_vv", "lambda"});
  for (int k = 0; k < static_cast<int>(sol.cov_path.sigmas.size()); ++k) {
    w.row({sol.cov_path.grid.time(k), sol.beta_star.at(k), sol.cov_path.at(k).vv(),
           sol.lambda_path[static_cast<std::size_t>(k)]});
  }
}

}  // namespace kyle
