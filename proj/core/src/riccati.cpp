#include "kyle/riccati.hpp"

#include <cmath>

#include "kyle/csv.hpp"
#include "kyle/parallel.hpp"

namespace kyle {

std::string_view to_string(BreakdownMode mode) noexcept {
  switch (mode) {
    case BreakdownMode::psd_loss:
      return "psd_loss";
    case BreakdownMode::divergence:
      return "divergence";
  }
  return "unknown";
}

CovMatrix riccati_rhs(const CovMatrix& s, double beta, const ModelParams& p) {
  if (!s.finite() || !std::isfinite(beta)) throw ModelError("riccati_rhs: non-finite input");
  const double inv_r = 1.0 / p.observation_variance();
  const double gf = p.gamma_F, gc = p.gamma_C;

  // k = Sigma C', the unnormalized Kalman gain.
  const double kv = beta * s.vv() + gf * s.vm() + gc * s.vc();
  const double km = beta * s.vm() + gf * s.mm() + gc * s.mc();
  const double kc = beta * s.vc() + gf * s.mc() + gc * s.cc();

  const double am = p.alpha_m, ac = p.alpha_c;
  return {
      -kv * kv * inv_r,
      -am * s.vm() - kv * km * inv_r,
      -ac * s.vc() - kv * kc * inv_r,
      -2.0 * am * s.mm() + p.sigma_m * p.sigma_m - km * km * inv_r,
      -(am + ac) * s.mc() - km * kc * inv_r,
      -2.0 * ac * s.cc() + p.sigma_c * p.sigma_c - kc * kc * inv_r,
  };
}

CovMatrix riccati_rk4_step(const CovMatrix& s, double beta0, double beta_mid, double beta1,
                           double dt, const ModelParams& p) {
  const CovMatrix k1 = riccati_rhs(s, beta0, p);
  const CovMatrix k2 = riccati_rhs(s + k1 * (0.5 * dt), beta_mid, p);
  const CovMatrix k3 = riccati_rhs(s + k2 * (0.5 * dt), beta_mid, p);
  const CovMatrix k4 = riccati_rhs(s + k3 * dt, beta1, p);
  return s + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
}

double divergence_threshold(const ModelParams& p, const RiccatiOptions& opt) {
  return opt.divergence_factor *
         (p.sigma_v * p.sigma_v + p.sigma_m * p.sigma_m + p.sigma_c * p.sigma_c + 1.0);
}

std::optional<BreakdownMode> classify(const CovMatrix& sigma, double min_eig, double threshold,
                                      double psd_tol) {
  if (!sigma.finite() || sigma.max_abs() > threshold) return BreakdownMode::divergence;
  if (!std::isfinite(min_eig)) return BreakdownMode::divergence;
  if (min_eig < -psd_tol * std::abs(sigma.trace())) return BreakdownMode::psd_loss;
  return std::nullopt;
}

CovPath integrate_riccati(const IntensityPath& beta, const CovMatrix& sigma0, const ModelParams& p,
                          const RiccatiOptions& opt) {
  if (!sigma0.finite()) throw ModelError("initial covariance must be finite");
  if (!sigma0.is_psd(opt.psd_tol)) throw ModelError("initial covariance must be positive semidefinite");

  const TimeGrid& grid = beta.grid();
  const double dt = grid.dt();
  const double threshold = divergence_threshold(p, opt);

  CovPath path;
  path.grid = grid;
  path.sigmas.reserve(static_cast<std::size_t>(grid.nodes()));
  path.psd_min_eig.reserve(static_cast<std::size_t>(grid.nodes()));
  path.sigmas.push_back(sigma0);
  path.psd_min_eig.push_back(sigma0.min_eigenvalue());

  CovMatrix s = sigma0;
  for (int k = 0; k < grid.steps(); ++k) {
    const double b0 = beta.at(k), bm = beta.mid(k), b1 = beta.at(k + 1);
    CovMatrix next;
    if (std::isfinite(b0) && std::isfinite(bm) && std::isfinite(b1)) {
      next = riccati_rk4_step(s, b0, bm, b1, dt, p);
    } else {
      next = CovMatrix(NAN, NAN, NAN, NAN, NAN, NAN);
    }
    const double min_eig = next.finite() ? next.min_eigenvalue() : NAN;
    if (auto mode = classify(next, min_eig, threshold, opt.psd_tol)) {
      path.breakdown = Breakdown{grid.time(k + 1), k + 1, *mode};
      break;
    }
    s = next;
    path.sigmas.push_back(s);
    path.psd_min_eig.push_back(min_eig);
  }
  return path;
}

void write_cov_path_csv(std::ostream& os, const CovPath& path) {
  CsvWriter w(os);
  w.header({"t", "Sigma_vv", "Sigma_vm", "Sigma_vc", "Sigma_mm", "Sigma_mc", "Sigma_cc", "psd_min_eig"});
  for (std::size_t k = 0; k < path.sigmas.size(); ++k) {
    const auto& s = path.sigmas[k];
    w.row({path.grid.time(static_cast<int>(k)), s.vv(), s.vm(), s.vc(), s.mm(), s.mc(), s.cc(),
           path.psd_min_eig[k]});
  }
}

ModelParams params_at_H(const ModelParams& p, double H, std::pair<double, double> dir) {
  ModelParams q = p;
  const double r = std::sqrt(std::max(H, 0.0));
  q.gamma_F = r * dir.first;
  q.gamma_C = r * dir.second;
  return q;
}

BlowupScanResult scan_blowup(const ModelParams& p, const IntensityPath& beta,
                             const CovMatrix& sigma0, std::span<const double> H_grid,
                             const BlowupScanOptions& opt) {
  if (H_grid.empty()) throw ModelError("H grid must be nonempty");
  for (std::size_t i = 0; i < H_grid.size(); ++i) {
    if (!std::isfinite(H_grid[i]) || H_grid[i] < 0.0)
      throw ModelError("H grid values must be finite and non-negative");
    if (i > 0 && !(H_grid[i] > H_grid[i - 1])) throw ModelError("H grid must be strictly ascending");
  }
  if (!(opt.rel_width > 0.0)) throw ModelError("rel_width must be positive");

  std::pair<double, double> dir = opt.direction.value_or(std::make_pair(p.gamma_F, p.gamma_C));
  double norm = std::hypot(dir.first, dir.second);
  if (norm == 0.0) {
    dir = {1.0, 1.0};
    norm = std::sqrt(2.0);
  }
  dir = {dir.first / norm, dir.second / norm};

  const auto evaluate = [&](double H) {
    const ModelParams q = params_at_H(p, H, dir);
    const IntensityPath b = opt.resolve_beta ? opt.resolve_beta(q) : beta;
    const CovPath path = integrate_riccati(b, sigma0, q, opt.riccati);
    return BlowupRecord{H, path.complete(), path.breakdown};
  };

  BlowupScanResult out;
  out.records.resize(H_grid.size());
  parallel_for(H_grid.size(), opt.threads, [&](std::size_t i) { out.records[i] = evaluate(H_grid[i]); });

  bool failed = false;
  std::optional<std::size_t> first_fail;
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    if (!out.records[i].completed) {
      failed = true;
      if (!first_fail) first_fail = i;
    } else if (failed) {
      out.monotonicity_violations.push_back(out.records[i].H);
    }
  }
  if (!first_fail) return out;
  if (*first_fail == 0) {
    out.breaks_at_start = true;
    return out;
  }

  double lo = out.records[*first_fail - 1].H;
  double hi = out.records[*first_fail].H;
  while ((hi - lo) > opt.rel_width * hi) {
    const double mid = 0.5 * (lo + hi);
    BlowupRecord r = evaluate(mid);
    out.refinement.push_back(r);
    (r.completed ? lo : hi) = mid;
  }
  out.found = true;
  out.H_lo = lo;
  out.H_hi = hi;
  out.H_star = 0.5 * (lo + hi);
  return out;
}

}  // namespace kyle
