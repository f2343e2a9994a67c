#include "kyle/perturbation.hpp"

#include <cmath>
#include <ostream>

#include "kyle/csv.hpp"
#include "kyle/parallel.hpp"

namespace kyle {

namespace {

ModelParams shifted(ModelParams p, SensitivityParam param, double d) {
  switch (param) {
    case SensitivityParam::gamma_F: p.gamma_F += d; break;
    case SensitivityParam::gamma_C: p.gamma_C += d; break;
    case SensitivityParam::kappa_m: p.kappa_m += d; break;
    case SensitivityParam::kappa_c: p.kappa_c += d; break;
  }
  return p;
}

}  // namespace

Mat3 linearized_rhs(const Mat3& H, const CovMatrix& sigma, double beta_t, const ModelParams& p) {
  const Mat3 A = drift_matrix(p);
  const Vec3 c = measurement_vec(beta_t, p).vec();
  const Mat3 ccT = c * c.transpose() / p.observation_variance();
  const Mat3 S = sigma.matrix();
  return A * H + H * A.transpose() - H * ccT * S - S * ccT * H;
}

Mat3 forcing_term(const CovMatrix& sigma, double beta_t, const ModelParams& p,
                  SensitivityParam param) {
  Vec3 e = Vec3::Zero();
  if (param == SensitivityParam::gamma_F) e(1) = 1.0;
  else if (param == SensitivityParam::gamma_C) e(2) = 1.0;
  else return Mat3::Zero();
  const Vec3 c = measurement_vec(beta_t, p).vec();
  const Mat3 S = sigma.matrix();
  return -S * (e * c.transpose() + c * e.transpose()) * S / p.observation_variance();
}

SensitivityPath integrate_sensitivity(const CovPath& cov0, const IntensityPath& beta0,
                                      const ModelParams& p, const SensitivityOptions& opt) {
  if (!cov0.complete()) throw ModelError("integrate_sensitivity: baseline broke down");
  if (!(cov0.grid == beta0.grid())) throw ModelError("integrate_sensitivity: grid mismatch");

  const TimeGrid& grid = cov0.grid;
  const double dt = grid.dt();
  const auto rhs = [&](const CovMatrix& s, const Mat3& H, double b) {
    return linearized_rhs(H, s, b, p) + opt.forcing_scale * forcing_term(s, b, p, opt.param);
  };

  SensitivityPath out;
  out.grid = grid;
  out.sigma1.reserve(static_cast<std::size_t>(grid.nodes()));
  out.sigma1.push_back(Mat3::Zero());
  out.dvv.push_back(0.0);

  CovMatrix s = cov0.at(0);
  Mat3 H = Mat3::Zero();
  for (int k = 0; k < grid.steps(); ++k) {
    const double b0 = beta0.at(k), bm = beta0.mid(k), b1 = beta0.at(k + 1);
    const CovMatrix ks1 = riccati_rhs(s, b0, p);
    const Mat3 kh1 = rhs(s, H, b0);
    const CovMatrix s2 = s + ks1 * (0.5 * dt);
    const Mat3 H2 = H + 0.5 * dt * kh1;
    const CovMatrix ks2 = riccati_rhs(s2, bm, p);
    const Mat3 kh2 = rhs(s2, H2, bm);
    const CovMatrix s3 = s + ks2 * (0.5 * dt);
    const Mat3 H3 = H + 0.5 * dt * kh2;
    const CovMatrix ks3 = riccati_rhs(s3, bm, p);
    const Mat3 kh3 = rhs(s3, H3, bm);
    const CovMatrix s4 = s + ks3 * dt;
    const Mat3 H4 = H + dt * kh3;
    const CovMatrix ks4 = riccati_rhs(s4, b1, p);
    const Mat3 kh4 = rhs(s4, H4, b1);
    s = s + (ks1 + ks2 * 2.0 + ks3 * 2.0 + ks4) * (dt / 6.0);
    H = H + (dt / 6.0) * (kh1 + 2.0 * kh2 + 2.0 * kh3 + kh4);
    out.sigma1.push_back(H);
    out.dvv.push_back(H(0, 0));
  }
  return out;
}

SensitivityPath finite_difference_sensitivity(const IntensityPath& beta, const CovMatrix& sigma0,
                                              const ModelParams& p, double eps,
                                              SensitivityParam param) {
  if (!(eps > 0.0)) throw ModelError("eps must be positive");
  const CovPath up = integrate_riccati(beta, sigma0, shifted(p, param, eps));
  const CovPath dn = integrate_riccati(beta, sigma0, shifted(p, param, -eps));
  if (!up.complete() || !dn.complete())
    throw SolverError("finite_difference_sensitivity: perturbed Riccati flow broke down");
  SensitivityPath out;
  out.grid = beta.grid();
  for (std::size_t k = 0; k < up.sigmas.size(); ++k) {
    const Mat3 d = (up.sigmas[k].matrix() - dn.sigmas[k].matrix()) / (2.0 * eps);
    out.sigma1.push_back(d);
    out.dvv.push_back(d(0, 0));
  }
  return out;
}

ComparativeStatics comparative_statics(const EquilibriumSolution& sol0, const ModelParams& p,
                                       const CovMatrix& sigma0, double eps, const SolverOptions& opt,
                                       int threads) {
  if (!(eps > 0.0)) throw ModelError("eps must be positive");
  const TimeGrid& grid = sol0.beta_star.grid();

  EquilibriumSolution sols[2];
  parallel_for(2, threads, [&](std::size_t i) {
    const ModelParams q = shifted(p, SensitivityParam::gamma_F, i == 0 ? eps : -eps);
    sols[i] = solve_pontryagin(q, sigma0, sol0.beta_star, opt);
  });

  ComparativeStatics out;
  out.eps = eps;
  out.converged = sols[0].converged && sols[1].converged;
  out.dJ_dgammaF = (sols[0].profit_J - sols[1].profit_J) / (2.0 * eps);

  const int last = truncated_last_node(grid, opt.truncation);
  out.dbeta_norm = l2_distance(sols[0].beta_star, sols[1].beta_star, last) / (2.0 * eps);
  for (int k = 0; k <= grid.steps(); ++k) {
    out.dSigma_vv_profile.push_back(
        (sols[0].cov_path.at(k).vv() - sols[1].cov_path.at(k).vv()) / (2.0 * eps));
  }
  out.dvv_linear = integrate_sensitivity(sol0.cov_path, sol0.beta_star, p).dvv;
  return out;
}

void write_sensitivity_csv(std::ostream& os, const SensitivityPath& linear,
                           const SensitivityPath& fd) {
  if (linear.dvv.size() != fd.dvv.size()) throw ModelError("write_sensitivity_csv: length mismatch");
  CsvWriter w(os);
  w.header({"t", "dvv_linear", "dvv_fd", "abs_gap"});
  for (std::size_t k = 0; k < linear.dvv.size(); ++k) {
    w.row({linear.grid.time(static_cast<int>(k)), linear.dvv[k], fd.dvv[k],
           std::abs(linear.dvv[k] - fd.dvv[k])});
  }
}

}  // namespace kyle
