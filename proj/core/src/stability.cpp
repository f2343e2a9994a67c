#include "kyle/stability.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "json.hpp"
#include "kyle/filter.hpp"

namespace kyle {

DcGains dc_gains(const CovPath& cov, const IntensityPath& beta, const ModelParams& p,
                 const DcGainOptions& opt) {
  if (!cov.complete()) throw ModelError("dc_gains: covariance path broke down");
  if (!(cov.grid == beta.grid())) throw ModelError("dc_gains: grid mismatch");
  const int last = truncated_last_node(cov.grid, opt.truncation);
  const double R = p.observation_variance();

  Vec3 K = Vec3::Zero();
  Mat3 M = Mat3::Zero();
  if (opt.terminal) {
    K = kalman_gain(cov.at(last), measurement_vec(beta.at(last), p), R);
    M = error_matrix(cov.at(last), beta.at(last), p);
  } else {
    for (int k = 0; k <= last; ++k) {
      K += kalman_gain(cov.at(k), measurement_vec(beta.at(k), p), R);
      M += error_matrix(cov.at(k), beta.at(k), p);
    }
    K /= static_cast<double>(last + 1);
    M /= static_cast<double>(last + 1);
  }

  if (!(max_real_eigenvalue(M) < 0.0))
    throw StabilityError("no stationary gain: averaged filter matrix is not Hurwitz");
  const Vec3 x = (-M).partialPivLu().solve(K);
  DcGains out;
  out.g = x(0);
  out.G_m = p.gamma_F * out.g;
  out.G_c = p.gamma_C * out.g;
  return out;
}

Mat2 feedback_matrix(double G_m, double G_c, const ModelParams& p) {
  Mat2 F;
  F << p.kappa_m * G_m, p.kappa_m * G_c, -p.kappa_c * G_m, -p.kappa_c * G_c;
  return F;
}

StabilityReport check_stability(const Mat2& F, const ModelParams& p) {
  StabilityReport r;
  r.F = F;
  // Recover (G_m, G_c) from the rank-one structure when kappa allows it.
  if (p.kappa_m != 0.0) {
    r.G_m = F(0, 0) / p.kappa_m;
    r.G_c = F(0, 1) / p.kappa_m;
  } else if (p.kappa_c != 0.0) {
    r.G_m = -F(1, 0) / p.kappa_c;
    r.G_c = -F(1, 1) / p.kappa_c;
  }

  const auto ev = eigenvalues(F);
  r.rho_F = std::max(std::abs(ev[0]), std::abs(ev[1]));
  r.norm_inf = std::max(std::abs(F(0, 0)) + std::abs(F(0, 1)), std::abs(F(1, 0)) + std::abs(F(1, 1)));
  r.norm_1 = std::max(std::abs(F(0, 0)) + std::abs(F(1, 0)), std::abs(F(0, 1)) + std::abs(F(1, 1)));
  r.min_alpha = std::min(p.alpha_m, p.alpha_c);

  Mat2 D = Mat2::Zero();
  D(0, 0) = p.alpha_m;
  D(1, 1) = p.alpha_c;
  r.A_eff = -D + F;
  const auto ea = eigenvalues(r.A_eff);
  r.max_re_A_eff = std::max(ea[0].real(), ea[1].real());

  r.spectral_ok = r.rho_F < r.min_alpha;
  r.norm_inf_ok = r.norm_inf < r.min_alpha;
  r.norm_1_ok = r.norm_1 < r.min_alpha;
  r.hurwitz = r.max_re_A_eff < 0.0;
  return r;
}

StabilityReport check_stability(double G_m, double G_c, const ModelParams& p) {
  StabilityReport r = check_stability(feedback_matrix(G_m, G_c, p), p);
  r.G_m = G_m;
  r.G_c = G_c;
  return r;
}

double induced_norm_sampled(const Mat2& F, double p_norm, int n_angles) {
  const auto pnorm = [&](double a, double b) {
    if (std::isinf(p_norm)) return std::max(std::abs(a), std::abs(b));
    return std::pow(std::pow(std::abs(a), p_norm) + std::pow(std::abs(b), p_norm), 1.0 / p_norm);
  };
  double best = 0.0;
  for (int i = 0; i < n_angles; ++i) {
    const double th = 2.0 * std::numbers::pi * i / n_angles;
    const double x = std::cos(th), y = std::sin(th);
    const double nx = pnorm(x, y);
    best = std::max(best, pnorm(F(0, 0) * x + F(0, 1) * y, F(1, 0) * x + F(1, 1) * y) / nx);
  }
  return best;
}

std::string stability_report_json(const StabilityReport& r) {
  using nlohmann::ordered_json;
  const auto mat = [](const Mat2& m) {
    return ordered_json::array({ordered_json::array({m(0, 0), m(0, 1)}),
                                ordered_json::array({m(1, 0), m(1, 1)})});
  };
  ordered_json j;
  j["G_m"] = r.G_m;
  j["G_c"] = r.G_c;
  j["F"] = mat(r.F);
  j["A_eff"] = mat(r.A_eff);
  j["rho_F"] = r.rho_F;
  j["norm_inf"] = r.norm_inf;
  j["norm_1"] = r.norm_1;
  j["min_alpha"] = r.min_alpha;
  j["max_re_eig_A_eff"] = r.max_re_A_eff;
  j["spectral_ok"] = r.spectral_ok;
  j["norm_inf_ok"] = r.norm_inf_ok;
  j["norm_1_ok"] = r.norm_1_ok;
  j["hurwitz"] = r.hurwitz;
  return j.dump(2);
}

}  // namespace kyle
