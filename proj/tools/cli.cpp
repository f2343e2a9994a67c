#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "kyle/csv.hpp"
#include "kyle/equilibrium.hpp"
#include "kyle/parallel.hpp"
#include "kyle/perturbation.hpp"
#include "kyle/riccati.hpp"
#include "kyle/simulator.hpp"
#include "kyle/stability.hpp"
#include "kyle/version.hpp"

namespace kyle::cli {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write '" + path.string() + "'");
  return os;
}

void write_text(const fs::path& path, const std::string& text) {
  auto os = open_out(path);
  os << text << '\n';
}

ordered_json num(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr); }

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("run.") + key + " has the wrong type");
  }
}

std::uint64_t effective_seed(const Invocation& inv, const RunSettings& rs) {
  return inv.seed.value_or(rs.seed);
}

ImpactDefinition impact_of(const Invocation& inv) {
  return inv.paper_literal_lambda ? ImpactDefinition::beta_sigma_vv
                                  : ImpactDefinition::filter_implied;
}

SolverOptions solver_options(const RunSettings& rs, const Invocation& inv) {
  SolverOptions opt;
  opt.tol = rs.tol;
  opt.max_iters = rs.max_iters;
  opt.damping = rs.damping;
  opt.beta_max = rs.beta_max;
  opt.impact = impact_of(inv);
  return opt;
}

void write_manifest(const std::string& command, const Invocation& inv, const LoadedConfig& cfg) {
  ordered_json m;
  m["tool"] = "kyle";
  m["version"] = kVersion;
  m["command"] = command;
  m["config_path"] = inv.config_path.string();
  m["seed"] = effective_seed(inv, cfg.run);
  m["threads"] = inv.threads;
  m["paper_literal_lambda"] = inv.paper_literal_lambda;
  m["model"] = ordered_json::parse(config_to_json(cfg.model));
  m["run"] = ordered_json::parse(run_settings_json(cfg.run));
  write_text(inv.out_dir / "manifest.json", m.dump(2));
}

template <class Fn>
int guarded(const std::string& command, const Invocation& inv, Fn&& body) {
  try {
    const LoadedConfig cfg = load(inv);
    if (inv.threads < 1) throw ConfigError("--threads must be at least 1");
    fs::create_directories(inv.out_dir);
    write_manifest(command, inv, cfg);
    return body(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const ModelError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kNotConverged;
  } catch (const StabilityError& e) {
    std::cerr << "stability error: " << e.what() << '\n';
    return kNotConverged;
  }
}

EquilibriumSolution solve(const LoadedConfig& cfg, const ModelParams& q, const Invocation& inv) {
  const TimeGrid grid = cfg.model.grid();
  return solve_pontryagin(q, cfg.model.sigma0(), classical_kyle_intensity(q, grid),
                          solver_options(cfg.run, inv));
}

// beta for fixed-intensity analyses. The classical intensity is infinite at T
// and the equilibrium one is steep there, so both are cut to [0, T - 10 dt].
IntensityPath fixed_beta(const LoadedConfig& cfg, const ModelParams& q, const Invocation& inv) {
  const TimeGrid grid = cfg.model.grid();
  const RunSettings& rs = cfg.run;
  if (rs.beta_source == "constant") return IntensityPath::constant(grid, rs.beta_constant);
  const int last = truncated_last_node(grid);
  if (rs.beta_source == "classical") return classical_kyle_intensity(q, grid).truncated(last);
  return solve(cfg, q, inv).beta_star.truncated(last);
}

// beta together with the covariance it produces. For the equilibrium source
// this is the solver's own path over the full horizon.
std::pair<IntensityPath, CovPath> beta_and_cov(const LoadedConfig& cfg, const Invocation& inv) {
  const ModelParams& p = cfg.model.params;
  if (cfg.run.beta_source == "equilibrium") {
    EquilibriumSolution sol = solve(cfg, p, inv);
    return {std::move(sol.beta_star), std::move(sol.cov_path)};
  }
  IntensityPath beta = fixed_beta(cfg, p, inv);
  RiccatiOptions ro;
  ro.psd_tol = cfg.model.psd_tol;
  CovPath cov = integrate_riccati(beta, cfg.model.sigma0(), p, ro);
  return {std::move(beta), std::move(cov)};
}

ordered_json summary_json(const EquilibriumSolution& sol) {
  ordered_json j;
  j["J"] = num(sol.profit_J);
  j["residuals"] = {{"terminal_Sigma_vv", num(sol.residuals.terminal_gap)},
                    {"sweep_gap", num(sol.residuals.sweep_gap)}};
  j["iterations"] = sol.iterations;
  j["shooting_evaluations"] = sol.shooting_iterations;
  j["p_multiplier"] = num(sol.adjoint.p_multiplier);
  j["converged"] = sol.converged;
  return j;
}

}  // namespace

RunSettings parse_run_settings(const std::string& config_text) {
  RunSettings rs;
  json doc;
  try {
    doc = json::parse(config_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("run")) return rs;
  const json& r = doc.at("run");
  if (!r.is_object()) throw ConfigError("config key 'run' must be an object");

  static const std::set<std::string> known{
      "tol",         "max_iters",   "damping",     "beta_max",      "scales",
      "lipschitz_probes", "n_paths", "checkpoints", "export_paths", "G_m",
      "G_c",         "dc_terminal", "fd_eps",      "statics_eps",   "beta_source",
      "beta_constant", "H_grid",    "direction",   "rel_width",     "seed"};
  for (const auto& [key, _] : r.items())
    if (!known.contains(key)) throw ConfigError("unknown run key '" + key + "'");

  rs.tol = get_or(r, "tol", rs.tol);
  rs.max_iters = get_or(r, "max_iters", rs.max_iters);
  rs.damping = get_or(r, "damping", rs.damping);
  rs.beta_max = get_or(r, "beta_max", rs.beta_max);
  rs.scales = get_or(r, "scales", rs.scales);
  rs.lipschitz_probes = get_or(r, "lipschitz_probes", rs.lipschitz_probes);
  rs.n_paths = get_or(r, "n_paths", rs.n_paths);
  rs.checkpoints = get_or(r, "checkpoints", rs.checkpoints);
  rs.export_paths = get_or(r, "export_paths", rs.export_paths);
  if (r.contains("G_m")) rs.G_m = get_or(r, "G_m", 0.0);
  if (r.contains("G_c")) rs.G_c = get_or(r, "G_c", 0.0);
  rs.dc_terminal = get_or(r, "dc_terminal", rs.dc_terminal);
  rs.fd_eps = get_or(r, "fd_eps", rs.fd_eps);
  rs.statics_eps = get_or(r, "statics_eps", rs.statics_eps);
  rs.beta_source = get_or(r, "beta_source", rs.beta_source);
  rs.beta_constant = get_or(r, "beta_constant", rs.beta_constant);
  rs.H_grid = get_or(r, "H_grid", rs.H_grid);
  if (r.contains("direction")) rs.direction = get_or(r, "direction", std::vector<double>{});
  rs.rel_width = get_or(r, "rel_width", rs.rel_width);
  rs.seed = get_or(r, "seed", rs.seed);

  if (!(rs.tol > 0.0)) throw ConfigError("run.tol must be positive");
  if (rs.max_iters < 1) throw ConfigError("run.max_iters must be at least 1");
  if (rs.n_paths < 2) throw ConfigError("run.n_paths must be at least 2");
  if (rs.lipschitz_probes < 1) throw ConfigError("run.lipschitz_probes must be at least 1");
  if (rs.G_m.has_value() != rs.G_c.has_value())
    throw ConfigError("run.G_m and run.G_c must be given together");
  if (rs.beta_source != "equilibrium" && rs.beta_source != "classical" &&
      rs.beta_source != "constant")
    throw ConfigError("run.beta_source must be equilibrium, classical or constant");
  if (rs.direction && rs.direction->size() != 2)
    throw ConfigError("run.direction must hold two numbers (gamma_F, gamma_C)");
  return rs;
}

std::string run_settings_json(const RunSettings& rs) {
  ordered_json j;
  j["tol"] = rs.tol;
  j["max_iters"] = rs.max_iters;
  j["damping"] = rs.damping;
  j["beta_max"] = rs.beta_max;
  j["scales"] = rs.scales;
  j["lipschitz_probes"] = rs.lipschitz_probes;
  j["n_paths"] = rs.n_paths;
  j["checkpoints"] = rs.checkpoints;
  j["export_paths"] = rs.export_paths;
  if (rs.G_m) j["G_m"] = *rs.G_m;
  if (rs.G_c) j["G_c"] = *rs.G_c;
  j["dc_terminal"] = rs.dc_terminal;
  j["fd_eps"] = rs.fd_eps;
  j["statics_eps"] = rs.statics_eps;
  j["beta_source"] = rs.beta_source;
  j["beta_constant"] = rs.beta_constant;
  j["H_grid"] = rs.H_grid;
  if (rs.direction) j["direction"] = *rs.direction;
  j["rel_width"] = rs.rel_width;
  j["seed"] = rs.seed;
  return j.dump(2);
}

LoadedConfig load(const Invocation& inv) {
  const std::string text = read_text(inv.config_path);
  LoadedConfig cfg;
  cfg.model = parse_config(text, {"run"});
  cfg.run = parse_run_settings(text);
  return cfg;
}

int cmd_equilibrium(const Invocation& inv) {
  return guarded("equilibrium", inv, [&](const LoadedConfig& cfg) {
    const EquilibriumSolution sol = solve(cfg, cfg.model.params, inv);
    auto csv = open_out(inv.out_dir / "equilibrium.csv");
    write_equilibrium_csv(csv, sol);
    write_text(inv.out_dir / "equilibrium.json", summary_json(sol).dump(2));
    if (!sol.converged) std::cerr << "equilibrium did not converge; best iterate written\n";
    return sol.converged ? kOk : kNotConverged;
  });
}

int cmd_sweep(const Invocation& inv) {
  return guarded("sweep", inv, [&](const LoadedConfig& cfg) {
    const RunSettings& rs = cfg.run;
    if (rs.scales.empty()) throw ConfigError("run.scales is empty");
    const ModelParams& p = cfg.model.params;
    const FeedbackVector h = feedback_of(p);
    const TimeGrid grid = cfg.model.grid();
    const CovMatrix sigma0 = cfg.model.sigma0();
    const int last = truncated_last_node(grid);

    const EquilibriumSolution base = solve(cfg, with_feedback(p, FeedbackVector{}), inv);

    struct Row {
      double scale = 0, h_norm = 0, deviation = NAN, J = NAN, rho = NAN, norm_inf = NAN,
             Lambda = NAN, L = NAN, breakdown_time = NAN;
      int converged = 0, spectral_ok = 0, hurwitz = 0, riccati_complete = 0;
      std::string error;
    };
    std::vector<Row> rows(rs.scales.size());
    parallel_for(rows.size(), inv.threads, [&](std::size_t i) {
      Row& row = rows[i];
      row.scale = rs.scales[i];
      const FeedbackVector hs = h.scaled(rs.scales[i]);
      row.h_norm = hs.norm();
      const ModelParams q = with_feedback(p, hs);
      std::string err;
      const auto note = [&](const std::string& what, const std::exception& e) {
        if (!err.empty()) err += "; ";
        err += what + ": " + e.what();
      };

      const CovPath frozen = integrate_riccati(base.beta_star.truncated(last), sigma0, q);
      row.riccati_complete = frozen.complete();
      if (frozen.breakdown) row.breakdown_time = frozen.breakdown->time;

      std::optional<EquilibriumSolution> sol;
      try {
        sol = solve(cfg, q, inv);
        row.converged = sol->converged;
        row.J = sol->profit_J;
        row.deviation = l2_distance(sol->beta_star, base.beta_star, last);
      } catch (const std::exception& e) {
        note("solve", e);
      }
      const IntensityPath beta = sol ? sol->beta_star : base.beta_star.truncated(last);
      const CovPath cov = sol ? sol->cov_path : frozen;
      if (cov.complete()) {
        try {
          const DcGains g = dc_gains(cov, beta, q, DcGainOptions{rs.dc_terminal});
          const StabilityReport st = check_stability(g.G_m, g.G_c, q);
          row.rho = st.rho_F;
          row.norm_inf = st.norm_inf;
          row.spectral_ok = st.spectral_ok;
          row.hurwitz = st.hurwitz;
        } catch (const std::exception& e) {
          note("stability", e);
        }
        row.Lambda = lambda_sup(cov, beta, q, last).Lambda;
      }
      try {
        LipschitzOptions lo;
        lo.seed = mix64(effective_seed(inv, rs) + i);
        row.L = estimate_lipschitz(beta, q, sigma0, rs.lipschitz_probes, lo);
      } catch (const std::exception& e) {
        note("lipschitz", e);
      }
      row.error = err;
    });

    auto os = open_out(inv.out_dir / "sweep.csv");
    CsvWriter w(os);
    w.header({"scale", "h_norm", "beta_deviation", "J", "converged", "rho_F", "norm_inf",
              "spectral_ok", "hurwitz", "Lambda", "L_estimate", "riccati_complete",
              "breakdown_time", "error"});
    for (const Row& r : rows) {
      w.cells({format_double(r.scale), format_double(r.h_norm), format_double(r.deviation),
               format_double(r.J), std::to_string(r.converged), format_double(r.rho),
               format_double(r.norm_inf), std::to_string(r.spectral_ok), std::to_string(r.hurwitz),
               format_double(r.Lambda), format_double(r.L), std::to_string(r.riccati_complete),
               format_double(r.breakdown_time), r.error});
    }
    return kOk;
  });
}

int cmd_simulate(const Invocation& inv) {
  return guarded("simulate", inv, [&](const LoadedConfig& cfg) {
    const RunSettings& rs = cfg.run;
    auto [beta, cov] = beta_and_cov(cfg, inv);
    const MarketSimulator sim(beta, cfg.model.params, cfg.model.sigma0(), std::move(cov));
    const std::uint64_t seed = effective_seed(inv, rs);
    McOptions mo;
    mo.checkpoints = rs.checkpoints;
    mo.threads = inv.threads;
    const McSummary s = monte_carlo(rs.n_paths, seed, sim, mo);
    write_text(inv.out_dir / "mc_summary.json", mc_summary_json(s));
    if (rs.export_paths > 0) {
      fs::create_directories(inv.out_dir / "paths");
      for (int i = 0; i < std::min(rs.export_paths, rs.n_paths); ++i) {
        std::ostringstream name;
        name << "path_" << i << ".csv";
        auto os = open_out(inv.out_dir / "paths" / name.str());
        write_path_csv(os, sim.simulate(path_seed(seed, static_cast<std::uint64_t>(i))));
      }
    }
    return kOk;
  });
}

int cmd_stability(const Invocation& inv) {
  return guarded("stability", inv, [&](const LoadedConfig& cfg) {
    const RunSettings& rs = cfg.run;
    const ModelParams& p = cfg.model.params;
    double G_m = 0.0, G_c = 0.0;
    if (rs.G_m) {
      G_m = *rs.G_m;
      G_c = *rs.G_c;
    } else {
      const EquilibriumSolution sol = solve(cfg, p, inv);
      const DcGains g = dc_gains(sol.cov_path, sol.beta_star, p, DcGainOptions{rs.dc_terminal});
      G_m = g.G_m;
      G_c = g.G_c;
    }
    write_text(inv.out_dir / "stability.json", stability_report_json(check_stability(G_m, G_c, p)));
    return kOk;
  });
}

int cmd_sensitivity(const Invocation& inv) {
  return guarded("sensitivity", inv, [&](const LoadedConfig& cfg) {
    const RunSettings& rs = cfg.run;
    const ModelParams& p = cfg.model.params;
    const CovMatrix sigma0 = cfg.model.sigma0();
    const EquilibriumSolution sol = solve(cfg, p, inv);
    // Tangent-linear and finite-difference paths share the fixed-step
    // baseline on the truncated horizon.
    const IntensityPath beta = sol.beta_star.truncated(truncated_last_node(sol.beta_star.grid()));
    RiccatiOptions ro;
    ro.psd_tol = cfg.model.psd_tol;
    const CovPath base = integrate_riccati(beta, sigma0, p, ro);
    if (!base.complete()) throw SolverError("baseline Riccati flow broke down");
    const SensitivityPath lin = integrate_sensitivity(base, beta, p);
    const SensitivityPath fd = finite_difference_sensitivity(beta, sigma0, p, rs.fd_eps);
    auto os = open_out(inv.out_dir / "sensitivity.csv");
    write_sensitivity_csv(os, lin, fd);

    const ComparativeStatics cs =
        comparative_statics(sol, p, sigma0, rs.statics_eps, solver_options(rs, inv), inv.threads);
    ordered_json j;
    j["eps"] = cs.eps;
    j["dJ_dgammaF"] = num(cs.dJ_dgammaF);
    j["dbeta_norm"] = num(cs.dbeta_norm);
    j["converged"] = cs.converged;
    double max_gap = 0.0;
    for (std::size_t k = 0; k < lin.dvv.size(); ++k)
      max_gap = std::max(max_gap, std::abs(lin.dvv[k] - fd.dvv[k]));
    j["max_abs_gap_linear_vs_fd"] = max_gap;
    write_text(inv.out_dir / "statics.json", j.dump(2));
    auto prof = open_out(inv.out_dir / "statics_profile.csv");
    CsvWriter w(prof);
    w.header({"t", "dSigma_vv_resolve", "dSigma_vv_linear"});
    for (std::size_t k = 0; k < cs.dSigma_vv_profile.size(); ++k)
      w.row({sol.cov_path.grid.time(static_cast<int>(k)), cs.dSigma_vv_profile[k], cs.dvv_linear[k]});
    return cs.converged ? kOk : kNotConverged;
  });
}

int cmd_riccati(const Invocation& inv) {
  return guarded("riccati", inv, [&](const LoadedConfig& cfg) {
    const ModelParams& p = cfg.model.params;
    const auto [beta, cov] = beta_and_cov(cfg, inv);
    {
      auto os = open_out(inv.out_dir / "covariance.csv");
      write_cov_path_csv(os, cov);
    }
    {
      auto os = open_out(inv.out_dir / "gains.csv");
      write_gain_path_csv(os, gain_path(cov, beta, p, impact_of(inv)));
    }
    ordered_json j;
    j["complete"] = cov.complete();
    if (cov.breakdown) {
      j["breakdown"] = {{"time", cov.breakdown->time},
                        {"node", cov.breakdown->node},
                        {"mode", std::string(to_string(cov.breakdown->mode))}};
    } else {
      const int last = cov.grid == cfg.model.grid() ? truncated_last_node(cov.grid) : cov.grid.steps();
      const InstabilityReport rep = lambda_sup(cov, beta, p, last);
      j["Lambda"] = num(rep.Lambda);
      j["argmax_time"] = rep.argmax_time;
      j["unstable"] = rep.unstable();
    }
    write_text(inv.out_dir / "riccati.json", j.dump(2));
    return kOk;
  });
}

int cmd_breakdown(const Invocation& inv) {
  return guarded("breakdown", inv, [&](const LoadedConfig& cfg) {
    const RunSettings& rs = cfg.run;
    if (rs.H_grid.empty()) throw ConfigError("run.H_grid is empty");
    const IntensityPath beta =
        fixed_beta(cfg, with_feedback(cfg.model.params, FeedbackVector{}), inv);
    BlowupScanOptions so;
    so.rel_width = rs.rel_width;
    so.threads = inv.threads;
    so.riccati.psd_tol = cfg.model.psd_tol;
    if (rs.direction) so.direction = std::make_pair((*rs.direction)[0], (*rs.direction)[1]);
    const BlowupScanResult res = scan_blowup(cfg.model.params, beta, cfg.model.sigma0(), rs.H_grid, so);

    auto os = open_out(inv.out_dir / "breakdown.csv");
    CsvWriter w(os);
    w.header({"H", "completed", "breakdown_time", "mode", "stage"});
    const auto emit = [&](const BlowupRecord& r, const char* stage) {
      w.cells({format_double(r.H), r.completed ? "1" : "0",
               format_double(r.breakdown ? r.breakdown->time : NAN),
               r.breakdown ? std::string(to_string(r.breakdown->mode)) : std::string(), stage});
    };
    for (const auto& r : res.records) emit(r, "grid");
    for (const auto& r : res.refinement) emit(r, "bisection");

    ordered_json j;
    j["found"] = res.found;
    j["breaks_at_start"] = res.breaks_at_start;
    j["H_lo"] = num(res.found ? res.H_lo : NAN);
    j["H_hi"] = num(res.found ? res.H_hi : NAN);
    j["H_star"] = num(res.found ? res.H_star : NAN);
    j["monotone"] = res.monotone();
    j["message"] = res.found ? "breakdown bracketed"
                             : (res.breaks_at_start ? "breakdown at the smallest H"
                                                    : "no breakdown in range");
    write_text(inv.out_dir / "breakdown.json", j.dump(2));
    return kOk;
  });
}

int run_command(const std::string& name, const Invocation& inv) {
  if (name == "equilibrium") return cmd_equilibrium(inv);
  if (name == "sweep") return cmd_sweep(inv);
  if (name == "simulate") return cmd_simulate(inv);
  if (name == "stability") return cmd_stability(inv);
  if (name == "sensitivity") return cmd_sensitivity(inv);
  if (name == "riccati") return cmd_riccati(inv);
  if (name == "breakdown") return cmd_breakdown(inv);
  std::cerr << "error: unknown command '" << name << "'\n";
  return kInputError;
}

}  // namespace kyle::cli
