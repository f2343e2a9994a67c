#ifndef KYLE_TOOLS_CLI_HPP
#define KYLE_TOOLS_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kyle/config.hpp"
#include "kyle/filter.hpp"

namespace kyle::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kNotConverged = 2 };

/// Options under the "run" key of a config file. Every field has a default,
/// so "run" may be omitted.
struct RunSettings {
  // solver
  double tol = 1e-5;
  int max_iters = 200;
  double damping = 0.5;
  double beta_max = 1e6;
  // sweep: scales applied to the config's feedback vector
  std::vector<double> scales{0.0, 0.025, 0.05, 0.1};
  int lipschitz_probes = 8;
  // simulate
  int n_paths = 1000;
  int checkpoints = 10;
  int export_paths = 0;
  // stability: explicit gains bypass the filter computation
  std::optional<double> G_m;
  std::optional<double> G_c;
  bool dc_terminal = false;
  // sensitivity
  double fd_eps = 1e-4;
  double statics_eps = 1e-3;
  // riccati / breakdown: "equilibrium", "classical" or "constant"
  std::string beta_source = "equilibrium";
  double beta_constant = 1.0;
  std::vector<double> H_grid{0.0, 1.0, 10.0, 100.0, 1e3, 1e4, 1e5};
  std::optional<std::vector<double>> direction;
  double rel_width = 1e-3;
  std::uint64_t seed = 20240611;
};

struct Invocation {
  std::filesystem::path config_path;
  std::filesystem::path out_dir = "out";
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool paper_literal_lambda = false;
};

struct LoadedConfig {
  ModelConfig model;
  RunSettings run;
};

/// Reads the model config and its "run" object. Throws ConfigError/ModelError.
LoadedConfig load(const Invocation& inv);

RunSettings parse_run_settings(const std::string& config_text);
std::string run_settings_json(const RunSettings& rs);

int cmd_equilibrium(const Invocation& inv);
int cmd_sweep(const Invocation& inv);
int cmd_simulate(const Invocation& inv);
int cmd_stability(const Invocation& inv);
int cmd_sensitivity(const Invocation& inv);
int cmd_riccati(const Invocation& inv);
int cmd_breakdown(const Invocation& inv);

/// Dispatches by name; unknown names return kInputError.
int run_command(const std::string& name, const Invocation& inv);

}  // namespace kyle::cli

#endif  // KYLE_TOOLS_CLI_HPP
