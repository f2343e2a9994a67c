#ifndef KYLE_CONFIG_HPP
#define KYLE_CONFIG_HPP

#include <array>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

#include "kyle/model.hpp"

namespace kyle {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Model parameters plus discretization and numerical knobs, as read from a
/// JSON config file.
struct ModelConfig {
  ModelParams params;
  int n_steps = 1000;
  double psd_tol = 1e-10;
  /// (vv, vm, vc, mm, mc, cc); replaces the diagonal initial covariance.
  std::optional<std::array<double, 6>> sigma0_override;

  TimeGrid grid() const { return TimeGrid(params.T, n_steps); }
  CovMatrix sigma0() const;
};

/// Parses a JSON object. Keys must be ModelParams fields, n_steps, psd_tol,
/// fold_eps_into_R, sigma0_override, or a member of extra_keys (whose values
/// are ignored here). Throws ConfigError on unknown keys or bad types and
/// ModelError when the parameters fail validation.
ModelConfig parse_config(std::string_view json_text, const std::set<std::string>& extra_keys = {});

/// Reads and parses a config file; the error message names the path on IO failure.
ModelConfig load_config(const std::filesystem::path& path,
                        const std::set<std::string>& extra_keys = {});

/// Canonical JSON (sorted keys, 2-space indent) of the resolved config.
std::string config_to_json(const ModelConfig& cfg);

}  // namespace kyle

#endif  // KYLE_CONFIG_HPP
