#include "kyle/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace kyle {

namespace {

using nlohmann::json;

struct DoubleField {
  const char* name;
  double ModelParams::*member;
};

constexpr DoubleField kDoubleFields[] = {
    {"sigma_v", &ModelParams::sigma_v},     {"sigma_z", &ModelParams::sigma_z},
    {"sigma_m", &ModelParams::sigma_m},     {"sigma_c", &ModelParams::sigma_c},
    {"sigma_eps", &ModelParams::sigma_eps}, {"alpha_m", &ModelParams::alpha_m},
    {"alpha_c", &ModelParams::alpha_c},     {"kappa_m", &ModelParams::kappa_m},
    {"kappa_c", &ModelParams::kappa_c},     {"gamma_F", &ModelParams::gamma_F},
    {"gamma_C", &ModelParams::gamma_C},     {"T", &ModelParams::T},
    {"var_m0", &ModelParams::var_m0},       {"var_c0", &ModelParams::var_c0},
};

double number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return v.get<double>();
}

}  // namespace

CovMatrix ModelConfig::sigma0() const {
  if (sigma0_override) return CovMatrix(*sigma0_override);
  return initial_covariance(params);
}

ModelConfig parse_config(std::string_view json_text, const std::set<std::string>& extra_keys) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  ModelConfig cfg;
  for (const auto& [key, value] : doc.items()) {
    bool handled = false;
    for (const auto& f : kDoubleFields) {
      if (key == f.name) {
        cfg.params.*(f.member) = number(value, key);
        handled = true;
        break;
      }
    }
    if (handled) continue;

    if (key == "n_steps") {
      if (!value.is_number_integer()) throw ConfigError("config key 'n_steps' must be an integer");
      cfg.n_steps = value.get<int>();
      if (cfg.n_steps < 1) throw ConfigError("n_steps must be a positive integer");
    } else if (key == "psd_tol") {
      cfg.psd_tol = number(value, key);
      if (!(cfg.psd_tol >= 0.0)) throw ConfigError("psd_tol must be non-negative");
    } else if (key == "fold_eps_into_R") {
      if (!value.is_boolean()) throw ConfigError("config key 'fold_eps_into_R' must be a boolean");
      cfg.params.fold_eps_into_R = value.get<bool>();
    } else if (key == "sigma0_override") {
      if (value.is_null()) continue;
      if (!value.is_array() || value.size() != 6)
        throw ConfigError("sigma0_override must be a list of 6 numbers (vv, vm, vc, mm, mc, cc)");
      std::array<double, 6> e{};
      for (std::size_t i = 0; i < 6; ++i) e[i] = number(value[i], "sigma0_override");
      cfg.sigma0_override = e;
    } else if (!extra_keys.contains(key)) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }

  validate_params(cfg.params);
  if (cfg.sigma0_override) {
    const CovMatrix s0(*cfg.sigma0_override);
    if (!s0.finite() || !s0.is_psd(cfg.psd_tol))
      throw ConfigError("sigma0_override must be a finite positive semidefinite matrix");
  }
  return cfg;
}

ModelConfig load_config(const std::filesystem::path& path, const std::set<std::string>& extra_keys) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), extra_keys);
}

std::string config_to_json(const ModelConfig& cfg) {
  json doc = json::object();
  for (const auto& f : kDoubleFields) doc[f.name] = cfg.params.*(f.member);
  doc["fold_eps_into_R"] = cfg.params.fold_eps_into_R;
  doc["n_steps"] = cfg.n_steps;
  doc["psd_tol"] = cfg.psd_tol;
  if (cfg.sigma0_override) doc["sigma0_override"] = *cfg.sigma0_override;
  return doc.dump(2);
}

}  // namespace kyle
