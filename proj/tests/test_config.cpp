#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "kyle/config.hpp"

namespace kyle {
namespace {

TEST(Config, ParsesFieldsAndDefaults) {
  const ModelConfig cfg = parse_config(R"({"sigma_v": 2.0, "gamma_F": 0.1, "n_steps": 500,
                                          "fold_eps_into_R": false})");
  EXPECT_EQ(cfg.params.sigma_v, 2.0);
  EXPECT_EQ(cfg.params.gamma_F, 0.1);
  EXPECT_EQ(cfg.n_steps, 500);
  EXPECT_FALSE(cfg.params.fold_eps_into_R);
  EXPECT_EQ(cfg.params.sigma_z, 1.0);
  EXPECT_EQ(cfg.sigma0(), CovMatrix::diagonal(4.0, 0.0, 0.0));
}

TEST(Config, SigmaOverride) {
  const ModelConfig cfg = parse_config(R"({"sigma0_override": [1, 0.2, 0, 0.5, 0, 0.5]})");
  EXPECT_EQ(cfg.sigma0(), CovMatrix(1.0, 0.2, 0.0, 0.5, 0.0, 0.5));
  EXPECT_THROW(parse_config(R"({"sigma0_override": [1, 2]})"), ConfigError);
}

TEST(Config, RejectsUnknownAndMistyped) {
  EXPECT_THROW(parse_config(R"({"sigma_q": 1})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"sigma_v": "one"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"n_steps": 1.5})"), ConfigError);
  EXPECT_THROW(parse_config("[1, 2]"), ConfigError);
  EXPECT_THROW(parse_config("{not json"), ConfigError);
  EXPECT_NO_THROW(parse_config(R"({"run": {"x": 1}})", {"run"}));
}

TEST(Config, ValidatesParams) {
  EXPECT_THROW(parse_config(R"({"sigma_z": 0})"), ModelError);
  EXPECT_THROW(parse_config(R"({"alpha_m": -0.5})"), ModelError);
}

TEST(Config, MissingFileNamesPath) {
  try {
    load_config("/nonexistent/dir/model.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/model.json"), std::string::npos);
  }
}

TEST(Config, JsonRoundTrip) {
  const ModelConfig a = parse_config(R"({"kappa_m": 0.25, "sigma0_override": [1, 0.1, 0, 0.2, 0, 0.3],
                                       "psd_tol": 1e-9, "n_steps": 20})");
  const ModelConfig b = parse_config(config_to_json(a));
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.n_steps, b.n_steps);
  EXPECT_EQ(a.psd_tol, b.psd_tol);
  EXPECT_EQ(a.sigma0_override, b.sigma0_override);
  EXPECT_EQ(config_to_json(a), config_to_json(b));
}

}  // namespace
}  // namespace kyle
