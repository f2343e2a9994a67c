#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cli.hpp"
#include "kyle/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Equilibrium, filtering and stability analyses for the Kyle model with feedback traders"};
  app.set_version_flag("--version", std::string(kyle::kVersion));
  app.require_subcommand(1);

  kyle::cli::Invocation inv;
  std::uint64_t seed = 0;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", inv.config_path, "JSON config file")->required();
    sub->add_option("--out", inv.out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "RNG seed (overrides run.seed)");
    sub->add_option("--threads", inv.threads, "worker threads")->capture_default_str();
    sub->add_flag("--paper-literal-lambda", inv.paper_literal_lambda,
                  "report lambda = Sigma_vv * beta instead of the filter gain");
  };

  const char* names[][2] = {
      {"equilibrium", "solve for the insider's equilibrium intensity"},
      {"sweep", "scan the feedback ray: deviation, stability, filter exponent, Lipschitz"},
      {"simulate", "Monte Carlo of the market under the equilibrium intensity"},
      {"stability", "feedback matrix, spectral radius and induced norms"},
      {"sensitivity", "tangent-linear and finite-difference sensitivity to gamma_F"},
      {"riccati", "covariance, gain and impact paths for a given intensity"},
      {"breakdown", "scan H = gamma_F^2 + gamma_C^2 for Riccati breakdown"},
  };
  std::string chosen;
  for (const auto& n : names) {
    CLI::App* sub = app.add_subcommand(n[0], n[1]);
    add_common(sub);
    sub->callback([&chosen, name = std::string(n[0])] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kyle::cli::kInputError;
  }
  for (CLI::App* sub : app.get_subcommands()) {
    if (sub->count("--seed") > 0) inv.seed = seed;
  }
  return kyle::cli::run_command(chosen, inv);
}
