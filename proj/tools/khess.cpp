// khess: batch driver for the k-Hessian verification suites.
//
//   khess <identities|geometry|energy|variation|dirichlet> [--config file.json] [overrides]

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "khess/cli.hpp"

int main(int argc, char** argv) {
  using namespace khess::cli;

  CLI::App app{"Complex k-Hessian algebra, boundary geometry and energy checks"};
  std::string command, config_path, out;
  std::optional<int> n, radial_order, angular_count, boundary_count;
  std::optional<double> R, tol_scale;
  std::optional<std::uint64_t> seed;
  std::vector<int> ks;

  app.add_option("command", command, "identities | geometry | energy | variation | dirichlet")
      ->required()
      ->check(CLI::IsMember({"identities", "geometry", "energy", "variation", "dirichlet"}));
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", out, "output directory");
  app.add_option("--n", n, "complex dimension");
  app.add_option("--R", R, "ball radius");
  app.add_option("--k", ks, "Hessian orders (repeatable)");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--radial-order", radial_order, "Gauss-Legendre points in radius");
  app.add_option("--angular-count", angular_count, "sphere node budget");
  app.add_option("--boundary-count", boundary_count, "boundary sphere node budget (default: angular count)");
  app.add_option("--tol-scale", tol_scale, "multiplier on every tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }

  RunConfig cfg;
  try {
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      cfg = parse_config(nlohmann::json::parse(is));
    }
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "validation error: config is not valid JSON: " << e.what() << '\n';
    return kConfigError;
  } catch (const khess::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kConfigError;
  }
  if (!out.empty()) cfg.out = out;
  if (n) cfg.n = *n;
  if (R) cfg.R = *R;
  if (!ks.empty()) cfg.k = ks;
  if (seed) cfg.seed = *seed;
  if (radial_order) cfg.radial_order = *radial_order;
  if (angular_count) cfg.angular_count = *angular_count;
  if (boundary_count) cfg.boundary_count = *boundary_count;
  if (tol_scale) cfg.tol_scale = *tol_scale;

  return run_command(command, cfg);
}
