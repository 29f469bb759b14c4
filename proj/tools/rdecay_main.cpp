#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rdecay/cli.hpp"
#include "rdecay/error.hpp"

using rdecay::cli::Command;
using rdecay::cli::JobConfig;

namespace {

void add_job_options(CLI::App* sub, JobConfig& cfg, std::string& lambda_text, bool model, bool r0) {
  if (model) {
    sub->add_option("--model", cfg.model_path, "model descriptor (JSON)")->required();
    sub->add_option("--lambda", lambda_text, "spectral parameter, or a comma-separated list")->required();
    sub->add_option("--rmax", cfg.r_max, "outer radius (default: where the predicted bound falls below 1e-14)");
    sub->add_option("--grid", cfg.grid_points, "points on the uniform section beyond r = 1 (>= 100)");
  }
  if (r0) sub->add_option("--r0", cfg.r0, "reference radius");
  sub->add_option("--out", cfg.out_path, "output file (default: standard output)");
  sub->add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resolvent kernels on model manifolds and decay bounds for their spherical sums"};
  app.set_version_flag("--version", std::string(rdecay::cli::kVersion));
  app.require_subcommand(1);

  JobConfig cfg;
  std::string lambda_text;
  double nu = 0.0, x = 0.0;

  auto* kernel = app.add_subcommand("kernel", "radial resolvent table: r,u,du,log_u,psi_bar,Psi");
  add_job_options(kernel, cfg, lambda_text, true, true);
  auto* sums = app.add_subcommand("sums", "spherical and extraglobular sums");
  add_job_options(sums, cfg, lambda_text, true, true);
  auto* bounds = app.add_subcommand("bounds", "decay bounds: r,psi_bar,bound_envelope,bound_uniform,lower_bound,ratio");
  add_job_options(bounds, cfg, lambda_text, true, true);
  auto* rates = app.add_subcommand("rates", "fitted against expected decay rates");
  add_job_options(rates, cfg, lambda_text, true, true);
  auto* bessel = app.add_subcommand("bessel", "K_nu(x) with identity checks");
  bessel->add_option("nu", nu, "order")->required();
  bessel->add_option("x", x, "argument")->required();
  add_job_options(bessel, cfg, lambda_text, false, false);
  auto* verify = app.add_subcommand("verify", "run invariant suites");
  verify->add_option("--suite", cfg.suite, "all, model, specfun, resolvent or bounds");
  add_job_options(verify, cfg, lambda_text, false, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    cfg.command = rdecay::cli::command_from_string(app.get_subcommands().front()->get_name());
    if (!lambda_text.empty()) rdecay::cli::parse_lambda_list(lambda_text, cfg);
    if (cfg.command == Command::bessel) cfg.positional = {nu, x};
  } catch (const rdecay::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return rdecay::cli::run(cfg, std::cout, std::cerr);
}
