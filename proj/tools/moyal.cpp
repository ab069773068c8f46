#include <moyal/cli.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace moyal::cli;

  CLI::App app{"Phase-space quantum mechanics on a grid: star products, star exponentials, ground energies, spectra"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, route, out_dir, format;
  bool verify = false;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--route", route, "kernel, squaring, ode, series or closed-form");
  app.add_flag("--verify", verify, "cross-check against the position-space eigensolver");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--format", format, "csv, json or both")->check(CLI::IsMember({"csv", "json", "both"}));

  std::string f_expr, g_expr;
  double tau = -1.0;
  auto* prod = app.add_subcommand("star-prod", "star product of two expressions");
  prod->add_option("--f", f_expr, "left operand, e.g. \"x\" or \"2*x^2*p\" or \"gauss\"");
  prod->add_option("--g", g_expr, "right operand");
  auto* sexp = app.add_subcommand("star-exp", "imaginary-time star exponential Exp(-tau H / hbar)");
  sexp->add_option("--tau", tau, "imaginary time")->check(CLI::NonNegativeNumber);
  auto* ground = app.add_subcommand("ground-energy", "partition trace and ground-state energy fit");
  auto* spec = app.add_subcommand("spectrum", "low-lying levels from the real-time trace");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_code::config_error;
  }

  try {
    RunConfig cfg = config_path.empty() ? parse_config(json::object()) : load_config(config_path);
    if (!route.empty()) cfg.route = route;
    if (verify) cfg.verify = true;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (!format.empty())
      cfg.format = format == "csv" ? OutputFormat::csv : format == "json" ? OutputFormat::json : OutputFormat::both;
    if (!f_expr.empty()) cfg.f_expr = f_expr;
    if (!g_expr.empty()) cfg.g_expr = g_expr;
    if (tau >= 0.0) cfg.tau = tau;

    if (*prod) return cmd_star_prod(cfg, std::cout);
    if (*sexp) return cmd_star_exp(cfg, std::cout);
    if (*ground) return cmd_ground_energy(cfg, std::cout);
    if (*spec) return cmd_spectrum(cfg, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_code::config_error;
  } catch (const moyal::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return exit_code::config_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code::runtime_error;
  }
  return exit_code::runtime_error;
}
