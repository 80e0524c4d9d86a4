// Command-line driver: limit / corrections / sweep / verify / report.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "adveig/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "adveig: principal eigenpairs of the large-advection eigenvalue problem "
      "and verification of their asymptotic expansions"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int threads = 0;
  double alpha_min = -1.0, alpha_max = -1.0;
  int ppd = 0;

  auto add_common = [&](CLI::App* sub, bool with_sweep_flags) {
    sub->add_option("--config", config_path, "INI config file")->required();
    sub->add_option("--out-dir", out_dir, "output directory (overrides config)");
    sub->add_option("--threads", threads, "worker threads (default: all cores)");
    if (with_sweep_flags) {
      sub->add_option("--alpha-min", alpha_min, "sweep lower alpha");
      sub->add_option("--alpha-max", alpha_max, "sweep upper alpha");
      sub->add_option("--points-per-decade", ppd, "sweep density");
    }
  };

  CLI::App* limit = app.add_subcommand("limit", "solve the limiting eigenpair");
  CLI::App* corrections =
      app.add_subcommand("corrections", "solve the correction problems");
  CLI::App* sweep = app.add_subcommand("sweep", "alpha sweep with expansion checks");
  CLI::App* verify = app.add_subcommand("verify", "run the acceptance suite");
  CLI::App* report = app.add_subcommand("report", "recompute rates from sweep.csv");
  add_common(limit, false);
  add_common(corrections, false);
  add_common(sweep, true);
  add_common(verify, false);
  add_common(report, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : adveig::cli::kExitValidation;
  }

  try {
    adveig::RunConfig cfg = adveig::load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (threads > 0) cfg.threads = threads;
    if (alpha_min > 0.0) cfg.alpha_min = alpha_min;
    if (alpha_max > 0.0) cfg.alpha_max = alpha_max;
    if (ppd > 0) cfg.points_per_decade = ppd;

    if (limit->parsed()) return adveig::cli::cmd_limit(cfg);
    if (corrections->parsed()) return adveig::cli::cmd_corrections(cfg);
    if (sweep->parsed()) return adveig::cli::cmd_sweep(cfg);
    if (verify->parsed()) return adveig::cli::cmd_verify(cfg);
    if (report->parsed()) return adveig::cli::cmd_report(cfg);
  } catch (const adveig::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return adveig::cli::kExitValidation;
  } catch (const adveig::SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return adveig::cli::kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return adveig::cli::kExitSolver;
  }
  return adveig::cli::kExitValidation;
}
