#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "adveig/cli.hpp"
#include "adveig/config.hpp"
#include "adveig/reports.hpp"

using namespace adveig;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("adveig_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.ini";
  std::ofstream out(p);
  out << text;
  return p;
}

}  // namespace

TEST_CASE("INI parsing and config defaults") {
  std::istringstream in(
      "# comment\n"
      "[scenario]\n"
      "dim = 1\n"
      "p = 2\n"
      "c0 = 1\n"
      "beta = 0.01\n"
      "s = 5\n"
      "mode = smooth_refined\n"
      "v = smooth\n"
      "v_monomials = (0):1 ; (1):1 ; (2):1\n"
      "domain = 2.0\n"
      "[grid]\n"
      "nodes = 1023\n"
      "[sweep]\n"
      "alpha_min = 1e2\n"
      "alpha_max = 1e4\n"
      "points_per_decade = 4\n"
      "[output]\n"
      "dir = /tmp/somewhere\n");
  const RunConfig cfg = config_from_ini(parse_ini(in));
  CHECK(cfg.scenario.dim == 1);
  CHECK(cfg.scenario.p == 2.0);
  CHECK(cfg.scenario.g.beta == 0.01);
  CHECK(cfg.scenario.mode == Mode::smooth_refined);
  CHECK(cfg.scenario.smooth_v().monomials.size() == 3);
  CHECK(cfg.nodes_per_axis == 1023);
  CHECK(cfg.out_dir == "/tmp/somewhere");
  CHECK(cfg.tail_tol == 1e-10);  // documented default

  const std::vector<double> alphas = sweep_alphas(cfg);
  CHECK(alphas.size() == 9);
  CHECK(alphas.front() == doctest::Approx(1e2));
  CHECK(alphas.back() == doctest::Approx(1e4));
}

TEST_CASE("config errors") {
  std::istringstream missing_p("[scenario]\nc0 = 1\n");
  CHECK_THROWS_AS(config_from_ini(parse_ini(missing_p)), ConfigError);

  std::istringstream bad_mode("[scenario]\np = 2\nc0 = 1\nmode = turbo\n");
  CHECK_THROWS_AS(config_from_ini(parse_ini(bad_mode)), ConfigError);

  std::istringstream bad_line("[scenario\np = 2\n");
  CHECK_THROWS_AS(parse_ini(bad_line), ConfigError);

  std::istringstream bad_num("[scenario]\np = two\nc0 = 1\n");
  CHECK_THROWS_AS(config_from_ini(parse_ini(bad_num)), ConfigError);
}

TEST_CASE("empty sweep range") {
  std::istringstream in("[scenario]\np = 2\nc0 = 1\n[sweep]\nalpha_min = 100\nalpha_max = 10\n");
  const RunConfig cfg = config_from_ini(parse_ini(in));
  CHECK(sweep_alphas(cfg).empty());
  std::ostringstream log;
  CHECK(cli::cmd_sweep(cfg, log) == cli::kExitValidation);
  CHECK(log.str().find("sweep range empty") != std::string::npos);
}

TEST_CASE("17-digit serialization round-trips doubles bit-exactly") {
  for (double x : {1.0 / 3.0, 3.9999999999999964, 1e-300, -2.5e17, 0.1}) {
    CHECK(parse_double(fmt17(x)) == x);
  }
  CHECK(std::isnan(parse_double(fmt17(kNaN))));
}

TEST_CASE("cmd_limit writes limit.csv and summary.json") {
  const fs::path dir = temp_dir("limit");
  std::istringstream in("[scenario]\np = 2\nc0 = 1\n[grid]\nnodes = 511\n");
  RunConfig cfg = config_from_ini(parse_ini(in));
  cfg.out_dir = (dir / "out").string();
  std::ostringstream log;
  CHECK(cli::cmd_limit(cfg, log) == cli::kExitOk);

  std::ifstream js(fs::path(cfg.out_dir) / "summary.json");
  REQUIRE(js.good());
  nlohmann::json j;
  js >> j;
  CHECK(std::abs(j["lambda_hat"].get<double>() - 4.0) <= 1e-3);
  CHECK(j["violations"].empty());

  std::ifstream csv(fs::path(cfg.out_dir) / "limit.csv");
  REQUIRE(csv.good());
  std::string header;
  std::getline(csv, header);
  CHECK(header.rfind("#", 0) == 0);
  CHECK(header.find("u_hat") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("validation failure exits 1 and names the assumption") {
  std::istringstream in("[scenario]\np = 1.5\nc0 = 1\n");
  const RunConfig cfg = config_from_ini(parse_ini(in));
  std::ostringstream log;
  CHECK(cli::cmd_limit(cfg, log) == cli::kExitValidation);
  CHECK(log.str().find("p must be >= 2") != std::string::npos);
}

TEST_CASE("corrections command writes coefficients") {
  const fs::path dir = temp_dir("corr");
  std::istringstream in(
      "[scenario]\np = 2\nc0 = 1\nmode = smooth_refined\n"
      "v_monomials = (0):1;(1):1;(2):1\n[grid]\nnodes = 1023\n");
  RunConfig cfg = config_from_ini(parse_ini(in));
  cfg.out_dir = (dir / "out").string();
  std::ostringstream log;
  CHECK(cli::cmd_corrections(cfg, log) == cli::kExitOk);
  std::ifstream js(fs::path(cfg.out_dir) / "summary.json");
  nlohmann::json j;
  js >> j;
  CHECK(std::abs(j["c2"].get<double>() - 0.25) <= 1e-3);
  CHECK(j["V0"].get<double>() == 1.0);
  fs::remove_all(dir);
}

TEST_CASE("corrections demand a refined mode") {
  std::istringstream in("[scenario]\np = 2\nc0 = 1\n");
  const RunConfig cfg = config_from_ini(parse_ini(in));
  std::ostringstream log;
  CHECK(cli::cmd_corrections(cfg, log) == cli::kExitValidation);
  CHECK(log.str().find("refined mode") != std::string::npos);
}

TEST_CASE("report without a sweep.csv fails cleanly") {
  std::istringstream in("[scenario]\np = 2\nc0 = 1\n");
  RunConfig cfg = config_from_ini(parse_ini(in));
  cfg.out_dir = (fs::temp_directory_path() / "adveig_missing_dir").string();
  fs::remove_all(cfg.out_dir);
  std::ostringstream log;
  CHECK(cli::cmd_report(cfg, log) == cli::kExitValidation);
}

TEST_CASE("sweep grid check refines when attainable and reports otherwise") {
  SUBCASE("attainable: driver refines the grid") {
    const fs::path dir = temp_dir("refine");
    std::istringstream in(
        "[scenario]\np = 2\nc0 = 1\nmode = smooth_refined\n"
        "v_monomials = (0):1;(1):1;(2):1\n[grid]\nnodes = 255\n"
        "[sweep]\nalpha_min = 1\nalpha_max = 10\npoints_per_decade = 4\n");
    RunConfig cfg = config_from_ini(parse_ini(in));
    cfg.out_dir = (dir / "out").string();
    std::ostringstream log;
    REQUIRE(cli::cmd_sweep(cfg, log) == cli::kExitOk);
    std::ifstream js(fs::path(cfg.out_dir) / "summary.json");
    nlohmann::json j;
    js >> j;
    REQUIRE(j.contains("grid_check"));
    CHECK(j["grid_check"]["checked"].get<bool>());
    CHECK(j["grid_check"]["achieved"].get<bool>());
    CHECK(j["nodes"].get<int>() > 255);
    fs::remove_all(dir);
  }
  SUBCASE("unattainable at desk scale: reported, grid kept") {
    const fs::path dir = temp_dir("norefine");
    std::istringstream in(
        "[scenario]\np = 2\nc0 = 1\nmode = smooth_refined\n"
        "v_monomials = (0):1;(1):1;(2):1\n[grid]\nnodes = 511\n"
        "[sweep]\nalpha_min = 1e2\nalpha_max = 1e3\npoints_per_decade = 4\n");
    RunConfig cfg = config_from_ini(parse_ini(in));
    cfg.out_dir = (dir / "out").string();
    std::ostringstream log;
    REQUIRE(cli::cmd_sweep(cfg, log) == cli::kExitOk);
    std::ifstream js(fs::path(cfg.out_dir) / "summary.json");
    nlohmann::json j;
    js >> j;
    REQUIRE(j.contains("grid_check"));
    CHECK(!j["grid_check"]["achieved"].get<bool>());
    CHECK(j["grid_check"]["required_nodes_estimate"].get<long long>() > 16383);
    CHECK(j["nodes"].get<int>() == 511);
    CHECK(log.str().find("not attainable at desk scale") != std::string::npos);
    fs::remove_all(dir);
  }
  SUBCASE("leading mode has nothing to check") {
    const fs::path dir = temp_dir("leadref");
    std::istringstream in(
        "[scenario]\np = 2\nc0 = 1\n[grid]\nnodes = 255\n"
        "[sweep]\nalpha_min = 1e2\nalpha_max = 1e3\npoints_per_decade = 4\n");
    RunConfig cfg = config_from_ini(parse_ini(in));
    cfg.out_dir = (dir / "out").string();
    std::ostringstream log;
    REQUIRE(cli::cmd_sweep(cfg, log) == cli::kExitOk);
    std::ifstream js(fs::path(cfg.out_dir) / "summary.json");
    nlohmann::json j;
    js >> j;
    CHECK(!j.contains("grid_check"));
    fs::remove_all(dir);
  }
}

TEST_CASE("2D smooth-refined sweep end to end") {
  const fs::path dir = temp_dir("sweep2d");
  std::istringstream in(
      "[scenario]\ndim = 2\np = 2\nc0 = 1\nmode = smooth_refined\n"
      "v_monomials = (0,0):1 ; (1,0):1 ; (2,0):1 ; (0,2):1\n"
      "domain = 2.0,2.0\n[grid]\nnodes = 63\nradius = 6\n"
      "[sweep]\nalpha_min = 1e2\nalpha_max = 1e3\npoints_per_decade = 4\n"
      "auto_refine = false\n");
  RunConfig cfg = config_from_ini(parse_ini(in));
  cfg.out_dir = (dir / "out").string();
  std::ostringstream log;
  REQUIRE(cli::cmd_sweep(cfg, log) == cli::kExitOk);

  std::ifstream csv(fs::path(cfg.out_dir) / "sweep.csv");
  const SweepTable t = read_sweep_csv(csv);
  REQUIRE(t.rows.size() == 5);
  for (const SweepRow& r : t.rows) {
    CHECK(r.lambda > 0.0);
    CHECK(r.lambda <= r.trial_bound + 1e-6 * r.lambda);
    CHECK(!std::isnan(r.eig_resid_sup[2]));
  }
  // Drift decays with the odd V component suppressed at large alpha.
  CHECK(t.rows.back().drift < t.rows.front().drift);
  fs::remove_all(dir);
}

TEST_CASE("report reproduces sweep rates bit-for-bit") {
  const fs::path dir = temp_dir("report");
  std::istringstream in(
      "[scenario]\np = 2\nc0 = 1\n[grid]\nnodes = 511\n"
      "[sweep]\nalpha_min = 1e2\nalpha_max = 1e3\npoints_per_decade = 4\n");
  RunConfig cfg = config_from_ini(parse_ini(in));
  cfg.out_dir = (dir / "out").string();
  std::ostringstream log;
  REQUIRE(cli::cmd_sweep(cfg, log) == cli::kExitOk);
  REQUIRE(cli::cmd_report(cfg, log) == cli::kExitOk);

  nlohmann::json sweep_json, rates_json;
  {
    std::ifstream a(fs::path(cfg.out_dir) / "summary.json");
    nlohmann::json j;
    a >> j;
    sweep_json = j["rates"];
  }
  {
    std::ifstream b(fs::path(cfg.out_dir) / "rates.json");
    b >> rates_json;
  }
  CHECK(sweep_json == rates_json);  // nlohmann compares doubles exactly
  fs::remove_all(dir);
}
