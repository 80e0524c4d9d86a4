#ifndef ADVEIG_CLI_HPP
#define ADVEIG_CLI_HPP

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <json.hpp>

#include "adveig/acceptance.hpp"
#include "adveig/asymptotics.hpp"
#include "adveig/config.hpp"
#include "adveig/corrections.hpp"
#include "adveig/limiting.hpp"
#include "adveig/reports.hpp"

namespace adveig::cli {

// Exit codes: 0 success, 1 validation failure, 2 solver failure,
// 3 acceptance failure (verify only).
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitSolver = 2;
inline constexpr int kExitAcceptance = 3;

inline nlohmann::json scenario_json(const Scenario& s) {
  nlohmann::json j;
  j["dim"] = s.dim;
  j["epsilon"] = s.epsilon;
  j["p"] = s.p;
  j["mode"] = mode_name(s.mode);
  j["c0"] = s.g.c0;
  j["beta"] = s.g.beta;
  j["s"] = s.g.s;
  j["domain"] = s.domain.half_widths;
  if (s.v_is_smooth()) {
    j["v"] = "smooth";
    nlohmann::json monos = nlohmann::json::array();
    for (const auto& [sig, c] : s.smooth_v().monomials)
      monos.push_back({{"sigma", sig.sigma}, {"coeff", c}});
    j["v_monomials"] = monos;
  } else {
    const auto& h = s.homogeneous_v();
    j["v"] = "homogeneous";
    j["v_ch"] = h.c_h;
    j["v_qhat"] = h.q_hat;
    if (!h.Q.empty()) j["v_Q"] = h.Q;
  }
  return j;
}

inline nlohmann::json stats_json(const EigenStats& st) {
  return {{"iterations", st.iterations},
          {"residual", st.residual},
          {"inner_iterations", st.inner_iterations},
          {"converged", st.converged}};
}

inline nlohmann::json rate_json(const RateReport& r) {
  if (!r.available) return {{"available", false}};
  return {{"available", true},     {"slope", r.slope},
          {"intercept", r.intercept}, {"stderr", r.stderr_slope},
          {"points", r.points},    {"window_lo", r.window_lo},
          {"window_hi", r.window_hi}};
}

/// Prints violations; returns false when any fatal one blocks the run.
inline bool report_violations(const Scenario& s, std::ostream& out) {
  const auto report = validate_scenario(s);
  for (const Violation& v : report)
    out << (v.fatal ? "error: " : "warning: ") << v.message << "\n";
  return !has_fatal(report);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline bool wants_format(const RunConfig& cfg, const std::string& fmt) {
  for (const std::string& f : cfg.formats)
    if (f == fmt) return true;
  return false;
}

inline int cmd_limit(const RunConfig& cfg, std::ostream& log = std::cout) {
  if (!report_violations(cfg.scenario, log)) return kExitValidation;
  try {
    const LimitSolution lim =
        solve_limit(cfg.scenario, cfg.resolved_nodes(), cfg.radius, 1e-10, cfg.tail_tol);
    std::filesystem::create_directories(cfg.out_dir);
    if (wants_format(cfg, "csv")) {
      std::ofstream csv(std::filesystem::path(cfg.out_dir) / "limit.csv");
      write_field_csv(csv, lim.u_hat, {"u_hat"});
    }
    nlohmann::json j;
    j["command"] = "limit";
    j["scenario"] = scenario_json(cfg.scenario);
    j["lambda_hat"] = lim.lambda_hat;
    j["radius"] = lim.radius;
    j["nodes"] = cfg.resolved_nodes();
    j["spacing"] = lim.u_hat.grid->spacing(0);
    j["violations"] = lim.violations;
    j["solver"] = stats_json(lim.stats);
    if (wants_format(cfg, "json"))
      write_text(std::filesystem::path(cfg.out_dir) / "summary.json", j.dump(2) + "\n");
    log << "lambda_hat = " << fmt17(lim.lambda_hat) << " (R = " << lim.radius
        << ", n = " << cfg.resolved_nodes() << ")\n";
    if (!lim.stats.converged) return kExitSolver;
    return kExitOk;
  } catch (const SolverFailure& e) {
    log << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  }
}

inline int cmd_corrections(const RunConfig& cfg, std::ostream& log = std::cout) {
  if (!report_violations(cfg.scenario, log)) return kExitValidation;
  if (cfg.scenario.mode == Mode::leading) {
    log << "error: corrections require a refined mode\n";
    return kExitValidation;
  }
  try {
    const LimitSolution lim =
        solve_limit(cfg.scenario, cfg.resolved_nodes(), cfg.radius, 1e-10, cfg.tail_tol);
    const CorrectionSet corr = solve_corrections(cfg.scenario, lim, 1e-11);
    const ExpansionCoeffs coeffs = expansion_coefficients(cfg.scenario, lim, corr);

    std::filesystem::create_directories(cfg.out_dir);
    if (wants_format(cfg, "csv")) {
      std::ofstream csv(std::filesystem::path(cfg.out_dir) / "corrections.csv");
      std::vector<std::string> names;
      std::vector<const GridField*> extra;
      bool first = true;
      const GridField* lead = nullptr;
      for (const auto& [i, psi] : corr.psi) {
        if (first) {
          lead = &psi;
          names.push_back("psi_" + std::to_string(i));
          first = false;
        } else {
          names.push_back("psi_" + std::to_string(i));
          extra.push_back(&psi);
        }
      }
      write_field_csv(csv, *lead, names, extra);
    }
    nlohmann::json j;
    j["command"] = "corrections";
    j["scenario"] = scenario_json(cfg.scenario);
    j["lambda_hat"] = lim.lambda_hat;
    j["radius"] = lim.radius;
    if (cfg.scenario.mode == Mode::smooth_refined) {
      j["V0"] = coeffs.v0;
      j["c2"] = coeffs.c2;
    } else {
      j["M0"] = coeffs.m0;
      j["M1"] = coeffs.m1;
      j["psi3_sq"] = coeffs.psi3_sq;
    }
    nlohmann::json defects, residuals;
    for (const auto& [i, d] : corr.fredholm_defect)
      defects["psi_" + std::to_string(i)] = d;
    for (const auto& [i, r] : corr.residual)
      residuals["psi_" + std::to_string(i)] = r;
    j["fredholm_defects"] = defects;
    j["solve_residuals"] = residuals;
    if (wants_format(cfg, "json"))
      write_text(std::filesystem::path(cfg.out_dir) / "summary.json", j.dump(2) + "\n");
    log << "corrections solved (" << corr.psi.size() << " fields)\n";
    return kExitOk;
  } catch (const SolverFailure& e) {
    log << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const FredholmError& e) {
    log << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  }
}

inline int cmd_sweep(const RunConfig& cfg, std::ostream& log = std::cout) {
  if (!report_violations(cfg.scenario, log)) return kExitValidation;
  const std::vector<double> alphas = sweep_alphas(cfg);
  if (alphas.empty()) {
    log << "error: sweep range empty\n";
    return kExitValidation;
  }
  try {
    int nodes = cfg.resolved_nodes();
    std::optional<LimitSolution> lim;
    std::optional<CorrectionSet> corr;
    std::optional<ExpansionCoeffs> coeffs;
    auto build_state = [&](int n) {
      lim = solve_limit(cfg.scenario, n, cfg.radius, 1e-10, cfg.tail_tol);
      if (cfg.scenario.mode != Mode::leading) {
        corr = solve_corrections(cfg.scenario, *lim, 1e-11);
        coeffs = expansion_coefficients(cfg.scenario, *lim, *corr);
      }
    };
    build_state(nodes);

    // Grid sufficiency: the discretization's effect on lambda(alpha_max) must
    // sit below 1% of the smallest expansion term probed; halve h while that
    // is attainable at desk scale, otherwise report the shortfall.
    nlohmann::json grid_check;
    if (cfg.auto_refine && coeffs) {
      const double amax = alphas.back();
      const double term = std::abs(predicted_lambda(*coeffs, amax, 2) -
                                   predicted_lambda(*coeffs, amax, 1));
      if (term > 0.0) {
        const int cap = cfg.scenario.dim == 1 ? 16383 : 511;
        auto lambda_at = [&](int n) {
          GridParams g{n, lim->radius, 1e-10, 3};
          return compute_lambda(cfg.scenario, amax, g).lambda;
        };
        double delta = std::abs(lambda_at(nodes) - lambda_at(2 * nodes + 1));
        bool achieved = delta <= 0.01 * term;
        long long required = nodes;
        if (!achieved) {
          required = static_cast<long long>(
              std::ceil((nodes + 1) * std::sqrt(delta / (0.01 * term)))) - 1;
          if (required <= cap) {
            int n2 = 2;
            while (n2 - 1 < required) n2 <<= 1;
            nodes = n2 - 1;
            build_state(nodes);
            delta = std::abs(lambda_at(nodes) - lambda_at(2 * nodes + 1));
            achieved = delta <= 0.01 * term;
            log << "grid check: refined to n = " << nodes << "\n";
          }
        }
        grid_check["checked"] = true;
        grid_check["achieved"] = achieved;
        grid_check["nodes_used"] = nodes;
        grid_check["lambda_delta_at_alpha_max"] = delta;
        grid_check["smallest_expansion_term"] = term;
        if (!achieved) {
          grid_check["required_nodes_estimate"] = required;
          log << "grid check: lambda(alpha_max) h-sensitivity " << fmt17(delta)
              << " exceeds 1% of the smallest expansion term " << fmt17(term)
              << "; not attainable at desk scale (needs ~n = " << required
              << "). Diagnostics that compare computed and predicted values on "
                 "the shared grid remain consistent to much higher order.\n";
        }
      } else {
        grid_check["checked"] = false;
      }
    }

    GridParams gp{nodes, lim->radius, 1e-10, 3};
    const SweepTable table =
        sweep(cfg.scenario, alphas, *lim, corr ? &*corr : nullptr,
              coeffs ? &*coeffs : nullptr, gp, cfg.threads);

    std::filesystem::create_directories(cfg.out_dir);
    if (wants_format(cfg, "csv")) {
      std::ofstream csv(std::filesystem::path(cfg.out_dir) / "sweep.csv");
      write_sweep_csv(csv, table);
    }
    nlohmann::json j;
    j["command"] = "sweep";
    j["scenario"] = scenario_json(cfg.scenario);
    j["lambda_hat"] = lim->lambda_hat;
    j["radius"] = lim->radius;
    j["nodes"] = nodes;
    j["alphas"] = alphas;
    if (!grid_check.empty()) j["grid_check"] = grid_check;
    nlohmann::json rates;
    for (const auto& [name, r] : compute_rates(table)) rates[name] = rate_json(r);
    j["rates"] = rates;
    if (wants_format(cfg, "json"))
      write_text(std::filesystem::path(cfg.out_dir) / "summary.json", j.dump(2) + "\n");
    log << "sweep complete: " << table.rows.size() << " rows\n";
    return kExitOk;
  } catch (const SolverFailure& e) {
    log << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  }
}

inline int cmd_report(const RunConfig& cfg, std::ostream& log = std::cout) {
  const auto csv_path = std::filesystem::path(cfg.out_dir) / "sweep.csv";
  std::ifstream in(csv_path);
  if (!in) {
    log << "error: cannot open " << csv_path.string() << "\n";
    return kExitValidation;
  }
  const SweepTable table = read_sweep_csv(in);
  nlohmann::json rates;
  for (const auto& [name, r] : compute_rates(table)) rates[name] = rate_json(r);
  write_text(std::filesystem::path(cfg.out_dir) / "rates.json",
             rates.dump(2) + "\n");
  log << "rates recomputed from " << table.rows.size() << " rows:\n";
  for (const auto& [name, r] : compute_rates(table))
    if (r.available)
      log << "  " << name << ": slope " << fmt17(r.slope) << " over ["
          << r.window_lo << ", " << r.window_hi << "]\n";
  return kExitOk;
}

inline int cmd_verify(const RunConfig& cfg, std::ostream& log = std::cout) {
  if (!report_violations(cfg.scenario, log)) return kExitValidation;
  const AcceptanceOutcome outcome =
      run_acceptance(log, &cfg.scenario, cfg.threads);
  log << (outcome.all_pass ? "all criteria passed\n" : "acceptance FAILED\n");
  return outcome.all_pass ? kExitOk : kExitAcceptance;
}

}  // namespace adveig::cli

#endif  // ADVEIG_CLI_HPP
