#ifndef ADVEIG_CONFIG_HPP
#define ADVEIG_CONFIG_HPP

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "adveig/model.hpp"

namespace adveig {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

}  // namespace detail

/// Flat INI: [section] headers, key = value lines, '#' or ';' comments.
using IniData = std::map<std::string, std::map<std::string, std::string>>;

inline IniData parse_ini(std::istream& in) {
  IniData data;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // '#' starts a comment anywhere; ';' only at line start (it separates
    // entries inside values such as v_monomials).
    const auto cut = line.find('#');
    if (cut != std::string::npos) line = line.substr(0, cut);
    line = detail::trim(line);
    if (line.empty() || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    data[section][detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
  }
  return data;
}

/// Parsed configuration: scenario, grid, sweep, and output sections. Every
/// key has a documented default except the scenario's p and c0.
struct RunConfig {
  Scenario scenario;
  int nodes_per_axis = 0;  // 0 = dimension-dependent default (4095 / 255)
  std::optional<double> radius;
  double tail_tol = 1e-10;
  double alpha_min = 1e2;
  double alpha_max = 1e4;
  int points_per_decade = 4;
  bool auto_refine = true;
  std::string out_dir = "out";
  std::vector<std::string> formats{"csv", "json"};
  int threads = 0;  // 0 = available parallelism

  int resolved_nodes() const {
    if (nodes_per_axis > 0) return nodes_per_axis;
    return scenario.dim == 1 ? 4095 : 255;
  }
};

namespace detail {

inline double get_num(const IniData& d, const std::string& sec,
                      const std::string& key, std::optional<double> fallback) {
  auto s = d.find(sec);
  if (s != d.end()) {
    auto k = s->second.find(key);
    if (k != s->second.end()) {
      try {
        std::size_t pos = 0;
        const double v = std::stod(k->second, &pos);
        if (pos != k->second.size()) throw std::invalid_argument("trailing text");
        return v;
      } catch (const std::exception&) {
        throw ConfigError("config key [" + sec + "] " + key + ": not a number: " + k->second);
      }
    }
  }
  if (!fallback)
    throw ConfigError("config key [" + sec + "] " + key + " is required");
  return *fallback;
}

inline std::string get_str(const IniData& d, const std::string& sec,
                           const std::string& key, const std::string& fallback) {
  auto s = d.find(sec);
  if (s == d.end()) return fallback;
  auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

// "(2,0):1.5 ; (0,2):0.5" -> monomial list.
inline std::vector<std::pair<MultiIndex, double>> parse_monomials(
    const std::string& text, int dim) {
  std::vector<std::pair<MultiIndex, double>> out;
  if (trim(text).empty()) return out;
  for (const std::string& entry : split(text, ';')) {
    if (entry.empty()) continue;
    const auto open = entry.find('(');
    const auto close = entry.find(')');
    const auto colon = entry.find(':', close == std::string::npos ? 0 : close);
    if (open == std::string::npos || close == std::string::npos ||
        colon == std::string::npos)
      throw ConfigError("v_monomials entry must look like (2,0):1.5, got: " + entry);
    MultiIndex sig;
    for (const std::string& si : split(entry.substr(open + 1, close - open - 1), ','))
      sig.sigma.push_back(std::stoi(si));
    if (static_cast<int>(sig.sigma.size()) != dim)
      throw ConfigError("v_monomials index " + sig.label() + " does not match dim");
    out.emplace_back(std::move(sig), std::stod(entry.substr(colon + 1)));
  }
  return out;
}

// "1,0;0,1" row-major.
inline std::vector<double> parse_matrix(const std::string& text, int dim) {
  if (trim(text).empty()) return {};
  std::vector<double> out;
  const auto rows = split(text, ';');
  if (static_cast<int>(rows.size()) != dim)
    throw ConfigError("v_Q must have one row per dimension");
  for (const std::string& row : rows) {
    const auto cols = split(row, ',');
    if (static_cast<int>(cols.size()) != dim)
      throw ConfigError("v_Q rows must have one entry per dimension");
    for (const std::string& c : cols) out.push_back(std::stod(c));
  }
  return out;
}

}  // namespace detail

inline RunConfig config_from_ini(const IniData& ini) {
  RunConfig cfg;
  Scenario& s = cfg.scenario;

  s.dim = static_cast<int>(detail::get_num(ini, "scenario", "dim", 1.0));
  s.epsilon = detail::get_num(ini, "scenario", "epsilon", 1.0);
  s.p = detail::get_num(ini, "scenario", "p", std::nullopt);
  s.g.c0 = detail::get_num(ini, "scenario", "c0", std::nullopt);
  s.g.beta = detail::get_num(ini, "scenario", "beta", 0.0);
  s.g.s = detail::get_num(ini, "scenario", "s", 2.0);

  const std::string mode = detail::get_str(ini, "scenario", "mode", "leading");
  if (mode == "leading") s.mode = Mode::leading;
  else if (mode == "smooth_refined") s.mode = Mode::smooth_refined;
  else if (mode == "homogeneous_refined") s.mode = Mode::homogeneous_refined;
  else throw ConfigError("unknown mode: " + mode);

  const std::string vkind = detail::get_str(ini, "scenario", "v", "smooth");
  if (vkind == "smooth") {
    SmoothV v;
    v.monomials = detail::parse_monomials(
        detail::get_str(ini, "scenario", "v_monomials", ""), s.dim);
    s.v = std::move(v);
  } else if (vkind == "homogeneous") {
    HomogeneousV v;
    v.c_h = detail::get_num(ini, "scenario", "v_ch", 1.0);
    v.q_hat = detail::get_num(ini, "scenario", "v_qhat", 1.0);
    v.Q = detail::parse_matrix(detail::get_str(ini, "scenario", "v_Q", ""), s.dim);
    s.v = std::move(v);
  } else {
    throw ConfigError("unknown V family: " + vkind);
  }

  const std::string dom = detail::get_str(ini, "scenario", "domain", "2.0");
  s.domain.half_widths.clear();
  for (const std::string& a : detail::split(dom, ','))
    s.domain.half_widths.push_back(std::stod(a));
  if (s.domain.half_widths.size() == 1 && s.dim > 1)
    s.domain.half_widths.assign(s.dim, s.domain.half_widths[0]);

  cfg.nodes_per_axis = static_cast<int>(detail::get_num(ini, "grid", "nodes", 0.0));
  const std::string rad = detail::get_str(ini, "grid", "radius", "auto");
  if (rad != "auto") cfg.radius = std::stod(rad);
  cfg.tail_tol = detail::get_num(ini, "grid", "tail_tol", 1e-10);

  cfg.alpha_min = detail::get_num(ini, "sweep", "alpha_min", 1e2);
  cfg.alpha_max = detail::get_num(ini, "sweep", "alpha_max", 1e4);
  cfg.points_per_decade =
      static_cast<int>(detail::get_num(ini, "sweep", "points_per_decade", 4.0));
  const std::string refine = detail::get_str(ini, "sweep", "auto_refine", "true");
  if (refine == "true") cfg.auto_refine = true;
  else if (refine == "false") cfg.auto_refine = false;
  else throw ConfigError("auto_refine must be true or false");

  cfg.out_dir = detail::get_str(ini, "output", "dir", "out");
  cfg.formats = detail::split(detail::get_str(ini, "output", "formats", "csv,json"), ',');
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return config_from_ini(parse_ini(in));
}

/// Geometric alpha ladder from alpha_min to alpha_max at the configured
/// points per decade (endpoints included; empty when the range is empty).
inline std::vector<double> sweep_alphas(const RunConfig& cfg) {
  std::vector<double> out;
  if (!(cfg.alpha_min > 0.0) || cfg.alpha_max < cfg.alpha_min) return out;
  if (cfg.points_per_decade < 1)
    throw ConfigError("points_per_decade must be at least 1");
  const double step = 1.0 / cfg.points_per_decade;
  for (int k = 0;; ++k) {
    const double a = cfg.alpha_min * std::pow(10.0, k * step);
    if (a > cfg.alpha_max * (1.0 + 1e-9)) break;
    out.push_back(a);
  }
  if (!out.empty() && out.back() < cfg.alpha_max * (1.0 - 1e-9))
    out.push_back(cfg.alpha_max);
  return out;
}

}  // namespace adveig

#endif  // ADVEIG_CONFIG_HPP
