#ifndef ADVEIG_REPORTS_HPP
#define ADVEIG_REPORTS_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "adveig/asymptotics.hpp"
#include "adveig/limiting.hpp"

namespace adveig {

/// Locale-independent serialization with 17 significant digits: enough for
/// doubles to round-trip bit-exactly through the CSV files.
inline std::string fmt17(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& s) {
  if (s == "nan" || s == "-nan") return kNaN;
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::runtime_error("bad number in CSV: " + s);
  return v;
}

inline const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> cols{
      "alpha",
      "lambda",
      "lambda_pred_k0", "lambda_pred_k1", "lambda_pred_k2",
      "lambda_resid_k0", "lambda_resid_k1", "lambda_resid_k2",
      "eig_resid_sup_k0", "eig_resid_sup_k1", "eig_resid_sup_k2",
      "eig_resid_l2_k0", "eig_resid_l2_k1", "eig_resid_l2_k2",
      "drift",
      "trial_bound",
      "solver_iterations", "solver_residual", "solver_inner_iterations"};
  return cols;
}

inline void write_sweep_csv(std::ostream& out, const SweepTable& table) {
  out << "#";
  const auto& cols = sweep_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : " ") << cols[i];
  out << "\n";
  for (const SweepRow& r : table.rows) {
    out << fmt17(r.alpha) << ',' << fmt17(r.lambda);
    for (int k = 0; k < 3; ++k) out << ',' << fmt17(r.lambda_pred[k]);
    for (int k = 0; k < 3; ++k) out << ',' << fmt17(r.lambda_resid[k]);
    for (int k = 0; k < 3; ++k) out << ',' << fmt17(r.eig_resid_sup[k]);
    for (int k = 0; k < 3; ++k) out << ',' << fmt17(r.eig_resid_l2[k]);
    out << ',' << fmt17(r.drift) << ',' << fmt17(r.trial_bound);
    out << ',' << r.stats.iterations << ',' << fmt17(r.stats.residual) << ','
        << r.stats.inner_iterations;
    out << "\n";
  }
}

inline SweepTable read_sweep_csv(std::istream& in) {
  SweepTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream row(line);
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != sweep_columns().size())
      throw std::runtime_error("sweep CSV row has wrong column count");
    SweepRow r;
    std::size_t c = 0;
    r.alpha = parse_double(cells[c++]);
    r.lambda = parse_double(cells[c++]);
    for (int k = 0; k < 3; ++k) r.lambda_pred[k] = parse_double(cells[c++]);
    for (int k = 0; k < 3; ++k) r.lambda_resid[k] = parse_double(cells[c++]);
    for (int k = 0; k < 3; ++k) r.eig_resid_sup[k] = parse_double(cells[c++]);
    for (int k = 0; k < 3; ++k) r.eig_resid_l2[k] = parse_double(cells[c++]);
    r.drift = parse_double(cells[c++]);
    r.trial_bound = parse_double(cells[c++]);
    r.stats.iterations = static_cast<int>(parse_double(cells[c++]));
    r.stats.residual = parse_double(cells[c++]);
    r.stats.inner_iterations = static_cast<long long>(parse_double(cells[c++]));
    table.rows.push_back(std::move(r));
  }
  return table;
}

inline void write_field_csv(std::ostream& out, const GridField& f,
                            const std::vector<std::string>& value_names,
                            const std::vector<const GridField*>& extra = {}) {
  const Grid& g = *f.grid;
  out << "#";
  for (int d = 0; d < g.dim(); ++d) out << (d ? "," : " ") << "x" << d + 1;
  for (const std::string& n : value_names) out << ',' << n;
  out << "\n";
  std::vector<double> x(g.dim());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.node(i, x);
    for (int d = 0; d < g.dim(); ++d) out << (d ? "," : "") << fmt17(x[d]);
    out << ',' << fmt17(f.v[i]);
    for (const GridField* e : extra) out << ',' << fmt17(e->v[i]);
    out << "\n";
  }
}

/// Fitted log-log rates over the top alpha decade for every diagnostic column
/// of a sweep table. `report` recomputes these from sweep.csv and must
/// reproduce them bit-for-bit, which the 17-digit serialization guarantees.
inline std::map<std::string, RateReport> compute_rates(const SweepTable& table) {
  std::map<std::string, RateReport> rates;
  std::vector<double> alphas;
  for (const SweepRow& r : table.rows) alphas.push_back(r.alpha);
  auto fit = [&](const std::string& name, auto getter) {
    std::vector<double> vals;
    for (const SweepRow& r : table.rows) vals.push_back(getter(r));
    rates[name] = fit_rate_top_decade(alphas, vals);
  };
  for (int k = 0; k < 3; ++k) {
    fit("lambda_resid_k" + std::to_string(k),
        [k](const SweepRow& r) { return r.lambda_resid[k]; });
    fit("eig_resid_sup_k" + std::to_string(k),
        [k](const SweepRow& r) { return r.eig_resid_sup[k]; });
  }
  fit("drift", [](const SweepRow& r) { return r.drift; });
  return rates;
}

}  // namespace adveig

#endif  // ADVEIG_REPORTS_HPP
