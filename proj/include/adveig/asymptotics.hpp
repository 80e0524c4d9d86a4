#ifndef ADVEIG_ASYMPTOTICS_HPP
#define ADVEIG_ASYMPTOTICS_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <span>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "adveig/corrections.hpp"
#include "adveig/eigensolver.hpp"
#include "adveig/grid.hpp"
#include "adveig/limiting.hpp"
#include "adveig/model.hpp"
#include "adveig/operators.hpp"

namespace adveig {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Truncated expansion value at order K (0..2) for the scenario's mode.
inline double predicted_lambda(const ExpansionCoeffs& c, double alpha, int K) {
  if (K < 0) throw std::invalid_argument("expansion order must be nonnegative");
  const double lead = std::pow(alpha, 2.0 / c.p) * c.lambda_hat;
  if (c.mode == Mode::smooth_refined) {
    if (K > 2) throw std::invalid_argument("expansion order exceeds available terms");
    double v = lead;
    if (K >= 1) v += c.v0;
    if (K >= 2) v += std::pow(alpha, -2.0 / c.p) * c.c2;
    return v;
  }
  if (c.mode == Mode::homogeneous_refined) {
    if (K > 2) throw std::invalid_argument("expansion order exceeds available terms");
    double v = lead;
    if (K >= 1) v += std::pow(alpha, -c.q_hat / c.p) * c.m0;
    if (K >= 2) v += std::pow(alpha, -(2.0 * c.q_hat + 2.0) / c.p) * c.m1;
    return v;
  }
  if (K > 0) throw std::invalid_argument("leading mode has only the order-0 term");
  return lead;
}

struct EigResiduals {
  double sup = kNaN;
  double l2 = kNaN;
};

/// Sup- (and L2-) norm of w_tilde minus the order-K truncation of the
/// eigenfunction expansion; the top homogeneous order carries the
/// -(1/2)(∫psi_3^2) u_hat normalization adjustment.
inline EigResiduals eigenfunction_residuals(const Scenario& s, const GridField& w,
                                            const LimitSolution& lim,
                                            const CorrectionSet* corr, double alpha,
                                            int K) {
  require_same_grid(w, lim.u_hat);
  if (K < 0 || K > 2) throw std::invalid_argument("expansion order must be 0..2");
  if (K > 0 && (!corr || corr->mode != s.mode))
    throw std::invalid_argument("correction set missing for requested order");

  const std::size_t n = w.v.size();
  std::vector<double> model(lim.u_hat.v);
  if (K > 0 && s.mode == Mode::smooth_refined) {
    const double t1 = std::pow(alpha, -3.0 / s.p);
    const double t2 = std::pow(alpha, -4.0 / s.p);
    const GridField& p1 = corr->field(1);
    const GridField& p2 = corr->field(2);
    for (std::size_t i = 0; i < n; ++i) {
      model[i] += t1 * p1.v[i];
      if (K >= 2) model[i] += t2 * p2.v[i];
    }
  } else if (K > 0 && s.mode == Mode::homogeneous_refined) {
    const double q = s.homogeneous_v().q_hat;
    const double t1 = std::pow(alpha, -(q + 2.0) / s.p);
    const double t2 = std::pow(alpha, -(2.0 * q + 4.0) / s.p);
    const GridField& p3 = corr->field(3);
    const GridField& p4 = corr->field(4);
    const double p3sq = inner_product(p3, p3);
    for (std::size_t i = 0; i < n; ++i) {
      model[i] += t1 * p3.v[i];
      if (K >= 2) model[i] += t2 * (p4.v[i] - 0.5 * p3sq * lim.u_hat.v[i]);
    }
  }

  EigResiduals out;
  out.sup = 0.0;
  detail::KahanSum s2;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = w.v[i] - model[i];
    out.sup = std::max(out.sup, std::abs(d));
    s2.add(d * d);
  }
  out.l2 = std::sqrt(w.grid->cell_weight() * s2.value());
  return out;
}

inline double eigenfunction_residual(const Scenario& s, const GridField& w,
                                     const LimitSolution& lim,
                                     const CorrectionSet* corr, double alpha,
                                     int K) {
  return eigenfunction_residuals(s, w, lim, corr, alpha, K).sup;
}

/// Rescaled-coordinate norm of the eigenfield's maximum point, i.e. the drift
/// alpha^{1/p}|x_alpha|, with a 3-point parabola refinement per axis. Flags an
/// argmax on the truncation boundary shell (bad truncation).
inline double max_point_drift(const GridField& w) {
  const Grid& g = *w.grid;
  std::size_t arg = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < w.v.size(); ++i)
    if (w.v[i] > best) {
      best = w.v[i];
      arg = i;
    }
  for (int d = 0; d < g.dim(); ++d) {
    const int id = g.axis_index(arg, d);
    if (id == 0 || id == g.nodes(d) - 1)
      throw std::runtime_error("eigenfield argmax sits on the truncation boundary");
  }
  double r2 = 0.0;
  for (int d = 0; d < g.dim(); ++d) {
    const int id = g.axis_index(arg, d);
    const double fm = w.v[arg - g.stride(d)];
    const double f0 = w.v[arg];
    const double fp = w.v[arg + g.stride(d)];
    const double denom = fm - 2.0 * f0 + fp;
    double delta = 0.0;
    if (denom < 0.0) delta = 0.5 * g.spacing(d) * (fm - fp) / denom;
    delta = std::clamp(delta, -0.5 * g.spacing(d), 0.5 * g.spacing(d));
    const double pos = g.coord(d, id) + delta;
    r2 += pos * pos;
  }
  return std::sqrt(r2);
}

/// Least-squares slope of log(value) vs log(alpha).
struct RateReport {
  double slope = kNaN;
  double intercept = kNaN;
  double stderr_slope = kNaN;
  int points = 0;
  double window_lo = kNaN;
  double window_hi = kNaN;
  bool available = false;
};

inline RateReport fit_rate(std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 4)
    throw std::invalid_argument("rate fit needs at least 4 points");
  const int n = static_cast<int>(pairs.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [a, v] : pairs) {
    if (!(a > 0.0) || !(v > 0.0))
      throw std::invalid_argument("rate fit needs positive alphas and values");
    sx += std::log(a);
    sy += std::log(v);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [a, v] : pairs) {
    const double dx = std::log(a) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(v) - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("rate fit needs distinct alphas");
  RateReport r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double ss = 0.0;
  for (const auto& [a, v] : pairs) {
    const double e = std::log(v) - (r.intercept + r.slope * std::log(a));
    ss += e * e;
  }
  r.stderr_slope = n > 2 ? std::sqrt(ss / (n - 2) / sxx) : 0.0;
  r.points = n;
  r.window_lo = pairs.front().first;
  r.window_hi = pairs.back().first;
  r.available = true;
  return r;
}

/// Rate fit restricted to the top decade of alpha (the default window: the
/// expansions are asymptotic and pre-asymptotic alphas pollute slopes).
/// Values are taken in absolute value; zeros and NaNs are dropped.
inline RateReport fit_rate_top_decade(std::span<const double> alphas,
                                      std::span<const double> values) {
  if (alphas.empty()) return {};
  const double amax = *std::max_element(alphas.begin(), alphas.end());
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (alphas[i] < amax / 10.0 * (1.0 - 1e-9)) continue;
    const double v = std::abs(values[i]);
    if (!std::isfinite(v) || v == 0.0) continue;
    pts.emplace_back(alphas[i], v);
  }
  if (pts.size() < 4) return {};
  return fit_rate(pts);
}

struct GridParams {
  int nodes_per_axis = 4095;
  double radius = 8.0;
  double eig_tol = 1e-10;
  int refine_steps = 3;
};

struct LambdaResult {
  double lambda = 0.0;
  GridField w;
  EigenStats stats;
};

/// Principal eigenvalue and rescaled eigenfield at one alpha, solved in
/// rescaled coordinates on the fixed truncation box intersected with the
/// rescaled domain alpha^{1/p} Omega.
inline LambdaResult compute_lambda(const Scenario& s, double alpha,
                                   const GridParams& gp) {
  if (alpha <= 0.0) throw std::invalid_argument("alpha must be positive");
  const double scale = std::pow(alpha, 1.0 / s.p);
  std::vector<double> half(s.dim);
  for (int d = 0; d < s.dim; ++d)
    half[d] = std::min(gp.radius, scale * s.domain.half_widths[d]);
  GridPtr grid = build_grid(s.dim, half, std::vector<int>(s.dim, gp.nodes_per_axis));
  const OperatorHandle op = assemble(OperatorForm::rescaled(alpha), s, grid);
  EigenPair ep = principal_eigenpair(op, gp.eig_tol, 400, gp.refine_steps);
  if (!ep.stats.converged)
    throw SolverFailure("eigensolver did not converge in compute_lambda", ep.stats);
  LambdaResult out;
  out.lambda = std::pow(alpha, 2.0 / s.p) * ep.value;
  out.w = std::move(ep.field);
  out.stats = ep.stats;
  return out;
}

struct SweepRow {
  double alpha = 0.0;
  double lambda = 0.0;
  std::array<double, 3> lambda_pred{kNaN, kNaN, kNaN};
  std::array<double, 3> lambda_resid{kNaN, kNaN, kNaN};
  std::array<double, 3> eig_resid_sup{kNaN, kNaN, kNaN};
  std::array<double, 3> eig_resid_l2{kNaN, kNaN, kNaN};
  double drift = kNaN;
  double trial_bound = kNaN;
  EigenStats stats;
};

struct SweepTable {
  std::vector<SweepRow> rows;
};

/// Per-alpha solves are independent; rows are assembled in alpha order no
/// matter how many worker threads run them.
inline SweepTable sweep(const Scenario& s, const std::vector<double>& alphas,
                        const LimitSolution& lim, const CorrectionSet* corr,
                        const ExpansionCoeffs* coeffs, const GridParams& gp,
                        int threads = 0) {
  for (std::size_t i = 1; i < alphas.size(); ++i)
    if (!(alphas[i] > alphas[i - 1]))
      throw std::invalid_argument("alpha list must be strictly increasing");

  SweepTable table;
  table.rows.resize(alphas.size());
  if (alphas.empty()) return table;

  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= alphas.size()) return;
      try {
        const double alpha = alphas[i];
        SweepRow row;
        row.alpha = alpha;
        LambdaResult lr = compute_lambda(s, alpha, gp);
        if (!(lr.lambda > 0.0))
          throw SolverFailure("nonpositive principal eigenvalue in sweep", lr.stats);
        row.lambda = lr.lambda;
        row.stats = lr.stats;

        const int kmax = coeffs ? 2 : 0;
        for (int K = 0; K <= kmax; ++K) {
          double pred;
          if (coeffs) {
            pred = predicted_lambda(*coeffs, alpha, K);
          } else {
            pred = std::pow(alpha, 2.0 / s.p) * lim.lambda_hat;
          }
          row.lambda_pred[K] = pred;
          row.lambda_resid[K] = row.lambda - pred;
        }

        const bool same_grid = lr.w.grid->same_as(*lim.u_hat.grid);
        if (same_grid) {
          const int kres = (corr && corr->mode == s.mode) ? 2 : 0;
          for (int K = 0; K <= kres; ++K) {
            const EigResiduals er =
                eigenfunction_residuals(s, lr.w, lim, corr, alpha, K);
            row.eig_resid_sup[K] = er.sup;
            row.eig_resid_l2[K] = er.l2;
          }
        }
        row.drift = max_point_drift(lr.w);
        row.trial_bound =
            trial_upper_bound(s, alpha, lim.u_hat, gp.nodes_per_axis);
        table.rows[i] = std::move(row);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  int nthreads = threads > 0 ? threads
                             : static_cast<int>(std::thread::hardware_concurrency());
  nthreads = std::clamp<int>(nthreads, 1, static_cast<int>(alphas.size()));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return table;
}

}  // namespace adveig

#endif  // ADVEIG_ASYMPTOTICS_HPP
