#ifndef ADVEIG_LIMITING_HPP
#define ADVEIG_LIMITING_HPP

#include <array>
#include <iomanip>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "adveig/eigensolver.hpp"
#include "adveig/grid.hpp"
#include "adveig/model.hpp"
#include "adveig/operators.hpp"

namespace adveig {

namespace detail {

struct MomentCache {
  mutable std::mutex mu;
  mutable std::map<std::string, double> values;
};

// Crude variational upper bound for lambda_hat from a Gaussian trial
// exp(-a|x|^2) with a = c0/eps, using chi-moment closed forms:
// E r^k = (2a)^{-k/2} Gamma((N+k)/2) / Gamma(N/2) under the normalized trial.
inline double gaussian_trial_bound(const Scenario& s) {
  const double a = s.g.c0 / s.epsilon;
  const double N = s.dim;
  const double p = s.p;
  const double c0 = s.g.c0;
  auto radial_moment = [&](double k) {
    return std::pow(2.0 * a, -0.5 * k) *
           std::exp(std::lgamma(0.5 * (N + k)) - std::lgamma(0.5 * N));
  };
  return s.epsilon * a * N +
         p * p * c0 * c0 / s.epsilon * radial_moment(2.0 * p - 2.0) +
         p * c0 * (N + p - 2.0) * radial_moment(p - 2.0);
}

}  // namespace detail

/// Smallest radius in the ladder {6, 8, 12, 16, 24} whose a-priori
/// super-solution tail bound exp(-∫_{R/2}^R sqrt(max(W(r)-λ̄,1)/eps) dr)
/// falls below tail_tol, with W the limiting potential and λ̄ a crude
/// Gaussian-trial upper bound for lambda_hat.
inline double truncation_radius(const Scenario& s, double tail_tol) {
  if (!(tail_tol > 0.0 && tail_tol < 1.0))
    throw std::invalid_argument("tail tolerance must lie in (0,1)");
  const double lambda_bar = detail::gaussian_trial_bound(s);
  auto w_limit = [&](double r) {
    const double p = s.p;
    const double c0 = s.g.c0;
    return p * p * c0 * c0 / s.epsilon * detail::pow_pos(r, 2.0 * p - 2.0) +
           p * c0 * (s.dim + p - 2.0) * detail::pow_pos(r, p - 2.0);
  };
  static constexpr std::array<double, 5> ladder{6.0, 8.0, 12.0, 16.0, 24.0};
  for (double R : ladder) {
    // Simpson quadrature of the WKB-type exponent over [R/2, R].
    const int m = 512;  // even
    const double a = 0.5 * R, b = R, h = (b - a) / m;
    double acc = 0.0;
    for (int i = 0; i <= m; ++i) {
      const double r = a + i * h;
      const double f = std::sqrt(std::max(w_limit(r) - lambda_bar, 1.0) / s.epsilon);
      acc += f * (i == 0 || i == m ? 1.0 : (i % 2 ? 4.0 : 2.0));
    }
    const double integral = acc * h / 3.0;
    if (std::exp(-integral) <= tail_tol) return R;
  }
  throw std::runtime_error("truncation ladder exhausted: scenario pathological");
}

/// The limiting eigenpair on a decay-truncated box, with its invariant checks
/// recorded (violations are reported, not thrown, so a bad solve can still be
/// inspected) and a synchronized cache for the moments of u_hat^2.
struct LimitSolution {
  double lambda_hat = 0.0;
  GridField u_hat;
  double radius = 0.0;
  EigenStats stats;
  std::vector<std::string> violations;
  std::shared_ptr<detail::MomentCache> cache = std::make_shared<detail::MomentCache>();
};

inline LimitSolution solve_limit(const Scenario& s, int nodes_per_axis,
                                 std::optional<double> radius = std::nullopt,
                                 double eig_tol = 1e-10,
                                 double tail_tol = 1e-10) {
  LimitSolution out;
  out.radius = radius ? *radius : truncation_radius(s, tail_tol);
  if (out.radius <= 0.0) throw std::invalid_argument("truncation radius must be positive");

  GridPtr grid = build_grid(s.dim, out.radius, nodes_per_axis);
  const OperatorHandle op = assemble(OperatorForm::limit(), s, grid);
  EigenPair ep = principal_eigenpair(op, eig_tol);
  out.lambda_hat = ep.value;
  out.u_hat = std::move(ep.field);
  out.stats = ep.stats;

  auto flag = [&](const std::string& msg) { out.violations.push_back(msg); };
  if (!out.stats.converged) flag("eigensolver did not converge");
  if (!(out.lambda_hat > 0.0)) flag("lambda_hat is not positive");

  double mx = 0.0, mn = std::numeric_limits<double>::infinity();
  for (double u : out.u_hat.v) {
    mx = std::max(mx, u);
    mn = std::min(mn, u);
  }
  if (!(mn > 0.0)) flag("u_hat is not strictly positive");
  if (std::abs(inner_product(out.u_hat, out.u_hat) - 1.0) > 1e-12)
    flag("u_hat is not unit-normalized");

  // Radial monotonicity along each axis ray through the center, with a
  // round-off slack for the underflowing tail.
  const double slack = 1e-12 * mx;
  const Grid& g = *grid;
  for (int d = 0; d < s.dim && s.dim <= 2; ++d) {
    std::size_t center = 0;
    for (int e = 0; e < s.dim; ++e)
      center += static_cast<std::size_t>(g.nodes(e) / 2) * g.stride(e);
    bool mono = true;
    for (int i = g.nodes(d) / 2; i + 1 < g.nodes(d); ++i) {
      const std::size_t a = center + (i - g.nodes(d) / 2) * g.stride(d);
      if (out.u_hat.v[a + g.stride(d)] > out.u_hat.v[a] + slack) mono = false;
    }
    for (int i = g.nodes(d) / 2; i - 1 >= 0; --i) {
      const std::size_t a = center - (g.nodes(d) / 2 - i) * g.stride(d);
      if (out.u_hat.v[a - g.stride(d)] > out.u_hat.v[a] + slack) mono = false;
    }
    if (!mono) flag("u_hat is not radially non-increasing along axis " + std::to_string(d));
  }

  // Tail smallness on the outermost node shell.
  double tail = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    for (int d = 0; d < s.dim; ++d) {
      const int id = g.axis_index(i, d);
      if (id == 0 || id == g.nodes(d) - 1) {
        tail = std::max(tail, std::abs(out.u_hat.v[i]));
        break;
      }
    }
  if (tail > 1e-8 * mx)
    flag("u_hat tail at the truncation boundary exceeds 1e-8 of its maximum");

  return out;
}

/// Quadrature moment ∫ x^sigma u_hat^2 dx over the truncation box, cached.
inline double moment(const LimitSolution& lim, const MultiIndex& sigma) {
  if (static_cast<int>(sigma.sigma.size()) != lim.u_hat.grid->dim())
    throw std::invalid_argument("moment index does not match grid dimension");
  const std::string key = "x^" + sigma.label();
  {
    std::lock_guard<std::mutex> lock(lim.cache->mu);
    auto it = lim.cache->values.find(key);
    if (it != lim.cache->values.end()) return it->second;
  }
  const Grid& g = *lim.u_hat.grid;
  std::vector<double> x(g.dim());
  detail::KahanSum s;
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.node(i, x);
    const double u = lim.u_hat.v[i];
    s.add(sigma.monomial(x) * u * u);
  }
  const double val = g.cell_weight() * s.value();
  std::lock_guard<std::mutex> lock(lim.cache->mu);
  lim.cache->values.emplace(key, val);
  return val;
}

/// ∫ h_hat u_hat^2 dx for the scenario's homogeneous potential, cached by the
/// family's parameters.
inline double hhat_moment(const LimitSolution& lim, const Scenario& s) {
  if (s.v_is_smooth())
    throw std::invalid_argument("h_hat moment requires a homogeneous V family");
  std::string key;
  {
    const HomogeneousV& hv = s.homogeneous_v();
    std::ostringstream os;
    os << "hhat:" << std::setprecision(17) << hv.c_h << ':' << hv.q_hat;
    for (double q : hv.Q) os << ':' << q;
    key = os.str();
  }
  {
    std::lock_guard<std::mutex> lock(lim.cache->mu);
    auto it = lim.cache->values.find(key);
    if (it != lim.cache->values.end()) return it->second;
  }
  const Grid& g = *lim.u_hat.grid;
  const HomogeneousV& h = s.homogeneous_v();
  std::vector<double> x(g.dim());
  detail::KahanSum acc;
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.node(i, x);
    const double u = lim.u_hat.v[i];
    acc.add(h.value(x) * u * u);
  }
  const double val = g.cell_weight() * acc.value();
  std::lock_guard<std::mutex> lock(lim.cache->mu);
  lim.cache->values.emplace(key, val);
  return val;
}

/// ∫ h_hat u_hat f dx pairing for a supplied field on the limiting grid.
inline double hhat_pairing(const LimitSolution& lim, const Scenario& s,
                           const GridField& f) {
  if (s.v_is_smooth())
    throw std::invalid_argument("h_hat pairing requires a homogeneous V family");
  require_same_grid(lim.u_hat, f);
  const Grid& g = *lim.u_hat.grid;
  const HomogeneousV& h = s.homogeneous_v();
  std::vector<double> x(g.dim());
  detail::KahanSum acc;
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.node(i, x);
    acc.add(h.value(x) * lim.u_hat.v[i] * f.v[i]);
  }
  return g.cell_weight() * acc.value();
}

/// Overload resolving the trial bound from a LimitSolution.
inline double trial_upper_bound(const Scenario& s, double alpha,
                                const LimitSolution& lim) {
  return trial_upper_bound(s, alpha, lim.u_hat);
}

}  // namespace adveig

#endif  // ADVEIG_LIMITING_HPP
