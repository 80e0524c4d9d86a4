#ifndef ADVEIG_MODEL_HPP
#define ADVEIG_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace adveig {

enum class Mode { leading, smooth_refined, homogeneous_refined };

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::leading: return "leading";
    case Mode::smooth_refined: return "smooth_refined";
    case Mode::homogeneous_refined: return "homogeneous_refined";
  }
  return "?";
}

/// Multi-index sigma = (s_1, ..., s_N) with nonnegative entries.
struct MultiIndex {
  std::vector<int> sigma;

  int order() const { return std::accumulate(sigma.begin(), sigma.end(), 0); }

  double factorial() const {
    double f = 1.0;
    for (int s : sigma)
      for (int k = 2; k <= s; ++k) f *= k;
    return f;
  }

  double monomial(std::span<const double> x) const {
    double m = 1.0;
    for (std::size_t d = 0; d < sigma.size(); ++d)
      for (int k = 0; k < sigma[d]; ++k) m *= x[d];
    return m;
  }

  std::string label() const {
    std::string s = "(";
    for (std::size_t d = 0; d < sigma.size(); ++d) {
      if (d) s += ",";
      s += std::to_string(sigma[d]);
    }
    return s + ")";
  }

  bool operator<(const MultiIndex& o) const { return sigma < o.sigma; }
  bool operator==(const MultiIndex& o) const { return sigma == o.sigma; }
};

/// g(x) = c0 + beta*|x|^s. This family satisfies Δg >= 0 and x·∇g >= 0
/// identically; its envelope exponent near the origin is l = s - 1.
struct GSpec {
  double c0 = 1.0;
  double beta = 0.0;
  double s = 2.0;

  double value(double r) const { return c0 + beta * std::pow(r, s); }
};

/// Polynomial potential V(x) = Σ c_sigma x^sigma with exact Taylor data at 0.
struct SmoothV {
  std::vector<std::pair<MultiIndex, double>> monomials;

  double value(std::span<const double> x) const {
    double v = 0.0;
    for (const auto& [sig, c] : monomials) v += c * sig.monomial(x);
    return v;
  }

  double value_at_origin() const {
    double v = 0.0;
    for (const auto& [sig, c] : monomials)
      if (sig.order() == 0) v += c;
    return v;
  }

  std::vector<double> gradient_at_origin(int dim) const {
    std::vector<double> grad(dim, 0.0);
    for (const auto& [sig, c] : monomials)
      if (sig.order() == 1)
        for (int d = 0; d < dim; ++d)
          if (sig.sigma[d] == 1) grad[d] += c;
    return grad;
  }

  // D^sigma V(0) for |sigma| = 2: only the matching monomial survives, with
  // the factor sigma!.
  double second_derivative_at_origin(const MultiIndex& sig) const {
    double v = 0.0;
    for (const auto& [s2, c] : monomials)
      if (s2 == sig) v += c * sig.factorial();
    return v;
  }
};

/// Anisotropic homogeneous potential h(x) = c_h (x^T Q x)^(q/2); exactly
/// homogeneous of degree q about the origin.
struct HomogeneousV {
  double c_h = 1.0;
  double q_hat = 1.0;
  std::vector<double> Q;  // row-major N x N, defaults to identity if empty

  double quadratic(std::span<const double> x) const {
    const int n = static_cast<int>(x.size());
    if (Q.empty()) {
      double s = 0.0;
      for (double xi : x) s += xi * xi;
      return s;
    }
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += x[i] * Q[i * n + j] * x[j];
    return s;
  }

  double value(std::span<const double> x) const {
    return c_h * std::pow(quadratic(x), 0.5 * q_hat);
  }
};

using VSpec = std::variant<SmoothV, HomogeneousV>;

struct DomainSpec {
  std::vector<double> half_widths;  // Omega = Π(-a_d, a_d)

  double inscribed_radius() const {
    return *std::min_element(half_widths.begin(), half_widths.end());
  }
};

/// Full problem statement: dimension, diffusion, advection exponent, the
/// g- and V-families, the box domain, and which expansion mode applies.
struct Scenario {
  int dim = 1;
  double epsilon = 1.0;
  double p = 2.0;
  GSpec g;
  VSpec v = SmoothV{};
  DomainSpec domain{{2.0}};
  Mode mode = Mode::leading;

  bool v_is_smooth() const { return std::holds_alternative<SmoothV>(v); }
  const SmoothV& smooth_v() const { return std::get<SmoothV>(v); }
  const HomogeneousV& homogeneous_v() const { return std::get<HomogeneousV>(v); }
};

inline double v_value(const Scenario& s, std::span<const double> x) {
  return std::visit([&](const auto& fam) { return fam.value(x); }, s.v);
}

inline bool p_in_refined_set(double p) {
  return std::abs(p - 2.0) < 1e-12 || p > 3.0;
}

struct Violation {
  std::string message;
  bool fatal = true;
};

namespace detail {
// r^e with the limit value at r = 0 (positive powers vanish, r^0 = 1).
inline double pow_pos(double r, double e) {
  if (e == 0.0) return 1.0;
  if (r == 0.0) return 0.0;
  return std::pow(r, e);
}

inline bool spd_check(const std::vector<double>& Q, int n) {
  if (Q.empty()) return true;  // identity
  if (static_cast<int>(Q.size()) != n * n) return false;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(Q[i * n + j] - Q[j * n + i]) > 1e-12 * (1.0 + std::abs(Q[i * n + j])))
        return false;
  // Cholesky without pivoting; fails iff not positive definite.
  std::vector<double> L(Q);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = L[i * n + j];
      for (int k = 0; k < j; ++k) s -= L[i * n + k] * L[j * n + k];
      if (i == j) {
        if (s <= 0.0) return false;
        L[i * n + i] = std::sqrt(s);
      } else {
        L[i * n + j] = s / L[j * n + j];
      }
    }
  }
  return true;
}
}  // namespace detail

struct CoefficientValues {
  double m = 0.0;
  std::vector<double> grad_m;
  double lap_m = 0.0;
  double V = 0.0;
};

/// Closed-form m = g|x|^p, ∇m, Δm and V at a point. No numerical
/// differentiation anywhere; the r = 0 values are the limits.
inline CoefficientValues eval_coefficients(const Scenario& s,
                                           std::span<const double> x) {
  const int n = s.dim;
  if (static_cast<int>(x.size()) != n)
    throw std::invalid_argument("point dimension mismatch");
  const double p = s.p;
  double r2 = 0.0;
  for (double xi : x) r2 += xi * xi;
  const double r = std::sqrt(r2);

  const GSpec& gs = s.g;
  const double g = gs.c0 + gs.beta * detail::pow_pos(r, gs.s);
  // ∇g = beta*s*r^{s-2} x,  Δg = beta*s*(N+s-2)*r^{s-2},  x·∇g = beta*s*r^s
  const double gr_fac = gs.beta * gs.s * detail::pow_pos(r, gs.s - 2.0);
  const double lap_g = gs.beta * gs.s * (n + gs.s - 2.0) * detail::pow_pos(r, gs.s - 2.0);
  const double x_dot_grad_g = gs.beta * gs.s * detail::pow_pos(r, gs.s);

  CoefficientValues out;
  out.grad_m.resize(n);
  const double rp = detail::pow_pos(r, p);
  const double rpm2 = detail::pow_pos(r, p - 2.0);
  out.m = g * rp;
  // ∇m = |x|^p ∇g + p g |x|^{p-2} x
  for (int d = 0; d < n; ++d) out.grad_m[d] = (rp * gr_fac + p * g * rpm2) * x[d];
  // Δm = |x|^p Δg + [2p(x·∇g) + p(N+p-2)g] |x|^{p-2}
  out.lap_m = rp * lap_g + (2.0 * p * x_dot_grad_g + p * (n + p - 2.0) * g) * rpm2;
  out.V = v_value(s, x);
  return out;
}

/// Checks every structural assumption; violations are returned as data.
/// The refined-mode p restriction is reported but non-fatal, so the gap
/// p in (2,3] can still be probed.
inline std::vector<Violation> validate_scenario(const Scenario& s) {
  std::vector<Violation> report;
  auto fail = [&](std::string msg, bool fatal = true) {
    report.push_back({std::move(msg), fatal});
  };

  if (s.dim < 1) fail("dimension must be >= 1");
  if (s.dim > 2) fail("dimension above desk scale (1 or 2)", /*fatal=*/false);
  if (s.epsilon <= 0.0) fail("epsilon must be positive");
  if (s.p < 2.0) fail("p must be >= 2");
  if (s.mode != Mode::leading && !p_in_refined_set(s.p))
    fail("p outside {2}∪(3,∞) for refined mode", /*fatal=*/false);

  if (s.g.c0 <= 0.0) fail("g requires c0 > 0");
  if (s.g.beta < 0.0) fail("g requires beta >= 0");
  if (s.g.s < 2.0) fail("g requires perturbation exponent s >= 2");

  if (static_cast<int>(s.domain.half_widths.size()) != s.dim)
    fail("domain half-widths do not match dimension");
  else
    for (double a : s.domain.half_widths)
      if (a <= 0.0) fail("domain half-widths must be positive (origin interior)");

  const bool smooth = s.v_is_smooth();
  if (s.mode == Mode::smooth_refined && !smooth)
    fail("smooth_refined mode requires a smooth polynomial V family");
  if (s.mode == Mode::homogeneous_refined && smooth)
    fail("homogeneous_refined mode requires a homogeneous V family");

  if (smooth) {
    for (const auto& [sig, c] : s.smooth_v().monomials)
      if (static_cast<int>(sig.sigma.size()) != s.dim)
        fail("V monomial index does not match dimension");
  } else {
    const auto& h = s.homogeneous_v();
    if (h.c_h <= 0.0) fail("homogeneous V requires c_h > 0");
    if (h.q_hat <= 0.0) fail("homogeneous V requires q_hat > 0");
    if (!detail::spd_check(h.Q, s.dim))
      fail("homogeneous V anisotropy Q must be symmetric positive-definite");
  }

  // Envelope exponent l = s-1 near the origin; with beta = 0 the g-bounds
  // hold for every l, so only perturbed g is constrained.
  if (s.g.beta > 0.0) {
    const double l = s.g.s - 1.0;
    if (s.mode == Mode::smooth_refined && !(l > 3.0))
      fail("g envelope exponent l = s-1 must exceed 3 in smooth_refined mode");
    if (s.mode == Mode::homogeneous_refined && !smooth) {
      const double need = 2.0 * s.homogeneous_v().q_hat + 3.0;
      if (!(l > need))
        fail("g envelope exponent l = s-1 must exceed 2*q_hat+3 in homogeneous_refined mode");
    }
  }

  // V >= 0 on the closed box, by dense sampling.
  if (static_cast<int>(s.domain.half_widths.size()) == s.dim) {
    bool ok = true;
    const int per_axis = s.dim == 1 ? 257 : 65;
    std::vector<double> x(s.dim, 0.0);
    std::vector<int> idx(s.dim, 0);
    double bad_v = 0.0;
    std::vector<double> bad_x;
    while (ok) {
      for (int d = 0; d < s.dim; ++d) {
        const double a = s.domain.half_widths[d];
        x[d] = -a + 2.0 * a * idx[d] / (per_axis - 1);
      }
      const double v = v_value(s, x);
      if (v < 0.0) {
        ok = false;
        bad_v = v;
        bad_x = x;
        break;
      }
      int d = s.dim - 1;
      while (d >= 0 && ++idx[d] == per_axis) idx[d--] = 0;
      if (d < 0) break;
    }
    if (!ok) {
      std::ostringstream msg;
      msg << "V >= 0 violated (V = " << bad_v << " at x =";
      for (double xi : bad_x) msg << ' ' << xi;
      msg << ")";
      fail(msg.str());
    }
  }

  return report;
}

inline bool has_fatal(const std::vector<Violation>& report) {
  for (const auto& v : report)
    if (v.fatal) return true;
  return false;
}

}  // namespace adveig

#endif  // ADVEIG_MODEL_HPP
