#ifndef ADVEIG_OPERATORS_HPP
#define ADVEIG_OPERATORS_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "adveig/grid.hpp"
#include "adveig/model.hpp"

namespace adveig {

enum class OperatorKind { schrodinger, rescaled, limit, limit_shifted };

/// One of the four operator forms: the gauge-transformed problem on Omega,
/// its rescaling y = alpha^{1/p} x, the alpha-independent limiting form, and
/// the limiting form shifted by lambda_hat (whose kernel is spanned by u_hat).
struct OperatorForm {
  OperatorKind kind;
  double alpha = 0.0;

  static OperatorForm schrodinger(double a) { return {OperatorKind::schrodinger, a}; }
  static OperatorForm rescaled(double a) { return {OperatorKind::rescaled, a}; }
  static OperatorForm limit() { return {OperatorKind::limit}; }
  static OperatorForm limit_shifted() { return {OperatorKind::limit_shifted}; }
};

/// Diagonal potential of the requested form at a point, in the form's own
/// coordinate frame. The rescaled value is exactly alpha^{-2/p} times the
/// Schrodinger value at alpha^{-1/p} y, which is the change of variables that
/// defines the rescaled equation.
inline double potential_value(const OperatorForm& form, const Scenario& s,
                              std::span<const double> x) {
  switch (form.kind) {
    case OperatorKind::schrodinger: {
      if (form.alpha <= 0.0) throw std::invalid_argument("alpha must be positive");
      const CoefficientValues c = eval_coefficients(s, x);
      double grad2 = 0.0;
      for (double gi : c.grad_m) grad2 += gi * gi;
      return form.alpha * form.alpha / s.epsilon * grad2 + form.alpha * c.lap_m + c.V;
    }
    case OperatorKind::rescaled: {
      if (form.alpha <= 0.0) throw std::invalid_argument("alpha must be positive");
      const double scale = std::pow(form.alpha, -1.0 / s.p);
      std::vector<double> orig(x.size());
      for (std::size_t d = 0; d < x.size(); ++d) orig[d] = scale * x[d];
      return std::pow(form.alpha, -2.0 / s.p) *
             potential_value(OperatorForm::schrodinger(form.alpha), s, orig);
    }
    case OperatorKind::limit:
    case OperatorKind::limit_shifted: {
      double r2 = 0.0;
      for (double xi : x) r2 += xi * xi;
      const double r = std::sqrt(r2);
      const double p = s.p;
      const double c0 = s.g.c0;
      return p * p * c0 * c0 / s.epsilon * detail::pow_pos(r, 2.0 * p - 2.0) +
             p * c0 * (s.dim + p - 2.0) * detail::pow_pos(r, p - 2.0);
    }
  }
  throw std::logic_error("unknown operator form");
}

/// Symmetric operator f -> -eps*Δf + (W - shift) f on a grid, with W stored
/// nodewise. Immutable after assembly; apply is pure.
class OperatorHandle {
 public:
  OperatorHandle(GridPtr grid, std::vector<double> potential, double eps,
                 double shift = 0.0)
      : grid_(std::move(grid)), w_(std::move(potential)), eps_(eps), shift_(shift) {
    if (w_.size() != grid_->size())
      throw std::invalid_argument("potential length does not match grid");
    for (double wi : w_)
      if (!std::isfinite(wi))
        throw std::invalid_argument("potential must be finite at interior nodes");
  }

  const GridPtr& grid() const { return grid_; }
  double eps() const { return eps_; }
  double shift() const { return shift_; }
  const std::vector<double>& potential() const { return w_; }

  double min_potential() const {
    double m = std::numeric_limits<double>::infinity();
    for (double wi : w_) m = std::min(m, wi - shift_);
    return m;
  }

  // Diagonal of the operator matrix, used as the CG preconditioner.
  double diagonal(std::size_t i) const {
    double d = w_[i] - shift_;
    for (int ax = 0; ax < grid_->dim(); ++ax) {
      const double h = grid_->spacing(ax);
      d += 2.0 * eps_ / (h * h);
    }
    return d;
  }

  void apply_raw(const std::vector<double>& in, std::vector<double>& out) const {
    const Grid& g = *grid_;
    const int dim = g.dim();
    out.resize(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
      double lap = 0.0;
      for (int d = 0; d < dim; ++d) {
        const int id = g.axis_index(i, d);
        const double left = id > 0 ? in[i - g.stride(d)] : 0.0;
        const double right = id < g.nodes(d) - 1 ? in[i + g.stride(d)] : 0.0;
        const double h = g.spacing(d);
        lap += (left - 2.0 * in[i] + right) / (h * h);
      }
      out[i] = -eps_ * lap + (w_[i] - shift_) * in[i];
    }
  }

  GridField apply(const GridField& f) const {
    if (!f.grid->same_as(*grid_)) throw std::invalid_argument("grid mismatch");
    GridField out = make_field(f.grid);
    apply_raw(f.v, out.v);
    return out;
  }

 private:
  GridPtr grid_;
  std::vector<double> w_;
  double eps_;
  double shift_;
};

/// Samples the form's potential on the grid. limit_shifted needs the computed
/// lambda_hat from the limiting solve; the schrodinger form requires the grid
/// to sit inside Omega.
inline OperatorHandle assemble(const OperatorForm& form, const Scenario& s,
                               const GridPtr& grid,
                               std::optional<double> lambda_hat = std::nullopt) {
  if (grid->dim() != s.dim)
    throw std::invalid_argument("grid dimension does not match scenario");
  if (form.kind == OperatorKind::limit_shifted && !lambda_hat)
    throw std::invalid_argument("limit_shifted form requires lambda_hat");
  if (form.kind == OperatorKind::schrodinger)
    for (int d = 0; d < s.dim; ++d)
      if (grid->half_width(d) > s.domain.half_widths[d] * (1.0 + 1e-12))
        throw std::invalid_argument("schrodinger grid extents must lie inside Omega");

  std::vector<double> w(grid->size());
  std::vector<double> x(grid->dim());
  for (std::size_t i = 0; i < grid->size(); ++i) {
    grid->node(i, x);
    w[i] = potential_value(form, s, x);
  }
  const double shift = form.kind == OperatorKind::limit_shifted ? *lambda_hat : 0.0;
  return OperatorHandle(grid, std::move(w), s.epsilon, shift);
}

inline double rayleigh_quotient(const OperatorHandle& op, const GridField& f) {
  const double nn = inner_product(f, f);
  if (nn == 0.0) throw std::invalid_argument("Rayleigh quotient of zero field");
  return inner_product(f, op.apply(f)) / nn;
}

/// Gauge-equivalence diagnostic. Maps the Schrodinger eigenpair (lambda, u)
/// back through phi = e^{-alpha m/eps} u and measures the max-norm residual of
/// the advection equation with central differences, after normalizing phi to
/// unit sup norm. The value is pure truncation error when the pair is right.
inline double gauge_residual(const Scenario& s, double alpha, double lambda,
                             const GridField& u) {
  const Grid& g = *u.grid;
  const int dim = g.dim();
  std::vector<double> x(dim);

  GridField phi = make_field(u.grid);
  std::vector<std::vector<double>> grad_m(g.size());
  std::vector<double> vpot(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.node(i, x);
    const CoefficientValues c = eval_coefficients(s, x);
    phi.v[i] = std::exp(-alpha * c.m / s.epsilon) * u.v[i];
    grad_m[i] = c.grad_m;
    vpot[i] = c.V;
  }
  const double scale = sup_norm(phi);
  if (scale == 0.0) throw std::invalid_argument("zero eigenfield");
  for (double& p : phi.v) p /= scale;

  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double lap = 0.0;
    double advect = 0.0;
    for (int d = 0; d < dim; ++d) {
      const int id = g.axis_index(i, d);
      const double left = id > 0 ? phi.v[i - g.stride(d)] : 0.0;
      const double right = id < g.nodes(d) - 1 ? phi.v[i + g.stride(d)] : 0.0;
      const double h = g.spacing(d);
      lap += (left - 2.0 * phi.v[i] + right) / (h * h);
      advect += grad_m[i][d] * (right - left) / (2.0 * h);
    }
    const double r = -s.epsilon * lap - 2.0 * alpha * advect +
                     (vpot[i] - lambda) * phi.v[i];
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

namespace detail {
// C-infinity bump profile: 1 on [0,1/2], exp(1 - 1/(1-(2t-1)^2)) on (1/2,1),
// 0 beyond.
inline double bump(double t) {
  if (t <= 0.5) return 1.0;
  if (t >= 1.0) return 0.0;
  const double u = 2.0 * t - 1.0;
  return std::exp(1.0 - 1.0 / (1.0 - u * u));
}
}  // namespace detail

/// Rayleigh quotient of the cut-off concentration trial function
/// phi_alpha(x) = A alpha^{N/2p} bump(|x|/r0) u_hat(alpha^{1/p} x), evaluated
/// in rescaled coordinates on the same grid family the sweep solves use, so
/// the discrete variational principle makes it a certified upper bound for
/// the computed lambda(alpha). nodes_override matches the trial grid to an
/// eigensolve that used a different resolution than u_hat's grid.
inline double trial_upper_bound(const Scenario& s, double alpha,
                                const GridField& u_hat,
                                std::optional<int> nodes_override = std::nullopt) {
  if (alpha <= 0.0) throw std::invalid_argument("alpha must be positive");
  const Grid& lg = *u_hat.grid;
  const double scale = std::pow(alpha, 1.0 / s.p);
  const double r0 = s.domain.inscribed_radius();

  std::vector<double> half(s.dim);
  std::vector<int> counts(s.dim);
  bool same = true;
  for (int d = 0; d < s.dim; ++d) {
    half[d] = std::min(lg.half_width(d), scale * s.domain.half_widths[d]);
    counts[d] = nodes_override ? *nodes_override : lg.nodes(d);
    if (half[d] != lg.half_width(d) || counts[d] != lg.nodes(d)) same = false;
  }
  GridPtr grid = same ? u_hat.grid : build_grid(s.dim, half, counts);

  GridField trial = make_field(grid);
  std::vector<double> y(s.dim);
  for (std::size_t i = 0; i < grid->size(); ++i) {
    grid->node(i, y);
    double r = 0.0;
    for (double yd : y) r += yd * yd;
    r = std::sqrt(r);
    const double cut = detail::bump(r / (scale * r0));
    if (cut == 0.0) continue;
    trial.v[i] = cut * (same ? u_hat.v[i] : interpolate(u_hat, y));
  }
  const OperatorHandle op = assemble(OperatorForm::rescaled(alpha), s, grid);
  return std::pow(alpha, 2.0 / s.p) * rayleigh_quotient(op, trial);
}

}  // namespace adveig

#endif  // ADVEIG_OPERATORS_HPP
