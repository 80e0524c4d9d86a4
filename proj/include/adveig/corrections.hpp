#ifndef ADVEIG_CORRECTIONS_HPP
#define ADVEIG_CORRECTIONS_HPP

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "adveig/grid.hpp"
#include "adveig/limiting.hpp"
#include "adveig/model.hpp"
#include "adveig/operators.hpp"

namespace adveig {

struct FredholmError : std::runtime_error {
  double defect;
  FredholmError(const std::string& what, double d)
      : std::runtime_error(what), defect(d) {}
};

/// Enumerates all |sigma| = 2 multi-indices in N dimensions.
inline std::vector<MultiIndex> second_order_indices(int dim) {
  std::vector<MultiIndex> out;
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) {
      MultiIndex m{std::vector<int>(dim, 0)};
      m.sigma[i] += 1;
      m.sigma[j] += 1;
      out.push_back(std::move(m));
    }
  return out;
}

/// Right-hand sides of the four correction problems, sampled nodewise on the
/// limiting grid. i = 1,2 need the smooth Taylor data of V at the origin;
/// i = 3,4 the homogeneous family, and i = 4 additionally the solved psi_3.
inline GridField build_rhs(int i, const Scenario& s, const LimitSolution& lim,
                           const GridField* psi3 = nullptr) {
  const Grid& g = *lim.u_hat.grid;
  std::vector<double> x(g.dim());
  GridField F = make_field(lim.u_hat.grid);

  if (i == 1 || i == 2) {
    if (!s.v_is_smooth())
      throw std::invalid_argument("corrections 1,2 require a smooth V family");
    const SmoothV& V = s.smooth_v();
    if (i == 1) {
      const std::vector<double> grad = V.gradient_at_origin(s.dim);
      for (std::size_t k = 0; k < g.size(); ++k) {
        g.node(k, x);
        double dot = 0.0;
        for (int d = 0; d < s.dim; ++d) dot += x[d] * grad[d];
        F.v[k] = -dot * lim.u_hat.v[k];
      }
    } else {
      struct Term {
        MultiIndex sigma;
        double coeff;  // D^sigma V(0)/sigma!
        double mom;    // ∫ x^sigma u_hat^2
      };
      std::vector<Term> terms;
      for (const MultiIndex& sig : second_order_indices(s.dim)) {
        const double d2 = V.second_derivative_at_origin(sig);
        if (d2 == 0.0) continue;
        terms.push_back({sig, d2 / sig.factorial(), moment(lim, sig)});
      }
      for (std::size_t k = 0; k < g.size(); ++k) {
        g.node(k, x);
        double acc = 0.0;
        for (const Term& t : terms)
          acc += t.coeff * (-t.sigma.monomial(x) + t.mom);
        F.v[k] = acc * lim.u_hat.v[k];
      }
    }
    return F;
  }

  if (i == 3 || i == 4) {
    if (s.v_is_smooth())
      throw std::invalid_argument("corrections 3,4 require a homogeneous V family");
    const HomogeneousV& h = s.homogeneous_v();
    const double m0 = hhat_moment(lim, s);
    if (i == 3) {
      for (std::size_t k = 0; k < g.size(); ++k) {
        g.node(k, x);
        F.v[k] = (-h.value(x) + m0) * lim.u_hat.v[k];
      }
    } else {
      if (!psi3) throw std::invalid_argument("correction 4 requires solved psi_3");
      require_same_grid(lim.u_hat, *psi3);
      const double m1 = hhat_pairing(lim, s, *psi3);
      for (std::size_t k = 0; k < g.size(); ++k) {
        g.node(k, x);
        F.v[k] = -h.value(x) * psi3->v[k] + m1 * lim.u_hat.v[k] + m0 * psi3->v[k];
      }
    }
    return F;
  }

  throw std::invalid_argument("correction index must be in {1,2,3,4}");
}

/// Solves L psi = F with <psi, u_hat> = 0 (L the limiting operator shifted by
/// the computed lambda_hat, whose discrete kernel is the discrete u_hat).
/// F is projected onto the complement of u_hat, the singular-but-semidefinite
/// system is solved by CG re-orthogonalized against u_hat every iteration,
/// and the result is re-projected once more.
inline GridField solve_constrained(const Scenario& s, const LimitSolution& lim,
                                   const GridField& F, double tol = 1e-10,
                                   const GridField* start = nullptr,
                                   double* defect_out = nullptr,
                                   double* residual_out = nullptr,
                                   double fredholm_tol = 1e-8) {
  require_same_grid(lim.u_hat, F);
  const GridPtr& grid = lim.u_hat.grid;
  const std::size_t n = grid->size();
  const double w = grid->cell_weight();

  const double fnorm = l2_norm(F);
  const double defect = std::abs(inner_product(F, lim.u_hat));
  if (defect_out) *defect_out = defect;
  if (fnorm == 0.0) {
    if (residual_out) *residual_out = 0.0;
    return make_field(grid);  // unique solution is zero
  }
  if (defect > fredholm_tol * fnorm)
    throw FredholmError("Fredholm compatibility violated: <F, u_hat> = " +
                            std::to_string(defect) + " exceeds tolerance",
                        defect);

  const OperatorHandle L =
      assemble(OperatorForm::limit_shifted(), s, grid, lim.lambda_hat);
  const std::vector<double>& u = lim.u_hat.v;

  auto project_out_kernel = [&](std::vector<double>& vec) {
    detail::KahanSum dot;
    for (std::size_t i = 0; i < n; ++i) dot.add(vec[i] * u[i]);
    const double c = w * dot.value();  // <vec, u_hat>, u_hat unit-normalized
    for (std::size_t i = 0; i < n; ++i) vec[i] -= c * u[i];
  };

  std::vector<double> b(F.v);
  project_out_kernel(b);

  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = L.diagonal(i);

  std::vector<double> xv(n, 0.0);
  if (start) {
    require_same_grid(lim.u_hat, *start);
    xv = start->v;
    project_out_kernel(xv);
  }

  std::vector<double> r(n), z(n), pdir(n), q(n);
  L.apply_raw(xv, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
  project_out_kernel(r);

  double bnorm2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) bnorm2 += b[i] * b[i];
  const double target2 = tol * tol * bnorm2;

  double rz = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = r[i] / diag[i];
    rz += r[i] * z[i];
  }
  pdir = z;

  const int max_iter = 50000;
  int it = 0;
  for (; it < max_iter; ++it) {
    double rr = 0.0;
    for (std::size_t i = 0; i < n; ++i) rr += r[i] * r[i];
    if (rr <= target2) break;

    L.apply_raw(pdir, q);
    project_out_kernel(q);
    double pq = 0.0;
    for (std::size_t i = 0; i < n; ++i) pq += pdir[i] * q[i];
    if (pq <= 0.0) throw std::runtime_error("deflated CG lost definiteness");
    const double alpha = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      xv[i] += alpha * pdir[i];
      r[i] -= alpha * q[i];
    }
    // Kernel-drift control: keep iterate and residual orthogonal to u_hat.
    project_out_kernel(xv);
    project_out_kernel(r);
    double rz_new = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = r[i] / diag[i];
      rz_new += r[i] * z[i];
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) pdir[i] = z[i] + beta * pdir[i];
  }
  if (it == max_iter) throw std::runtime_error("deflated CG stagnated");

  project_out_kernel(xv);
  GridField psi;
  psi.grid = grid;
  psi.v = std::move(xv);

  if (residual_out) {
    GridField res = L.apply(psi);
    detail::KahanSum s2;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = res.v[i] - b[i];
      s2.add(d * d);
    }
    *residual_out = std::sqrt(w * s2.value());
  }
  return psi;
}

/// The solved correction fields for the scenario's mode, with their Fredholm
/// defects and solve residuals.
struct CorrectionSet {
  Mode mode = Mode::leading;
  std::map<int, GridField> psi;
  std::map<int, double> fredholm_defect;
  std::map<int, double> residual;

  const GridField& field(int i) const { return psi.at(i); }
  bool has(int i) const { return psi.count(i) != 0; }
};

inline CorrectionSet solve_corrections(const Scenario& s, const LimitSolution& lim,
                                       double tol = 1e-10) {
  CorrectionSet out;
  out.mode = s.mode;
  auto solve_one = [&](int i, const GridField* psi3) {
    const GridField F = build_rhs(i, s, lim, psi3);
    double defect = 0.0, resid = 0.0;
    GridField psi = solve_constrained(s, lim, F, tol, nullptr, &defect, &resid);
    out.fredholm_defect[i] = defect;
    out.residual[i] = resid;
    out.psi.emplace(i, std::move(psi));
  };
  if (s.mode == Mode::smooth_refined) {
    solve_one(1, nullptr);
    solve_one(2, nullptr);
  } else if (s.mode == Mode::homogeneous_refined) {
    solve_one(3, nullptr);
    solve_one(4, &out.psi.at(3));
  } else {
    throw std::invalid_argument("corrections are defined only for refined modes");
  }
  return out;
}

/// Everything the refined expansions consume: coefficients from quadrature of
/// the solved fields, with exponents derived exactly from (p, q_hat).
struct ExpansionCoeffs {
  Mode mode = Mode::leading;
  double p = 2.0;
  double q_hat = 0.0;
  double lambda_hat = 0.0;
  // smooth_refined
  double v0 = 0.0;
  double c2 = 0.0;
  // homogeneous_refined
  double m0 = 0.0;
  double m1 = 0.0;
  double psi3_sq = 0.0;  // ∫ psi_3^2
};

inline ExpansionCoeffs expansion_coefficients(const Scenario& s,
                                              const LimitSolution& lim,
                                              const CorrectionSet& corr) {
  ExpansionCoeffs out;
  out.mode = s.mode;
  out.p = s.p;
  out.lambda_hat = lim.lambda_hat;
  if (s.mode == Mode::smooth_refined) {
    const SmoothV& V = s.smooth_v();
    out.v0 = V.value_at_origin();
    double c2 = 0.0;
    for (const MultiIndex& sig : second_order_indices(s.dim)) {
      const double d2 = V.second_derivative_at_origin(sig);
      if (d2 != 0.0) c2 += d2 / sig.factorial() * moment(lim, sig);
    }
    out.c2 = c2;
    if (!corr.has(1) || !corr.has(2))
      throw std::invalid_argument("smooth expansion requires psi_1 and psi_2");
  } else if (s.mode == Mode::homogeneous_refined) {
    out.q_hat = s.homogeneous_v().q_hat;
    if (!corr.has(3) || !corr.has(4))
      throw std::invalid_argument("homogeneous expansion requires psi_3 and psi_4");
    out.m0 = hhat_moment(lim, s);
    out.m1 = hhat_pairing(lim, s, corr.field(3));
    out.psi3_sq = inner_product(corr.field(3), corr.field(3));
  } else {
    throw std::invalid_argument("expansion coefficients are defined only for refined modes");
  }
  return out;
}

}  // namespace adveig

#endif  // ADVEIG_CORRECTIONS_HPP
