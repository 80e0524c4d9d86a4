#ifndef ADVEIG_GRID_HPP
#define ADVEIG_GRID_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace adveig {

/// Structured tensor grid on a box Π(-L_d, L_d) with homogeneous Dirichlet
/// boundary. Only interior nodes are stored; boundary values are implicitly
/// zero. Node coordinates are built from integer offsets times the spacing so
/// the grid is exactly symmetric about the origin, and the origin is a node
/// whenever the per-axis count is odd.
class Grid {
 public:
  Grid(int dim, std::vector<double> half_widths, std::vector<int> counts)
      : dim_(dim), half_width_(std::move(half_widths)), n_(std::move(counts)) {
    if (dim_ < 1) throw std::invalid_argument("grid dimension must be >= 1");
    if (static_cast<int>(half_width_.size()) != dim_ ||
        static_cast<int>(n_.size()) != dim_)
      throw std::invalid_argument("grid extents/counts do not match dimension");
    h_.resize(dim_);
    coords_.resize(dim_);
    size_ = 1;
    cell_weight_ = 1.0;
    for (int d = 0; d < dim_; ++d) {
      if (half_width_[d] <= 0.0)
        throw std::invalid_argument("grid extent must be positive");
      if (n_[d] < 3) throw std::invalid_argument("grid needs >= 3 interior nodes per axis");
      h_[d] = 2.0 * half_width_[d] / (n_[d] + 1);
      coords_[d].resize(n_[d]);
      for (int i = 0; i < n_[d]; ++i)
        coords_[d][i] = (2 * i - (n_[d] - 1)) * (0.5 * h_[d]);
      size_ *= static_cast<std::size_t>(n_[d]);
      cell_weight_ *= h_[d];
    }
    stride_.assign(dim_, 1);
    for (int d = dim_ - 2; d >= 0; --d)
      stride_[d] = stride_[d + 1] * static_cast<std::size_t>(n_[d + 1]);
  }

  int dim() const { return dim_; }
  int nodes(int axis) const { return n_[axis]; }
  double spacing(int axis) const { return h_[axis]; }
  double half_width(int axis) const { return half_width_[axis]; }
  std::size_t size() const { return size_; }
  double coord(int axis, int i) const { return coords_[axis][i]; }
  std::size_t stride(int axis) const { return stride_[axis]; }
  /// Trapezoid weight of one interior node (boundary rows are zero, so the
  /// weight is uniform: Π h_d).
  double cell_weight() const { return cell_weight_; }

  int axis_index(std::size_t flat, int axis) const {
    return static_cast<int>((flat / stride_[axis]) % static_cast<std::size_t>(n_[axis]));
  }

  void node(std::size_t flat, std::span<double> out) const {
    for (int d = 0; d < dim_; ++d) out[d] = coords_[d][axis_index(flat, d)];
  }

  /// Mirror image of a node under x -> -x (grids are symmetric by construction).
  std::size_t mirror(std::size_t flat) const {
    std::size_t m = 0;
    for (int d = 0; d < dim_; ++d)
      m += static_cast<std::size_t>(n_[d] - 1 - axis_index(flat, d)) * stride_[d];
    return m;
  }

  bool same_as(const Grid& o) const {
    return dim_ == o.dim_ && n_ == o.n_ && half_width_ == o.half_width_;
  }

 private:
  int dim_;
  std::vector<double> half_width_;
  std::vector<int> n_;
  std::vector<double> h_;
  std::vector<std::vector<double>> coords_;
  std::vector<std::size_t> stride_;
  std::size_t size_;
  double cell_weight_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr build_grid(int dim, std::vector<double> half_widths,
                          std::vector<int> counts) {
  return std::make_shared<const Grid>(dim, std::move(half_widths), std::move(counts));
}

inline GridPtr build_grid(int dim, double half_width, int count) {
  return build_grid(dim, std::vector<double>(dim, half_width),
                    std::vector<int>(dim, count));
}

/// Samples of a function at the interior nodes of a grid.
struct GridField {
  GridPtr grid;
  std::vector<double> v;
};

inline GridField make_field(GridPtr g) {
  GridField f;
  f.v.assign(g->size(), 0.0);
  f.grid = std::move(g);
  return f;
}

template <class F>
GridField sample_field(GridPtr g, F&& fn) {
  GridField f = make_field(g);
  std::vector<double> x(g->dim());
  for (std::size_t i = 0; i < g->size(); ++i) {
    f.grid->node(i, x);
    f.v[i] = fn(std::span<const double>(x));
  }
  return f;
}

inline void require_same_grid(const GridField& a, const GridField& b) {
  if (!a.grid || !b.grid || !a.grid->same_as(*b.grid))
    throw std::invalid_argument("grid mismatch");
}

namespace detail {
// Compensated (Kahan) accumulation keeps quadrature and normalization noise
// near eps even for ~10^6-term sums.
class KahanSum {
 public:
  void add(double x) {
    double y = x - c_;
    double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};
}  // namespace detail

/// Trapezoid quadrature of f*g over the box (boundary values are zero).
inline double inner_product(const GridField& f, const GridField& g) {
  require_same_grid(f, g);
  detail::KahanSum s;
  for (std::size_t i = 0; i < f.v.size(); ++i) s.add(f.v[i] * g.v[i]);
  return f.grid->cell_weight() * s.value();
}

inline double l2_norm(const GridField& f) {
  return std::sqrt(inner_product(f, f));
}

inline double sup_norm(const GridField& f) {
  double m = 0.0;
  for (double x : f.v) m = std::max(m, std::abs(x));
  return m;
}

/// Second-order central-difference Laplacian with the Dirichlet boundary
/// eliminated. Returns samples of Δf (the Laplacian itself, not its negative).
inline GridField laplacian_apply(const GridField& f) {
  const Grid& g = *f.grid;
  GridField out = make_field(f.grid);
  const int dim = g.dim();
  for (std::size_t i = 0; i < f.v.size(); ++i) {
    double acc = 0.0;
    for (int d = 0; d < dim; ++d) {
      const int id = g.axis_index(i, d);
      const double left = id > 0 ? f.v[i - g.stride(d)] : 0.0;
      const double right = id < g.nodes(d) - 1 ? f.v[i + g.stride(d)] : 0.0;
      const double h = g.spacing(d);
      acc += (left - 2.0 * f.v[i] + right) / (h * h);
    }
    out.v[i] = acc;
  }
  return out;
}

/// Multilinear interpolation; exact at nodes, zero on the boundary.
inline double interpolate(const GridField& f, std::span<const double> x) {
  const Grid& g = *f.grid;
  const int dim = g.dim();
  if (static_cast<int>(x.size()) != dim)
    throw std::invalid_argument("point dimension mismatch");
  // Per axis: cell index c in [0, n] between node c-1 and node c, where
  // index -1 and n denote the zero boundary rows.
  std::vector<int> cell(dim);
  std::vector<double> t(dim);
  for (int d = 0; d < dim; ++d) {
    const double L = g.half_width(d);
    if (std::abs(x[d]) > L * (1.0 + 1e-12))
      throw std::invalid_argument("interpolation point outside grid extents");
    const double h = g.spacing(d);
    int c = static_cast<int>(std::floor((x[d] - g.coord(d, 0)) / h)) + 1;
    c = std::clamp(c, 0, g.nodes(d));
    while (c > 0 && x[d] < g.coord(d, c - 1)) --c;  // guard FP rounding
    while (c < g.nodes(d) && x[d] > g.coord(d, c)) ++c;
    const double lo = c == 0 ? -L : g.coord(d, c - 1);
    const double hi = c == g.nodes(d) ? L : g.coord(d, c);
    cell[d] = c;
    t[d] = hi > lo ? (x[d] - lo) / (hi - lo) : 0.0;
  }
  double val = 0.0;
  for (int corner = 0; corner < (1 << dim); ++corner) {
    double w = 1.0;
    std::size_t flat = 0;
    bool inside = true;
    for (int d = 0; d < dim; ++d) {
      const bool hi = corner & (1 << d);
      w *= hi ? t[d] : 1.0 - t[d];
      const int idx = cell[d] - (hi ? 0 : 1);
      if (idx < 0 || idx >= g.nodes(d)) {
        inside = false;  // boundary corner, value 0
        break;
      }
      flat += static_cast<std::size_t>(idx) * g.stride(d);
    }
    if (inside) val += w * f.v[flat];
  }
  return val;
}

}  // namespace adveig

#endif  // ADVEIG_GRID_HPP
