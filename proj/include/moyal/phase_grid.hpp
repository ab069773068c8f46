#pragma once

// Discretized one-degree-of-freedom phase space.
//
// Node convention (used everywhere): cell midpoints,
//   x_i = x_min + (i + 1/2) dx,   p_j = p_min + (j + 1/2) dp.
// Integration is the midpoint rule on those nodes.
//
// Besides the user-facing (x, p) grid, every grid owns a second sampling
// used by the Weyl transform, the "Weyl lattice":
//   centers  c_s = x_min + dx/2 + s dx/2,  s = 0 .. 2 n_x - 2
//   momenta  q_j = (j - n_x + 1/2) dq,      j = 0 .. 2 n_x - 1,  dq = pi hbar / (n_x dx)
// The centers are every midpoint (x_i + x_k)/2 of two x nodes; the momenta
// cover the full band |q| < pi hbar / dx resolvable by the x spacing.

#include <moyal/error.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>

namespace moyal {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

struct QuantizationParams {
  double hbar = 1.0;

  explicit QuantizationParams(double h = 1.0) : hbar(h) {
    if (!(std::isfinite(h) && h > 0.0)) throw DomainError("hbar must be positive and finite");
  }
};

class PhaseSpaceGrid {
public:
  PhaseSpaceGrid(double x_min, double x_max, int n_x, double p_min, double p_max, int n_p)
      : x_min_(x_min), x_max_(x_max), p_min_(p_min), p_max_(p_max), n_x_(n_x), n_p_(n_p) {
    if (!(std::isfinite(x_min) && std::isfinite(x_max) && std::isfinite(p_min) && std::isfinite(p_max)))
      throw DomainError("grid bounds must be finite");
    if (n_x < 2 || n_p < 2) throw DomainError("grid needs at least 2 nodes per axis");
    if (!(x_max > x_min)) throw DomainError("inverted or empty x interval");
    if (!(p_max > p_min)) throw DomainError("inverted or empty p interval");
    dx_ = (x_max - x_min) / n_x;
    dp_ = (p_max - p_min) / n_p;
  }

  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  double p_min() const noexcept { return p_min_; }
  double p_max() const noexcept { return p_max_; }
  int n_x() const noexcept { return n_x_; }
  int n_p() const noexcept { return n_p_; }
  double dx() const noexcept { return dx_; }
  double dp() const noexcept { return dp_; }
  double x_length() const noexcept { return x_max_ - x_min_; }
  double p_length() const noexcept { return p_max_ - p_min_; }

  double x(int i) const noexcept { return x_min_ + (i + 0.5) * dx_; }
  double p(int j) const noexcept { return p_min_ + (j + 0.5) * dp_; }

  // Weyl lattice geometry.
  int n_centers() const noexcept { return 2 * n_x_ - 1; }
  int n_q() const noexcept { return 2 * n_x_; }
  double center(int s) const noexcept { return x_min_ + 0.5 * dx_ + 0.5 * s * dx_; }
  double dq(const QuantizationParams& q) const noexcept {
    return std::numbers::pi * q.hbar / (n_x_ * dx_);
  }
  double lattice_q(int j, const QuantizationParams& q) const noexcept {
    return (j - n_x_ + 0.5) * dq(q);
  }
  /// Largest momentum the x spacing resolves.
  double band_limit(const QuantizationParams& q) const noexcept {
    return std::numbers::pi * q.hbar / dx_;
  }

  friend bool operator==(const PhaseSpaceGrid& a, const PhaseSpaceGrid& b) noexcept {
    return a.x_min_ == b.x_min_ && a.x_max_ == b.x_max_ && a.p_min_ == b.p_min_ &&
           a.p_max_ == b.p_max_ && a.n_x_ == b.n_x_ && a.n_p_ == b.n_p_;
  }

private:
  double x_min_, x_max_, p_min_, p_max_;
  int n_x_, n_p_;
  double dx_ = 0.0, dp_ = 0.0;
};

inline PhaseSpaceGrid build_grid(double x_min, double x_max, int n_x, double p_min, double p_max,
                                 int n_p) {
  return PhaseSpaceGrid(x_min, x_max, n_x, p_min, p_max, n_p);
}

using PointFunction = std::function<cplx(double, double)>;

/// Samples of a phase-space function on the Weyl lattice for one value of hbar.
struct LatticeSamples {
  double hbar;
  CMatrix values;  // n_centers x n_q
};

/// Complex samples of a phase-space function.
///
/// `values()` always holds the node samples (n_x x n_p). A function may also
/// carry lattice samples (produced by the inverse Weyl map or by the series
/// route) and/or the pointwise source it was sampled from; the Weyl map uses
/// whichever is available.
class GridFunction {
public:
  GridFunction(PhaseSpaceGrid grid, CMatrix values) : grid_(std::move(grid)), values_(std::move(values)) {
    check_shape();
  }

  GridFunction(PhaseSpaceGrid grid, CMatrix values, std::shared_ptr<const LatticeSamples> lattice,
               PointFunction source)
      : grid_(std::move(grid)), values_(std::move(values)), lattice_(std::move(lattice)),
        source_(std::move(source)) {
    check_shape();
    if (lattice_ && (lattice_->values.rows() != grid_.n_centers() || lattice_->values.cols() != grid_.n_q()))
      throw DomainError("lattice samples do not match grid");
  }

  const PhaseSpaceGrid& grid() const noexcept { return grid_; }
  const CMatrix& values() const noexcept { return values_; }
  cplx operator()(int i, int j) const { return values_(i, j); }

  const std::shared_ptr<const LatticeSamples>& lattice() const noexcept { return lattice_; }
  const PointFunction& source() const noexcept { return source_; }

  /// Lattice samples at the given hbar, if they exist or can be produced from the source.
  std::shared_ptr<const LatticeSamples> lattice_for(const QuantizationParams& q) const {
    if (lattice_ && lattice_->hbar == q.hbar) return lattice_;
    if (!source_) return nullptr;
    CMatrix lv(grid_.n_centers(), grid_.n_q());
    for (int s = 0; s < grid_.n_centers(); ++s)
      for (int j = 0; j < grid_.n_q(); ++j) lv(s, j) = source_(grid_.center(s), grid_.lattice_q(j, q));
    return std::make_shared<const LatticeSamples>(LatticeSamples{q.hbar, std::move(lv)});
  }

  /// Copy without lattice data or source (node samples only).
  GridFunction nodes_only() const { return GridFunction(grid_, values_); }

  double max_norm() const { return values_.size() ? values_.cwiseAbs().maxCoeff() : 0.0; }

private:
  void check_shape() const {
    if (values_.rows() != grid_.n_x() || values_.cols() != grid_.n_p())
      throw DomainError("grid function shape does not match grid");
    if (!values_.allFinite()) throw DomainError("grid function has non-finite values");
  }

  PhaseSpaceGrid grid_;
  CMatrix values_;
  std::shared_ptr<const LatticeSamples> lattice_;
  PointFunction source_;
};

inline void require_same_grid(const GridFunction& a, const GridFunction& b) {
  if (!(a.grid() == b.grid())) throw DomainError("grid functions live on different grids");
}

/// values(i, j) = f(x_i, p_j). The callable is kept for later lattice sampling.
inline GridFunction sample(const PhaseSpaceGrid& grid, PointFunction f) {
  CMatrix v(grid.n_x(), grid.n_p());
  for (int i = 0; i < grid.n_x(); ++i) {
    for (int j = 0; j < grid.n_p(); ++j) {
      const cplx z = f(grid.x(i), grid.p(j));
      if (!(std::isfinite(z.real()) && std::isfinite(z.imag()))) {
        std::ostringstream os;
        os << "non-finite sample at node (" << i << ", " << j << ") = (x=" << grid.x(i)
           << ", p=" << grid.p(j) << ")";
        throw DomainError(os.str());
      }
      v(i, j) = z;
    }
  }
  return GridFunction(grid, std::move(v), nullptr, std::move(f));
}

inline GridFunction constant(const PhaseSpaceGrid& grid, cplx c) {
  return sample(grid, [c](double, double) { return c; });
}

/// Midpoint-rule approximation of the integral over the box.
inline cplx integrate(const GridFunction& f) {
  return f.values().sum() * (f.grid().dx() * f.grid().dp());
}

/// (1 / 2 pi hbar) * integral of f over the box.
inline cplx phase_space_trace(const GridFunction& f, const QuantizationParams& q) {
  return integrate(f) / (2.0 * std::numbers::pi * q.hbar);
}

/// Integral over the centered sub-box covering `fraction` of each axis.
inline cplx integrate_inner(const GridFunction& f, double fraction) {
  const auto& g = f.grid();
  const double xc = 0.5 * (g.x_min() + g.x_max()), pc = 0.5 * (g.p_min() + g.p_max());
  const double hx = 0.5 * fraction * g.x_length(), hp = 0.5 * fraction * g.p_length();
  cplx acc = 0.0;
  for (int i = 0; i < g.n_x(); ++i) {
    if (std::abs(g.x(i) - xc) > hx) continue;
    for (int j = 0; j < g.n_p(); ++j)
      if (std::abs(g.p(j) - pc) <= hp) acc += f(i, j);
  }
  return acc * (g.dx() * g.dp());
}

// Pointwise algebra. Lattice samples and sources are carried along whenever
// both operands have them.

namespace detail {

template <class Op, class SrcOp>
GridFunction combine(const GridFunction& a, const GridFunction& b, Op op, SrcOp src_op) {
  require_same_grid(a, b);
  CMatrix v = op(a.values(), b.values());
  std::shared_ptr<const LatticeSamples> lat;
  if (a.lattice() && b.lattice() && a.lattice()->hbar == b.lattice()->hbar)
    lat = std::make_shared<const LatticeSamples>(
        LatticeSamples{a.lattice()->hbar, op(a.lattice()->values, b.lattice()->values)});
  PointFunction src;
  if (a.source() && b.source())
    src = [fa = a.source(), fb = b.source(), src_op](double x, double p) { return src_op(fa(x, p), fb(x, p)); };
  return GridFunction(a.grid(), std::move(v), std::move(lat), std::move(src));
}

}  // namespace detail

inline GridFunction operator+(const GridFunction& a, const GridFunction& b) {
  return detail::combine(
      a, b, [](const CMatrix& u, const CMatrix& w) -> CMatrix { return u + w; },
      [](cplx u, cplx w) { return u + w; });
}

inline GridFunction operator-(const GridFunction& a, const GridFunction& b) {
  return detail::combine(
      a, b, [](const CMatrix& u, const CMatrix& w) -> CMatrix { return u - w; },
      [](cplx u, cplx w) { return u - w; });
}

/// Pointwise (commutative) product.
inline GridFunction pointwise(const GridFunction& a, const GridFunction& b) {
  return detail::combine(
      a, b, [](const CMatrix& u, const CMatrix& w) -> CMatrix { return u.cwiseProduct(w); },
      [](cplx u, cplx w) { return u * w; });
}

inline GridFunction operator*(cplx c, const GridFunction& a) {
  std::shared_ptr<const LatticeSamples> lat;
  if (a.lattice())
    lat = std::make_shared<const LatticeSamples>(LatticeSamples{a.lattice()->hbar, c * a.lattice()->values});
  PointFunction src;
  if (a.source()) src = [f = a.source(), c](double x, double p) { return c * f(x, p); };
  return GridFunction(a.grid(), c * a.values(), std::move(lat), std::move(src));
}

inline GridFunction operator*(double c, const GridFunction& a) { return cplx(c, 0.0) * a; }

/// Largest |a - b| over the nodes.
inline double max_distance(const GridFunction& a, const GridFunction& b) {
  require_same_grid(a, b);
  return (a.values() - b.values()).cwiseAbs().maxCoeff();
}

/// Largest |a - b| over nodes whose coordinates lie inside the centered sub-box.
inline double max_distance_inner(const GridFunction& a, const GridFunction& b, double fraction) {
  require_same_grid(a, b);
  const auto& g = a.grid();
  const double xc = 0.5 * (g.x_min() + g.x_max()), pc = 0.5 * (g.p_min() + g.p_max());
  const double hx = 0.5 * fraction * g.x_length(), hp = 0.5 * fraction * g.p_length();
  double worst = 0.0;
  for (int i = 0; i < g.n_x(); ++i) {
    if (std::abs(g.x(i) - xc) > hx) continue;
    for (int j = 0; j < g.n_p(); ++j)
      if (std::abs(g.p(j) - pc) <= hp) worst = std::max(worst, std::abs(a(i, j) - b(i, j)));
  }
  return worst;
}

}  // namespace moyal
