#pragma once

// Moyal star product by two routes, brackets, and the damped (gamma-deformed)
// product.
//
// Kernel route:  f * g = W^-1( W(f) W(g) ).
// Series route:  f * g = sum_n (i hbar / 2)^n / n! B^n(f, g), with
//   B(f, g) = f_x g_p - f_p g_x + kappa f_p g_p,
// kappa = 0 for Moyal and kappa = -2 gamma m for the damped product.
// B^n expands by the multinomial theorem over the three commuting
// bidifferential pieces:
//   B^n = sum_{a+b+c=n} n!/(a! b! c!) (-1)^b kappa^c  d_x^a d_p^(b+c) f  *  d_x^b d_p^(a+c) g.
// Derivatives are finite differences (see stencil.hpp).

#include <moyal/phase_grid.hpp>
#include <moyal/stencil.hpp>
#include <moyal/weyl_transform.hpp>

#include <cmath>
#include <memory>
#include <vector>

namespace moyal {

struct SeriesOrder {
  int max_order;
  explicit SeriesOrder(int n = 8) : max_order(n) {
    if (n < 0) throw DomainError("series order must be non-negative");
  }
};

struct DampingParams {
  double gamma;
  double mass;
  DampingParams(double g, double m) : gamma(g), mass(m) {
    if (!(std::isfinite(g) && g >= 0.0)) throw DomainError("damping gamma must be non-negative");
    if (!(std::isfinite(m) && m > 0.0)) throw DomainError("mass must be positive");
  }
};

enum class StarRoute { kernel, series };

/// Accuracy order of the difference stencils used by the series route.
inline constexpr int kDefaultStencilAccuracy = 8;

inline GridFunction star_kernel_route(const GridFunction& f, const GridFunction& g, const QuantizationParams& q) {
  require_same_grid(f, g);
  return inverse_weyl(kernel_multiply(weyl_kernel(f, q), weyl_kernel(g, q)), q);
}

namespace detail {

// All mixed partials d_x^a d_p^b v with a + b <= n, indexed [a][b].
inline std::vector<std::vector<CMatrix>> derivative_table(const CMatrix& v, int n, double hx, double hp,
                                                          int accuracy) {
  std::vector<std::vector<CMatrix>> t(n + 1);
  for (int a = 0; a <= n; ++a) {
    const CMatrix va = DerivativeOperator(static_cast<int>(v.rows()), a, hx, accuracy).apply(v, Axis::rows);
    t[a].resize(n - a + 1);
    for (int b = 0; b <= n - a; ++b)
      t[a][b] = DerivativeOperator(static_cast<int>(v.cols()), b, hp, accuracy).apply(va, Axis::cols);
  }
  return t;
}

inline CMatrix bidifferential_sum(const CMatrix& f, const CMatrix& g, double hx, double hp, double hbar,
                                  int order, double kappa, int accuracy) {
  const auto df = derivative_table(f, order, hx, hp, accuracy);
  const auto dg = derivative_table(g, order, hx, hp, accuracy);
  CMatrix out = CMatrix::Zero(f.rows(), f.cols());
  std::vector<double> fact(order + 1, 1.0);
  for (int k = 1; k <= order; ++k) fact[k] = fact[k - 1] * k;
  const cplx unit(0.0, 0.5 * hbar);
  cplx power = 1.0;
  for (int n = 0; n <= order; ++n, power *= unit) {
    CMatrix term = CMatrix::Zero(f.rows(), f.cols());
    for (int a = 0; a <= n; ++a) {
      for (int b = 0; a + b <= n; ++b) {
        const int c = n - a - b;
        if (c > 0 && kappa == 0.0) continue;
        const double coef = (b % 2 ? -1.0 : 1.0) * std::pow(kappa, c) / (fact[a] * fact[b] * fact[c]);
        term += coef * df[a][b + c].cwiseProduct(dg[b][a + c]);
      }
    }
    out += power * term;
  }
  return out;
}

inline GridFunction series_product(const GridFunction& f, const GridFunction& g, const QuantizationParams& q,
                                   int order, double kappa, int accuracy) {
  require_same_grid(f, g);
  const auto& grid = f.grid();
  CMatrix nodes =
      bidifferential_sum(f.values(), g.values(), grid.dx(), grid.dp(), q.hbar, order, kappa, accuracy);
  std::shared_ptr<const LatticeSamples> lattice;
  auto lf = f.lattice_for(q);
  auto lg = g.lattice_for(q);
  if (lf && lg)
    lattice = std::make_shared<const LatticeSamples>(LatticeSamples{
        q.hbar, bidifferential_sum(lf->values, lg->values, 0.5 * grid.dx(), grid.dq(q), q.hbar, order, kappa,
                                   accuracy)});
  return GridFunction(grid, std::move(nodes), std::move(lattice), PointFunction{});
}

}  // namespace detail

/// Truncated differential (Moyal) series up to hbar^max_order.
inline GridFunction star_series(const GridFunction& f, const GridFunction& g, const QuantizationParams& q,
                                SeriesOrder order = SeriesOrder{}, int accuracy = kDefaultStencilAccuracy) {
  return detail::series_product(f, g, q, order.max_order, 0.0, accuracy);
}

/// Damped product: the Moyal series with the extra -2 gamma m f_p g_p term in the bracket.
inline GridFunction star_gamma(const GridFunction& f, const GridFunction& g, const QuantizationParams& q,
                               const DampingParams& d, SeriesOrder order = SeriesOrder{},
                               int accuracy = kDefaultStencilAccuracy) {
  return detail::series_product(f, g, q, order.max_order, -2.0 * d.gamma * d.mass, accuracy);
}

inline GridFunction star(const GridFunction& f, const GridFunction& g, const QuantizationParams& q,
                         StarRoute route, SeriesOrder order = SeriesOrder{}) {
  return route == StarRoute::kernel ? star_kernel_route(f, g, q) : star_series(f, g, q, order);
}

/// {f, g} = f_x g_p - f_p g_x on the nodes.
inline GridFunction poisson_bracket(const GridFunction& f, const GridFunction& g,
                                    int accuracy = kDefaultStencilAccuracy) {
  require_same_grid(f, g);
  const auto& grid = f.grid();
  const DerivativeOperator dx(grid.n_x(), 1, grid.dx(), accuracy);
  const DerivativeOperator dp(grid.n_p(), 1, grid.dp(), accuracy);
  const CMatrix fx = dx.apply(f.values(), Axis::rows), fp = dp.apply(f.values(), Axis::cols);
  const CMatrix gx = dx.apply(g.values(), Axis::rows), gp = dp.apply(g.values(), Axis::cols);
  return GridFunction(grid, fx.cwiseProduct(gp) - fp.cwiseProduct(gx));
}

/// (f * g - g * f) / (i hbar).
inline GridFunction moyal_bracket(const GridFunction& f, const GridFunction& g, const QuantizationParams& q,
                                  StarRoute route = StarRoute::kernel, SeriesOrder order = SeriesOrder{}) {
  const GridFunction fg = star(f, g, q, route, order);
  const GridFunction gf = star(g, f, q, route, order);
  return cplx(0.0, -1.0 / q.hbar) * (fg - gf);
}

}  // namespace moyal
