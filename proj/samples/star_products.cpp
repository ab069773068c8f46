// x * p on both routes, and the Moyal bracket against the Poisson bracket.
#include <moyal/star_product.hpp>

#include <cstdio>

int main() {
  using namespace moyal;
  const auto grid = build_grid(-2, 2, 24, -2, 2, 24);
  const QuantizationParams q{1.0};
  const auto x = sample(grid, [](double x, double) { return cplx(x, 0.0); });
  const auto p = sample(grid, [](double, double p) { return cplx(p, 0.0); });

  const auto xp = star_series(x, p, q, SeriesOrder(2));
  const auto px = star_series(p, x, q, SeriesOrder(2));
  const int i = 12, j = 12;
  std::printf("x*p at (%.3f, %.3f) = %.6f %+.6fi\n", grid.x(i), grid.p(j), xp.values()(i, j).real(), xp.values()(i, j).imag());
  std::printf("x*p - p*x = %.6f %+.6fi  (i hbar)\n", (xp - px).values()(i, j).real(), (xp - px).values()(i, j).imag());

  const auto x3 = sample(grid, [](double x, double) { return cplx(x * x * x, 0.0); });
  const auto p3 = sample(grid, [](double, double p) { return cplx(p * p * p, 0.0); });
  const auto pb = poisson_bracket(x3, p3);
  for (double hbar : {0.4, 0.2, 0.1}) {
    const auto mb = moyal_bracket(x3, p3, QuantizationParams{hbar}, StarRoute::series, SeriesOrder(6));
    std::printf("hbar %.2f  |{x^3,p^3}_M - {x^3,p^3}| = %.3e\n", hbar, max_distance(mb, pb));
  }
}
