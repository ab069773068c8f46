#include <moyal/phase_grid.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace moyal;

TEST(BuildGrid, UnitSpacing) {
  const auto g = build_grid(-1, 1, 2, -1, 1, 2);
  EXPECT_DOUBLE_EQ(g.dx(), 1.0);
  EXPECT_DOUBLE_EQ(g.dp(), 1.0);
  EXPECT_DOUBLE_EQ(g.x(0), -0.5);
  EXPECT_DOUBLE_EQ(g.x(1), 0.5);
}

TEST(BuildGrid, DeskGridSpacing) {
  const auto g = build_grid(-8, 8, 128, -8, 8, 128);
  EXPECT_DOUBLE_EQ(g.dx(), 0.125);
  EXPECT_DOUBLE_EQ(g.dp(), 0.125);
  EXPECT_EQ(g.n_x(), 128);
  EXPECT_EQ(g.n_p(), 128);
}

TEST(BuildGrid, RejectsInvertedInterval) {
  EXPECT_THROW(build_grid(0, 1, 2, 1, 0, 2), DomainError);
  EXPECT_THROW(build_grid(1, 0, 2, 0, 1, 2), DomainError);
}

TEST(BuildGrid, RejectsTooFewNodesAndNonFinite) {
  EXPECT_THROW(build_grid(0, 1, 1, 0, 1, 2), DomainError);
  EXPECT_THROW(build_grid(0, std::numeric_limits<double>::infinity(), 4, 0, 1, 4), DomainError);
  EXPECT_THROW(build_grid(std::nan(""), 1, 4, 0, 1, 4), DomainError);
}

TEST(Quantization, RejectsNonPositiveHbar) {
  EXPECT_THROW(QuantizationParams{0.0}, DomainError);
  EXPECT_THROW(QuantizationParams{-1.0}, DomainError);
  EXPECT_NO_THROW(QuantizationParams{0.5});
}

TEST(Sample, Constant) {
  const auto g = build_grid(-1, 1, 4, -2, 2, 5);
  const auto f = sample(g, [](double, double) { return cplx(1.0, 0.0); });
  EXPECT_EQ(f.values().rows(), 4);
  EXPECT_EQ(f.values().cols(), 5);
  EXPECT_TRUE((f.values().array() == cplx(1.0, 0.0)).all());
}

TEST(Sample, CoordinateX) {
  const auto g = build_grid(-3, 1, 7, 0, 2, 3);
  const auto f = sample(g, [](double x, double) { return cplx(x, 0.0); });
  for (int i = 0; i < g.n_x(); ++i)
    for (int j = 0; j < g.n_p(); ++j) EXPECT_EQ(f.values()(i, j), cplx(g.x(i), 0.0));
}

TEST(Sample, GaussianMatchesDirectEvaluation) {
  const auto g = build_grid(-4, 4, 16, -4, 4, 16);
  const auto f = sample(g, [](double x, double p) { return cplx(std::exp(-x * x - p * p), 0.0); });
  for (int i = 0; i < g.n_x(); ++i)
    for (int j = 0; j < g.n_p(); ++j)
      EXPECT_DOUBLE_EQ(f.values()(i, j).real(), std::exp(-g.x(i) * g.x(i) - g.p(j) * g.p(j)));
}

TEST(Sample, NonFiniteNamesNode) {
  const auto g = build_grid(-1, 1, 4, -1, 1, 4);
  try {
    sample(g, [](double x, double p) { return cplx(x > 0 && p > 0 ? std::nan("") : 0.0, 0.0); });
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("node (2, 2)"), std::string::npos) << e.what();
  }
}

TEST(Integrate, AreaOfUnitBox) {
  const auto g = build_grid(-1, 1, 8, -1, 1, 8);
  EXPECT_NEAR(integrate(constant(g, 1.0)).real(), 4.0, 1e-14);
}

TEST(Integrate, GaussianGivesPi) {
  const auto g = build_grid(-8, 8, 128, -8, 8, 128);
  const auto f = sample(g, [](double x, double p) { return cplx(std::exp(-x * x - p * p), 0.0); });
  EXPECT_NEAR(integrate(f).real(), std::numbers::pi, 1e-8);
}

TEST(Integrate, OddFunctionVanishes) {
  const auto g = build_grid(-3, 3, 31, -2, 2, 10);
  const auto f = sample(g, [](double x, double) { return cplx(x, 0.0); });
  EXPECT_NEAR(std::abs(integrate(f)), 0.0, 1e-13);
}

TEST(Integrate, BilinearExactOnAnyGrid) {
  const auto g = build_grid(0.3, 2.1, 5, -1.7, 0.4, 3);
  const auto f = sample(g, [](double x, double p) { return cplx(1.0 + 2.0 * x - 3.0 * p + 0.5 * x * p, 0.0); });
  // Exact integral over [0.3,2.1] x [-1.7,0.4].
  auto F = [](double x, double p) { return x * p + x * x * p - 1.5 * x * p * p + 0.125 * x * x * p * p; };
  const double exact = F(2.1, 0.4) - F(0.3, 0.4) - F(2.1, -1.7) + F(0.3, -1.7);
  EXPECT_NEAR(integrate(f).real(), exact, 1e-12);
}

TEST(Integrate, RefinementConvergesForGaussian) {
  auto err = [](int n) {
    const auto g = build_grid(-6, 6, n, -6, 6, n);
    const auto f = sample(g, [](double x, double p) { return cplx(std::exp(-x * x - p * p), 0.0); });
    return std::abs(integrate(f).real() - std::numbers::pi * std::pow(std::erf(6.0), 2));
  };
  const double e8 = err(8), e16 = err(16), e32 = err(32);
  EXPECT_LT(e16, e8);
  EXPECT_LT(e32, e16);
  EXPECT_LT(e32, 1e-12);
}

TEST(PhaseSpaceTrace, ConstantOnUnitBox) {
  const auto g = build_grid(-1, 1, 4, -1, 1, 4);
  EXPECT_NEAR(phase_space_trace(constant(g, 1.0), QuantizationParams{1.0}).real(), 4.0 / (2.0 * std::numbers::pi),
              1e-14);
  EXPECT_NEAR(phase_space_trace(constant(g, 1.0), QuantizationParams{1.0}).real(), 0.63662, 1e-5);
}

TEST(PhaseSpaceTrace, NormalizedWignerGivesOne) {
  const auto g = build_grid(-8, 8, 64, -8, 8, 64);
  const QuantizationParams q{0.7};
  const auto rho = sample(g, [&](double x, double p) {
    return cplx(std::exp(-(x * x + p * p) / q.hbar) / (std::numbers::pi * q.hbar), 0.0);
  });
  EXPECT_NEAR(phase_space_trace((2.0 * std::numbers::pi * q.hbar) * rho, q).real(), 1.0, 1e-10);
}

TEST(PhaseSpaceTrace, Linearity) {
  const auto g = build_grid(-3, 3, 12, -3, 3, 12);
  const QuantizationParams q{1.3};
  const auto f = sample(g, [](double x, double p) { return cplx(std::exp(-x * x) * p * p, x); });
  const auto h = sample(g, [](double x, double p) { return cplx(std::cos(x * p), 0.0); });
  const cplx a(2.0, -1.0), b(0.5, 0.25);
  const cplx lhs = phase_space_trace(a * f + b * h, q);
  const cplx rhs = a * phase_space_trace(f, q) + b * phase_space_trace(h, q);
  EXPECT_NEAR(std::abs(lhs - rhs), 0.0, 1e-12);
}

TEST(PhaseSpaceTrace, TimesTwoPiHbarIsIntegral) {
  const auto g = build_grid(-2, 3, 9, -1, 4, 7);
  const QuantizationParams q{0.3};
  const auto f = sample(g, [](double x, double p) { return cplx(x * x - p, x * p); });
  const cplx t = phase_space_trace(f, q) * (2.0 * std::numbers::pi * q.hbar);
  const cplx i = integrate(f);
  EXPECT_NEAR(std::abs(t - i), 0.0, 4 * std::numeric_limits<double>::epsilon() * std::abs(i));
}

TEST(GridFunction, RejectsShapeMismatchAndNonFinite) {
  const auto g = build_grid(-1, 1, 4, -1, 1, 4);
  EXPECT_THROW(GridFunction(g, CMatrix::Zero(3, 4)), DomainError);
  CMatrix bad = CMatrix::Zero(4, 4);
  bad(1, 2) = cplx(std::numeric_limits<double>::infinity(), 0.0);
  EXPECT_THROW(GridFunction(g, bad), DomainError);
}

TEST(GridFunction, ArithmeticRequiresSameGrid) {
  const auto a = constant(build_grid(-1, 1, 4, -1, 1, 4), 1.0);
  const auto b = constant(build_grid(-1, 1, 5, -1, 1, 4), 1.0);
  EXPECT_THROW(a + b, DomainError);
}
