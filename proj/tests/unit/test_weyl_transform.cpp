#include <moyal/weyl_transform.hpp>

#include <gtest/gtest.h>

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>

using namespace moyal;

namespace {

const QuantizationParams kQ{1.0};

PhaseSpaceGrid desk_grid() { return build_grid(-8, 8, 128, -8, 8, 128); }

GridFunction gaussian(const PhaseSpaceGrid& g, double a = 1.0) {
  return sample(g, [a](double x, double p) { return cplx(std::exp(-a * (x * x + p * p)), 0.0); });
}

double rel_max(const CMatrix& a, const CMatrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

// Kinetic kernel built in momentum space with an FFT over the 2N conjugate momenta
// q_j = (j - N + 1/2) pi hbar / (N dx).
CMatrix kinetic_kernel_fft(const PhaseSpaceGrid& g, double hbar, double mass) {
  const int n = g.n_x();
  const double dq = std::numbers::pi * hbar / (n * g.dx());
  std::vector<cplx> c(2 * n), a;
  for (int j = 0; j < 2 * n; ++j) {
    const double qj = (j - n + 0.5) * dq;
    c[j] = qj * qj / (2.0 * mass);
  }
  Eigen::FFT<double> fft;
  fft.fwd(a, c);  // sum_j c_j exp(-2 pi i j r / 2N)
  CMatrix k(n, n);
  for (int i = 0; i < n; ++i)
    for (int m = 0; m < n; ++m) {
      const int r = m - i;
      const cplx shift = std::polar(1.0, -std::numbers::pi * (-n + 0.5) * r / n);
      k(i, m) = shift * a[(r + 2 * n) % (2 * n)] / (2.0 * n * g.dx());
    }
  return k;
}

}  // namespace

TEST(WeylKernel, ConstantIsDelta) {
  const auto g = desk_grid();
  const auto k = weyl_kernel(constant(g, 1.0), kQ);
  const CMatrix expect = CMatrix::Identity(g.n_x(), g.n_x()) / g.dx();
  EXPECT_LT(rel_max(k.values, expect), 1e-8);
}

TEST(WeylKernel, PositionIsDiagonal) {
  const auto g = desk_grid();
  const auto f = sample(g, [](double x, double) { return cplx(x, 0.0); });
  const auto k = weyl_kernel(f, kQ);
  CMatrix expect = CMatrix::Zero(g.n_x(), g.n_x());
  for (int i = 0; i < g.n_x(); ++i) expect(i, i) = g.x(i) / g.dx();
  EXPECT_LT(rel_max(k.values, expect), 1e-8);
}

TEST(WeylKernel, KineticMatchesMomentumSpaceOracle) {
  const auto g = desk_grid();
  const double mass = 1.7;
  const auto f = sample(g, [mass](double, double p) { return cplx(p * p / (2.0 * mass), 0.0); });
  const auto k = weyl_kernel(f, kQ);
  EXPECT_LT(rel_max(k.values, kinetic_kernel_fft(g, kQ.hbar, mass)), 1e-6);
}

TEST(WeylKernel, BandEdgeDiagnostics) {
  const auto g = build_grid(-4, 4, 32, -20, 20, 32);  // band limit pi/dx = 4*pi < 20
  const auto k = weyl_kernel(constant(g, 1.0), kQ);
  bool box = false, edge = false;
  for (const auto& d : k.diagnostics) {
    box |= d.find("momentum box exceeds") != std::string::npos;
    edge |= d.find("does not decay") != std::string::npos;
  }
  EXPECT_TRUE(box);
  EXPECT_TRUE(edge);
  EXPECT_TRUE(weyl_kernel(gaussian(desk_grid()), kQ).diagnostics.empty());
}

TEST(WeylKernel, NeedsLatticeOrSource) {
  const auto g = build_grid(-2, 2, 8, -2, 2, 8);
  const GridFunction bare(g, CMatrix::Ones(8, 8));
  EXPECT_THROW(weyl_kernel(bare, kQ), DomainError);
}

TEST(InverseWeyl, DeltaIsConstantOne) {
  const auto g = desk_grid();
  const auto f = inverse_weyl(delta_kernel(g, kQ), kQ);
  EXPECT_LT((f.values().array() - 1.0).abs().maxCoeff(), 1e-8);
}

TEST(InverseWeyl, RoundTripGaussian) {
  const auto g = desk_grid();
  const auto f = gaussian(g);
  const auto back = inverse_weyl(weyl_kernel(f, kQ), kQ);
  EXPECT_LE(max_distance(back, f), 1e-6);
}

TEST(InverseWeyl, RoundTripOffCenterComplexFunction) {
  const auto g = desk_grid();
  const auto f = sample(g, [](double x, double p) {
    return std::exp(cplx(-(x - 1.0) * (x - 1.0) - 0.5 * (p + 0.5) * (p + 0.5), 0.8 * x * p));
  });
  const auto back = inverse_weyl(weyl_kernel(f, kQ), kQ);
  EXPECT_LE(max_distance(back, f), 1e-6);
}

TEST(InverseWeyl, KernelRoundTripIsExact) {
  const auto g = build_grid(-6, 6, 48, -6, 6, 48);
  CMatrix m = CMatrix::Random(48, 48);
  const OperatorKernel k(g, kQ.hbar, m);
  const auto again = weyl_kernel(inverse_weyl(k, kQ), kQ);
  EXPECT_LT(rel_max(again.values, k.values), 1e-12);
}

TEST(InverseWeyl, HermitianKernelGivesRealFunction) {
  const auto g = desk_grid();
  CMatrix m = CMatrix::Random(128, 128);
  m = 0.5 * (m + m.adjoint().eval());
  const auto f = inverse_weyl(OperatorKernel(g, kQ.hbar, m), kQ);
  EXPECT_LT(f.values().imag().cwiseAbs().maxCoeff(), 1e-10 * f.max_norm());
}

TEST(InverseWeyl, RejectsForeignHbar) {
  const auto g = build_grid(-2, 2, 8, -2, 2, 8);
  EXPECT_THROW(inverse_weyl(delta_kernel(g, QuantizationParams{2.0}), kQ), DomainError);
}

TEST(Hermiticity, RealFunctionsGiveHermitianKernels) {
  const auto g = desk_grid();
  const auto f = sample(g, [](double x, double p) { return cplx(std::exp(-x * x - p * p) * (1.0 + x * p), 0.0); });
  const auto k = weyl_kernel(f, kQ);
  EXPECT_LT(hermiticity_defect(k), 1e-12 * k.values.cwiseAbs().maxCoeff());
}

TEST(Hermiticity, ComplexFunctionsGiveNonHermitianKernels) {
  const auto g = desk_grid();
  const auto f = sample(g, [](double x, double p) { return cplx(std::exp(-x * x - p * p), x * std::exp(-x * x - p * p)); });
  const auto k = weyl_kernel(f, kQ);
  EXPECT_GT(hermiticity_defect(k), 1e-2 * k.values.cwiseAbs().maxCoeff());
}

TEST(Hermiticity, NonHermitianKernelGivesComplexFunction) {
  const auto g = desk_grid();
  const auto k = cplx(0.0, 1.0) * weyl_kernel(gaussian(g), kQ);
  const auto f = inverse_weyl(k, kQ);
  EXPECT_GT(f.values().imag().cwiseAbs().maxCoeff(), 0.5);
}

TEST(KernelMultiply, DeltaIsIdentity) {
  const auto g = desk_grid();
  const auto b = weyl_kernel(gaussian(g), kQ);
  const auto ab = kernel_multiply(delta_kernel(g, kQ), b);
  EXPECT_LT(rel_max(ab.values, b.values), 1e-13);
}

TEST(KernelMultiply, Associative) {
  const auto g = build_grid(-6, 6, 64, -6, 6, 64);
  const OperatorKernel a(g, 1.0, CMatrix::Random(64, 64)), b(g, 1.0, CMatrix::Random(64, 64)),
      c(g, 1.0, CMatrix::Random(64, 64));
  const auto l = kernel_multiply(kernel_multiply(a, b), c);
  const auto r = kernel_multiply(a, kernel_multiply(b, c));
  EXPECT_LT(rel_max(l.values, r.values), 1e-12);
}

TEST(KernelMultiply, HermitianSquareHasNonNegativeTrace) {
  const auto g = desk_grid();
  const auto f = sample(g, [](double x, double p) { return cplx(std::exp(-x * x - p * p) * (x - p), 0.0); });
  const auto a = weyl_kernel(f, kQ);
  const cplx t = kernel_trace(kernel_multiply(a, a));
  EXPECT_GE(t.real(), 0.0);
  EXPECT_LT(std::abs(t.imag()), 1e-12);
}

TEST(KernelMultiply, GridMismatchThrows) {
  const auto a = delta_kernel(build_grid(-1, 1, 4, -1, 1, 4), kQ);
  const auto b = delta_kernel(build_grid(-1, 1, 4, -2, 2, 4), kQ);
  EXPECT_THROW(kernel_multiply(a, b), DomainError);
}

TEST(KernelExp, ZeroScaleIsDelta) {
  const auto g = desk_grid();
  const auto h = weyl_kernel(sample(g, [](double x, double p) { return cplx(0.5 * (x * x + p * p), 0.0); }), kQ);
  const auto e = kernel_exp(h, 0.0);
  EXPECT_LT(rel_max(e.values, delta_kernel(g, kQ).values), 1e-12);
}

TEST(KernelExp, DiagonalKernel) {
  const auto g = build_grid(-2, 2, 16, -2, 2, 16);
  CMatrix d = CMatrix::Zero(16, 16);
  for (int i = 0; i < 16; ++i) d(i, i) = (0.3 * i - 1.0) / g.dx();
  const cplx s(-0.7, 0.2);
  const auto e = kernel_exp(OperatorKernel(g, 1.0, d), s);
  for (int i = 0; i < 16; ++i) EXPECT_NEAR(std::abs(e.values(i, i) - std::exp(s * (0.3 * i - 1.0)) / g.dx()), 0.0, 1e-12);
  EXPECT_LT(std::abs(e.values(0, 1)), 1e-12);
}

TEST(KernelExp, HarmonicTraceIsHalfCsch) {
  const auto g = desk_grid();
  const auto h = weyl_kernel(sample(g, [](double x, double p) { return cplx(0.5 * (x * x + p * p), 0.0); }), kQ);
  const HermitianKernelSpectrum spec(h);
  for (double tau : {1.0, 2.0, 3.0, 6.0}) {
    const double exact = 0.5 / std::sinh(0.5 * tau);
    EXPECT_NEAR(kernel_trace(spec.exp_kernel(-tau)).real() / exact, 1.0, 1e-4) << tau;
  }
  for (int n = 0; n < 6; ++n) EXPECT_NEAR(spec.eigenvalues()(n), n + 0.5, 1e-8);
}

TEST(KernelExp, RejectsNonHermitian) {
  const auto g = build_grid(-2, 2, 8, -2, 2, 8);
  CMatrix m = CMatrix::Zero(8, 8);
  m(0, 1) = 1.0;
  EXPECT_THROW(kernel_exp(OperatorKernel(g, 1.0, m), -1.0), DomainError);
}

TEST(KernelExp, RecordsDiscardedAntiHermitianPart) {
  const auto g = build_grid(-2, 2, 8, -2, 2, 8);
  CMatrix m = CMatrix::Identity(8, 8);
  m(0, 1) = 1e-12;
  const HermitianKernelSpectrum s(OperatorKernel(g, 1.0, m / g.dx()));
  EXPECT_GT(s.discarded_anti_hermitian(), 0.0);
  EXPECT_FALSE(s.exp_kernel(-1.0).diagnostics.empty());
}

TEST(KernelTrace, DeltaGivesNodeCount) {
  const auto g = desk_grid();
  EXPECT_NEAR(kernel_trace(delta_kernel(g, kQ)).real(), 128.0, 1e-10);
}

TEST(KernelTrace, NormalizedWignerGivesOne) {
  const auto g = desk_grid();
  const QuantizationParams q{0.8};
  const auto rho = sample(g, [&](double x, double p) {
    return cplx(std::exp(-(x * x + p * p) / q.hbar) / (std::numbers::pi * q.hbar), 0.0);
  });
  EXPECT_NEAR(kernel_trace(weyl_kernel((2.0 * std::numbers::pi * q.hbar) * rho, q)).real(), 1.0, 1e-8);
}

TEST(KernelTrace, Linear) {
  const auto g = desk_grid();
  const auto a = weyl_kernel(gaussian(g), kQ), b = weyl_kernel(gaussian(g, 0.5), kQ);
  const cplx s(1.5, -0.5);
  EXPECT_NEAR(std::abs(kernel_trace(a + s * b) - (kernel_trace(a) + s * kernel_trace(b))), 0.0, 1e-12);
}

TEST(KernelTrace, MatchesPhaseSpaceTrace) {
  const auto g = desk_grid();
  const auto h = weyl_kernel(sample(g, [](double x, double p) { return cplx(0.5 * (x * x + p * p), 0.0); }), kQ);
  for (const auto& k : {weyl_kernel(gaussian(g), kQ), kernel_exp(h, -1.0), kernel_exp(h, -4.0)})
    EXPECT_NEAR(std::abs(kernel_trace(k) - phase_space_trace(inverse_weyl(k, kQ), kQ)), 0.0, 1e-8);
}

TEST(HilbertSchmidt, KernelNormMatchesPhaseSpaceNorm) {
  const auto g = desk_grid();
  for (const auto& f : {gaussian(g), sample(g, [](double x, double p) {
                          return std::exp(cplx(-x * x - 0.5 * p * p, x - p));
                        })}) {
    const auto k = weyl_kernel(f, kQ);
    const double lhs = k.values.squaredNorm() * g.dx() * g.dx();
    const double rhs = f.values().squaredNorm() * g.dx() * g.dp() / (2.0 * std::numbers::pi * kQ.hbar);
    EXPECT_NEAR(lhs / rhs, 1.0, 1e-6);
  }
}
