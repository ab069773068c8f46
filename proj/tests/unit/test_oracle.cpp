#include <moyal/oracle.hpp>
#include <moyal/star_product.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace moyal;

namespace {
const QuantizationParams kQ{1.0};
}

TEST(PositionHamiltonian, InteriorRowsOfKineticPartSumToZero) {
  const auto g = build_grid(-4, 4, 40, -4, 4, 40);
  const auto h = build_position_hamiltonian([](double) { return 0.0; }, 1.0, g, kQ);
  for (int i = 2; i < g.n_x() - 2; ++i) EXPECT_NEAR(h.matrix.row(i).sum(), 0.0, 1e-10);
  EXPECT_TRUE(h.matrix.isApprox(h.matrix.transpose()));
}

TEST(PositionHamiltonian, RejectsBadInput) {
  const auto g = build_grid(-4, 4, 16, -4, 4, 16);
  EXPECT_THROW(build_position_hamiltonian([](double) { return 0.0; }, 0.0, g, kQ), DomainError);
  EXPECT_THROW(build_position_hamiltonian([](double x) { return 1.0 / (x - x); }, 1.0, g, kQ), DomainError);
  EXPECT_THROW(position_hamiltonian_for(HamiltonianSpec::quadratic(1.0, 1.0, 0.5), g, kQ), DomainError);
  EXPECT_THROW(position_hamiltonian_for(HamiltonianSpec::custom_expression(parse_expression("x^2")), g, kQ),
               DomainError);
  EXPECT_THROW(eigen_ground(position_hamiltonian_for(HamiltonianSpec::harmonic(), g, kQ), 0), DomainError);
}

TEST(EigenGround, HarmonicLevels) {
  const auto g = build_grid(-8, 8, 256, -8, 8, 256);
  const auto pairs = eigen_ground(position_hamiltonian_for(HamiltonianSpec::harmonic(), g, kQ), 6);
  ASSERT_EQ(pairs.size(), 6u);
  EXPECT_NEAR(pairs[0].energy, 0.5, 1e-4);
  for (int n = 0; n < 6; ++n) EXPECT_NEAR(pairs[n].energy, n + 0.5, 1e-3) << n;
}

TEST(EigenGround, MassAndFrequencyScaling) {
  const auto g = build_grid(-6, 6, 256, -6, 6, 256);
  const auto pairs = eigen_ground(position_hamiltonian_for(HamiltonianSpec::harmonic(2.0, 1.5), g, kQ), 3);
  for (int n = 0; n < 3; ++n) EXPECT_NEAR(pairs[n].energy, 1.5 * (n + 0.5), 1e-3);
}

TEST(EigenGround, OrthonormalVectors) {
  const auto g = build_grid(-8, 8, 200, -8, 8, 200);
  const auto pairs = eigen_ground(position_hamiltonian_for(HamiltonianSpec::harmonic(), g, kQ), 5);
  for (std::size_t a = 0; a < pairs.size(); ++a)
    for (std::size_t b = 0; b < pairs.size(); ++b)
      EXPECT_NEAR(pairs[a].vector.dot(pairs[b].vector) * g.dx(), a == b ? 1.0 : 0.0, 1e-10);
}

TEST(EigenGround, QuadraticWithoutCrossTerm) {
  const auto g = build_grid(-8, 8, 256, -8, 8, 256);
  const auto spec = HamiltonianSpec::quadratic(1.0, 2.0, 0.0);
  const auto pairs = eigen_ground(position_hamiltonian_for(spec, g, kQ), 2);
  const double w = 2.0 * std::sqrt(spec.discriminant());
  EXPECT_NEAR(pairs[0].energy, w / 2.0, 1e-4);
  EXPECT_NEAR(pairs[1].energy, 1.5 * w, 1e-3);
}

TEST(EigenGround, LinearPotentialSinksWithBox) {
  double prev = 0.0;
  for (double half : {4.0, 8.0, 16.0}) {
    const auto g = build_grid(-half, half, static_cast<int>(16 * half), -4, 4, 16);
    const double e0 = eigen_ground(position_hamiltonian_for(HamiltonianSpec::linear_potential(), g, kQ), 1)[0].energy;
    if (half > 4.0) EXPECT_LT(e0, prev - 1.0) << half;
    prev = e0;
  }
}

TEST(WignerOfState, GroundStateIsPositiveGaussian) {
  const auto g = build_grid(-8, 8, 128, -8, 8, 128);
  const auto pairs = eigen_ground(position_hamiltonian_for(HamiltonianSpec::harmonic(), g, kQ), 2);
  const auto w0 = wigner_of_state(pairs[0].vector, g, kQ);
  EXPECT_NEAR(integrate(w0).real(), 1.0, 1e-8);
  EXPECT_GT(w0.values().real().minCoeff(), -1e-8);
  EXPECT_LT(w0.values().imag().cwiseAbs().maxCoeff(), 1e-12);
  const auto exact = sample(g, [](double x, double p) { return cplx(std::exp(-x * x - p * p) / std::numbers::pi, 0.0); });
  EXPECT_LT(max_distance(w0, exact), 1e-4);
}

TEST(WignerOfState, FirstExcitedStateGoesNegative) {
  const auto g = build_grid(-8, 8, 128, -8, 8, 128);
  const auto pairs = eigen_ground(position_hamiltonian_for(HamiltonianSpec::harmonic(), g, kQ), 2);
  const auto w1 = wigner_of_state(pairs[1].vector, g, kQ);
  EXPECT_NEAR(integrate(w1).real(), 1.0, 1e-8);
  EXPECT_LT(w1.values().real().minCoeff(), -0.3);  // -1/pi at the origin
}

TEST(WignerOfState, DistinctLevelsHaveZeroOverlap) {
  const auto g = build_grid(-8, 8, 96, -8, 8, 96);
  const auto pairs = eigen_ground(position_hamiltonian_for(HamiltonianSpec::harmonic(), g, kQ), 2);
  const double c = 2.0 * std::numbers::pi * kQ.hbar;
  const auto w0 = wigner_of_state(pairs[0].vector, g, kQ);
  const auto w1 = wigner_of_state(pairs[1].vector, g, kQ);
  EXPECT_NEAR(std::abs(c * integrate(star_kernel_route(w0, w1, kQ))), 0.0, 1e-8);
  EXPECT_NEAR(c * integrate(star_kernel_route(w0, w0, kQ)).real(), 1.0, 1e-8);
}

TEST(WignerOfState, RejectsWrongLength) {
  const auto g = build_grid(-4, 4, 16, -4, 4, 16);
  EXPECT_THROW(wigner_of_state(Eigen::VectorXd(Eigen::VectorXd::Ones(15)), g, kQ), DomainError);
}
