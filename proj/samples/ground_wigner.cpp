// Ground-state Wigner function from the imaginary-time star exponential,
// compared with the position-space eigenvector.
#include <moyal/feynman_kac.hpp>
#include <moyal/oracle.hpp>

#include <cstdio>

int main() {
  using namespace moyal;
  const auto grid = build_grid(-8, 8, 128, -8, 8, 128);
  const QuantizationParams q{1.0};
  const auto spec = HamiltonianSpec::harmonic();

  const WignerState w = ground_wigner(spec, grid, q);
  const auto pairs = eigen_ground(position_hamiltonian_for(spec, grid, q), 2);
  const auto rho_oracle = wigner_of_state(pairs[0].vector, grid, q);
  const auto rho_1 = wigner_of_state(pairs[1].vector, grid, q);

  std::printf("E0 %.6f (oracle %.6f)\n", w.e0.real(), pairs[0].energy);
  std::printf("max |rho0 - oracle| = %.2e\n", max_distance(w.rho, rho_oracle));
  std::printf("rho0 min %.2e, rho1 min %.4f\n", w.rho.values().real().minCoeff(), rho_1.values().real().minCoeff());
  for (int i = 48; i <= 80; i += 8) std::printf("rho0(%+.3f, 0.0625) = %.6f\n", grid.x(i), w.rho.values()(i, 64).real());
}
