// Ground-state energy of the harmonic oscillator from the partition trace.
#include <moyal/feynman_kac.hpp>

#include <cstdio>

int main() {
  using namespace moyal;
  const auto grid = build_grid(-8, 8, 128, -8, 8, 128);
  const QuantizationParams q{1.0};
  const auto spec = HamiltonianSpec::harmonic(1.0, 1.0);

  const TraceCurve curve = partition_trace(spec, grid, q, default_schedule(), TraceRoute::kernel);
  for (std::size_t k = 0; k < curve.tau.size(); k += 4)
    std::printf("tau %6.3f  Z %.6e\n", curve.tau[k], curve.z[k].real());

  const SpectrumEstimate est = ground_energy(curve, q);
  std::printf("E0 = %.6f +- %.1e  degeneracy %.4f  (%s)\n", est.e0.real(), est.uncertainty, est.degeneracy,
              to_string(est.status).c_str());
}
