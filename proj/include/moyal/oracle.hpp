#pragma once

// Position-space reference solver: H = -hbar^2/2m d^2/dx^2 + V(x) on the x
// nodes with the fourth-order stencil
//   f'' ~ (-f[i-2] + 16 f[i-1] - 30 f[i] + 16 f[i+1] - f[i+2]) / (12 dx^2)
// and hard walls (samples beyond the box are zero).

#include <moyal/hamiltonian.hpp>
#include <moyal/phase_grid.hpp>
#include <moyal/weyl_transform.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace moyal {

using Potential = std::function<double(double)>;

struct PositionHamiltonian {
  PhaseSpaceGrid grid;
  Eigen::MatrixXd matrix;  // acts on node samples
  Potential potential;
  double mass;
};

inline PositionHamiltonian build_position_hamiltonian(const Potential& v, double mass, const PhaseSpaceGrid& grid,
                                                      const QuantizationParams& q) {
  if (!(std::isfinite(mass) && mass > 0.0)) throw DomainError("mass must be positive");
  const int n = grid.n_x();
  const double c = -q.hbar * q.hbar / (2.0 * mass) / (12.0 * grid.dx() * grid.dx());
  const double w[5] = {-1.0, 16.0, -30.0, 16.0, -1.0};
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int k = -2; k <= 2; ++k)
      if (i + k >= 0 && i + k < n) m(i, i + k) += c * w[k + 2];
    const double vi = v(grid.x(i));
    if (!std::isfinite(vi))
      throw DomainError("potential is not finite at x = " + std::to_string(grid.x(i)));
    m(i, i) += vi;
  }
  return {grid, std::move(m), v, mass};
}

/// Position-space form of a family: requires H = alpha p^2 + V(x).
inline PositionHamiltonian position_hamiltonian_for(const HamiltonianSpec& spec, const PhaseSpaceGrid& grid,
                                                    const QuantizationParams& q) {
  spec.validate();
  double alpha = 0.0;
  std::vector<Monomial> pot;
  const Expression h = spec.expression();
  for (const auto& t : h.terms()) {
    if (t.coeff == 0.0) continue;
    if (t.gaussian || (t.p_power != 0 && !(t.p_power == 2 && t.x_power == 0)))
      throw DomainError("oracle needs H = alpha p^2 + V(x); momentum-dependent terms are not supported");
    if (t.p_power == 2)
      alpha += t.coeff;
    else
      pot.push_back(t);
  }
  if (!(alpha > 0.0)) throw DomainError("oracle needs a positive p^2 coefficient");
  const Expression ve(std::move(pot));
  return build_position_hamiltonian([ve](double x) { return ve.evaluate(x, 0.0); }, 0.5 / alpha, grid, q);
}

struct Eigenpair {
  double energy;
  Eigen::VectorXd vector;  // sum |psi|^2 dx = 1, largest component positive
};

inline std::vector<Eigenpair> eigen_ground(const PositionHamiltonian& h, int k = 6) {
  const int n = static_cast<int>(h.matrix.rows());
  if (k < 1 || k > n) throw DomainError("eigen_ground: k must lie in [1, n_x]");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (h.matrix + h.matrix.transpose()));
  if (solver.info() != Eigen::Success) throw ConvergenceError("position-space eigensolver failed");
  std::vector<Eigenpair> out;
  const double scale = 1.0 / std::sqrt(h.grid.dx());
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd v = solver.eigenvectors().col(j) * scale;
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    out.push_back({solver.eigenvalues()(j), std::move(v)});
  }
  return out;
}

/// Wigner function of |psi><psi|, normalized to unit phase-space integral.
inline GridFunction wigner_of_state(const Eigen::VectorXcd& psi, const PhaseSpaceGrid& grid,
                                    const QuantizationParams& q) {
  if (psi.size() != grid.n_x()) throw DomainError("state length differs from n_x");
  const OperatorKernel k(grid, q.hbar, psi * psi.adjoint());
  return (1.0 / (2.0 * std::numbers::pi * q.hbar)) * inverse_weyl(k, q);
}

inline GridFunction wigner_of_state(const Eigen::VectorXd& psi, const PhaseSpaceGrid& grid,
                                    const QuantizationParams& q) {
  return wigner_of_state(Eigen::VectorXcd(psi.cast<cplx>()), grid, q);
}

}  // namespace moyal
