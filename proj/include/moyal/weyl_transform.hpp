#pragma once

// Weyl quantization as an integral-kernel transform on the x nodes, its
// inverse (the Wigner transform) and kernel algebra.
//
// Forward map, evaluated on the Weyl lattice of the grid:
//   K(x_i, x_k) = (1 / 2 pi hbar) sum_j f(c_{i+k}, q_j) exp(-i q_j (x_k - x_i) / hbar) dq
//
// Inverse map at lattice center c_s and momentum p:
//   A(c_s, p) = sum_r dx K~(s, r) exp(i p r dx / hbar)
// where r = k - i is the offset in units of dx. Entries whose offset parity
// matches the center are kernel entries; the others (offsets landing between
// nodes) are interpolated along the center direction from neighbouring
// centers of the right parity. Kernel entries beyond the box are zero.
//
// With these conventions weyl_kernel(inverse_weyl(K)) == K up to round-off,
// the delta kernel maps to the constant 1 and back, and the kernel of a real
// function is exactly Hermitian.

#include <moyal/phase_grid.hpp>
#include <moyal/stencil.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace moyal {

struct OperatorKernel {
  PhaseSpaceGrid grid;
  double hbar;
  CMatrix values;  // n_x x n_x, entry (i, k) ~ kappa(x_i, x_k)
  std::vector<std::string> diagnostics;

  OperatorKernel(PhaseSpaceGrid g, double h, CMatrix v, std::vector<std::string> diag = {})
      : grid(std::move(g)), hbar(h), values(std::move(v)), diagnostics(std::move(diag)) {
    if (values.rows() != grid.n_x() || values.cols() != grid.n_x())
      throw DomainError("kernel must be n_x x n_x");
  }

  /// Operator matrix acting on node samples: (K psi)_i = sum_k K_ik psi_k dx.
  CMatrix matrix() const { return values * grid.dx(); }
};

/// The delta kernel, identity / dx.
inline OperatorKernel delta_kernel(const PhaseSpaceGrid& grid, const QuantizationParams& q) {
  return OperatorKernel(grid, q.hbar, CMatrix::Identity(grid.n_x(), grid.n_x()) / grid.dx());
}

/// Kernel of the operator whose matrix (acting on node samples) is `m`.
inline OperatorKernel kernel_from_matrix(const PhaseSpaceGrid& grid, const QuantizationParams& q,
                                         const CMatrix& m) {
  return OperatorKernel(grid, q.hbar, m / grid.dx());
}

namespace detail {

// exp(sign * i * (j - n + 1/2) * pi * r / n), rows j in [0, 2n), cols r + n - 1 in [0, 2n - 1).
inline CMatrix lattice_phase_table(int n, double sign) {
  CMatrix t(2 * n, 2 * n - 1);
  for (int j = 0; j < 2 * n; ++j)
    for (int r = -(n - 1); r <= n - 1; ++r)
      t(j, r + n - 1) = std::polar(1.0, sign * (j - n + 0.5) * std::numbers::pi * r / n);
  return t;
}

// Lagrange weights for evaluating midway between points u0 and u0 + 1 of a
// window of `width` unit-spaced samples starting at 0.
inline const std::vector<double>& midpoint_weights(int width, int u0) {
  static thread_local std::map<std::pair<int, int>, std::vector<double>> cache;
  auto key = std::make_pair(width, u0);
  auto it = cache.find(key);
  if (it == cache.end()) {
    std::vector<double> nodes(width);
    for (int k = 0; k < width; ++k) nodes[k] = k;
    it = cache.emplace(key, fornberg_weights(u0 + 0.5, nodes, 0)).first;
  }
  return it->second;
}

inline constexpr int kInterpolationWidth = 16;

// G(s, r + n - 1): kernel values at every (center, offset) pair, zero outside the box.
inline CMatrix center_offset_table(const OperatorKernel& k) {
  const int n = k.grid.n_x();
  const int ns = 2 * n - 1;
  CMatrix g = CMatrix::Zero(ns, 2 * n - 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i + j, j - i + n - 1) = k.values(i, j);

  // Offsets of the opposite parity: interpolate along centers of matching parity.
  for (int r = -(n - 2); r <= n - 2; ++r) {
    const int ar = std::abs(r);
    const int count = n - ar;  // centers ar, ar + 2, ..., 2n - 2 - ar hold offset r
    if (count < 2) continue;
    const int width = std::min(kInterpolationWidth, count);
    for (int u = 0; u + 1 < count; ++u) {
      const int start = std::clamp(u - width / 2 + 1, 0, count - width);
      const auto& w = midpoint_weights(width, u - start);
      cplx acc = 0.0;
      for (int m = 0; m < width; ++m) acc += w[m] * g(ar + 2 * (start + m), r + n - 1);
      g(ar + 2 * u + 1, r + n - 1) = acc;
    }
  }
  return g;
}

}  // namespace detail

/// Weyl kernel of f. Requires lattice samples at q.hbar or a pointwise source.
inline OperatorKernel weyl_kernel(const GridFunction& f, const QuantizationParams& q) {
  const auto& grid = f.grid();
  auto lat = f.lattice_for(q);
  if (!lat) throw DomainError("weyl_kernel: function carries neither lattice samples nor a pointwise source");
  const int n = grid.n_x();
  const CMatrix m = lat->values * detail::lattice_phase_table(n, -1.0);
  const double scale = 1.0 / (2.0 * n * grid.dx());  // dq / (2 pi hbar)
  CMatrix kv(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) kv(i, k) = scale * m(i + k, k - i + n - 1);

  std::vector<std::string> diag;
  const double peak = lat->values.cwiseAbs().maxCoeff();
  const double edge = std::max(lat->values.col(0).cwiseAbs().maxCoeff(),
                               lat->values.col(grid.n_q() - 1).cwiseAbs().maxCoeff());
  if (peak > 0.0 && edge > 1e-8 * peak)
    diag.push_back("function does not decay at the momentum band edge |p| = " +
                   std::to_string(grid.band_limit(q)) + " (relative edge magnitude " +
                   std::to_string(edge / peak) + ")");
  if (std::max(std::abs(grid.p_min()), std::abs(grid.p_max())) > grid.band_limit(q))
    diag.push_back("momentum box exceeds the band resolvable by dx; refine the x axis");
  return OperatorKernel(grid, q.hbar, std::move(kv), std::move(diag));
}

/// Wigner transform of a kernel: node samples plus lattice samples at the kernel's hbar.
inline GridFunction inverse_weyl(const OperatorKernel& k, const QuantizationParams& q) {
  if (k.hbar != q.hbar) throw DomainError("inverse_weyl: kernel was built with a different hbar");
  const auto& grid = k.grid;
  const int n = grid.n_x();
  if (!k.values.allFinite()) throw DomainError("inverse_weyl: kernel has non-finite entries");
  const CMatrix g = detail::center_offset_table(k);

  CMatrix lattice = grid.dx() * (g * detail::lattice_phase_table(n, 1.0).transpose());

  CMatrix phase(2 * n - 1, grid.n_p());
  for (int r = -(n - 1); r <= n - 1; ++r)
    for (int j = 0; j < grid.n_p(); ++j)
      phase(r + n - 1, j) = std::polar(1.0, grid.p(j) * r * grid.dx() / q.hbar);
  CMatrix even(n, 2 * n - 1);
  for (int i = 0; i < n; ++i) even.row(i) = g.row(2 * i);
  CMatrix nodes = grid.dx() * (even * phase);

  return GridFunction(grid, std::move(nodes),
                      std::make_shared<const LatticeSamples>(LatticeSamples{q.hbar, std::move(lattice)}),
                      PointFunction{});
}

inline void require_compatible(const OperatorKernel& a, const OperatorKernel& b) {
  if (!(a.grid == b.grid)) throw DomainError("kernels live on different grids");
  if (a.hbar != b.hbar) throw DomainError("kernels were built with different hbar");
}

/// Composition (A B)(x, x') = integral A(x, y) B(y, x') dy.
inline OperatorKernel kernel_multiply(const OperatorKernel& a, const OperatorKernel& b) {
  require_compatible(a, b);
  return OperatorKernel(a.grid, a.hbar, (a.values * b.values) * a.grid.dx());
}

inline OperatorKernel operator+(const OperatorKernel& a, const OperatorKernel& b) {
  require_compatible(a, b);
  return OperatorKernel(a.grid, a.hbar, a.values + b.values);
}

inline OperatorKernel operator*(cplx c, const OperatorKernel& a) {
  return OperatorKernel(a.grid, a.hbar, c * a.values, a.diagnostics);
}

/// sum_i K(x_i, x_i) dx.
inline cplx kernel_trace(const OperatorKernel& k) { return k.values.trace() * k.grid.dx(); }

/// Largest |K(x, x') - conj K(x', x)|.
inline double hermiticity_defect(const OperatorKernel& k) {
  return (k.values - k.values.adjoint()).cwiseAbs().maxCoeff();
}

/// Eigendecomposition of a Hermitized kernel, reusable for exp(s H) at many s.
class HermitianKernelSpectrum {
public:
  /// `tolerance` is relative to the largest kernel entry.
  explicit HermitianKernelSpectrum(const OperatorKernel& h, double tolerance = 1e-8)
      : grid_(h.grid), hbar_(h.hbar) {
    const CMatrix m = h.matrix();
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    discarded_ = 0.5 * (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (discarded_ > tolerance * scale)
      throw DomainError("kernel is not Hermitian (anti-Hermitian part " + std::to_string(discarded_) +
                        "); use the series route instead");
    const CMatrix herm = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(herm);
    if (solver.info() != Eigen::Success) throw ConvergenceError("Hermitian eigendecomposition failed");
    eigenvalues_ = solver.eigenvalues();
    eigenvectors_ = solver.eigenvectors();
  }

  const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }
  const CMatrix& eigenvectors() const noexcept { return eigenvectors_; }
  /// Max-norm of the anti-Hermitian part removed before diagonalizing.
  double discarded_anti_hermitian() const noexcept { return discarded_; }

  /// Kernel of exp(s H).
  OperatorKernel exp_kernel(cplx s) const {
    Eigen::VectorXcd d(eigenvalues_.size());
    for (Eigen::Index k = 0; k < d.size(); ++k) d(k) = std::exp(s * eigenvalues_(k));
    CMatrix m = eigenvectors_ * d.asDiagonal() * eigenvectors_.adjoint();
    std::vector<std::string> diag;
    if (discarded_ > 0.0) diag.push_back("hermitized; discarded anti-Hermitian norm " + std::to_string(discarded_));
    return OperatorKernel(grid_, hbar_, m / grid_.dx(), std::move(diag));
  }

  /// Trace of exp(s H) without forming the kernel.
  cplx exp_trace(cplx s) const {
    cplx acc = 0.0;
    for (Eigen::Index k = 0; k < eigenvalues_.size(); ++k) acc += std::exp(s * eigenvalues_(k));
    return acc;
  }

private:
  PhaseSpaceGrid grid_;
  double hbar_;
  Eigen::VectorXd eigenvalues_;
  CMatrix eigenvectors_;
  double discarded_ = 0.0;
};

/// Kernel of exp(s H) for a Hermitian kernel H.
inline OperatorKernel kernel_exp(const OperatorKernel& h, cplx s) {
  return HermitianKernelSpectrum(h).exp_kernel(s);
}

}  // namespace moyal
