#pragma once

// Finite-difference stencils of arbitrary order on uniform samples.
//
// Interior points use centered stencils; near the ends the same number of
// points is kept and the stencil is shifted inward, so a derivative of order
// k with accuracy a is exact for polynomials of degree < k + a everywhere.

#include <moyal/error.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <vector>

namespace moyal {

/// Weights w such that sum_k w_k f(nodes_k) approximates f^(deriv)(x0).
/// Fornberg's recursion; works for any distinct nodes.
inline std::vector<double> fornberg_weights(double x0, const std::vector<double>& nodes, int deriv) {
  const int n = static_cast<int>(nodes.size());
  if (deriv < 0 || n <= deriv) throw StencilError("stencil has too few points for derivative order");
  std::vector<std::vector<double>> c(n, std::vector<double>(deriv + 1, 0.0));
  double c1 = 1.0;
  double c4 = nodes[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, deriv);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = c[i][deriv];
  return w;
}

/// Number of points of the centered stencil for derivative `deriv` at even accuracy `accuracy`.
inline int stencil_width(int deriv, int accuracy) {
  return 2 * ((deriv + 1) / 2) - 1 + accuracy;
}

enum class Axis { rows, cols };

/// Precomputed weights for one derivative order on n uniform samples.
class DerivativeOperator {
public:
  DerivativeOperator(int n, int deriv, double h, int accuracy = 8) : n_(n), deriv_(deriv) {
    if (deriv == 0) return;
    width_ = stencil_width(deriv, accuracy);
    if (width_ > n)
      throw StencilError("derivative of order " + std::to_string(deriv) + " needs " +
                         std::to_string(width_) + " points, only " + std::to_string(n) + " available");
    const int half = width_ / 2;
    const double scale = std::pow(h, -deriv);
    starts_.resize(n);
    weights_.resize(n);
    std::map<int, std::vector<double>> by_shift;  // shift = i - start
    for (int i = 0; i < n; ++i) {
      const int start = std::clamp(i - half, 0, n - width_);
      starts_[i] = start;
      const int shift = i - start;
      auto it = by_shift.find(shift);
      if (it == by_shift.end()) {
        std::vector<double> nodes(width_);
        for (int k = 0; k < width_; ++k) nodes[k] = k - shift;
        auto w = fornberg_weights(0.0, nodes, deriv);
        for (double& v : w) v *= scale;
        it = by_shift.emplace(shift, std::move(w)).first;
      }
      weights_[i] = it->second;
    }
  }

  int size() const noexcept { return n_; }
  int order() const noexcept { return deriv_; }

  /// Applies the derivative along one axis of a matrix.
  Eigen::MatrixXcd apply(const Eigen::MatrixXcd& v, Axis axis) const {
    if (deriv_ == 0) return v;
    const int len = axis == Axis::rows ? static_cast<int>(v.rows()) : static_cast<int>(v.cols());
    if (len != n_) throw StencilError("derivative operator size mismatch");
    // Weights sum to zero, so differences from the centre sample give the same
    // result and an exact zero on data constant along the axis.
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(v.rows(), v.cols());
    for (int i = 0; i < n_; ++i) {
      const auto& w = weights_[i];
      for (int k = 0; k < width_; ++k) {
        const int j = starts_[i] + k;
        if (j == i) continue;
        if (axis == Axis::rows)
          out.row(i) += w[k] * (v.row(j) - v.row(i));
        else
          out.col(i) += w[k] * (v.col(j) - v.col(i));
      }
    }
    return out;
  }

private:
  int n_;
  int deriv_;
  int width_ = 1;
  std::vector<int> starts_;
  std::vector<std::vector<double>> weights_;
};

}  // namespace moyal
