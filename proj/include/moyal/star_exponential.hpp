#pragma once

// Star exponentials Exp_*(s H), s = -tau/hbar (imaginary time) or
// s = -i t/hbar (real time), by four numerical routes and closed forms.
//
// All numerical routes solve the same problem: E(0) = 1 and
//   dE/dtau = -(1/hbar) H * E.
// The kernel-based ones (series with kernel products, squaring, kernel
// exponential, ODE with kernel products) work on operator matrices and map
// back with the inverse Weyl transform once at the end.

#include <moyal/hamiltonian.hpp>
#include <moyal/phase_grid.hpp>
#include <moyal/star_product.hpp>
#include <moyal/weyl_transform.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace moyal {

enum class TimeMode { imaginary, real };

struct EvolutionSchedule {
  TimeMode mode = TimeMode::imaginary;
  std::vector<double> samples;
  int substeps = 1;

  EvolutionSchedule() = default;
  EvolutionSchedule(TimeMode m, std::vector<double> s, int sub = 1) : mode(m), samples(std::move(s)), substeps(sub) {
    validate();
  }

  void validate() const {
    if (samples.empty()) throw DomainError("schedule has no samples");
    if (!(samples.front() >= 0.0)) throw DomainError("schedule must start at a non-negative time");
    for (std::size_t k = 1; k < samples.size(); ++k)
      if (!(samples[k] > samples[k - 1])) throw DomainError("schedule samples must be strictly increasing");
    if (substeps < 1) throw DomainError("substeps must be positive");
  }

  /// `count` points geometrically spaced from `start` to `stop` inclusive.
  static EvolutionSchedule geometric(double start, double stop, int count, TimeMode m = TimeMode::imaginary) {
    if (!(start > 0.0 && stop > start && count >= 2)) throw DomainError("invalid geometric schedule");
    std::vector<double> s(count);
    const double ratio = std::pow(stop / start, 1.0 / (count - 1));
    for (int k = 0; k < count; ++k) s[k] = start * std::pow(ratio, k);
    s.back() = stop;
    return EvolutionSchedule(m, std::move(s));
  }

  /// `count` points start, start + step, ...
  static EvolutionSchedule uniform(double start, double step, int count, TimeMode m = TimeMode::imaginary) {
    if (!(step > 0.0 && count >= 1)) throw DomainError("invalid uniform schedule");
    std::vector<double> s(count);
    for (int k = 0; k < count; ++k) s[k] = start + k * step;
    return EvolutionSchedule(m, std::move(s));
  }
};

struct StarOptions {
  StarRoute route = StarRoute::kernel;
  SeriesOrder order{8};
  std::optional<DampingParams> damping;  // series route only
  int accuracy = kDefaultStencilAccuracy;
};

/// Route options matching a Hamiltonian family: damped families need the
/// deformed product, which only the series route provides.
inline StarOptions star_options_for(const HamiltonianSpec& h, StarRoute preferred = StarRoute::kernel) {
  StarOptions o;
  o.route = preferred;
  if (h.family == Family::damped) {
    o.route = StarRoute::series;
    o.damping = DampingParams(h.gamma, h.mass);
  }
  const int deg = h.expression().degree();
  if (deg >= 0) o.order = SeriesOrder(std::max(deg, 1));
  return o;
}

namespace detail {

inline GridFunction star_with(const GridFunction& f, const GridFunction& g, const QuantizationParams& q,
                              const StarOptions& o) {
  if (o.route == StarRoute::kernel) {
    if (o.damping) throw DomainError("the damped product has no kernel route; use the series route");
    return star_kernel_route(f, g, q);
  }
  if (o.damping) return star_gamma(f, g, q, *o.damping, o.order, o.accuracy);
  return star_series(f, g, q, o.order, o.accuracy);
}

inline double max_abs(const CMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

constexpr double kSeriesCutoff = 1e-12;
constexpr int kMaxSeriesTerms = 64;

// Each squaring doubles the relative truncation error.
inline double squaring_cutoff(int k) { return std::max(kSeriesCutoff / std::ldexp(1.0, k), 1e-16); }

// Taylor series of exp(s M) for an operator matrix M.
inline CMatrix matrix_exp_series(const CMatrix& m, cplx s, int n_terms, int* used = nullptr,
                                 double* last_ratio = nullptr, double cutoff = kSeriesCutoff) {
  const Eigen::Index n = m.rows();
  CMatrix sum = CMatrix::Identity(n, n);
  CMatrix term = CMatrix::Identity(n, n);
  double prev = 1.0, ratio = 0.0;
  int k = 1;
  for (; k < n_terms; ++k) {
    term = (term * m) * (s / static_cast<double>(k));
    sum += term;
    const double tn = max_abs(term);
    ratio = tn / std::max(max_abs(sum), 1e-300);
    if (ratio < cutoff) {
      ++k;
      break;
    }
    if (n_terms == kMaxSeriesTerms && k == n_terms - 1 && tn > prev)
      throw ConvergenceError("star exponential series diverges at the cutoff; reduce |s| or use squaring");
    prev = tn;
  }
  if (used) *used = k;
  if (last_ratio) *last_ratio = ratio;
  return sum;
}

}  // namespace detail

struct SeriesExpansion {
  GridFunction value;
  int terms;            // number of terms summed
  double last_term_ratio;  // |last term| / |partial sum|, max-norms
};

/// sum_{n < n_terms} s^n H^{*n} / n!, stopping early once the last term is
/// below 1e-12 of the partial sum. Throws if term norms still grow at the 64-term cap;
/// a shorter explicit n_terms returns the truncated sum.
inline SeriesExpansion star_exp_series_detailed(const GridFunction& h, const QuantizationParams& q, cplx s,
                                                int n_terms = detail::kMaxSeriesTerms,
                                                const StarOptions& opt = {},
                                                double cutoff = detail::kSeriesCutoff) {
  if (n_terms < 1 || n_terms > detail::kMaxSeriesTerms)
    throw DomainError("n_terms must lie in [1, 64]");
  const auto& grid = h.grid();
  if (opt.route == StarRoute::kernel) {
    if (opt.damping) throw DomainError("the damped product has no kernel route; use the series route");
    int used = 0;
    double ratio = 0.0;
    const CMatrix e = detail::matrix_exp_series(weyl_kernel(h, q).matrix(), s, n_terms, &used, &ratio, cutoff);
    return {inverse_weyl(kernel_from_matrix(grid, q, e), q), used, ratio};
  }
  GridFunction sum = constant(grid, 1.0);
  GridFunction term = sum;
  double prev = 1.0, ratio = 0.0;
  int k = 1;
  for (; k < n_terms; ++k) {
    term = (s / static_cast<double>(k)) * detail::star_with(h, term, q, opt);
    sum = sum + term;
    const double tn = term.max_norm();
    ratio = tn / std::max(sum.max_norm(), 1e-300);
    if (ratio < cutoff) {
      ++k;
      break;
    }
    if (n_terms == detail::kMaxSeriesTerms && k == n_terms - 1 && tn > prev)
      throw ConvergenceError("star exponential series diverges at the cutoff; reduce |s| or use squaring");
    prev = tn;
  }
  return {sum, k, ratio};
}

inline GridFunction star_exp_series(const GridFunction& h, const QuantizationParams& q, cplx s,
                                    int n_terms = detail::kMaxSeriesTerms, const StarOptions& opt = {}) {
  return star_exp_series_detailed(h, q, s, n_terms, opt).value;
}

/// Number of halvings that bring |s| * ||H|| below 1/2.
inline int choose_squarings(double s_abs, double h_norm) {
  const double z = s_abs * h_norm;
  return z <= 0.5 ? 0 : static_cast<int>(std::ceil(std::log2(z / 0.5)));
}

/// Series at tau / 2^k followed by k star squarings. k < 0 picks k automatically.
inline GridFunction star_exp_squaring(const GridFunction& h, const QuantizationParams& q, double tau, int k = -1,
                                      const StarOptions& opt = {}) {
  if (!(tau >= 0.0)) throw DomainError("tau must be non-negative");
  const auto& grid = h.grid();
  if (opt.route == StarRoute::kernel) {
    if (opt.damping) throw DomainError("the damped product has no kernel route; use the series route");
    const CMatrix m = weyl_kernel(h, q).matrix();
    if (k < 0) k = choose_squarings(tau / q.hbar, m.cwiseAbs().rowwise().sum().maxCoeff());
    CMatrix e = detail::matrix_exp_series(m, -tau / (q.hbar * std::ldexp(1.0, k)), detail::kMaxSeriesTerms, nullptr,
                                          nullptr, detail::squaring_cutoff(k));
    for (int j = 0; j < k; ++j) e = e * e;
    return inverse_weyl(kernel_from_matrix(grid, q, e), q);
  }
  if (k < 0) k = choose_squarings(tau / q.hbar, h.max_norm());
  GridFunction e = star_exp_series_detailed(h, q, -tau / (q.hbar * std::ldexp(1.0, k)), detail::kMaxSeriesTerms, opt,
                                            detail::squaring_cutoff(k))
                       .value;
  for (int j = 0; j < k; ++j) e = detail::star_with(e, e, q, opt);
  return e;
}

/// inverse_weyl(exp(s W(H))) via Hermitian eigendecomposition.
inline GridFunction star_exp_kernel(const GridFunction& h, const QuantizationParams& q, cplx s) {
  return inverse_weyl(kernel_exp(weyl_kernel(h, q), s), q);
}

struct OdeResult {
  std::vector<double> times;  // schedule points actually reached
  std::vector<GridFunction> values;
  bool blew_up = false;
  std::string message;
  int steps = 0;
  double step = 0.0;
};

struct OdeOptions {
  StarOptions star;
  double blowup_factor = 1e12;  // relative to the initial max-norm
};

/// Fourth-order Runge-Kutta integration of dE/dtau = -(1/hbar) H * E
/// (or dE/dt = -(i/hbar) H * E in real mode), E(0) = 1, sampled on the schedule.
/// The step is the schedule spacing / substeps, further reduced to keep
/// the method stable for the largest mode of the star-multiplication operator.
inline OdeResult star_exp_ode(const GridFunction& h, const QuantizationParams& q, const EvolutionSchedule& schedule,
                              const OdeOptions& opt = {}) {
  schedule.validate();
  const auto& grid = h.grid();
  const cplx rate = schedule.mode == TimeMode::imaginary ? cplx(-1.0 / q.hbar, 0.0) : cplx(0.0, -1.0 / q.hbar);
  OdeResult out;

  if (opt.star.route == StarRoute::kernel) {
    if (opt.star.damping) throw DomainError("the damped product has no kernel route; use the series route");
    const CMatrix m = weyl_kernel(h, q).matrix();
    const double rho = m.cwiseAbs().rowwise().sum().maxCoeff() * std::abs(rate);
    const CMatrix a = rate * m;
    CMatrix x = CMatrix::Identity(grid.n_x(), grid.n_x());
    double t = 0.0;
    const double h_stable = rho > 0.0 ? 2.5 / rho : 1e300;
    for (double target : schedule.samples) {
      const double span = target - t;
      if (span > 0.0) {
        const double base = schedule.samples.size() > 1 || t > 0.0 ? span / schedule.substeps : span;
        const int n = std::max(1, static_cast<int>(std::ceil(span / std::min(base, h_stable))));
        const double dt = span / n;
        out.step = std::max(out.step, dt);
        for (int k = 0; k < n; ++k) {
          const CMatrix k1 = a * x;
          const CMatrix k2 = a * (x + 0.5 * dt * k1);
          const CMatrix k3 = a * (x + 0.5 * dt * k2);
          const CMatrix k4 = a * (x + dt * k3);
          x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
          ++out.steps;
        }
        t = target;
      }
      if (!x.allFinite() || detail::max_abs(x) > opt.blowup_factor) {
        out.blew_up = true;
        out.message = "norm growth beyond bound before t = " + std::to_string(target);
        return out;
      }
      out.times.push_back(target);
      out.values.push_back(inverse_weyl(kernel_from_matrix(grid, q, x), q));
    }
    return out;
  }

  // Series route on the nodes only.
  const GridFunction hn = h.nodes_only();
  auto rhs = [&](const GridFunction& e) { return rate * detail::star_with(hn, e, q, opt.star); };

  // Spectral radius of E -> rate * H * E by power iteration.
  std::mt19937 rng(12345);
  std::normal_distribution<double> normal;
  CMatrix v0(grid.n_x(), grid.n_p());
  for (Eigen::Index k = 0; k < v0.size(); ++k) v0(k) = normal(rng);
  GridFunction v(grid, v0 / v0.norm());
  double rho = 0.0;
  for (int it = 0; it < 25; ++it) {
    GridFunction w = rhs(v);
    rho = w.values().norm();
    if (rho == 0.0) break;
    v = GridFunction(grid, w.values() / rho);
  }
  const double h_stable = rho > 0.0 ? 2.0 / (1.2 * rho) : 1e300;

  GridFunction e(grid, CMatrix::Ones(grid.n_x(), grid.n_p()));
  const double initial = 1.0;
  double t = 0.0;
  for (double target : schedule.samples) {
    const double span = target - t;
    if (span > 0.0) {
      const int n = std::max(1, static_cast<int>(std::ceil(span / std::min(span / schedule.substeps, h_stable))));
      const double dt = span / n;
      out.step = std::max(out.step, dt);
      bool overflow = false;
      try {
        for (int k = 0; k < n; ++k) {
          const GridFunction k1 = rhs(e);
          const GridFunction k2 = rhs(e + (0.5 * dt) * k1);
          const GridFunction k3 = rhs(e + (0.5 * dt) * k2);
          const GridFunction k4 = rhs(e + dt * k3);
          e = e + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
          ++out.steps;
        }
      } catch (const DomainError&) {  // non-finite intermediate
        overflow = true;
      }
      t = target;
      if (overflow) e = GridFunction(grid, CMatrix::Constant(grid.n_x(), grid.n_p(), 1e300));
    }
    if (e.max_norm() > opt.blowup_factor * initial) {
      out.blew_up = true;
      out.message = "norm growth beyond bound before t = " + std::to_string(target);
      return out;
    }
    out.times.push_back(target);
    out.values.push_back(e);
  }
  return out;
}

/// Closed-form Exp_*(-i t H / hbar) at complex time t; imaginary time tau is t = -i tau.
///   free       exp(-i t p^2 / 2 m hbar)
///   harmonic   sec(w t/2) exp(-(2i / hbar w) tan(w t/2) H)
///   linear     exp(-(i t / hbar)(x + p^2 + t^2/12))
///   quadratic  sec(r t) exp(-(i / hbar r) tan(r t) H),  r = sqrt(ab - c^2)
///   damped     e^{g t/2} / (cos(w t/2) sqrt(1 + k)) exp(-(i/hbar w) T (m w^2 x^2 + p^2 / (m (1 + k)))),
///              T = tan(w t/2), k = 2 g T / w
inline PointFunction closed_form_function(const HamiltonianSpec& spec, const QuantizationParams& q, cplx t) {
  spec.validate();
  const double hb = q.hbar;
  const cplx I(0.0, 1.0);
  auto pole = [&](cplx c) {
    if (std::abs(c) < 1e-12)
      throw SingularityError("closed form is singular at t = " + std::to_string(t.real()) + " + " +
                             std::to_string(t.imag()) + "i (caustic)");
  };
  switch (spec.family) {
    case Family::free: {
      const double m = spec.mass;
      return [=](double, double p) { return std::exp(-I * t * p * p / (2.0 * m * hb)); };
    }
    case Family::linear:
      return [=](double x, double p) { return std::exp(-(I * t / hb) * (x + p * p + t * t / 12.0)); };
    case Family::harmonic:
    case Family::quadratic: {
      const auto hf = spec.expression();
      const double disc = spec.family == Family::harmonic ? 0.25 * spec.omega * spec.omega : spec.discriminant();
      cplx pref = 1.0, coef = -I * t / hb;
      if (std::abs(disc) > 1e-14) {
        const cplx r = std::sqrt(cplx(disc, 0.0));
        const cplx c = std::cos(r * t);
        pole(c);
        pref = 1.0 / c;
        coef = -(I / (hb * r)) * std::tan(r * t);
      }
      return [=](double x, double p) { return pref * std::exp(coef * hf.evaluate(x, p)); };
    }
    case Family::damped: {
      const double m = spec.mass, w = spec.omega, g = spec.gamma;
      const cplx c = std::cos(0.5 * w * t);
      pole(c);
      const cplx tn = std::tan(0.5 * w * t);
      const cplx k1 = 1.0 + 2.0 * g * tn / w;
      pole(k1);
      const cplx pref = std::exp(0.5 * g * t) / (c * std::sqrt(k1));
      const cplx coef = -(I / (hb * w)) * tn;
      return [=](double x, double p) { return pref * std::exp(coef * (m * w * w * x * x + p * p / (m * k1))); };
    }
    case Family::custom:
      break;
  }
  throw DomainError("custom Hamiltonians have no closed-form star exponential");
}

inline GridFunction closed_form(const HamiltonianSpec& spec, const PhaseSpaceGrid& grid, const QuantizationParams& q,
                                cplx t) {
  return sample(grid, closed_form_function(spec, q, t));
}

/// Closed form at imaginary time tau: Exp_*(-tau H / hbar).
inline GridFunction closed_form_imaginary(const HamiltonianSpec& spec, const PhaseSpaceGrid& grid,
                                          const QuantizationParams& q, double tau) {
  return closed_form(spec, grid, q, cplx(0.0, -tau));
}

}  // namespace moyal
