#pragma once

// Partition trace Z(tau) = (1/2 pi hbar) integral Exp_*(-tau H / hbar) dx dp,
// ground-state energy and degeneracy from the slope and intercept of ln Z,
// the ground Wigner function, and low-lying levels from real-time traces.

#include <moyal/hamiltonian.hpp>
#include <moyal/phase_grid.hpp>
#include <moyal/star_exponential.hpp>
#include <moyal/weyl_transform.hpp>

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace moyal {

enum class TraceRoute { kernel, squaring, ode, closed_form };

inline std::string to_string(TraceRoute r) {
  switch (r) {
    case TraceRoute::kernel: return "kernel";
    case TraceRoute::squaring: return "squaring";
    case TraceRoute::ode: return "ode";
    case TraceRoute::closed_form: return "closed_form";
  }
  return "?";
}

inline TraceRoute trace_route_from_string(const std::string& s) {
  if (s == "kernel") return TraceRoute::kernel;
  if (s == "squaring") return TraceRoute::squaring;
  if (s == "ode") return TraceRoute::ode;
  if (s == "closed_form" || s == "closed-form") return TraceRoute::closed_form;
  throw DomainError("unknown trace route '" + s + "'");
}

/// Geometric tau grid 0.5 .. 24 with 24 points.
inline EvolutionSchedule default_schedule() { return EvolutionSchedule::geometric(0.5, 24.0, 24); }

struct TraceCurve {
  std::vector<double> tau;          // points actually computed
  std::vector<cplx> z;
  std::vector<double> truncation;   // |Z - Z_inner| / |Z|, inner box = 90% per axis
  std::string method;
  bool complex_valued = false;      // true for the damped family
  bool divergent = false;           // evaluation stopped at a non-finite or runaway value
  std::string message;
};

enum class FitStatus { converged, not_converged, divergent_trace, unbounded_below, continuous_spectrum_suspected };

inline std::string to_string(FitStatus s) {
  switch (s) {
    case FitStatus::converged: return "converged";
    case FitStatus::not_converged: return "not_converged";
    case FitStatus::divergent_trace: return "divergent_trace";
    case FitStatus::unbounded_below: return "unbounded_below";
    case FitStatus::continuous_spectrum_suspected: return "continuous_spectrum_suspected";
  }
  return "?";
}

struct SpectrumEstimate {
  cplx e0{std::numeric_limits<double>::quiet_NaN(), 0.0};
  double degeneracy = std::numeric_limits<double>::quiet_NaN();
  std::pair<double, double> fit_window{0.0, 0.0};
  double residual = 0.0;     // RMS of the ln Z fit
  double slope_drift = 0.0;  // |slope(first half) - slope(second half)|
  double uncertainty = 0.0;  // hbar * (drift + slope standard error)
  FitStatus status = FitStatus::converged;
  std::vector<std::string> diagnostics;
};

struct FitTolerances {
  double drift = 1e-3;       // relative slope drift between window halves
  double curvature = 1e-6;   // growth of the second divided difference of ln Z
  double truncation = 1e-3;  // inner-box re-integration
};

namespace detail {

inline double inner_box_defect(const GridFunction& e) {
  const cplx inner = integrate_inner(e, 0.9);
  const cplx full = integrate(e);
  return std::abs(full) > 0.0 ? std::abs(full - inner) / std::abs(full) : 0.0;
}

// Star exponentials at the given imaginary times; stops at the first blow-up.
struct EvolutionRun {
  std::vector<double> tau;
  std::vector<GridFunction> values;
  bool stopped = false;
  std::string message;
};

inline EvolutionRun evolve(const HamiltonianSpec& spec, const PhaseSpaceGrid& grid, const QuantizationParams& q,
                           const std::vector<double>& taus, TraceRoute route) {
  EvolutionRun run;
  const bool damped = spec.family == Family::damped;
  auto push = [&](double t, GridFunction e) {
    if (!e.values().allFinite()) {
      run.stopped = true;
      run.message = "non-finite star exponential at tau = " + std::to_string(t);
      return false;
    }
    run.tau.push_back(t);
    run.values.push_back(std::move(e));
    return true;
  };
  switch (route) {
    case TraceRoute::closed_form:
      for (double t : taus) {
        try {
          if (!push(t, closed_form_imaginary(spec, grid, q, t))) break;
        } catch (const DomainError& e) {  // overflow while sampling
          run.stopped = true;
          run.message = std::string(e.what()) + " at tau = " + std::to_string(t);
          break;
        }
      }
      break;
    case TraceRoute::kernel: {
      if (damped) throw DomainError("the damped family has no kernel route; use ode or closed_form");
      const HermitianKernelSpectrum spectrum(weyl_kernel(sample_hamiltonian(grid, spec), q));
      for (double t : taus)
        if (!push(t, inverse_weyl(spectrum.exp_kernel(-t / q.hbar), q))) break;
      break;
    }
    case TraceRoute::squaring: {
      const GridFunction h = sample_hamiltonian(grid, spec);
      const StarOptions opt = star_options_for(spec, StarRoute::kernel);
      for (double t : taus)
        if (!push(t, star_exp_squaring(h, q, t, -1, opt))) break;
      break;
    }
    case TraceRoute::ode: {
      OdeOptions opt;
      opt.star = star_options_for(spec, StarRoute::kernel);
      std::vector<double> s = taus;
      const auto res = star_exp_ode(sample_hamiltonian(grid, spec), q, EvolutionSchedule(TimeMode::imaginary, s), opt);
      for (std::size_t k = 0; k < res.times.size(); ++k)
        if (!push(res.times[k], res.values[k])) break;
      if (res.blew_up) {
        run.stopped = true;
        run.message = res.message;
      }
      break;
    }
  }
  return run;
}

struct LineFit {
  cplx slope, intercept;
  double rms = 0.0;
  double slope_stderr = 0.0;
};

inline LineFit fit_line(const std::vector<double>& t, const std::vector<cplx>& y) {
  const std::size_t n = t.size();
  double tm = 0.0;
  cplx ym = 0.0;
  for (std::size_t k = 0; k < n; ++k) tm += t[k], ym += y[k];
  tm /= n, ym /= static_cast<double>(n);
  double stt = 0.0;
  cplx sty = 0.0;
  for (std::size_t k = 0; k < n; ++k) stt += (t[k] - tm) * (t[k] - tm), sty += (t[k] - tm) * (y[k] - ym);
  if (stt <= 0.0) throw FitError("fit window contains a single tau value");
  LineFit f;
  f.slope = sty / stt;
  f.intercept = ym - f.slope * tm;
  double ss = 0.0;
  for (std::size_t k = 0; k < n; ++k) ss += std::norm(y[k] - (f.intercept + f.slope * t[k]));
  f.rms = std::sqrt(ss / n);
  f.slope_stderr = n > 2 ? std::sqrt(ss / (n - 2) / stt) : 0.0;
  return f;
}

// ln Z along the curve; complex curves get a sequentially unwrapped phase.
inline std::vector<cplx> log_trace(const TraceCurve& c, const std::vector<std::size_t>& idx) {
  std::vector<cplx> y;
  double prev = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const cplx z = c.z[idx[k]];
    if (!c.complex_valued) {
      if (!(z.real() > 0.0) || std::abs(z.imag()) > 1e-8 * std::abs(z))
        throw FitError("Z(" + std::to_string(c.tau[idx[k]]) + ") is not a positive real number");
      y.emplace_back(std::log(z.real()), 0.0);
      continue;
    }
    if (z == 0.0) throw FitError("Z vanishes at tau = " + std::to_string(c.tau[idx[k]]));
    double ph = std::arg(z);
    if (k > 0) {
      ph += 2.0 * std::numbers::pi * std::round((prev - ph) / (2.0 * std::numbers::pi));
      if (std::abs(ph - prev) > 0.9 * std::numbers::pi)
        throw FitError("phase of Z changes by nearly pi between tau = " + std::to_string(c.tau[idx[k - 1]]) +
                       " and " + std::to_string(c.tau[idx[k]]) + "; use a denser schedule");
    }
    prev = ph;
    y.emplace_back(std::log(std::abs(z)), ph);
  }
  return y;
}

}  // namespace detail

/// Z(tau) at every schedule point. Non-finite evaluations end the curve and set `divergent`.
inline TraceCurve partition_trace(const HamiltonianSpec& spec, const PhaseSpaceGrid& grid,
                                  const QuantizationParams& q, const EvolutionSchedule& schedule,
                                  TraceRoute route = TraceRoute::kernel) {
  schedule.validate();
  if (schedule.mode != TimeMode::imaginary) throw DomainError("partition_trace needs an imaginary-time schedule");
  spec.validate();
  TraceCurve c;
  c.method = to_string(route);
  c.complex_valued = spec.family == Family::damped;
  const auto run = detail::evolve(spec, grid, q, schedule.samples, route);
  for (std::size_t k = 0; k < run.tau.size(); ++k) {
    const cplx z = phase_space_trace(run.values[k], q);
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
      c.divergent = true;
      c.message = "Z is not finite at tau = " + std::to_string(run.tau[k]);
      return c;
    }
    c.tau.push_back(run.tau[k]);
    c.z.push_back(z);
    c.truncation.push_back(detail::inner_box_defect(run.values[k]));
  }
  if (run.stopped) {
    c.divergent = true;
    c.message = run.message;
  }
  return c;
}

/// Line fit of ln Z against tau over `window` (default: last third of the curve).
/// e0 = -hbar * slope, degeneracy = exp(intercept).
/// Status, first match wins: curvature of ln Z growing across the window
/// (unbounded_below), truncated curve (divergent_trace), inner-box defect
/// (continuous_spectrum_suspected), slope drift between halves (not_converged).
inline SpectrumEstimate ground_energy(const TraceCurve& curve, const QuantizationParams& q,
                                      std::optional<std::pair<double, double>> window = std::nullopt,
                                      const FitTolerances& tol = {}) {
  SpectrumEstimate est;
  const std::size_t n = curve.tau.size();
  if (curve.divergent) est.diagnostics.push_back(curve.message);
  if (!window) {
    if (n == 0) {
      est.status = FitStatus::divergent_trace;
      return est;
    }
    const std::size_t first = n - std::max<std::size_t>(4, (n + 2) / 3);
    window = std::make_pair(curve.tau[std::min(first, n - 1)], curve.tau.back());
    if (n < 4) window->first = curve.tau.front();
  }
  if (!(window->first < window->second)) throw FitError("fit window must satisfy tau_lo < tau_hi");
  est.fit_window = *window;

  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < n; ++k)
    if (curve.tau[k] >= window->first && curve.tau[k] <= window->second) idx.push_back(k);
  if (idx.size() < 4) {
    if (curve.divergent) {
      est.status = FitStatus::divergent_trace;
      return est;
    }
    throw FitError("fit window holds " + std::to_string(idx.size()) + " schedule points, at least 4 needed");
  }

  const auto y = detail::log_trace(curve, idx);
  std::vector<double> t;
  for (auto k : idx) t.push_back(curve.tau[k]);
  const std::size_t m = t.size();

  const auto fit = detail::fit_line(t, y);
  const std::size_t half = (m + 1) / 2;
  const auto lo = detail::fit_line({t.begin(), t.begin() + half}, {y.begin(), y.begin() + half});
  const auto hi = detail::fit_line({t.end() - half, t.end()}, {y.end() - half, y.end()});

  est.e0 = -q.hbar * fit.slope;
  est.degeneracy = std::exp(fit.intercept.real());
  est.residual = fit.rms;
  est.slope_drift = std::abs(lo.slope - hi.slope);
  est.uncertainty = q.hbar * (est.slope_drift + fit.slope_stderr);

  auto d2 = [&](std::size_t k) {
    const double a = (y[k + 1] - y[k]).real() / (t[k + 1] - t[k]);
    const double b = (y[k + 2] - y[k + 1]).real() / (t[k + 2] - t[k + 1]);
    return 2.0 * (b - a) / (t[k + 2] - t[k]);
  };
  const double c_first = d2(0), c_last = d2(m - 3);
  double defect = 0.0;
  for (auto k : idx) defect = std::max(defect, curve.truncation[k]);

  if (c_last > tol.curvature && c_last - c_first > tol.curvature) {
    est.status = FitStatus::unbounded_below;
    est.diagnostics.push_back("second difference of ln Z grows from " + std::to_string(c_first) + " to " +
                              std::to_string(c_last) + " across the window");
  } else if (curve.divergent) {
    est.status = FitStatus::divergent_trace;
  } else if (defect > tol.truncation) {
    est.status = FitStatus::continuous_spectrum_suspected;
    est.diagnostics.push_back("trace depends on the box: inner-box defect " + std::to_string(defect));
  } else if (est.slope_drift > tol.drift * std::abs(fit.slope)) {
    est.status = FitStatus::not_converged;
    est.diagnostics.push_back("slope drift " + std::to_string(est.slope_drift) + " between window halves");
  } else {
    est.status = FitStatus::converged;
  }
  return est;
}

/// Complex ground energy of the damped family from its trace.
inline SpectrumEstimate ground_energy_damped(const HamiltonianSpec& spec, const PhaseSpaceGrid& grid,
                                             const QuantizationParams& q, const EvolutionSchedule& schedule,
                                             std::optional<std::pair<double, double>> window = std::nullopt,
                                             TraceRoute route = TraceRoute::closed_form) {
  if (spec.family != Family::damped) throw DomainError("ground_energy_damped needs the damped family");
  return ground_energy(partition_trace(spec, grid, q, schedule, route), q, window);
}

struct WignerState {
  GridFunction rho;
  double norm;             // integral of rho after normalization
  HamiltonianSpec spec;
  double tau;
  cplx e0;
  double convergence;      // max |rho(tau) - rho(1.25 tau)|
};

namespace detail {

inline GridFunction real_part(const GridFunction& f) {
  std::shared_ptr<const LatticeSamples> lat;
  if (f.lattice()) lat = std::make_shared<const LatticeSamples>(
                        LatticeSamples{f.lattice()->hbar, f.lattice()->values.real().cast<cplx>()});
  return GridFunction(f.grid(), f.values().real().cast<cplx>(), std::move(lat), PointFunction{});
}

}  // namespace detail

/// rho_0 = e^{tau E0/hbar} Exp_*(-tau H/hbar) / 2 pi hbar, normalized to unit integral.
/// Throws unless the default-schedule fit converged and the 1.25 tau extraction agrees within `tol` (relative).
inline WignerState ground_wigner(const HamiltonianSpec& spec, const PhaseSpaceGrid& grid, const QuantizationParams& q,
                                 double tau_large = 20.0, TraceRoute route = TraceRoute::kernel, double tol = 1e-4) {
  if (spec.family == Family::damped) throw DomainError("ground_wigner needs a real Hamiltonian");
  const auto est = ground_energy(partition_trace(spec, grid, q, default_schedule(), route), q);
  if (est.status != FitStatus::converged)
    throw ConvergenceError("ground energy fit is " + to_string(est.status) + "; no isolated ground state");
  const auto run = detail::evolve(spec, grid, q, {tau_large, 1.25 * tau_large}, route);
  if (run.values.size() != 2) throw ConvergenceError(run.message);
  auto extract = [&](const GridFunction& e, double t) {
    GridFunction r = detail::real_part((std::exp(t * est.e0.real() / q.hbar) / (2.0 * std::numbers::pi * q.hbar)) * e);
    return (1.0 / integrate(r).real()) * r;
  };
  GridFunction r1 = extract(run.values[0], run.tau[0]);
  const GridFunction r2 = extract(run.values[1], run.tau[1]);
  const double dist = max_distance(r1, r2);
  if (dist > tol * r1.max_norm())
    throw ConvergenceError("ground Wigner function changes by " + std::to_string(dist) +
                           " between tau and 1.25 tau; increase tau");
  const double norm = integrate(r1).real();
  return {std::move(r1), norm, spec, tau_large, est.e0, dist};
}

struct SpectralPeak {
  double energy;
  double weight;
};

struct SpectrumPeaks {
  std::vector<SpectralPeak> peaks;  // ascending in energy
  double resolution;                // 2 pi hbar / T
  double nyquist;                   // pi hbar / dt
  bool unresolved = false;
  std::vector<std::string> diagnostics;
};

struct SpectrumOptions {
  double min_weight = 0.2;  // peaks below this (in units of one level) are dropped
  double sidelobe = 0.05;   // and peaks below this fraction of the tallest one (Hann sidelobes sit near 2.7%)
  int padding = 8;          // zero-padding factor before the DFT
};

/// Peaks of the Hann-windowed DFT of Z(t) = sum_n exp(-i t E_n / hbar) on a uniform real-time schedule.
inline SpectrumPeaks real_time_spectrum(const HamiltonianSpec& spec, const PhaseSpaceGrid& grid,
                                        const QuantizationParams& q, const EvolutionSchedule& schedule,
                                        TraceRoute route = TraceRoute::kernel, const SpectrumOptions& opt = {}) {
  schedule.validate();
  if (schedule.mode != TimeMode::real) throw DomainError("real_time_spectrum needs a real-time schedule");
  if (route != TraceRoute::kernel) throw DomainError("real_time_spectrum supports the kernel route only");
  if (spec.family == Family::damped) throw DomainError("the damped family has a complex spectrum");
  const auto& s = schedule.samples;
  const std::size_t n = s.size();
  if (n < 8) throw DomainError("real_time_spectrum needs at least 8 time samples");
  const double dt = (s.back() - s.front()) / (n - 1);
  for (std::size_t k = 1; k < n; ++k)
    if (std::abs(s[k] - s[k - 1] - dt) > 1e-9 * std::max(1.0, dt * n))
      throw DomainError("real_time_spectrum needs a uniform time schedule");

  const HermitianKernelSpectrum spectrum(weyl_kernel(sample_hamiltonian(grid, spec), q));
  SpectrumPeaks out;
  out.resolution = 2.0 * std::numbers::pi * q.hbar / (n * dt);
  out.nyquist = std::numbers::pi * q.hbar / dt;
  const double top = spectrum.eigenvalues().cwiseAbs().maxCoeff();
  if (top > out.nyquist)
    out.diagnostics.push_back("levels up to |E| = " + std::to_string(top) + " exceed the Nyquist limit " +
                              std::to_string(out.nyquist) + " and alias; reduce the time step");

  const std::size_t len = n * static_cast<std::size_t>(std::max(1, opt.padding));
  std::vector<cplx> in(len, 0.0), spec_out;
  double wsum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * k / (n - 1)));
    wsum += w;
    in[k] = w * std::conj(spectrum.exp_trace(cplx(0.0, -(s[k] - s.front()) / q.hbar)));
  }
  Eigen::FFT<double> fft;
  fft.fwd(spec_out, in);
  std::vector<double> mag(len);
  for (std::size_t k = 0; k < len; ++k) mag[k] = std::abs(spec_out[k]) / wsum;

  const double bin = 2.0 * std::numbers::pi * q.hbar / (len * dt);
  const double floor = std::max(opt.min_weight, opt.sidelobe * *std::max_element(mag.begin(), mag.end()));
  for (std::size_t k = 0; k < len; ++k) {
    const double a = mag[(k + len - 1) % len], b = mag[k], c = mag[(k + 1) % len];
    if (!(b > a && b >= c && b >= floor)) continue;
    const double den = a - 2.0 * b + c;
    const double delta = den != 0.0 ? 0.5 * (a - c) / den : 0.0;
    double e = (static_cast<double>(k) + delta) * bin;
    if (k >= len / 2) e -= 2.0 * out.nyquist;
    out.peaks.push_back({e, b - 0.25 * (a - c) * delta});
  }
  std::sort(out.peaks.begin(), out.peaks.end(), [](auto& l, auto& r) { return l.energy < r.energy; });
  for (std::size_t k = 1; k < out.peaks.size(); ++k)
    if (out.peaks[k].energy - out.peaks[k - 1].energy < 2.0 * out.resolution) {
      out.unresolved = true;
      out.diagnostics.push_back("peaks at " + std::to_string(out.peaks[k - 1].energy) + " and " +
                                std::to_string(out.peaks[k].energy) +
                                " are closer than two resolution bins; lengthen the time window");
      break;
    }
  return out;
}

}  // namespace moyal
