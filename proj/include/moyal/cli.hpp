#pragma once

// Command implementations behind the `moyal` executable: strict JSON run
// configuration, the four subcommands, CSV/JSON writers and exit codes.
// Needs the single-header nlohmann json.hpp on the include path.

#include <moyal/feynman_kac.hpp>
#include <moyal/hamiltonian.hpp>
#include <moyal/oracle.hpp>
#include <moyal/phase_grid.hpp>
#include <moyal/star_exponential.hpp>
#include <moyal/star_product.hpp>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace moyal::cli {

using json = nlohmann::json;

namespace exit_code {
inline constexpr int converged = 0;
inline constexpr int runtime_error = 1;
inline constexpr int config_error = 2;
inline constexpr int divergent_trace = 3;
inline constexpr int unbounded_below = 4;
inline constexpr int continuous_spectrum = 5;
inline constexpr int not_converged = 6;
inline constexpr int unresolved_peaks = 7;
}  // namespace exit_code

inline int exit_code_for(FitStatus s) {
  switch (s) {
    case FitStatus::converged: return exit_code::converged;
    case FitStatus::not_converged: return exit_code::not_converged;
    case FitStatus::divergent_trace: return exit_code::divergent_trace;
    case FitStatus::unbounded_below: return exit_code::unbounded_below;
    case FitStatus::continuous_spectrum_suspected: return exit_code::continuous_spectrum;
  }
  return exit_code::runtime_error;
}

class ConfigError : public Error {
public:
  using Error::Error;
};

enum class OutputFormat { csv, json, both };

struct RunConfig {
  HamiltonianSpec hamiltonian;
  double x_min = -8.0, x_max = 8.0, p_min = -8.0, p_max = 8.0;
  int n_x = 128, n_p = 128;
  double hbar = 1.0;
  std::optional<EvolutionSchedule> schedule;
  std::optional<std::string> route;
  std::optional<std::pair<double, double>> fit_window;
  int series_order = 8;
  std::string f_expr, g_expr;  // star-prod operands
  double tau = 1.0;            // star-exp time
  SpectrumOptions spectrum;
  std::string out_dir = "out";
  OutputFormat format = OutputFormat::both;
  bool verify = false;

  PhaseSpaceGrid grid() const { return build_grid(x_min, x_max, n_x, p_min, p_max, n_p); }
  QuantizationParams quantization() const { return QuantizationParams{hbar}; }
};

/// Number formatting used in every output file: 12 significant digits.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

/// v rounded to 12 significant digits, so JSON output is independent of the last bits.
inline json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::stod(fmt(v)) + 0.0;  // + 0.0 turns -0 into 0
}

namespace detail {

class Reader {
public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + "must be an object");
  }

  /// Rejects keys outside `allowed`.
  void only(std::initializer_list<const char*> allowed) const {
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!ok.count(it.key())) throw ConfigError("unknown config key '" + key(it.key()) + "'");
  }

  bool has(const char* k) const { return j_.contains(k); }

  double number(const char* k, double def) const {
    if (!has(k)) return def;
    if (!j_[k].is_number()) throw ConfigError("config key '" + key(k) + "' must be a number");
    return j_[k].get<double>();
  }
  int integer(const char* k, int def) const {
    if (!has(k)) return def;
    if (!j_[k].is_number_integer()) throw ConfigError("config key '" + key(k) + "' must be an integer");
    return j_[k].get<int>();
  }
  std::string string(const char* k, std::string def) const {
    if (!has(k)) return def;
    if (!j_[k].is_string()) throw ConfigError("config key '" + key(k) + "' must be a string");
    return j_[k].get<std::string>();
  }
  bool boolean(const char* k, bool def) const {
    if (!has(k)) return def;
    if (!j_[k].is_boolean()) throw ConfigError("config key '" + key(k) + "' must be true or false");
    return j_[k].get<bool>();
  }
  std::vector<double> numbers(const char* k) const {
    if (!j_[k].is_array()) throw ConfigError("config key '" + key(k) + "' must be an array of numbers");
    std::vector<double> v;
    for (const auto& e : j_[k]) {
      if (!e.is_number()) throw ConfigError("config key '" + key(k) + "' must be an array of numbers");
      v.push_back(e.get<double>());
    }
    return v;
  }
  Reader child(const char* k) const { return Reader(j_[k], key(k)); }

private:
  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  std::string where() const { return path_.empty() ? "config " : "config key '" + path_ + "' "; }

  const json& j_;
  std::string path_;
};

inline HamiltonianSpec read_hamiltonian(const Reader& r) {
  r.only({"family", "mass", "omega", "gamma", "a", "b", "c", "expression"});
  HamiltonianSpec h;
  h.family = family_from_string(r.string("family", "harmonic"));
  h.mass = r.number("mass", 1.0);
  h.omega = r.number("omega", 1.0);
  h.gamma = r.number("gamma", 0.0);
  h.a = r.number("a", 0.5);
  h.b = r.number("b", 0.5);
  h.c = r.number("c", 0.0);
  if (r.has("expression")) {
    if (h.family != Family::custom) throw ConfigError("'hamiltonian.expression' requires family \"custom\"");
    h.custom = parse_expression(r.string("expression", ""));
  } else if (h.family == Family::custom) {
    throw ConfigError("family \"custom\" requires 'hamiltonian.expression'");
  }
  h.validate();
  return h;
}

inline EvolutionSchedule read_schedule(const Reader& r) {
  r.only({"mode", "samples", "geometric", "uniform", "substeps"});
  const std::string mode = r.string("mode", "imaginary");
  if (mode != "imaginary" && mode != "real") throw ConfigError("'schedule.mode' must be \"imaginary\" or \"real\"");
  const TimeMode m = mode == "real" ? TimeMode::real : TimeMode::imaginary;
  const int kinds = r.has("samples") + r.has("geometric") + r.has("uniform");
  if (kinds != 1) throw ConfigError("schedule needs exactly one of 'samples', 'geometric', 'uniform'");
  EvolutionSchedule s;
  if (r.has("samples")) {
    s = EvolutionSchedule(m, r.numbers("samples"));
  } else if (r.has("geometric")) {
    const Reader g = r.child("geometric");
    g.only({"start", "stop", "count"});
    s = EvolutionSchedule::geometric(g.number("start", 0.5), g.number("stop", 24.0), g.integer("count", 24), m);
  } else {
    const Reader u = r.child("uniform");
    u.only({"start", "step", "count"});
    if (!u.has("step") || !u.has("count")) throw ConfigError("'schedule.uniform' needs 'step' and 'count'");
    s = EvolutionSchedule::uniform(u.number("start", 0.0), u.number("step", 0.0), u.integer("count", 0), m);
  }
  s.substeps = r.integer("substeps", 1);
  s.validate();
  return s;
}

}  // namespace detail

inline RunConfig parse_config(const json& j) {
  RunConfig c;
  const detail::Reader r(j, "");
  r.only({"hamiltonian", "grid", "hbar", "schedule", "route", "fit_window", "series_order", "star_prod", "star_exp",
          "spectrum", "outputs", "verify"});
  try {
    if (r.has("hamiltonian")) c.hamiltonian = detail::read_hamiltonian(r.child("hamiltonian"));
    if (r.has("grid")) {
      const auto g = r.child("grid");
      g.only({"x_min", "x_max", "n_x", "p_min", "p_max", "n_p"});
      c.x_min = g.number("x_min", c.x_min), c.x_max = g.number("x_max", c.x_max);
      c.p_min = g.number("p_min", c.p_min), c.p_max = g.number("p_max", c.p_max);
      c.n_x = g.integer("n_x", c.n_x), c.n_p = g.integer("n_p", c.n_p);
    }
    c.grid();
    c.hbar = r.number("hbar", 1.0);
    c.quantization();
    if (r.has("schedule")) c.schedule = detail::read_schedule(r.child("schedule"));
    if (r.has("route")) c.route = r.string("route", "");
    if (r.has("fit_window")) {
      const auto w = r.numbers("fit_window");
      if (w.size() != 2 || !(w[0] < w[1])) throw ConfigError("'fit_window' must be [tau_lo, tau_hi] with tau_lo < tau_hi");
      c.fit_window = std::make_pair(w[0], w[1]);
    }
    c.series_order = r.integer("series_order", 8);
    SeriesOrder{c.series_order};
    if (r.has("star_prod")) {
      const auto s = r.child("star_prod");
      s.only({"f", "g"});
      c.f_expr = s.string("f", ""), c.g_expr = s.string("g", "");
    }
    if (r.has("star_exp")) {
      const auto s = r.child("star_exp");
      s.only({"tau"});
      c.tau = s.number("tau", 1.0);
    }
    if (r.has("spectrum")) {
      const auto s = r.child("spectrum");
      s.only({"min_weight", "sidelobe", "padding"});
      c.spectrum.min_weight = s.number("min_weight", c.spectrum.min_weight);
      c.spectrum.sidelobe = s.number("sidelobe", c.spectrum.sidelobe);
      c.spectrum.padding = s.integer("padding", c.spectrum.padding);
    }
    if (r.has("outputs")) {
      const auto o = r.child("outputs");
      o.only({"dir", "format"});
      c.out_dir = o.string("dir", c.out_dir);
      const std::string f = o.string("format", "both");
      if (f == "csv") c.format = OutputFormat::csv;
      else if (f == "json") c.format = OutputFormat::json;
      else if (f == "both") c.format = OutputFormat::both;
      else throw ConfigError("'outputs.format' must be csv, json or both");
    }
    c.verify = r.boolean("verify", false);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return parse_config(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

/// Writes `content` to dir/name through a temporary file and a rename.
inline std::filesystem::path write_atomic(const std::string& dir, const std::string& name, const std::string& content) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path target = fs::path(dir) / name;
  const fs::path tmp = fs::path(dir) / (name + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
  return target;
}

inline bool want_csv(const RunConfig& c) { return c.format != OutputFormat::json; }
inline bool want_json(const RunConfig& c) { return c.format != OutputFormat::csv; }

inline std::string grid_csv(const GridFunction& f) {
  std::ostringstream s;
  s << "x,p,re,im\n";
  const auto& g = f.grid();
  for (int i = 0; i < g.n_x(); ++i)
    for (int j = 0; j < g.n_p(); ++j)
      s << fmt(g.x(i)) << ',' << fmt(g.p(j)) << ',' << fmt(f.values()(i, j).real()) << ','
        << fmt(f.values()(i, j).imag()) << '\n';
  return s.str();
}

inline json cplx_json(cplx z) { return json{{"re", num(z.real())}, {"im", num(z.imag())}}; }

// ---------------------------------------------------------------- star-prod

inline int cmd_star_prod(const RunConfig& c, std::ostream& log) {
  if (c.f_expr.empty() || c.g_expr.empty()) throw ConfigError("star-prod needs both operands (--f and --g)");
  const Expression fe = parse_expression(c.f_expr), ge = parse_expression(c.g_expr);
  const auto grid = c.grid();
  const auto q = c.quantization();
  const GridFunction f = sample(grid, fe.function()), g = sample(grid, ge.function());

  const bool polynomial = fe.is_polynomial() && ge.is_polynomial();
  const std::string route = c.route.value_or(polynomial ? "series" : "both");
  if (route != "kernel" && route != "series" && route != "both")
    throw ConfigError("star-prod route must be kernel, series or both");
  const int order =
      polynomial ? std::max(c.series_order, std::min(fe.degree(), ge.degree())) : c.series_order;

  json report{{"f", c.f_expr}, {"g", c.g_expr}, {"hbar", num(c.hbar)}, {"route", route}};
  std::optional<GridFunction> kern, ser;
  if (route != "series") {
    const auto kf = weyl_kernel(f, q), kg = weyl_kernel(g, q);
    json d = json::array();
    for (const auto& m : kf.diagnostics) d.push_back("f: " + m);
    for (const auto& m : kg.diagnostics) d.push_back("g: " + m);
    report["kernel_diagnostics"] = d;
    kern = inverse_weyl(kernel_multiply(kf, kg), q);
  }
  if (route != "kernel") ser = star_series(f, g, q, SeriesOrder(order));
  const GridFunction& product = kern ? *kern : *ser;
  if (kern && ser) report["route_agreement_inner"] = num(max_distance_inner(*kern, *ser, 0.5));

  // Imaginary part over the inner half box: x * p gives the constant hbar/2.
  double im_min = 1e300, im_max = -1e300;
  const auto& gr = product.grid();
  for (int i = 0; i < gr.n_x(); ++i)
    for (int j = 0; j < gr.n_p(); ++j)
      if (std::abs(gr.x(i) - 0.5 * (gr.x_min() + gr.x_max())) <= 0.25 * gr.x_length() &&
          std::abs(gr.p(j) - 0.5 * (gr.p_min() + gr.p_max())) <= 0.25 * gr.p_length()) {
        im_min = std::min(im_min, product.values()(i, j).imag());
        im_max = std::max(im_max, product.values()(i, j).imag());
      }
  report["imag_inner_min"] = num(im_min);
  report["imag_inner_max"] = num(im_max);
  report["series_order"] = order;

  if (want_csv(c)) write_atomic(c.out_dir, "star_prod.csv", grid_csv(product));
  if (want_json(c)) write_atomic(c.out_dir, "star_prod.json", report.dump(2) + "\n");
  log << "star-prod " << c.f_expr << " * " << c.g_expr << " (" << route << ")";
  if (report.contains("route_agreement_inner")) log << " route agreement " << fmt(report["route_agreement_inner"].get<double>());
  log << ", imaginary part in [" << fmt(im_min) << ", " << fmt(im_max) << "]\n";
  return exit_code::converged;
}

// ---------------------------------------------------------------- star-exp

inline int cmd_star_exp(const RunConfig& c, std::ostream& log) {
  const auto grid = c.grid();
  const auto q = c.quantization();
  const auto& spec = c.hamiltonian;
  const std::string route = c.route.value_or(spec.family == Family::damped ? "closed-form" : "kernel");
  const GridFunction h = sample_hamiltonian(grid, spec);
  GridFunction e = constant(grid, 1.0);
  if (route == "kernel") {
    if (spec.family == Family::damped) throw ConfigError("the damped family has no kernel route");
    e = star_exp_kernel(h, q, -c.tau / q.hbar);
  } else if (route == "squaring") {
    e = star_exp_squaring(h, q, c.tau, -1, star_options_for(spec, StarRoute::kernel));
  } else if (route == "series") {
    e = star_exp_series(h, q, -c.tau / q.hbar, 64, star_options_for(spec, StarRoute::series));
  } else if (route == "ode") {
    OdeOptions o;
    o.star = star_options_for(spec, StarRoute::kernel);
    const auto r = star_exp_ode(h, q, EvolutionSchedule(TimeMode::imaginary, {c.tau}), o);
    if (r.blew_up) throw ConvergenceError(r.message);
    e = r.values.back();
  } else if (route == "closed-form" || route == "closed_form") {
    e = closed_form_imaginary(spec, grid, q, c.tau);
  } else {
    throw ConfigError("star-exp route must be kernel, squaring, ode, series or closed-form");
  }
  json report{{"family", to_string(spec.family)}, {"tau", num(c.tau)}, {"route", route},
              {"trace", cplx_json(phase_space_trace(e, q))}};
  if (spec.family != Family::custom && route != "closed-form" && route != "closed_form") {
    const GridFunction exact = closed_form_imaginary(spec, grid, q, c.tau);
    report["closed_form_distance_inner"] = num(max_distance_inner(e, exact, 0.5));
  }
  if (want_csv(c)) write_atomic(c.out_dir, "star_exp.csv", grid_csv(e));
  if (want_json(c)) write_atomic(c.out_dir, "star_exp.json", report.dump(2) + "\n");
  log << "star-exp tau=" << fmt(c.tau) << " (" << route << ") Z=" << fmt(phase_space_trace(e, q).real()) << "\n";
  return exit_code::converged;
}

// ---------------------------------------------------------------- ground-energy

inline TraceRoute trace_route_for(const RunConfig& c) {
  if (!c.route) return c.hamiltonian.family == Family::damped ? TraceRoute::closed_form : TraceRoute::kernel;
  try {
    return trace_route_from_string(*c.route);
  } catch (const DomainError&) {
    throw ConfigError("ground-energy route must be kernel, squaring, ode or closed-form");
  }
}

/// Oracle comparison rows: (quantity, oracle, engine).
struct VerifyRow {
  std::string quantity;
  double oracle, engine;
};

inline std::string verify_csv(const std::vector<VerifyRow>& rows) {
  std::ostringstream s;
  s << "quantity,oracle,engine,abs_diff\n";
  for (const auto& r : rows)
    s << r.quantity << ',' << fmt(r.oracle) << ',' << fmt(r.engine) << ',' << fmt(std::abs(r.oracle - r.engine)) << '\n';
  return s.str();
}

inline json verify_json(const std::vector<VerifyRow>& rows) {
  json a = json::array();
  for (const auto& r : rows)
    a.push_back({{"quantity", r.quantity}, {"oracle", num(r.oracle)}, {"engine", num(r.engine)},
                 {"abs_diff", num(std::abs(r.oracle - r.engine))}});
  return a;
}

inline int cmd_ground_energy(const RunConfig& c, std::ostream& log) {
  const auto grid = c.grid();
  const auto q = c.quantization();
  const auto schedule = c.schedule.value_or(default_schedule());
  if (schedule.mode != TimeMode::imaginary) throw ConfigError("ground-energy needs an imaginary-time schedule");
  const TraceRoute route = trace_route_for(c);
  for (const auto& w : c.hamiltonian.warnings()) log << "warning: " << w << "\n";

  const TraceCurve curve = partition_trace(c.hamiltonian, grid, q, schedule, route);
  SpectrumEstimate est;
  try {
    est = ground_energy(curve, q, c.fit_window);
  } catch (const FitError& e) {
    if (!curve.divergent) throw;
    est.status = FitStatus::divergent_trace;
    est.diagnostics.push_back(e.what());
  }

  json summary{{"family", to_string(c.hamiltonian.family)},
               {"route", to_string(route)},
               {"hbar", num(c.hbar)},
               {"e0", cplx_json(est.e0)},
               {"degeneracy", num(est.degeneracy)},
               {"fit_window", {num(est.fit_window.first), num(est.fit_window.second)}},
               {"residual", num(est.residual)},
               {"uncertainty", num(est.uncertainty)},
               {"status", to_string(est.status)},
               {"diagnostics", est.diagnostics}};

  std::vector<VerifyRow> rows;
  if (c.verify) {
    const auto h = position_hamiltonian_for(c.hamiltonian, grid, q);
    const auto pairs = eigen_ground(h, 1);
    rows.push_back({"e0", pairs[0].energy, est.e0.real()});
    summary["verify"] = verify_json(rows);
  }

  std::ostringstream csv;
  csv << "tau,re_z,im_z,diagnostic\n";
  for (std::size_t k = 0; k < curve.tau.size(); ++k)
    csv << fmt(curve.tau[k]) << ',' << fmt(curve.z[k].real()) << ',' << fmt(curve.z[k].imag()) << ','
        << fmt(curve.truncation[k]) << '\n';
  if (want_csv(c)) {
    write_atomic(c.out_dir, "trace.csv", csv.str());
    if (c.verify) write_atomic(c.out_dir, "verify.csv", verify_csv(rows));
  }
  if (want_json(c)) write_atomic(c.out_dir, "summary.json", summary.dump(2) + "\n");

  log << "e0 = " << fmt(est.e0.real());
  if (curve.complex_valued) log << (est.e0.imag() < 0 ? " - " : " + ") << fmt(std::abs(est.e0.imag())) << "i";
  log << "  degeneracy = " << fmt(est.degeneracy) << "  status = " << to_string(est.status) << "\n";
  for (const auto& d : est.diagnostics) log << "  " << d << "\n";
  for (const auto& r : rows) log << "  oracle " << r.quantity << " = " << fmt(r.oracle) << "\n";
  return exit_code_for(est.status);
}

// ---------------------------------------------------------------- spectrum

inline int cmd_spectrum(const RunConfig& c, std::ostream& log) {
  if (!c.schedule) throw ConfigError("spectrum needs a real-time 'schedule' in the config");
  if (c.schedule->mode != TimeMode::real) throw ConfigError("spectrum needs 'schedule.mode' = \"real\"");
  if (c.route && *c.route != "kernel") throw ConfigError("spectrum supports the kernel route only");
  const auto grid = c.grid();
  const auto q = c.quantization();
  const auto res = real_time_spectrum(c.hamiltonian, grid, q, *c.schedule, TraceRoute::kernel, c.spectrum);

  json peaks = json::array();
  std::ostringstream csv;
  csv << "n,energy,weight\n";
  for (std::size_t k = 0; k < res.peaks.size(); ++k) {
    peaks.push_back({{"n", k}, {"energy", num(res.peaks[k].energy)}, {"weight", num(res.peaks[k].weight)}});
    csv << k << ',' << fmt(res.peaks[k].energy) << ',' << fmt(res.peaks[k].weight) << '\n';
  }
  json summary{{"family", to_string(c.hamiltonian.family)}, {"resolution", num(res.resolution)},
               {"nyquist", num(res.nyquist)}, {"unresolved", res.unresolved},
               {"diagnostics", res.diagnostics}, {"peaks", peaks}};

  std::vector<VerifyRow> rows;
  if (c.verify) {
    const auto pairs = eigen_ground(position_hamiltonian_for(c.hamiltonian, grid, q), 6);
    for (std::size_t k = 0; k < pairs.size() && k < res.peaks.size(); ++k)
      rows.push_back({"E" + std::to_string(k), pairs[k].energy, res.peaks[k].energy});
    summary["verify"] = verify_json(rows);
  }
  if (want_csv(c)) {
    write_atomic(c.out_dir, "peaks.csv", csv.str());
    if (c.verify) write_atomic(c.out_dir, "verify.csv", verify_csv(rows));
  }
  if (want_json(c)) write_atomic(c.out_dir, "spectrum.json", summary.dump(2) + "\n");

  log << res.peaks.size() << " peaks, resolution " << fmt(res.resolution) << "\n";
  for (std::size_t k = 0; k < res.peaks.size() && k < 6; ++k)
    log << "  E" << k << " = " << fmt(res.peaks[k].energy) << "  weight " << fmt(res.peaks[k].weight) << "\n";
  for (const auto& d : res.diagnostics) log << "  " << d << "\n";
  return res.unresolved ? exit_code::unresolved_peaks : exit_code::converged;
}

}  // namespace moyal::cli
