#pragma once

// Phase-space observables built from monomials c * x^a * p^b, optionally
// multiplied by the named Gaussian exp(-x^2 - p^2), and the Hamiltonian
// families with closed-form star exponentials.
//
// Expression grammar (whitespace ignored):
//   expr   := ['+'|'-'] term { ('+'|'-') term }
//   term   := factor { '*' factor }
//   factor := number | 'x' ['^' int] | 'p' ['^' int] | 'gauss'

#include <moyal/error.hpp>
#include <moyal/phase_grid.hpp>

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

namespace moyal {

struct Monomial {
  double coeff = 1.0;
  int x_power = 0;
  int p_power = 0;
  bool gaussian = false;

  double evaluate(double x, double p) const {
    double v = coeff * std::pow(x, x_power) * std::pow(p, p_power);
    if (gaussian) v *= std::exp(-x * x - p * p);
    return v;
  }
};

class ParseError : public DomainError {
public:
  ParseError(const std::string& msg, std::size_t position)
      : DomainError(msg + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const noexcept { return position_; }

private:
  std::size_t position_;
};

class Expression {
public:
  Expression() = default;
  explicit Expression(std::vector<Monomial> terms) : terms_(std::move(terms)) {}

  const std::vector<Monomial>& terms() const noexcept { return terms_; }

  bool is_polynomial() const {
    for (const auto& t : terms_)
      if (t.gaussian) return false;
    return true;
  }

  /// Joint degree of the polynomial part; -1 for the zero expression.
  int degree() const {
    int d = -1;
    for (const auto& t : terms_)
      if (t.coeff != 0.0) d = std::max(d, t.x_power + t.p_power);
    return d;
  }

  bool has_cross_terms() const {
    for (const auto& t : terms_)
      if (t.coeff != 0.0 && t.x_power > 0 && t.p_power > 0) return true;
    return false;
  }

  double evaluate(double x, double p) const {
    double v = 0.0;
    for (const auto& t : terms_) v += t.evaluate(x, p);
    return v;
  }

  PointFunction function() const {
    return [terms = terms_](double x, double p) {
      double v = 0.0;
      for (const auto& t : terms) v += t.evaluate(x, p);
      return cplx(v, 0.0);
    };
  }

private:
  std::vector<Monomial> terms_;
};

namespace detail {

class ExpressionParser {
public:
  explicit ExpressionParser(std::string_view text) : s_(text) {}

  Expression parse() {
    std::vector<Monomial> terms;
    skip();
    double sign = 1.0;
    if (peek() == '+' || peek() == '-') sign = take() == '-' ? -1.0 : 1.0;
    terms.push_back(term(sign));
    while (true) {
      skip();
      if (pos_ >= s_.size()) break;
      const char c = take();
      if (c != '+' && c != '-') throw ParseError(std::string("unexpected '") + c + "'", pos_ - 1);
      terms.push_back(term(c == '-' ? -1.0 : 1.0));
    }
    return Expression(std::move(terms));
  }

private:
  Monomial term(double sign) {
    Monomial m;
    m.coeff = sign;
    factor(m);
    while (true) {
      skip();
      if (peek() != '*') break;
      take();
      factor(m);
    }
    return m;
  }

  void factor(Monomial& m) {
    skip();
    if (pos_ >= s_.size()) throw ParseError("expected a factor", pos_);
    const char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      m.coeff *= number();
    } else if (c == 'x' || c == 'p') {
      take();
      const int e = exponent();
      (c == 'x' ? m.x_power : m.p_power) += e;
    } else if (s_.substr(pos_, 5) == "gauss") {
      if (m.gaussian) throw ParseError("gauss appears twice in one term", pos_);
      pos_ += 5;
      m.gaussian = true;
    } else {
      throw ParseError(std::string("unexpected '") + c + "'", pos_);
    }
  }

  int exponent() {
    skip();
    if (peek() != '^') return 1;
    take();
    skip();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) throw ParseError("expected a non-negative integer exponent", start);
    return std::stoi(std::string(s_.substr(start, pos_ - start)));
  }

  double number() {
    const std::string rest(s_.substr(pos_));
    char* end = nullptr;
    const double v = std::strtod(rest.c_str(), &end);
    if (end == rest.c_str()) throw ParseError("malformed number", pos_);
    pos_ += static_cast<std::size_t>(end - rest.c_str());
    return v;
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  char take() { return s_[pos_++]; }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Expression parse_expression(std::string_view text) { return detail::ExpressionParser(text).parse(); }

enum class Family { free, harmonic, linear, quadratic, damped, custom };

inline std::string to_string(Family f) {
  switch (f) {
    case Family::free: return "free";
    case Family::harmonic: return "harmonic";
    case Family::linear: return "linear";
    case Family::quadratic: return "quadratic";
    case Family::damped: return "damped";
    case Family::custom: return "custom";
  }
  return "?";
}

inline Family family_from_string(const std::string& s) {
  if (s == "free") return Family::free;
  if (s == "harmonic") return Family::harmonic;
  if (s == "linear") return Family::linear;
  if (s == "quadratic") return Family::quadratic;
  if (s == "damped") return Family::damped;
  if (s == "custom") return Family::custom;
  throw DomainError("unknown Hamiltonian family '" + s + "'");
}

/// A Hamiltonian family with its parameters.
///   free       p^2 / 2m
///   harmonic   p^2 / 2m + m w^2 x^2 / 2
///   linear     p^2 + x            (mass absorbed)
///   quadratic  a p^2 + b x^2 + 2 c x p
///   damped     harmonic, evolved with the gamma-deformed product
///   custom     any real polynomial expression
struct HamiltonianSpec {
  Family family = Family::harmonic;
  double mass = 1.0;
  double omega = 1.0;
  double gamma = 0.0;
  double a = 0.5, b = 0.5, c = 0.0;
  Expression custom;

  static HamiltonianSpec free_particle(double m = 1.0) { return checked({Family::free, m}); }
  static HamiltonianSpec harmonic(double m = 1.0, double w = 1.0) {
    return checked({Family::harmonic, m, w});
  }
  static HamiltonianSpec linear_potential() { return checked({Family::linear}); }
  static HamiltonianSpec quadratic(double a, double b, double c) {
    HamiltonianSpec h{Family::quadratic};
    h.a = a, h.b = b, h.c = c;
    return checked(h);
  }
  static HamiltonianSpec damped(double m, double w, double g) { return checked({Family::damped, m, w, g}); }
  static HamiltonianSpec custom_expression(Expression e) {
    HamiltonianSpec h{Family::custom};
    h.custom = std::move(e);
    return checked(h);
  }

  /// ab - c^2 for the quadratic family.
  double discriminant() const { return a * b - c * c; }

  void validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    switch (family) {
      case Family::free:
        if (!positive(mass)) throw DomainError("mass must be positive");
        break;
      case Family::harmonic:
      case Family::damped:
        if (!positive(mass)) throw DomainError("mass must be positive");
        if (!positive(omega)) throw DomainError("omega must be positive");
        if (!(std::isfinite(gamma) && gamma >= 0.0)) throw DomainError("gamma must be non-negative");
        break;
      case Family::quadratic:
        if (!(std::isfinite(a) && std::isfinite(b) && std::isfinite(c)))
          throw DomainError("quadratic coefficients must be finite");
        break;
      case Family::linear:
        break;
      case Family::custom:
        if (!custom.is_polynomial()) throw DomainError("custom Hamiltonians must be polynomials");
        break;
    }
  }

  /// Non-fatal remarks (hyperbolic or parabolic quadratic forms).
  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    if (family == Family::quadratic && discriminant() <= 0.0)
      w.push_back("quadratic form is not elliptic (ab - c^2 <= 0); spectrum is not discrete");
    return w;
  }

  /// The Hamiltonian as a polynomial expression.
  Expression expression() const {
    auto m = [](double c, int a, int b) { return Monomial{c, a, b, false}; };
    switch (family) {
      case Family::free: return Expression(std::vector<Monomial>{m(0.5 / mass, 0, 2)});
      case Family::harmonic:
      case Family::damped:
        return Expression(std::vector<Monomial>{m(0.5 / mass, 0, 2), m(0.5 * mass * omega * omega, 2, 0)});
      case Family::linear: return Expression(std::vector<Monomial>{m(1.0, 0, 2), m(1.0, 1, 0)});
      case Family::quadratic:
        return Expression(std::vector<Monomial>{m(a, 0, 2), m(b, 2, 0), m(2.0 * c, 1, 1)});
      case Family::custom: return custom;
    }
    return {};
  }

  PointFunction function() const { return expression().function(); }

  /// Discrete spectrum bounded below.
  bool has_bounded_spectrum() const {
    return family == Family::harmonic || family == Family::damped ||
           (family == Family::quadratic && discriminant() > 0.0);
  }

private:
  static HamiltonianSpec checked(HamiltonianSpec h) {
    h.validate();
    return h;
  }
};

inline GridFunction sample_hamiltonian(const PhaseSpaceGrid& grid, const HamiltonianSpec& h) {
  return sample(grid, h.function());
}

}  // namespace moyal
