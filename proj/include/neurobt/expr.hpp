#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace neurobt {

// Syntax error with the byte offset of the first offending character.
struct ParseError : std::runtime_error {
  std::size_t offset;
  ParseError(const std::string& msg, std::size_t off)
      : std::runtime_error(msg + " (at byte " + std::to_string(off) + ")"), offset(off) {}
};

struct UnknownIdentifierError : ParseError {
  std::string name;
  UnknownIdentifierError(const std::string& ident, std::size_t off)
      : ParseError("unknown identifier '" + ident + "'", off), name(ident) {}
};

// eval_checked hit an overflow or a 0/0 that is not a declared removable point.
struct NonFiniteError : std::runtime_error {
  double v;
  explicit NonFiniteError(double at)
      : std::runtime_error("expression is non-finite at V=" + std::to_string(at)), v(at) {}
};

namespace detail {
struct Node;
struct Tape;
using NodePtr = std::shared_ptr<const Node>;
}  // namespace detail

// Immutable scalar function of V: parsed kinetics, exact symbolic derivatives,
// removable 0/0 points bridged by local series within |V-v0| < 1e-4.
// Thread-safe for concurrent evaluation.
class Expr {
 public:
  Expr();  // constant 0

  static Expr parse(std::string_view text);
  static Expr constant(double c);
  static Expr var();

  double operator()(double v) const;      // raw: may return inf/nan
  double eval_checked(double v) const;    // throws NonFiniteError
  Expr diff(int order = 1) const;
  std::string str() const;
  bool is_constant(double* value = nullptr) const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  friend Expr exp(const Expr& a);
  friend Expr tanh(const Expr& a);
  friend Expr pow(const Expr& a, double c);

 private:
  explicit Expr(detail::NodePtr n);
  detail::NodePtr root_;
  std::shared_ptr<const detail::Tape> tape_;
};

inline Expr operator+(const Expr& a, double b) { return a + Expr::constant(b); }
inline Expr operator+(double a, const Expr& b) { return Expr::constant(a) + b; }
inline Expr operator-(const Expr& a, double b) { return a - Expr::constant(b); }
inline Expr operator-(double a, const Expr& b) { return Expr::constant(a) - b; }
inline Expr operator*(const Expr& a, double b) { return a * Expr::constant(b); }
inline Expr operator*(double a, const Expr& b) { return Expr::constant(a) * b; }
inline Expr operator/(const Expr& a, double b) { return a / Expr::constant(b); }
inline Expr operator/(double a, const Expr& b) { return Expr::constant(a) / b; }

// alpha/beta rate composition
Expr xinf_from_rates(const Expr& alpha, const Expr& beta);  // alpha/(alpha+beta)
Expr tau_from_rates(const Expr& alpha, const Expr& beta);   // 1/(alpha+beta)

}  // namespace neurobt
