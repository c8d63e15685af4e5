#include "neurobt/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <vector>

namespace neurobt {
namespace detail {

enum class Op : std::uint8_t { Const, Var, Add, Sub, Mul, Div, Neg, Exp, Tanh, Pow };

constexpr double kSingWindow = 1e-4;
constexpr int kSeriesLen = 6;
constexpr int kTaylorOrd = 9;  // coefficients 0..8
constexpr int kMaxDepth = 128;

// Local series of a removable quotient around v0; bridges the 0/0 window.
struct Sing {
  double v0;
  double rho[kSeriesLen];
  int len;

  double eval(double v) const {
    double u = v - v0, acc = 0;
    for (int i = len - 1; i >= 0; --i) acc = acc * u + rho[i];
    return acc;
  }
  Sing deriv() const {
    Sing d{v0, {}, len > 1 ? len - 1 : 1};
    d.rho[0] = 0;
    for (int i = 0; i + 1 < len; ++i) d.rho[i] = (i + 1) * rho[i + 1];
    return d;
  }
};

struct Node {
  Op op;
  double val = 0;  // Const value or Pow exponent
  NodePtr a, b;
  std::vector<Sing> sings;  // Div only
};

static bool node_is_const(const NodePtr& n, double* v = nullptr) {
  if (n->op != Op::Const) return false;
  if (v) *v = n->val;
  return true;
}

static NodePtr mk(Op op, double val, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->val = val;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

static NodePtr nconst(double v) { return mk(Op::Const, v); }
static NodePtr nvar() { return mk(Op::Var, 0); }

static double eval_node(const Node* n, double v) {
  switch (n->op) {
    case Op::Const: return n->val;
    case Op::Var: return v;
    case Op::Add: return eval_node(n->a.get(), v) + eval_node(n->b.get(), v);
    case Op::Sub: return eval_node(n->a.get(), v) - eval_node(n->b.get(), v);
    case Op::Mul: return eval_node(n->a.get(), v) * eval_node(n->b.get(), v);
    case Op::Div:
      for (const auto& s : n->sings)
        if (std::abs(v - s.v0) < kSingWindow) return s.eval(v);
      return eval_node(n->a.get(), v) / eval_node(n->b.get(), v);
    case Op::Neg: return -eval_node(n->a.get(), v);
    case Op::Exp: return std::exp(eval_node(n->a.get(), v));
    case Op::Tanh: return std::tanh(eval_node(n->a.get(), v));
    case Op::Pow: return std::pow(eval_node(n->a.get(), v), n->val);
  }
  return 0;
}

static NodePtr nadd(NodePtr a, NodePtr b) {
  double ca, cb;
  bool ka = node_is_const(a, &ca), kb = node_is_const(b, &cb);
  if (ka && kb) return nconst(ca + cb);
  if (ka && ca == 0) return b;
  if (kb && cb == 0) return a;
  return mk(Op::Add, 0, std::move(a), std::move(b));
}

static NodePtr nneg(NodePtr a) {
  double c;
  if (node_is_const(a, &c)) return nconst(-c);
  if (a->op == Op::Neg) return a->a;
  return mk(Op::Neg, 0, std::move(a));
}

static NodePtr nsub(NodePtr a, NodePtr b) {
  double ca, cb;
  bool ka = node_is_const(a, &ca), kb = node_is_const(b, &cb);
  if (ka && kb) return nconst(ca - cb);
  if (kb && cb == 0) return a;
  if (ka && ca == 0) return nneg(std::move(b));
  return mk(Op::Sub, 0, std::move(a), std::move(b));
}

static NodePtr nmul(NodePtr a, NodePtr b) {
  double ca, cb;
  bool ka = node_is_const(a, &ca), kb = node_is_const(b, &cb);
  if (ka && kb) return nconst(ca * cb);
  if (ka && ca == 0) return nconst(0);
  if (kb && cb == 0) return nconst(0);
  if (ka && ca == 1) return b;
  if (kb && cb == 1) return a;
  return mk(Op::Mul, 0, std::move(a), std::move(b));
}

static NodePtr nexp(NodePtr a) {
  double c;
  if (node_is_const(a, &c)) return nconst(std::exp(c));
  return mk(Op::Exp, 0, std::move(a));
}

static NodePtr ntanh(NodePtr a) {
  double c;
  if (node_is_const(a, &c)) return nconst(std::tanh(c));
  return mk(Op::Tanh, 0, std::move(a));
}

static NodePtr npow(NodePtr a, double c) {
  if (c == 0) return nconst(1);
  if (c == 1) return a;
  double ca;
  if (node_is_const(a, &ca)) return nconst(std::pow(ca, c));
  return mk(Op::Pow, c, std::move(a));
}

static NodePtr diff_node(const NodePtr& n);

static std::size_t node_count(const Node* n) {
  std::size_t c = 1;
  if (n->a) c += node_count(n->a.get());
  if (n->b) c += node_count(n->b.get());
  return c;
}

// v0 of an affine argument c*V+d, or nothing
static bool affine_root(const NodePtr& arg, double* v0) {
  NodePtr d1 = diff_node(arg);
  double c;
  if (!node_is_const(d1, &c) || c == 0 || !std::isfinite(c)) return false;
  double d = eval_node(arg.get(), 0.0);
  if (!std::isfinite(d)) return false;
  *v0 = -d / c;
  return std::isfinite(*v0);
}

// candidate removable points: roots of affine exp arguments in the denominator
static void collect_exp_candidates(const NodePtr& n, std::vector<double>& out) {
  if (n->op == Op::Exp) {
    double v0;
    if (affine_root(n->a, &v0) && std::none_of(out.begin(), out.end(), [&](double x) {
          return std::abs(x - v0) < 1e-9;
        }))
      out.push_back(v0);
  }
  if (n->a) collect_exp_candidates(n->a, out);
  if (n->b) collect_exp_candidates(n->b, out);
}

// Taylor coefficients f(v0+u) = sum c_j u^j via repeated symbolic diff
static bool taylor(const NodePtr& f, double v0, double* c, int ord) {
  NodePtr d = f;
  double fact = 1;
  for (int j = 0; j < ord; ++j) {
    if (j > 0) {
      d = diff_node(d);
      fact *= j;
      if (node_count(d.get()) > 200000) return false;
    }
    double v = eval_node(d.get(), v0);
    if (!std::isfinite(v)) return false;
    c[j] = v / fact;
  }
  return true;
}

static void attach_sings(Node& div) {
  std::vector<double> cands;
  collect_exp_candidates(div.b, cands);
  for (double v0 : cands) {
    const Node* D = div.b.get();
    const Node* N = div.a.get();
    double magD = std::max({std::abs(eval_node(D, v0 - 0.25)),
                            std::abs(eval_node(D, v0 + 0.25)), 1e-300});
    if (!(std::abs(eval_node(D, v0)) <= 1e-8 * magD)) continue;
    double magN = std::max({std::abs(eval_node(N, v0 - 0.25)),
                            std::abs(eval_node(N, v0 + 0.25)), 1e-300});
    if (!(std::abs(eval_node(N, v0)) <= 1e-8 * magN)) continue;  // genuine pole

    double Nc[kTaylorOrd], Dc[kTaylorOrd];
    if (!taylor(div.a, v0, Nc, kTaylorOrd)) continue;
    if (!taylor(div.b, v0, Dc, kTaylorOrd)) continue;
    double scaleD = 1e-300, scaleN = 1e-300;
    for (int j = 0; j < kTaylorOrd; ++j) {
      scaleD = std::max(scaleD, std::abs(Dc[j]));
      scaleN = std::max(scaleN, std::abs(Nc[j]));
    }
    int k = -1;
    for (int j = 1; j < kTaylorOrd; ++j)
      if (std::abs(Dc[j]) > 1e-7 * scaleD) {
        k = j;
        break;
      }
    if (k < 0 || k > 4) continue;
    bool vanishes = true;
    for (int j = 0; j < k; ++j)
      if (std::abs(Nc[j]) > 1e-7 * scaleN) {
        vanishes = false;
        break;
      }
    if (!vanishes) continue;

    Sing s{v0, {}, std::min(kSeriesLen, kTaylorOrd - k)};
    for (int m = 0; m < s.len; ++m) {
      double acc = Nc[k + m];
      for (int i = 0; i < m; ++i) acc -= s.rho[i] * Dc[k + m - i];
      s.rho[m] = acc / Dc[k];
    }
    bool good = true;
    for (double dv : {-1.5 * kSingWindow, 1.5 * kSingWindow}) {
      double v = v0 + dv;
      double direct = eval_node(N, v) / eval_node(D, v);
      if (!std::isfinite(direct) ||
          std::abs(s.eval(v) - direct) > 1e-5 * (std::abs(direct) + 1e-9)) {
        good = false;
        break;
      }
    }
    if (good) div.sings.push_back(s);
  }
}

static NodePtr ndiv(NodePtr a, NodePtr b, bool detect) {
  double ca, cb;
  bool ka = node_is_const(a, &ca), kb = node_is_const(b, &cb);
  if (ka && kb) return nconst(ca / cb);
  if (ka && ca == 0) return nconst(0);
  if (kb && cb == 1) return a;
  auto n = std::make_shared<Node>();
  n->op = Op::Div;
  n->a = std::move(a);
  n->b = std::move(b);
  if (detect) attach_sings(*n);
  return n;
}

// quotient-rule div inheriting its parent's singularities as series derivatives
static NodePtr ndiv_derived(NodePtr num, NodePtr den, const std::vector<Sing>& parent) {
  double cn, cd;
  bool kn = node_is_const(num, &cn), kd = node_is_const(den, &cd);
  if (kn && kd) return nconst(cn / cd);
  if (kn && cn == 0) return nconst(0);
  if (kd && cd == 1) return num;
  auto n = std::make_shared<Node>();
  n->op = Op::Div;
  n->a = std::move(num);
  n->b = std::move(den);
  for (const auto& s : parent) n->sings.push_back(s.deriv());
  return n;
}

static NodePtr diff_node(const NodePtr& n) {
  switch (n->op) {
    case Op::Const: return nconst(0);
    case Op::Var: return nconst(1);
    case Op::Add: return nadd(diff_node(n->a), diff_node(n->b));
    case Op::Sub: return nsub(diff_node(n->a), diff_node(n->b));
    case Op::Mul:
      return nadd(nmul(diff_node(n->a), n->b), nmul(n->a, diff_node(n->b)));
    case Op::Div: {
      NodePtr num = nsub(nmul(diff_node(n->a), n->b), nmul(n->a, diff_node(n->b)));
      NodePtr den = nmul(n->b, n->b);
      return ndiv_derived(std::move(num), std::move(den), n->sings);
    }
    case Op::Neg: return nneg(diff_node(n->a));
    case Op::Exp: return nmul(n, diff_node(n->a));
    case Op::Tanh:
      return nmul(nsub(nconst(1), nmul(n, n)), diff_node(n->a));
    case Op::Pow:
      return nmul(nmul(nconst(n->val), npow(n->a, n->val - 1)), diff_node(n->a));
  }
  return nconst(0);
}

static void print_node(const Node* n, std::string& out) {
  char buf[40];
  switch (n->op) {
    case Op::Const:
      std::snprintf(buf, sizeof buf, "%.17g", n->val);
      out += buf;
      break;
    case Op::Var: out += 'V'; break;
    case Op::Add:
      out += '(';
      print_node(n->a.get(), out);
      out += '+';
      print_node(n->b.get(), out);
      out += ')';
      break;
    case Op::Sub:
      out += '(';
      print_node(n->a.get(), out);
      out += '-';
      print_node(n->b.get(), out);
      out += ')';
      break;
    case Op::Mul:
      out += '(';
      print_node(n->a.get(), out);
      out += '*';
      print_node(n->b.get(), out);
      out += ')';
      break;
    case Op::Div:
      out += '(';
      print_node(n->a.get(), out);
      out += '/';
      print_node(n->b.get(), out);
      out += ')';
      break;
    case Op::Neg:
      out += "(-";
      print_node(n->a.get(), out);
      out += ')';
      break;
    case Op::Exp:
      out += "exp(";
      print_node(n->a.get(), out);
      out += ')';
      break;
    case Op::Tanh:
      out += "tanh(";
      print_node(n->a.get(), out);
      out += ')';
      break;
    case Op::Pow:
      out += '(';
      print_node(n->a.get(), out);
      out += '^';
      std::snprintf(buf, sizeof buf, "%.17g", n->val);
      out += buf;
      out += ')';
      break;
  }
}

struct TapeEntry {
  Op op;
  double val;
  std::int32_t sing_begin = -1, sing_end = -1;
};

struct Tape {
  std::vector<TapeEntry> code;
  std::vector<Sing> sings;

  double run(double v) const {
    double st[kMaxDepth];
    int sp = 0;
    for (const auto& e : code) {
      switch (e.op) {
        case Op::Const: st[sp++] = e.val; break;
        case Op::Var: st[sp++] = v; break;
        case Op::Add: --sp; st[sp - 1] += st[sp]; break;
        case Op::Sub: --sp; st[sp - 1] -= st[sp]; break;
        case Op::Mul: --sp; st[sp - 1] *= st[sp]; break;
        case Op::Div: {
          --sp;
          double out = st[sp - 1] / st[sp];
          for (std::int32_t i = e.sing_begin; i < e.sing_end; ++i)
            if (std::abs(v - sings[i].v0) < kSingWindow) {
              out = sings[i].eval(v);
              break;
            }
          st[sp - 1] = out;
        } break;
        case Op::Neg: st[sp - 1] = -st[sp - 1]; break;
        case Op::Exp: st[sp - 1] = std::exp(st[sp - 1]); break;
        case Op::Tanh: st[sp - 1] = std::tanh(st[sp - 1]); break;
        case Op::Pow: st[sp - 1] = std::pow(st[sp - 1], e.val); break;
      }
    }
    return st[0];
  }
};

static int flatten(const Node* n, Tape& t) {
  int depth;
  switch (n->op) {
    case Op::Const:
    case Op::Var:
      depth = 1;
      break;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      int da = flatten(n->a.get(), t);
      int db = flatten(n->b.get(), t);
      depth = std::max(da, db + 1);
      break;
    }
    default:
      depth = flatten(n->a.get(), t);
      break;
  }
  TapeEntry e{n->op, n->val, -1, -1};
  if (n->op == Op::Div && !n->sings.empty()) {
    e.sing_begin = static_cast<std::int32_t>(t.sings.size());
    for (const auto& s : n->sings) t.sings.push_back(s);
    e.sing_end = static_cast<std::int32_t>(t.sings.size());
  }
  t.code.push_back(e);
  if (t.code.size() > 2000000) throw std::runtime_error("expression too large to compile");
  return depth;
}

static std::shared_ptr<const Tape> compile(const NodePtr& root) {
  auto t = std::make_shared<Tape>();
  int depth = flatten(root.get(), *t);
  if (depth > kMaxDepth) throw std::runtime_error("expression too deep to compile");
  return t;
}

struct Parser {
  std::string text;
  std::size_t pos = 0;

  void skip() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }
  bool eat(char c) {
    skip();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  [[noreturn]] static void fail(const std::string& m, std::size_t at) { throw ParseError(m, at); }

  NodePtr expr() {
    NodePtr x = term();
    for (;;) {
      if (eat('+')) x = nadd(std::move(x), term());
      else if (eat('-')) x = nsub(std::move(x), term());
      else break;
    }
    return x;
  }
  NodePtr term() {
    NodePtr x = factor();
    for (;;) {
      if (eat('*')) x = nmul(std::move(x), factor());
      else if (eat('/')) x = ndiv(std::move(x), factor(), true);
      else break;
    }
    return x;
  }
  NodePtr factor() {
    if (eat('-')) return nneg(factor());
    return power();
  }
  NodePtr power() {
    NodePtr base = atom();
    skip();
    std::size_t caret = pos;
    if (eat('^')) {
      NodePtr e = factor();
      double c;
      if (!node_is_const(e, &c)) fail("exponent must be a constant", caret);
      return npow(std::move(base), c);
    }
    return base;
  }
  NodePtr atom() {
    skip();
    if (pos >= text.size()) fail("unexpected end of input", pos);
    char c = text[pos];
    if (c == '(') {
      ++pos;
      NodePtr x = expr();
      if (!eat(')')) fail("expected ')'", pos);
      return x;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return ident();
    fail(std::string("unexpected character '") + c + "'", pos);
  }
  NodePtr number() {
    const char* begin = text.c_str() + pos;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) fail("invalid number", pos);
    pos += static_cast<std::size_t>(end - begin);
    return nconst(v);
  }
  NodePtr ident() {
    std::size_t start = pos;
    while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      ++pos;
    std::string name = text.substr(start, pos - start);
    if (name == "V") return nvar();
    if (name == "exp" || name == "tanh") {
      if (!eat('(')) fail("expected '(' after function name", pos);
      NodePtr arg = expr();
      if (!eat(')')) fail("expected ')'", pos);
      return name == "exp" ? nexp(std::move(arg)) : ntanh(std::move(arg));
    }
    throw UnknownIdentifierError(name, start);
  }
};

}  // namespace detail

using detail::NodePtr;

Expr::Expr() : Expr(detail::nconst(0)) {}
Expr::Expr(NodePtr n) : root_(std::move(n)), tape_(detail::compile(root_)) {}

Expr Expr::parse(std::string_view text) {
  detail::Parser p{std::string(text)};
  NodePtr x = p.expr();
  p.skip();
  if (p.pos != p.text.size()) detail::Parser::fail("unexpected trailing input", p.pos);
  return Expr(std::move(x));
}

Expr Expr::constant(double c) { return Expr(detail::nconst(c)); }
Expr Expr::var() { return Expr(detail::nvar()); }

double Expr::operator()(double v) const { return tape_->run(v); }

double Expr::eval_checked(double v) const {
  double out = tape_->run(v);
  if (!std::isfinite(out)) throw NonFiniteError(v);
  return out;
}

Expr Expr::diff(int order) const {
  if (order < 0) throw std::invalid_argument("diff order must be >= 0");
  NodePtr n = root_;
  for (int i = 0; i < order; ++i) n = detail::diff_node(n);
  return Expr(std::move(n));
}

std::string Expr::str() const {
  std::string out;
  detail::print_node(root_.get(), out);
  return out;
}

bool Expr::is_constant(double* value) const { return detail::node_is_const(root_, value); }

Expr operator+(const Expr& a, const Expr& b) { return Expr(detail::nadd(a.root_, b.root_)); }
Expr operator-(const Expr& a, const Expr& b) { return Expr(detail::nsub(a.root_, b.root_)); }
Expr operator*(const Expr& a, const Expr& b) { return Expr(detail::nmul(a.root_, b.root_)); }
Expr operator/(const Expr& a, const Expr& b) { return Expr(detail::ndiv(a.root_, b.root_, true)); }
Expr operator-(const Expr& a) { return Expr(detail::nneg(a.root_)); }
Expr exp(const Expr& a) { return Expr(detail::nexp(a.root_)); }
Expr tanh(const Expr& a) { return Expr(detail::ntanh(a.root_)); }
Expr pow(const Expr& a, double c) { return Expr(detail::npow(a.root_, c)); }

Expr xinf_from_rates(const Expr& alpha, const Expr& beta) { return alpha / (alpha + beta); }
Expr tau_from_rates(const Expr& alpha, const Expr& beta) {
  return Expr::constant(1) / (alpha + beta);
}

}  // namespace neurobt
