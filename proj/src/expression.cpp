#include "contact_kam/expression.hpp"

#include <charconv>
#include <cctype>
#include <cmath>
#include <numbers>

#include "contact_kam/errors.hpp"

namespace contact_kam {

using Op = Expression::Op;
using NodePtr = Expression::NodePtr;

namespace {

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
  return std::make_shared<const Expression::Node>(Expression::Node{op, 0.0, std::move(a), std::move(b)});
}

NodePtr make_const(double c) {
  return std::make_shared<const Expression::Node>(Expression::Node{Op::Const, c, nullptr, nullptr});
}

bool is_const(const NodePtr& n, double c) { return n->op == Op::Const && n->value == c; }

bool is_function(Op op) {
  switch (op) {
    case Op::Sin: case Op::Cos: case Op::Tan: case Op::Exp:
    case Op::Log: case Op::Sqrt: case Op::Abs: case Op::Sign:
      return true;
    default:
      return false;
  }
}

const char* function_name(Op op) {
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Tan: return "tan";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    case Op::Abs: return "abs";
    case Op::Sign: return "sgn";
    default: return "";
  }
}

// Builders with zero/one pruning, so derivatives stay small and avoid log(0) terms.
NodePtr add(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return make(Op::Add, std::move(a), std::move(b));
}

NodePtr sub(NodePtr a, NodePtr b) {
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return make(Op::Neg, std::move(b));
  return make(Op::Sub, std::move(a), std::move(b));
}

NodePtr mul(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  return make(Op::Mul, std::move(a), std::move(b));
}

NodePtr div(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0)) return make_const(0.0);
  if (is_const(b, 1.0)) return a;
  return make(Op::Div, std::move(a), std::move(b));
}

NodePtr neg(NodePtr a) {
  if (is_const(a, 0.0)) return a;
  return make(Op::Neg, std::move(a));
}

bool depends(const NodePtr& n, Var v) {
  switch (n->op) {
    case Op::Const: case Op::Pi: return false;
    case Op::X: return v == Var::X;
    case Op::U: return v == Var::U;
    case Op::P: return v == Var::P;
    default:
      return depends(n->a, v) || (n->b && depends(n->b, v));
  }
}

NodePtr diff(const NodePtr& n, Var v) {
  if (!depends(n, v)) return make_const(0.0);
  const NodePtr& a = n->a;
  const NodePtr& b = n->b;
  switch (n->op) {
    case Op::X: case Op::U: case Op::P:
      return make_const(1.0);
    case Op::Neg:
      return neg(diff(a, v));
    case Op::Add:
      return add(diff(a, v), diff(b, v));
    case Op::Sub:
      return sub(diff(a, v), diff(b, v));
    case Op::Mul:
      return add(mul(diff(a, v), b), mul(a, diff(b, v)));
    case Op::Div:
      // (a'b - ab') / b^2
      return div(sub(mul(diff(a, v), b), mul(a, diff(b, v))), make(Op::Pow, b, make_const(2.0)));
    case Op::Pow:
      if (!depends(b, v)) {
        NodePtr lowered = make(Op::Pow, a, sub(b, make_const(1.0)));
        if (b->op == Op::Const) lowered = make(Op::Pow, a, make_const(b->value - 1.0));
        if (b->op == Op::Const && b->value == 2.0) lowered = a;
        return mul(mul(b, lowered), diff(a, v));
      }
      if (!depends(a, v)) return mul(mul(n, make(Op::Log, a)), diff(b, v));
      return mul(n, add(mul(diff(b, v), make(Op::Log, a)), div(mul(b, diff(a, v)), a)));
    case Op::Sin:
      return mul(make(Op::Cos, a), diff(a, v));
    case Op::Cos:
      return neg(mul(make(Op::Sin, a), diff(a, v)));
    case Op::Tan:
      return div(diff(a, v), make(Op::Pow, make(Op::Cos, a), make_const(2.0)));
    case Op::Exp:
      return mul(n, diff(a, v));
    case Op::Log:
      return div(diff(a, v), a);
    case Op::Sqrt:
      return div(diff(a, v), mul(make_const(2.0), n));
    case Op::Abs:
      return mul(make(Op::Sign, a), diff(a, v));
    case Op::Sign:
      return make_const(0.0);
    default:
      return make_const(0.0);
  }
}

double eval(const Expression::Node& n, double x, double u, double p) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Pi: return std::numbers::pi;
    case Op::X: return x;
    case Op::U: return u;
    case Op::P: return p;
    default: break;
  }
  const double a = eval(*n.a, x, u, p);
  switch (n.op) {
    case Op::Neg: return -a;
    case Op::Sin: return std::sin(a);
    case Op::Cos: return std::cos(a);
    case Op::Tan: return std::tan(a);
    case Op::Exp: return std::exp(a);
    case Op::Log:
      if (!(a > 0.0)) throw DomainError("log of non-positive value " + std::to_string(a));
      return std::log(a);
    case Op::Sqrt:
      if (a < 0.0) throw DomainError("sqrt of negative value " + std::to_string(a));
      return std::sqrt(a);
    case Op::Abs: return std::abs(a);
    case Op::Sign: return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
    default: break;
  }
  const double b = eval(*n.b, x, u, p);
  switch (n.op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div:
      if (b == 0.0) throw DomainError("division by zero");
      return a / b;
    case Op::Pow: {
      if (b == 2.0) return a * a;
      const double r = std::pow(a, b);
      if (std::isnan(r)) throw DomainError("power of negative base with non-integer exponent");
      if (std::isinf(r) && a == 0.0) throw DomainError("zero raised to a negative power");
      return r;
    }
    default:
      throw DomainError("malformed expression node");
  }
}

std::string format_number(double c) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, std::abs(c));
  std::string s(buf, res.ptr);
  return c < 0.0 || std::signbit(c) ? "(-" + s + ")" : s;
}

void serialize(const Expression::Node& n, std::string& out) {
  switch (n.op) {
    case Op::Const: out += format_number(n.value); return;
    case Op::Pi: out += "pi"; return;
    case Op::X: out += 'x'; return;
    case Op::U: out += 'u'; return;
    case Op::P: out += 'p'; return;
    case Op::Neg:
      out += "(-";
      serialize(*n.a, out);
      out += ')';
      return;
    default: break;
  }
  if (is_function(n.op)) {
    out += function_name(n.op);
    out += '(';
    serialize(*n.a, out);
    out += ')';
    return;
  }
  char sym = '+';
  switch (n.op) {
    case Op::Sub: sym = '-'; break;
    case Op::Mul: sym = '*'; break;
    case Op::Div: sym = '/'; break;
    case Op::Pow: sym = '^'; break;
    default: break;
  }
  out += '(';
  serialize(*n.a, out);
  out += sym;
  serialize(*n.b, out);
  out += ')';
}

bool equal(const NodePtr& l, const NodePtr& r) {
  if (l == r) return true;
  if (!l || !r) return false;
  if (l->op != r->op) return false;
  if (l->op == Op::Const) return l->value == r->value;
  return equal(l->a, r->a) && equal(l->b, r->b);
}

class Parser {
 public:
  explicit Parser(std::string_view src) : s_(src) {}

  NodePtr parse() {
    skip();
    if (pos_ >= s_.size()) throw ParseError("empty expression", pos_);
    NodePtr e = expr();
    skip();
    if (pos_ < s_.size()) {
      if (s_[pos_] == ',') throw ParseError("unexpected ','", pos_);
      throw ParseError(std::string("unexpected '") + s_[pos_] + "'", pos_);
    }
    return e;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) lhs = make(Op::Add, lhs, term());
      else if (accept('-')) lhs = make(Op::Sub, lhs, term());
      else return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = factor();
    for (;;) {
      if (accept('*')) lhs = make(Op::Mul, lhs, factor());
      else if (accept('/')) lhs = make(Op::Div, lhs, factor());
      else return lhs;
    }
  }

  // Unary minus binds looser than '^': -2^2 = -4, 2^-1 = 0.5.
  NodePtr factor() {
    if (accept('-')) return make(Op::Neg, factor());
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    if (accept('^')) return make(Op::Pow, base, factor());
    return base;
  }

  NodePtr atom() {
    skip();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      close_paren();
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  void close_paren() {
    skip();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of input, expected ')'", pos_);
    if (s_[pos_] == ',') throw ParseError("arity mismatch: functions take one argument", pos_);
    if (s_[pos_] != ')') throw ParseError(std::string("expected ')' but found '") + s_[pos_] + "'", pos_);
    ++pos_;
  }

  NodePtr number() {
    const std::size_t start = pos_;
    std::size_t end = pos_;
    auto digits = [&] {
      std::size_t k = 0;
      while (end < s_.size() && std::isdigit(static_cast<unsigned char>(s_[end]))) ++end, ++k;
      return k;
    };
    std::size_t count = digits();
    if (end < s_.size() && s_[end] == '.') {
      ++end;
      count += digits();
    }
    if (count == 0) throw ParseError("malformed number", start);
    if (end < s_.size() && (s_[end] == 'e' || s_[end] == 'E')) {
      std::size_t probe = end + 1;
      if (probe < s_.size() && (s_[probe] == '+' || s_[probe] == '-')) ++probe;
      if (probe < s_.size() && std::isdigit(static_cast<unsigned char>(s_[probe]))) {
        end = probe;
        digits();
      } else {
        throw ParseError("malformed exponent", end);
      }
    }
    double value = 0.0;
    auto res = std::from_chars(s_.data() + start, s_.data() + end, value);
    if (res.ec != std::errc() || res.ptr != s_.data() + end) throw ParseError("malformed number", start);
    pos_ = end;
    return make_const(value);
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    const std::string_view name = s_.substr(start, pos_ - start);
    if (name == "pi") return make(Op::Pi);
    if (name == "x") return make(Op::X);
    if (name == "u") return make(Op::U);
    if (name == "p") return make(Op::P);
    Op fn;
    if (name == "sin") fn = Op::Sin;
    else if (name == "cos") fn = Op::Cos;
    else if (name == "tan") fn = Op::Tan;
    else if (name == "exp") fn = Op::Exp;
    else if (name == "log") fn = Op::Log;
    else if (name == "sqrt") fn = Op::Sqrt;
    else if (name == "abs") fn = Op::Abs;
    else throw ParseError("unknown identifier '" + std::string(name) + "'", start);
    if (!accept('(')) throw ParseError("expected '(' after function '" + std::string(name) + "'", pos_);
    skip();
    if (pos_ < s_.size() && s_[pos_] == ')') throw ParseError("arity mismatch: function '" + std::string(name) + "' takes one argument", pos_);
    NodePtr arg = expr();
    close_paren();
    return make(fn, arg);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression() : root_(make_const(0.0)) {}

Expression::Expression(NodePtr root) : root_(std::move(root)) {}

Expression Expression::constant(double c) { return Expression(make_const(c)); }

Expression Expression::variable(Var v) {
  switch (v) {
    case Var::X: return Expression(make(Op::X));
    case Var::U: return Expression(make(Op::U));
    default: return Expression(make(Op::P));
  }
}

double Expression::operator()(double x, double u, double p) const { return contact_kam::eval(*root_, x, u, p); }

Expression Expression::derivative(Var v) const { return Expression(diff(root_, v)); }

bool Expression::depends_on(Var v) const { return depends(root_, v); }

std::string Expression::serialize() const {
  std::string out;
  contact_kam::serialize(*root_, out);
  return out;
}

bool operator==(const Expression& l, const Expression& r) { return equal(l.root_, r.root_); }

Expression parse_expression(std::string_view source) { return Expression(Parser(source).parse()); }

}  // namespace contact_kam
