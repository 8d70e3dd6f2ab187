#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace contact_kam {

enum class Var { X, U, P };

/// Immutable arithmetic expression tree over the variables x, u, p.
class Expression {
 public:
  enum class Op {
    Const, Pi, X, U, P,
    Neg, Add, Sub, Mul, Div, Pow,
    Sin, Cos, Tan, Exp, Log, Sqrt, Abs,
    Sign  // only produced by differentiation of abs
  };

  struct Node {
    Op op;
    double value = 0.0;
    std::shared_ptr<const Node> a;
    std::shared_ptr<const Node> b;
  };
  using NodePtr = std::shared_ptr<const Node>;

  Expression();  // the constant 0
  explicit Expression(NodePtr root);

  static Expression constant(double c);
  static Expression variable(Var v);

  double operator()(double x, double u, double p) const;
  double eval(double x) const { return (*this)(x, 0.0, 0.0); }

  Expression derivative(Var v) const;
  bool depends_on(Var v) const;
  bool is_constant() const { return !depends_on(Var::X) && !depends_on(Var::U) && !depends_on(Var::P); }

  // Fully parenthesized text; parse(serialize(e)) rebuilds the same tree.
  std::string serialize() const;

  const NodePtr& root() const { return root_; }

  friend bool operator==(const Expression& l, const Expression& r);

 private:
  NodePtr root_;
};

Expression parse_expression(std::string_view source);

}  // namespace contact_kam
