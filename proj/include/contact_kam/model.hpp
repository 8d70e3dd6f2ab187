#pragma once

#include <string>
#include <vector>

#include "contact_kam/expression.hpp"
#include "contact_kam/grid.hpp"

namespace contact_kam {

/// Sampling box used for the convexity check and the u-Lipschitz bound.
struct ModelBounds {
  double u_min = -10.0;
  double u_max = 10.0;
  double p_min = -10.0;
  double p_max = 10.0;
};

struct Gradient {
  double dx = 0.0;
  double du = 0.0;
  double dp = 0.0;
};

/// Second partials of H, symmetric.
struct Hessian {
  double xx = 0.0, xu = 0.0, xp = 0.0;
  double uu = 0.0, up = 0.0, pp = 0.0;
};

struct LagrangianValue {
  double value = 0.0;
  double p_star = 0.0;
};

/// Contact Hamiltonian, either H = alpha p^2 + V(x) + lambda(x) u or a general expression in (x, u, p).
class ContactModel {
 public:
  enum class Kind { SeparableQuadratic, General };

  static ContactModel separable(double alpha, Expression V, Expression lambda, double v_max = 8.0, ModelBounds bounds = {});
  static ContactModel general(Expression H, double v_max = 8.0, ModelBounds bounds = {});

  /// H = p^2 + sin(x) u - 1/4.
  static ContactModel example63(double v_max = 8.0);

  Kind kind() const { return kind_; }
  bool is_separable() const { return kind_ == Kind::SeparableQuadratic; }

  double hamiltonian(double x, double u, double p) const;
  Gradient gradient(double x, double u, double p) const;
  Hessian hessian(double x, double u, double p) const;
  LagrangianValue lagrangian(double x, double u, double v) const;

  /// Central-difference gradient with step h, for cross-checks.
  Gradient gradient_fd(double x, double u, double p, double h = 1e-6) const;

  // Separable parts; zero-argument expressions for the General kind.
  double alpha() const { return alpha_; }
  double potential(double x) const { return V_.eval(x); }
  double rate(double x) const { return lambda_.eval(x); }
  const Expression& potential_expr() const { return V_; }
  const Expression& rate_expr() const { return lambda_; }
  const Expression& hamiltonian_expr() const { return H_; }

  double lambda_bound() const { return Lambda_; }
  double v_max() const { return v_max_; }
  const ModelBounds& bounds() const { return bounds_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  std::string describe() const;

 private:
  ContactModel() = default;
  void validate();

  Kind kind_ = Kind::SeparableQuadratic;
  double alpha_ = 1.0;
  Expression V_, dV_, ddV_;
  Expression lambda_, dlambda_, ddlambda_;
  Expression H_;
  Expression Hx_, Hu_, Hp_;
  Expression Hxx_, Hxu_, Hxp_, Huu_, Hup_, Hpp_;
  double Lambda_ = 0.0;
  double v_max_ = 8.0;
  ModelBounds bounds_;
  std::vector<std::string> warnings_;
};

struct SubsolutionReport {
  double max_residual = 0.0;
  std::vector<std::size_t> violating_nodes;
  double tol = 0.0;
  bool pass = false;
};

/// Nodewise min over the two one-sided gradients of H(x_i, phi_i, g); passes when the max is <= tol (< 0 if strict).
SubsolutionReport subsolution_check(const ContactModel& model, const ScalarField& field, bool strict, double tol);
SubsolutionReport subsolution_check(const ContactModel& model, const ScalarField& field, bool strict = false);

}  // namespace contact_kam
