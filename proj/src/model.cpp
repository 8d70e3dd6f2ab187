#include "contact_kam/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "contact_kam/errors.hpp"
#include "contact_kam/io.hpp"

namespace contact_kam {

ContactModel ContactModel::separable(double alpha, Expression V, Expression lambda, double v_max, ModelBounds bounds) {
  if (!(alpha > 0.0)) throw PreconditionError("stiffness alpha must be positive");
  if (V.depends_on(Var::U) || V.depends_on(Var::P)) throw PreconditionError("potential V may depend on x only");
  if (lambda.depends_on(Var::U) || lambda.depends_on(Var::P)) throw PreconditionError("rate lambda may depend on x only");
  ContactModel m;
  m.kind_ = Kind::SeparableQuadratic;
  m.alpha_ = alpha;
  m.V_ = std::move(V);
  m.lambda_ = std::move(lambda);
  m.dV_ = m.V_.derivative(Var::X);
  m.ddV_ = m.dV_.derivative(Var::X);
  m.dlambda_ = m.lambda_.derivative(Var::X);
  m.ddlambda_ = m.dlambda_.derivative(Var::X);
  m.v_max_ = v_max;
  m.bounds_ = bounds;
  m.validate();
  return m;
}

ContactModel ContactModel::general(Expression H, double v_max, ModelBounds bounds) {
  ContactModel m;
  m.kind_ = Kind::General;
  m.H_ = std::move(H);
  m.Hx_ = m.H_.derivative(Var::X);
  m.Hu_ = m.H_.derivative(Var::U);
  m.Hp_ = m.H_.derivative(Var::P);
  m.Hxx_ = m.Hx_.derivative(Var::X);
  m.Hxu_ = m.Hx_.derivative(Var::U);
  m.Hxp_ = m.Hx_.derivative(Var::P);
  m.Huu_ = m.Hu_.derivative(Var::U);
  m.Hup_ = m.Hu_.derivative(Var::P);
  m.Hpp_ = m.Hp_.derivative(Var::P);
  m.v_max_ = v_max;
  m.bounds_ = bounds;
  m.validate();
  return m;
}

ContactModel ContactModel::example63(double v_max) {
  return separable(1.0, parse_expression("-0.25"), parse_expression("sin(x)"), v_max);
}

void ContactModel::validate() {
  if (!(v_max_ > 0.0)) throw PreconditionError("v_max must be positive");
  constexpr int nx = 16, nu = 8, np = 8;
  auto lattice = [](double lo, double hi, int k, int n) { return lo + (hi - lo) * k / (n - 1); };
  Lambda_ = 0.0;
  if (is_separable()) {
    for (int k = 0; k < nx * nu * np; ++k) {
      const double x = -std::numbers::pi + 2.0 * std::numbers::pi * k / (nx * nu * np);
      Lambda_ = std::max(Lambda_, std::abs(lambda_.eval(x)));
    }
  } else {
    int nonconvex = 0;
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < nu; ++j)
        for (int k = 0; k < np; ++k) {
          const double x = -std::numbers::pi + 2.0 * std::numbers::pi * i / nx;
          const double u = lattice(bounds_.u_min, bounds_.u_max, j, nu);
          const double p = lattice(bounds_.p_min, bounds_.p_max, k, np);
          Lambda_ = std::max(Lambda_, std::abs(Hu_(x, u, p)));
          if (!(Hpp_(x, u, p) > 0.0)) ++nonconvex;
        }
    if (nonconvex > 0)
      warnings_.push_back("d2H/dp2 is not positive at " + std::to_string(nonconvex) + " of 1024 lattice points");
  }
  if (!std::isfinite(Lambda_)) throw PreconditionError("u-Lipschitz bound is not finite on the sampling lattice");
}

double ContactModel::hamiltonian(double x, double u, double p) const {
  if (is_separable()) return alpha_ * p * p + V_.eval(x) + lambda_.eval(x) * u;
  return H_(x, u, p);
}

Gradient ContactModel::gradient(double x, double u, double p) const {
  if (is_separable()) return {dV_.eval(x) + dlambda_.eval(x) * u, lambda_.eval(x), 2.0 * alpha_ * p};
  return {Hx_(x, u, p), Hu_(x, u, p), Hp_(x, u, p)};
}

Hessian ContactModel::hessian(double x, double u, double p) const {
  if (is_separable()) {
    Hessian h;
    h.xx = ddV_.eval(x) + ddlambda_.eval(x) * u;
    h.xu = dlambda_.eval(x);
    h.pp = 2.0 * alpha_;
    return h;
  }
  return {Hxx_(x, u, p), Hxu_(x, u, p), Hxp_(x, u, p), Huu_(x, u, p), Hup_(x, u, p), Hpp_(x, u, p)};
}

Gradient ContactModel::gradient_fd(double x, double u, double p, double h) const {
  return {(hamiltonian(x + h, u, p) - hamiltonian(x - h, u, p)) / (2 * h),
          (hamiltonian(x, u + h, p) - hamiltonian(x, u - h, p)) / (2 * h),
          (hamiltonian(x, u, p + h) - hamiltonian(x, u, p - h)) / (2 * h)};
}

LagrangianValue ContactModel::lagrangian(double x, double u, double v) const {
  if (is_separable()) {
    const double p = v / (2.0 * alpha_);
    return {v * v / (4.0 * alpha_) - V_.eval(x) - lambda_.eval(x) * u, p};
  }
  // Solve dH/dp(x,u,p) = v; the left side is increasing in p under strict convexity.
  auto f = [&](double p) { return Hp_(x, u, p) - v; };
  double lo = -1.0, hi = 1.0;
  int expand = 0;
  while (f(lo) > 0.0 || f(hi) < 0.0) {
    if (++expand > 60) throw NumericalError("Legendre transform: no momentum bracket for v = " + fmt_double(v));
    lo *= 2.0;
    hi *= 2.0;
  }
  double p = std::clamp(0.0, lo, hi);
  bool converged = false;
  for (int it = 0; it < 200; ++it) {
    const double r = f(p);
    if (std::abs(r) <= 1e-13 * (1.0 + std::abs(v))) {
      converged = true;
      break;
    }
    if (r > 0.0) hi = p;
    else lo = p;
    const double d = Hpp_(x, u, p);
    double next = d > 0.0 ? p - r / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo <= 1e-15 * (1.0 + std::abs(p))) {
      p = next;
      converged = true;
      break;
    }
    p = next;
  }
  if (!converged) throw NumericalError("Legendre transform: Newton did not converge at v = " + fmt_double(v));
  return {p * v - H_(x, u, p), p};
}

std::string ContactModel::describe() const {
  if (is_separable())
    return "separable alpha=" + fmt_double(alpha_) + " V=" + V_.serialize() + " lambda=" + lambda_.serialize();
  return "general H=" + H_.serialize();
}

SubsolutionReport subsolution_check(const ContactModel& model, const ScalarField& field, bool strict, double tol) {
  SubsolutionReport r;
  r.tol = tol;
  r.max_residual = -INFINITY;
  const PeriodicGrid& g = field.grid();
  for (std::size_t i = 0; i < g.n(); ++i) {
    const double x = g.x(i);
    const double back = (field[i] - field[g.wrap(static_cast<long long>(i) - 1)]) / g.dx();
    const double fwd = (field[g.wrap(static_cast<long long>(i) + 1)] - field[i]) / g.dx();
    const double h = std::min(model.hamiltonian(x, field[i], back), model.hamiltonian(x, field[i], fwd));
    r.max_residual = std::max(r.max_residual, h);
    if (strict ? !(h < 0.0) : h > tol) r.violating_nodes.push_back(i);
  }
  r.pass = r.violating_nodes.empty();
  return r;
}

SubsolutionReport subsolution_check(const ContactModel& model, const ScalarField& field, bool strict) {
  return subsolution_check(model, field, strict, field.grid().dx());
}

}  // namespace contact_kam
