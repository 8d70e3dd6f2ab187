// One PASS/FAIL line per acceptance criterion, with measured values and runtimes.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "contact_kam/asymptotic.hpp"
#include "contact_kam/errors.hpp"
#include "contact_kam/flow.hpp"
#include "contact_kam/properties.hpp"
#include "contact_kam/variational.hpp"

using namespace contact_kam;

namespace {

constexpr double pi = std::numbers::pi;
constexpr std::size_t kN = 512;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = budget_s <= 0 || s <= budget_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("%s %2d %s: %s [%.2f s%s]\n", pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), s,
              in_time ? "" : ", over budget");
  std::fflush(stdout);
}

void info(const std::string& s) {
  std::printf("INFO    %s\n", s.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ContactModel separable(const char* V, const char* lambda) {
  return ContactModel::separable(1.0, parse_expression(V), parse_expression(lambda));
}

double hopf_lax(const std::function<double(double)>& f, double x, double t) {
  constexpr int samples = 20000;
  double best = INFINITY;
  for (int k = 0; k < samples; ++k) {
    const double y = -pi + 2.0 * pi * k / samples;
    const double d = periodic_distance(x, y);
    best = std::min(best, f(y) + d * d / (4.0 * t));
  }
  return best;
}

std::string matrix(const Matrix3& J) {
  return fmt("[[%.6g,%.6g,%.6g],[%.6g,%.6g,%.6g],[%.6g,%.6g,%.6g]]", J[0][0], J[0][1], J[0][2], J[1][0], J[1][1], J[1][2], J[2][0],
             J[2][1], J[2][2]);
}

}  // namespace

int main() {
  const auto ex = ContactModel::example63();
  const PeriodicGrid g(kN);
  const LaxParams P;
  const PhasePoint z_lo{-pi / 2, -0.25, 0.0}, z_hi{pi / 2, 0.25, 0.0};
  info(fmt("n = %zu, tau = %g, v_max = %g", kN, P.tau, P.v_max));

  criterion(1, "fixed points", 1.0, [&] {
    const auto scan = find_fixed_points(ex);
    bool lo = false, hi = false;
    double res = 0;
    for (const auto& p : scan.points) {
      lo = lo || phase_distance(p.z, z_lo) <= 1e-8;
      hi = hi || phase_distance(p.z, z_hi) <= 1e-8;
      res = std::max(res, p.residual);
    }
    const bool ok = scan.points.size() == 2 && lo && hi && res <= 1e-8 && !scan.degenerate;
    return Outcome{ok, fmt("%zu points, both expected found %s, max residual %.2e", scan.points.size(), lo && hi ? "yes" : "no", res)};
  });

  criterion(2, "monotone constant-lambda solution", 30.0, [&] {
    const auto phi = ScalarField::from_function(g, [](double x) { return std::sin(x); });
    const auto r = weak_kam_limit(separable("-0.25", "1"), phi, P, Direction::Backward);
    const double err = sup_distance(r.field, ScalarField(g, 0.25));
    return Outcome{r.status == KamStatus::Converged && err <= 1e-3, fmt("status %s, sup error %.2e", to_string(r.status), err)};
  });

  criterion(3, "Hopf-Lax oracle", 30.0, [&] {
    const auto hom = separable("0", "0");
    const std::vector<std::pair<const char*, std::function<double(double)>>> data{
        {"0", [](double) { return 0.0; }},
        {"sin", [](double x) { return std::sin(x); }},
        {"tent", [](double x) { return std::max(0.0, 1.0 - std::abs(x)); }}};
    std::string d;
    bool ok = true;
    for (const auto& [name, f] : data) {
      const auto r = semigroup_evolve(hom, ScalarField::from_function(g, f), P, 1.0, Direction::Backward).final_field();
      double err = 0;
      for (std::size_t i = 0; i < g.n(); ++i) err = std::max(err, std::abs(r[i] - hopf_lax(f, g.x(i), 1.0)));
      ok = ok && err <= 5e-3;
      d += fmt("%s%s %.2e", d.empty() ? "" : ", ", name, err);
    }
    return Outcome{ok, d};
  });

  criterion(4, "extreme solutions of the reference model", 120.0, [&] {
    const auto ub = weak_kam_limit(ex, ScalarField(g, 1.0), P, Direction::Backward);
    const auto ul = weak_kam_limit(ex, ScalarField(g, -1.0), P, Direction::Forward);
    const auto dv = weak_kam_limit(ex, ScalarField(g, -10.0), P, Direction::Backward);
    const double a = interpolate(ub.field, pi / 2), m = ub.field.min(), b = interpolate(ul.field, -pi / 2);
    const bool ok = ub.status == KamStatus::Converged && ul.status == KamStatus::Converged && std::abs(a - 0.25) <= 5e-3 && m > 0 &&
                    std::abs(b + 0.25) <= 5e-3 && dv.status == KamStatus::DivergedMinus;
    return Outcome{ok, fmt("u_bar_-(pi/2) %.5f, min %.4f, u_under_+(-pi/2) %.5f, phi=-10 %s", a, m, b, to_string(dv.status))};
  });

  criterion(5, "two-piece subsolution", 60.0, [&] {
    const auto phi = ScalarField::from_function(g, [](double x) { return x < 0 ? 0.5 * std::sin(x) + 0.25 : 0.25; });
    const auto sc = subsolution_check(ex, phi);
    const auto ev = semigroup_evolve(ex, phi, P, 20.0, Direction::Backward, 0.25);
    double lo = INFINITY, top = -INFINITY;
    for (const auto& s : ev.snapshots) {
      for (std::size_t i = 0; i < g.n(); ++i) lo = std::min(lo, s.field[i] - phi[i]);
      if (s.t >= 1.0 - 1e-12) top = std::max(top, interpolate(s.field, -pi / 2));
    }
    const bool ok = sc.pass && lo >= -5 * g.dx() && top <= -0.25 + 5e-3;
    return Outcome{ok, fmt("subsolution %s (residual %.2e), min(T_t phi - phi) %.2e, max_{t>=1} T_t phi(-pi/2) %.5f", sc.pass ? "yes" : "no",
                           sc.max_residual, lo, top)};
  });

  criterion(6, "heteroclinic reproduction", 600.0, [&] {
    const auto r = heteroclinic_connect(ex, ScalarField(g, 0.0), P);
    std::string d = fmt("alpha dist %.3g, omega dist %.3g, max|H| %.3g, tail|H| %.3g, refined %s", r.alpha_distance, r.omega_distance,
                        r.max_abs_H, r.tail_abs_H, r.refined ? "yes" : "no");
    bool ok = r.alpha_distance <= 1e-2 && r.omega_distance <= 1e-2 && r.max_abs_H >= 1e-3 && r.tail_abs_H <= 1e-3;
    try {
      const auto gm = minimality_test(ex, r.orbit, P, g, MinimalityMode::Global, 24);
      const auto sm = minimality_test(ex, r.orbit, P, g, MinimalityMode::SemiStatic, 24);
      ok = ok && gm.pass && gm.max_defect <= 5 * g.dx() && !sm.pass && sm.max_defect >= 10 * gm.max_defect;
      d += fmt(", global defect %.3g, semi-static defect %.3g", gm.max_defect, sm.max_defect);
    } catch (const std::exception& e) {
      ok = false;
      d += std::string(", minimality: ") + e.what();
    }
    return Outcome{ok, d};
  });
  try {
    heteroclinic_connect(ex, ScalarField::from_function(g, [](double x) { return x < 0 ? 0.5 * std::sin(x) + 0.25 : 0.25; }), P);
    info("two-piece subsolution as seed: accepted by the construction");
  } catch (const PreconditionError& e) {
    info(std::string("two-piece subsolution as seed: ") + e.what());
  }
  {
    const auto scan = find_fixed_points(ex);
    const auto& lo = scan.points[0].z.x < 0 ? scan.points[0] : scan.points[1];
    const auto& hi = scan.points[0].z.x < 0 ? scan.points[1] : scan.points[0];
    const auto sc = saddle_connection(ex, lo, hi);
    std::string d = fmt("direct saddle connection: converged %s, endpoint distances %.2g / %.2g, max|H| %.3g, tail|H| %.3g",
                        sc.converged ? "yes" : "no", sc.alpha_distance, sc.omega_distance, sc.max_abs_H, sc.tail_abs_H);
    try {
      const auto gm = minimality_test(ex, sc.orbit, P, g, MinimalityMode::Global, 24);
      const auto sm = minimality_test(ex, sc.orbit, P, g, MinimalityMode::SemiStatic, 24);
      d += fmt(", global defect %.3g, semi-static defect %.3g", gm.max_defect, sm.max_defect);
    } catch (const std::exception& e) {
      d += std::string(", minimality: ") + e.what();
    }
    info(d);
  }

  criterion(7, "energy transport", 0.0, [&] {
    const auto o = integrate_orbit(ex, {0.0, 0.0, 1.0}, 0.0, 5.0, 1e-3);
    const double res = energy_transport_residual(ex, o);
    const auto cons = separable("0.3*cos(x)", "0");
    const auto oc = integrate_orbit(cons, {0.0, 0.0, 1.0}, 0.0, 5.0, 1e-3);
    double drift = 0;
    const double h0 = cons.hamiltonian(0.0, 0.0, 1.0);
    for (const auto& z : oc.z) drift = std::max(drift, std::abs(cons.hamiltonian(z.x, z.u, z.p) - h0));
    return Outcome{res <= 1e-6 && drift <= 1e-8, fmt("transport residual %.2e, lambda=0 drift %.2e", res, drift)};
  });

  criterion(8, "property suite", 300.0, [&] {
    PropertySuiteOptions opts;
    opts.n = 64;
    opts.trials = 100;
    bool ok = true;
    std::string d;
    for (const auto& c : run_property_suite(ex, P, opts)) {
      ok = ok && c.pass;
      d += fmt("%s%s %zu/%zu", d.empty() ? "" : ", ", c.name.c_str(), c.trials - c.failures, c.trials);
    }
    return Outcome{ok, d};
  });

  criterion(9, "constant-lambda shift law", 0.0, [&] {
    const auto m = separable("-0.25", "1");
    const std::size_t K = static_cast<std::size_t>(std::llround(1.0 / P.tau));
    const auto a = action_table(m, 0.3, 0.0, P, K, Direction::Backward, g);
    const auto b = action_table(m, 0.3, 0.1, P, K, Direction::Backward, g);
    double err = 0;
    for (std::size_t i = 0; i < g.n(); ++i) {
      const double va = a.value(i, K), vb = b.value(i, K);
      if (std::isfinite(va) && std::isfinite(vb)) err = std::max(err, std::abs(vb - va - 0.1 * std::exp(-1.0)));
    }
    return Outcome{err <= 1e-3, fmt("max |shift - 0.1 e^-1| %.2e", err)};
  });

  criterion(10, "linearization", 0.0, [&] {
    const Matrix3 literal{{{0, 0, 2}, {0.25, 0, -1}, {0, -1, 0}}};
    const auto Ja = jacobian(ex, z_hi);
    const auto Jf = jacobian_fd(ex, z_hi);
    double da = 0, df = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        da = std::max(da, std::abs(Ja[i][j] - literal[i][j]));
        df = std::max(df, std::abs(Jf[i][j] - literal[i][j]));
      }
    const auto info_hi = linearize_fixed_point(ex, z_hi);
    const auto oracle = cubic_roots(0.0, -1.0, 0.5);
    double de = 0;
    for (int k = 0; k < 3; ++k) de = std::max(de, std::abs(info_hi.eigenvalues[k] - oracle[k]));
    const bool ok = da == 0.0 && df <= 1e-6 && de <= 1e-8;
    return Outcome{ok, fmt("analytic vs stated matrix %.3g, finite differences vs stated %.3g, eigenvalues vs roots of s^3 - s + 1/2 %.3g",
                           da, df, de)};
  });
  {
    const auto J = jacobian(ex, z_hi);
    const auto Jf = jacobian_fd(ex, z_hi);
    double df = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) df = std::max(df, std::abs(J[i][j] - Jf[i][j]));
    const auto c = characteristic_polynomial(J);
    const auto roots = cubic_roots(c[0], c[1], c[2]);
    const auto fp = linearize_fixed_point(ex, z_hi);
    double de = 0;
    for (int k = 0; k < 3; ++k) de = std::max(de, std::abs(fp.eigenvalues[k] - roots[k]));
    info("computed Jacobian at (pi/2, 1/4, 0): " + matrix(J) + fmt(", finite differences within %.2e", df));
    info(fmt("characteristic polynomial s^3 %+g s^2 %+g s %+g; eigenvalues %.6f %.6f %.6f (cubic-solver agreement %.2e)", c[0], c[1],
             c[2], roots[0].real(), roots[1].real(), roots[2].real(), de));
  }

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
