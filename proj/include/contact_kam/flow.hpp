#pragma once

#include <array>
#include <complex>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "contact_kam/errors.hpp"
#include "contact_kam/model.hpp"

namespace contact_kam {

struct PhasePoint {
  double x = 0.0;
  double u = 0.0;
  double p = 0.0;
};

/// Phase metric max(|dx| on the circle, |du|, |dp|).
double phase_distance(const PhasePoint& a, const PhasePoint& b);

struct Orbit {
  std::vector<double> t;
  std::vector<PhasePoint> z;
  double h = 0.0;

  std::size_t size() const { return t.size(); }
  bool empty() const { return t.empty(); }
  const PhasePoint& front() const { return z.front(); }
  const PhasePoint& back() const { return z.back(); }
};

/// Thrown when |u| or |p| leaves the blow-up box; carries the orbit up to that point.
struct BlowUp : NumericalError {
  BlowUp(double t, PhasePoint state, Orbit partial);
  double t;
  PhasePoint state;
  Orbit partial;
};

struct IntegrateOptions {
  double blowup_bound = 1e4;
};

/// (dx/dt, du/dt, dp/dt) of the contact flow.
PhasePoint vector_field(const ContactModel& model, const PhasePoint& z);

/// Fixed-step RK4 from t0 to t1 (t1 < t0 integrates backward). x is wrapped after every step.
Orbit integrate_orbit(const ContactModel& model, const PhasePoint& z0, double t0, double t1, double h,
                      const IntegrateOptions& opts = {});

/// max_k |H(z_k) - H(z_0) exp(-int_0^{t_k} dH/du)|, integral by the trapezoid rule.
double energy_transport_residual(const ContactModel& model, const Orbit& orbit);

double max_abs_energy(const ContactModel& model, const Orbit& orbit);

using Matrix3 = std::array<std::array<double, 3>, 3>;

Matrix3 jacobian(const ContactModel& model, const PhasePoint& z);
Matrix3 jacobian_fd(const ContactModel& model, const PhasePoint& z, double h = 1e-5);

/// Coefficients (c2, c1, c0) of det(sI - J) = s^3 + c2 s^2 + c1 s + c0.
std::array<double, 3> characteristic_polynomial(const Matrix3& J);

/// Roots of s^3 + c2 s^2 + c1 s + c0 by Cardano (trigonometric form for three real roots), sorted by real part.
std::array<std::complex<double>, 3> cubic_roots(double c2, double c1, double c0);

/// Unit null vector of J - sI for a real eigenvalue s.
PhasePoint real_eigenvector(const Matrix3& J, double s);

struct FixedPointInfo {
  PhasePoint z;
  Matrix3 jacobian{};
  std::array<std::complex<double>, 3> eigenvalues{};
  int stable_dim = 0;
  int unstable_dim = 0;
  bool hyperbolic = true;
  double residual = 0.0;
  // Gradient of H at z; eigenvectors with small projection on it are tangent to the energy shell.
  Gradient energy_normal;
  std::array<bool, 3> shell_tangent{};
};

FixedPointInfo linearize_fixed_point(const ContactModel& model, const PhasePoint& z);

struct FixedPointScan {
  std::vector<FixedPointInfo> points;
  bool degenerate = false;  // a whole interval of x solves the fixed-point equations
  std::vector<double> degenerate_x;
  std::vector<std::string> warnings;
};

FixedPointScan find_fixed_points(const ContactModel& model, int coarse_n = 256);

/// Damped Newton on the vector field; throws NumericalError if it stalls.
PhasePoint polish_fixed_point(const ContactModel& model, const PhasePoint& seed, int max_iter = 60);

enum class ManifoldDirection { Stable, Unstable };

struct ManifoldTrace {
  Orbit orbit;
  double eigenvalue = 0.0;
  PhasePoint eigenvector;  // unit, after projection onto the energy shell tangent plane
  double max_abs_H = 0.0;
};

/// Seeds at z* + branch*offset*e and integrates forward (unstable) or backward (stable).
/// Among real eigenvalues of the requested sign the one whose eigenvector is closest to the energy shell is used.
/// Throws PreconditionError without such an eigenvalue, BlowUp as integrate_orbit.
ManifoldTrace trace_invariant_manifold(const ContactModel& model, const FixedPointInfo& info, ManifoldDirection dir,
                                       int branch, double offset, double t_max, double h = 1e-3);

/// Orbit CSV: header "t,x,u,p,H", every `thin`-th stored state plus the last one.
void write_orbit_csv(const std::filesystem::path& path, const ContactModel& model, const Orbit& orbit, std::size_t thin = 1);

}  // namespace contact_kam
