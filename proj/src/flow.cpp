#include "contact_kam/flow.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "contact_kam/io.hpp"

namespace contact_kam {

namespace {

PhasePoint axpy(const PhasePoint& z, double a, const PhasePoint& d) { return {z.x + a * d.x, z.u + a * d.u, z.p + a * d.p}; }

double norm_inf(const PhasePoint& v) { return std::max({std::abs(v.x), std::abs(v.u), std::abs(v.p)}); }

double dot(const PhasePoint& a, const PhasePoint& b) { return a.x * b.x + a.u * b.u + a.p * b.p; }

// Gaussian elimination with partial pivoting; false when singular.
bool solve3(Matrix3 A, std::array<double, 3> b, std::array<double, 3>& out) {
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    if (std::abs(A[piv][c]) < 1e-300) return false;
    std::swap(A[c], A[piv]);
    std::swap(b[c], b[piv]);
    for (int r = c + 1; r < 3; ++r) {
      const double f = A[r][c] / A[c][c];
      for (int k = c; k < 3; ++k) A[r][k] -= f * A[c][k];
      b[r] -= f * b[c];
    }
  }
  for (int r = 2; r >= 0; --r) {
    double s = b[r];
    for (int k = r + 1; k < 3; ++k) s -= A[r][k] * out[k];
    out[r] = s / A[r][r];
  }
  return true;
}

}  // namespace

double phase_distance(const PhasePoint& a, const PhasePoint& b) {
  return std::max({periodic_distance(a.x, b.x), std::abs(a.u - b.u), std::abs(a.p - b.p)});
}

BlowUp::BlowUp(double t, PhasePoint state, Orbit partial)
    : NumericalError("blow-up at t = " + fmt_double(t) + " (u = " + fmt_double(state.u) + ", p = " + fmt_double(state.p) + ")"),
      t(t),
      state(state),
      partial(std::move(partial)) {}

PhasePoint vector_field(const ContactModel& model, const PhasePoint& z) {
  const Gradient g = model.gradient(z.x, z.u, z.p);
  const double H = model.hamiltonian(z.x, z.u, z.p);
  return {g.dp, g.dp * z.p - H, -g.dx - g.du * z.p};
}

Orbit integrate_orbit(const ContactModel& model, const PhasePoint& z0, double t0, double t1, double h, const IntegrateOptions& opts) {
  if (!(h > 0.0)) throw PreconditionError("step h must be positive");
  if (t1 == t0) throw PreconditionError("empty time span");
  const double span = t1 - t0;
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(std::abs(span) / h - 1e-9)));
  const double hs = span / static_cast<double>(steps);
  Orbit orbit;
  orbit.h = hs;
  orbit.t.reserve(steps + 1);
  orbit.z.reserve(steps + 1);
  PhasePoint z{wrap_angle(z0.x), z0.u, z0.p};
  orbit.t.push_back(t0);
  orbit.z.push_back(z);
  for (std::size_t k = 1; k <= steps; ++k) {
    const PhasePoint k1 = vector_field(model, z);
    const PhasePoint k2 = vector_field(model, axpy(z, 0.5 * hs, k1));
    const PhasePoint k3 = vector_field(model, axpy(z, 0.5 * hs, k2));
    const PhasePoint k4 = vector_field(model, axpy(z, hs, k3));
    z.x += hs / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    z.u += hs / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u);
    z.p += hs / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p);
    z.x = wrap_angle(z.x);
    const double t = t0 + hs * static_cast<double>(k);
    if (!std::isfinite(z.x) || !(std::abs(z.u) <= opts.blowup_bound) || !(std::abs(z.p) <= opts.blowup_bound))
      throw BlowUp(t, z, std::move(orbit));
    orbit.t.push_back(k == steps ? t1 : t);
    orbit.z.push_back(z);
  }
  return orbit;
}

double energy_transport_residual(const ContactModel& model, const Orbit& orbit) {
  if (orbit.empty()) return 0.0;
  const PhasePoint& z0 = orbit.z.front();
  const double H0 = model.hamiltonian(z0.x, z0.u, z0.p);
  double integral = 0.0;
  double prev_rate = model.gradient(z0.x, z0.u, z0.p).du;
  double worst = 0.0;
  for (std::size_t k = 1; k < orbit.size(); ++k) {
    const PhasePoint& z = orbit.z[k];
    const double rate = model.gradient(z.x, z.u, z.p).du;
    integral += 0.5 * (prev_rate + rate) * (orbit.t[k] - orbit.t[k - 1]);
    prev_rate = rate;
    worst = std::max(worst, std::abs(model.hamiltonian(z.x, z.u, z.p) - H0 * std::exp(-integral)));
  }
  return worst;
}

double max_abs_energy(const ContactModel& model, const Orbit& orbit) {
  double m = 0.0;
  for (const auto& z : orbit.z) m = std::max(m, std::abs(model.hamiltonian(z.x, z.u, z.p)));
  return m;
}

Matrix3 jacobian(const ContactModel& model, const PhasePoint& z) {
  const Gradient g = model.gradient(z.x, z.u, z.p);
  const Hessian s = model.hessian(z.x, z.u, z.p);
  const double p = z.p;
  Matrix3 J{};
  J[0] = {s.xp, s.up, s.pp};
  J[1] = {p * s.xp - g.dx, p * s.up - g.du, p * s.pp};
  J[2] = {-s.xx - s.xu * p, -s.xu - s.uu * p, -s.xp - s.up * p - g.du};
  return J;
}

Matrix3 jacobian_fd(const ContactModel& model, const PhasePoint& z, double h) {
  Matrix3 J{};
  for (int c = 0; c < 3; ++c) {
    PhasePoint plus = z, minus = z;
    double* dp = c == 0 ? &plus.x : (c == 1 ? &plus.u : &plus.p);
    double* dm = c == 0 ? &minus.x : (c == 1 ? &minus.u : &minus.p);
    *dp += h;
    *dm -= h;
    const PhasePoint fp = vector_field(model, plus);
    const PhasePoint fm = vector_field(model, minus);
    J[0][c] = (fp.x - fm.x) / (2 * h);
    J[1][c] = (fp.u - fm.u) / (2 * h);
    J[2][c] = (fp.p - fm.p) / (2 * h);
  }
  return J;
}

std::array<double, 3> characteristic_polynomial(const Matrix3& J) {
  const double tr = J[0][0] + J[1][1] + J[2][2];
  const double minors = (J[0][0] * J[1][1] - J[0][1] * J[1][0]) + (J[0][0] * J[2][2] - J[0][2] * J[2][0]) +
                        (J[1][1] * J[2][2] - J[1][2] * J[2][1]);
  const double det = J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) - J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
                     J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
  return {-tr, minors, -det};
}

std::array<std::complex<double>, 3> cubic_roots(double c2, double c1, double c0) {
  using C = std::complex<double>;
  const double shift = c2 / 3.0;
  const double p = c1 - c2 * c2 / 3.0;
  const double q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
  const double disc = q * q / 4.0 + p * p * p / 27.0;
  std::array<C, 3> r;
  if (disc < 0.0) {
    const double m = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
    const double theta = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) r[k] = C(m * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0) - shift, 0.0);
  } else {
    const double sq = std::sqrt(disc);
    const double A = std::cbrt(-q / 2.0 + sq);
    const double B = std::cbrt(-q / 2.0 - sq);
    r[0] = C(A + B - shift, 0.0);
    r[1] = C(-(A + B) / 2.0 - shift, std::sqrt(3.0) / 2.0 * (A - B));
    r[2] = std::conj(r[1]);
  }
  // Two Newton corrections on the original polynomial.
  for (auto& s : r) {
    for (int it = 0; it < 2; ++it) {
      const C f = ((s + c2) * s + c1) * s + c0;
      const C d = (3.0 * s + 2.0 * c2) * s + c1;
      if (std::abs(d) > 1e-14) s -= f / d;
    }
    if (std::abs(s.imag()) < 1e-14 * (1.0 + std::abs(s.real()))) s = C(s.real(), 0.0);
  }
  std::sort(r.begin(), r.end(), [](const C& a, const C& b) { return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag(); });
  return r;
}

PhasePoint real_eigenvector(const Matrix3& J, double s) {
  Matrix3 A = J;
  for (int i = 0; i < 3; ++i) A[i][i] -= s;
  auto cross = [](const std::array<double, 3>& a, const std::array<double, 3>& b) {
    return PhasePoint{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
  };
  const PhasePoint cands[3] = {cross(A[0], A[1]), cross(A[0], A[2]), cross(A[1], A[2])};
  PhasePoint best = cands[0];
  for (const auto& c : cands)
    if (dot(c, c) > dot(best, best)) best = c;
  const double n = std::sqrt(dot(best, best));
  if (!(n > 0.0)) throw NumericalError("eigenvector: J - sI has rank below 2");
  best = {best.x / n, best.u / n, best.p / n};
  const double lead = std::abs(best.x) > 1e-12 ? best.x : (std::abs(best.p) > 1e-12 ? best.p : best.u);
  if (lead < 0.0) best = {-best.x, -best.u, -best.p};
  return best;
}

FixedPointInfo linearize_fixed_point(const ContactModel& model, const PhasePoint& z) {
  FixedPointInfo info;
  info.z = z;
  info.residual = norm_inf(vector_field(model, z));
  if (info.residual > 1e-8) throw PreconditionError("not a fixed point: vector field norm " + fmt_double(info.residual));
  info.jacobian = jacobian(model, z);
  const auto c = characteristic_polynomial(info.jacobian);
  info.eigenvalues = cubic_roots(c[0], c[1], c[2]);
  info.energy_normal = model.gradient(z.x, z.u, z.p);
  const PhasePoint n{info.energy_normal.dx, info.energy_normal.du, info.energy_normal.dp};
  const double nn = std::sqrt(dot(n, n));
  for (int k = 0; k < 3; ++k) {
    const auto& s = info.eigenvalues[k];
    if (s.real() < -1e-8) ++info.stable_dim;
    else if (s.real() > 1e-8) ++info.unstable_dim;
    else info.hyperbolic = false;
    if (s.imag() == 0.0 && nn > 0.0) {
      const PhasePoint e = real_eigenvector(info.jacobian, s.real());
      info.shell_tangent[k] = std::abs(dot(e, n)) / nn < 1e-8;
    }
  }
  return info;
}

PhasePoint polish_fixed_point(const ContactModel& model, const PhasePoint& seed, int max_iter) {
  PhasePoint z = seed;
  double r = norm_inf(vector_field(model, z));
  for (int it = 0; it < max_iter && r > 1e-15; ++it) {
    const PhasePoint F = vector_field(model, z);
    std::array<double, 3> step{};
    if (!solve3(jacobian(model, z), {-F.x, -F.u, -F.p}, step)) throw NumericalError("fixed point Newton: singular Jacobian");
    const PhasePoint d{step[0], step[1], step[2]};
    double a = 1.0;
    PhasePoint trial = axpy(z, a, d);
    double rt = norm_inf(vector_field(model, trial));
    while (rt >= r && a > 1e-6) {
      a *= 0.5;
      trial = axpy(z, a, d);
      rt = norm_inf(vector_field(model, trial));
    }
    if (rt >= r) break;
    z = trial;
    r = rt;
    if (norm_inf(d) * a < 1e-16) break;
  }
  z.x = wrap_angle(z.x);
  if (!(r <= 1e-10)) throw NumericalError("fixed point Newton stalled with residual " + fmt_double(r));
  return z;
}

FixedPointScan find_fixed_points(const ContactModel& model, int coarse_n) {
  if (coarse_n < 8) throw PreconditionError("coarse lattice too small");
  FixedPointScan scan;
  const ModelBounds& b = model.bounds();
  constexpr int nu = 64;
  const double du = (b.u_max - b.u_min) / nu;
  // Roots u of H(x, ., 0) per lattice column, with dH/dx evaluated on them.
  struct Root {
    double u, hx;
  };
  std::vector<std::vector<Root>> columns(static_cast<std::size_t>(coarse_n));
  std::vector<double> xs(static_cast<std::size_t>(coarse_n));
  for (int k = 0; k < coarse_n; ++k) {
    const double x = -std::numbers::pi + 2.0 * std::numbers::pi * k / coarse_n;
    xs[static_cast<std::size_t>(k)] = x;
    auto f = [&](double u) { return model.hamiltonian(x, u, 0.0); };
    double ul = b.u_min, fl = f(ul);
    for (int j = 1; j <= nu; ++j) {
      const double ur = b.u_min + du * j, fr = f(ur);
      if (fl == 0.0 || (fl < 0.0) != (fr < 0.0)) {
        double lo = ul, hi = ur, flo = fl;
        if (fl == 0.0) hi = lo;
        for (int it = 0; it < 80 && hi - lo > 1e-13; ++it) {
          const double mid = 0.5 * (lo + hi), fm = f(mid);
          if ((fm < 0.0) == (flo < 0.0)) lo = mid, flo = fm;
          else hi = mid;
        }
        const double u = 0.5 * (lo + hi);
        columns[static_cast<std::size_t>(k)].push_back({u, model.gradient(x, u, 0.0).dx});
      }
      ul = ur;
      fl = fr;
    }
  }
  std::vector<PhasePoint> seeds;
  std::vector<int> flat_run(static_cast<std::size_t>(coarse_n), 0);
  for (int k = 0; k < coarse_n; ++k) {
    const auto& A = columns[static_cast<std::size_t>(k)];
    const auto& B = columns[static_cast<std::size_t>((k + 1) % coarse_n)];
    for (const Root& ra : A) {
      if (std::abs(ra.hx) < 1e-10) ++flat_run[static_cast<std::size_t>(k)];
      const Root* match = nullptr;
      for (const Root& rb : B)
        if (std::abs(rb.u - ra.u) <= 1.0 && (!match || std::abs(rb.u - ra.u) < std::abs(match->u - ra.u))) match = &rb;
      if (!match) continue;
      if (std::abs(ra.hx) < 1e-10 && std::abs(match->hx) < 1e-10) continue;
      if (ra.hx == 0.0 || (ra.hx < 0.0) != (match->hx < 0.0)) {
        const double w = ra.hx == 0.0 ? 0.0 : ra.hx / (ra.hx - match->hx);
        seeds.push_back({xs[static_cast<std::size_t>(k)] + w * 2.0 * std::numbers::pi / coarse_n, ra.u + w * (match->u - ra.u), 0.0});
      }
    }
  }
  // A flat dH/dx along three or more consecutive columns means a continuum of fixed points.
  for (int k = 0; k < coarse_n; ++k) {
    const int prev = (k + coarse_n - 1) % coarse_n, next = (k + 1) % coarse_n;
    if (flat_run[static_cast<std::size_t>(k)] && flat_run[static_cast<std::size_t>(prev)] && flat_run[static_cast<std::size_t>(next)])
      scan.degenerate_x.push_back(xs[static_cast<std::size_t>(k)]);
  }
  scan.degenerate = !scan.degenerate_x.empty();
  if (scan.degenerate)
    scan.warnings.push_back("fixed points are not isolated: dH/dx vanishes on the zero-energy curve over " +
                            std::to_string(scan.degenerate_x.size()) + " lattice columns");
  for (const PhasePoint& s : seeds) {
    PhasePoint z;
    try {
      z = polish_fixed_point(model, s);
    } catch (const NumericalError& e) {
      scan.warnings.push_back("seed x=" + fmt_double(s.x) + " u=" + fmt_double(s.u) + " dropped: " + e.what());
      continue;
    }
    const bool dup = std::any_of(scan.points.begin(), scan.points.end(), [&](const FixedPointInfo& f) { return phase_distance(f.z, z) < 1e-6; });
    if (!dup) scan.points.push_back(linearize_fixed_point(model, z));
  }
  std::sort(scan.points.begin(), scan.points.end(), [](const FixedPointInfo& a, const FixedPointInfo& b) { return a.z.x < b.z.x; });
  return scan;
}

ManifoldTrace trace_invariant_manifold(const ContactModel& model, const FixedPointInfo& info, ManifoldDirection dir, int branch,
                                       double offset, double t_max, double h) {
  if (!(offset > 0.0) || !(t_max > 0.0)) throw PreconditionError("offset and t_max must be positive");
  if (branch != 1 && branch != -1) throw PreconditionError("branch must be +1 or -1");
  const PhasePoint n{info.energy_normal.dx, info.energy_normal.du, info.energy_normal.dp};
  const double nn = dot(n, n);
  ManifoldTrace trace;
  double best_tilt = INFINITY;
  bool found = false;
  for (const auto& s : info.eigenvalues) {
    if (s.imag() != 0.0) continue;
    const bool wanted = dir == ManifoldDirection::Unstable ? s.real() > 1e-8 : s.real() < -1e-8;
    if (!wanted) continue;
    const PhasePoint e = real_eigenvector(info.jacobian, s.real());
    const double tilt = nn > 0.0 ? std::abs(dot(e, n)) / std::sqrt(nn) : 0.0;
    if (tilt < best_tilt) {
      best_tilt = tilt;
      trace.eigenvalue = s.real();
      trace.eigenvector = e;
      found = true;
    }
  }
  if (!found)
    throw PreconditionError(std::string("no real ") + (dir == ManifoldDirection::Unstable ? "unstable" : "stable") +
                            " eigenvalue at the fixed point");
  PhasePoint e = trace.eigenvector;
  if (nn > 0.0) {
    const double c = dot(e, n) / nn;
    e = {e.x - c * n.x, e.u - c * n.u, e.p - c * n.p};
    const double en = std::sqrt(dot(e, e));
    e = {e.x / en, e.u / en, e.p / en};
  }
  trace.eigenvector = e;
  const PhasePoint seed = axpy(info.z, branch * offset, e);
  const double t1 = dir == ManifoldDirection::Unstable ? t_max : -t_max;
  trace.orbit = integrate_orbit(model, seed, 0.0, t1, h);
  trace.max_abs_H = max_abs_energy(model, trace.orbit);
  return trace;
}

void write_orbit_csv(const std::filesystem::path& path, const ContactModel& model, const Orbit& orbit, std::size_t thin) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "t,x,u,p,H\n";
  thin = std::max<std::size_t>(1, thin);
  for (std::size_t k = 0; k < orbit.size(); ++k) {
    if (k % thin != 0 && k + 1 != orbit.size()) continue;
    const PhasePoint& z = orbit.z[k];
    out << fmt_double(orbit.t[k]) << ',' << fmt_double(z.x) << ',' << fmt_double(z.u) << ',' << fmt_double(z.p) << ','
        << fmt_double(model.hamiltonian(z.x, z.u, z.p)) << '\n';
  }
}

}  // namespace contact_kam
