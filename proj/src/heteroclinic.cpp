#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "asymptotic_detail.hpp"
#include "contact_kam/asymptotic.hpp"
#include "contact_kam/errors.hpp"
#include "contact_kam/io.hpp"
#include "contact_kam/parallel.hpp"

namespace contact_kam {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

PhasePoint flow_for(const ContactModel& model, const PhasePoint& z, double T, double h) {
  try {
    return integrate_orbit(model, z, 0.0, T, h).back();
  } catch (const BlowUp& b) {
    return b.state;
  }
}

Orbit flow_partial(const ContactModel& model, const PhasePoint& z, double T, double h) {
  try {
    return integrate_orbit(model, z, 0.0, T, h);
  } catch (const BlowUp& b) {
    return b.partial;
  }
}

// Joins a backward and a forward orbit from the same state into one time-ordered orbit.
Orbit two_sided(const Orbit& back, const Orbit& fwd) {
  Orbit o;
  o.h = fwd.h;
  for (std::size_t k = back.size(); k-- > 1;) {
    o.t.push_back(back.t[k]);
    o.z.push_back(back.z[k]);
  }
  o.t.insert(o.t.end(), fwd.t.begin(), fwd.t.end());
  o.z.insert(o.z.end(), fwd.z.begin(), fwd.z.end());
  return o;
}

PhasePoint displacement(const PhasePoint& from, const PhasePoint& to) {
  return {periodic_offset(from.x, to.x), to.u - from.u, to.p - from.p};
}

PhasePoint normalized(PhasePoint v) {
  const double n = std::sqrt(detail::dot3(v, v));
  return {v.x / n, v.u / n, v.p / n};
}

// Orthonormal pair spanning the plane orthogonal to f.
std::array<PhasePoint, 2> section_basis(const PhasePoint& f) {
  const PhasePoint n = normalized(f);
  const PhasePoint axes[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  std::array<PhasePoint, 2> out{};
  int found = 0;
  // Project the axes least aligned with f first.
  std::array<int, 3> order{0, 1, 2};
  const double c[3] = {std::abs(n.x), std::abs(n.u), std::abs(n.p)};
  std::sort(order.begin(), order.end(), [&](int a, int b) { return c[a] < c[b]; });
  for (int i : order) {
    PhasePoint v = axes[i];
    const double a = detail::dot3(v, n);
    v = {v.x - a * n.x, v.u - a * n.u, v.p - a * n.p};
    for (int j = 0; j < found; ++j) {
      const double b = detail::dot3(v, out[j]);
      v = {v.x - b * out[j].x, v.u - b * out[j].u, v.p - b * out[j].p};
    }
    if (detail::dot3(v, v) < 1e-6) continue;
    out[found++] = normalized(v);
    if (found == 2) break;
  }
  return out;
}

struct Slice {
  const FixedPointInfo* info = nullptr;
  PhasePoint left;  // left eigenvector of the one-dimensional complementary direction
};

Slice make_slice(const FixedPointInfo& fp, bool alpha) {
  Slice s;
  PhasePoint ell;
  double mu = 0.0;
  if (!fp.hyperbolic || (alpha ? fp.stable_dim != 1 : fp.unstable_dim != 1)) return s;
  if (!detail::left_eigenvector(fp, alpha ? -1 : +1, ell, mu)) return s;
  s.info = &fp;
  s.left = ell;
  return s;
}

double closest_approach(const Orbit& orbit, const PhasePoint& z) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& y : orbit.z) d = std::min(d, phase_distance(y, z));
  return d;
}

// Saddle nearest to the orbit whose invariant manifold (unstable for alpha, stable for omega) has codimension one.
Slice nearest_saddle(const FixedPointScan& scan, const Orbit& orbit, bool alpha) {
  Slice best_slice;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& fp : scan.points) {
    const Slice s = make_slice(fp, alpha);
    if (s.info == nullptr) continue;
    const double d = closest_approach(orbit, fp.z);
    if (d < best) {
      best = d;
      best_slice = s;
    }
  }
  return best_slice;
}

double window_abs_H(const ContactModel& model, const Orbit& orbit) {
  double m = 0.0;
  for (auto win : {detail::head_window(orbit), detail::tail_window(orbit)})
    for (std::size_t k = win.first; k < win.second; ++k)
      m = std::max(m, std::abs(model.hamiltonian(orbit.z[k].x, orbit.z[k].u, orbit.z[k].p)));
  return m;
}

// Newton on the section through z for the two codimension-one manifold conditions, continued in T.
bool shoot(const ContactModel& model, const PhasePoint& z, const Slice& a, const Slice& w, double span, double h, PhasePoint& out) {
  const auto basis = section_basis(vector_field(model, z));
  auto point = [&](double s, double r) {
    return PhasePoint{wrap_angle(z.x + s * basis[0].x + r * basis[1].x), z.u + s * basis[0].u + r * basis[1].u,
                      z.p + s * basis[0].p + r * basis[1].p};
  };
  double s = 0.0, r = 0.0;
  std::array<double, 2> G{};
  auto eval = [&](double ss, double rr, double T) {
    const PhasePoint q = point(ss, rr);
    const PhasePoint f = flow_for(model, q, T, h);
    const PhasePoint b = flow_for(model, q, -T, h);
    return std::array<double, 2>{detail::dot3(w.left, displacement(w.info->z, f)), detail::dot3(a.left, displacement(a.info->z, b))};
  };
  auto norm = [](const std::array<double, 2>& v) { return std::hypot(v[0], v[1]); };
  std::vector<double> schedule;
  for (double T = 2.0; T < span; T *= 2.0) schedule.push_back(T);
  schedule.push_back(span);
  for (double T : schedule) {
    G = eval(s, r, T);
    for (int it = 0; it < 40 && norm(G) > 1e-13; ++it) {
      const double d = 1e-7;
      const auto Gs = eval(s + d, r, T);
      const auto Gr = eval(s, r + d, T);
      const double a11 = (Gs[0] - G[0]) / d, a21 = (Gs[1] - G[1]) / d;
      const double a12 = (Gr[0] - G[0]) / d, a22 = (Gr[1] - G[1]) / d;
      const double det = a11 * a22 - a12 * a21;
      if (!(std::abs(det) > 0.0)) return false;
      const double ds = -(a22 * G[0] - a12 * G[1]) / det;
      const double dr = -(-a21 * G[0] + a11 * G[1]) / det;
      double lam = 1.0;
      bool improved = false;
      for (int ls = 0; ls < 40; ++ls, lam *= 0.5) {
        const auto Gn = eval(s + lam * ds, r + lam * dr, T);
        if (norm(Gn) < norm(G)) {
          s += lam * ds;
          r += lam * dr;
          G = Gn;
          improved = true;
          break;
        }
      }
      if (!improved) break;
      if (std::hypot(lam * ds, lam * dr) < 1e-15) break;
    }
  }
  if (!(norm(G) < 1e-8)) return false;
  out = point(s, r);
  return true;
}

}  // namespace

HeteroclinicResult heteroclinic_connect(const ContactModel& model, const ScalarField& phi, const LaxParams& params,
                                        const HeteroclinicOptions& opts) {
  const PeriodicGrid& g = phi.grid();
  LaxParams P = params;
  if (opts.midpoint_rule) P.l_point = LagrangianPoint::Midpoint;
  P.validate(model);
  HeteroclinicResult r;
  const WeakKamResult um = weak_kam_limit(model, phi, P, Direction::Backward, opts.kam_tol, opts.t_max);
  if (um.status != KamStatus::Converged)
    throw PreconditionError(std::string("backward weak KAM limit did not converge: ") + to_string(um.status));
  const WeakKamResult vp = weak_kam_limit(model, phi, P, Direction::Forward, opts.kam_tol, opts.t_max);
  if (vp.status != KamStatus::Converged)
    throw PreconditionError(std::string("forward weak KAM limit did not converge: ") + to_string(vp.status));
  r.u_minus = um.field;
  r.v_plus = vp.field;
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.n(); ++i) gap = std::min(gap, r.u_minus[i] - r.v_plus[i]);
  if (!(gap > 0.0))
    throw PreconditionError("ordering v_+ < u_- fails: min(u_- - v_+) = " + fmt_double(gap));
  r.eps0 = 0.25 * gap;
  std::vector<double> eps = opts.epsilons;
  if (eps.empty())
    for (int k = 1; k <= 8; ++k) eps.push_back(r.eps0 * std::ldexp(1.0, -k));
  for (double e : eps)
    if (!(e > 0.0 && e < r.eps0 * (1.0 + 1e-12))) throw PreconditionError("epsilon schedule must lie in (0, eps0]");

  const LaxOperator op(model, g, P);
  const std::size_t max_steps = static_cast<std::size_t>(std::ceil(opts.t_max / P.tau));

  // T^-_{tau0} phi >= u_- - eps0.
  ScalarField base = phi;
  std::size_t s0 = 0;
  auto below = [&](const ScalarField& f) {
    for (std::size_t i = 0; i < g.n(); ++i)
      if (f[i] < r.u_minus[i] - r.eps0) return true;
    return false;
  };
  while (below(base)) {
    if (++s0 > max_steps) throw NumericalError("backward evolution never came within eps0 of u_-");
    base = op.step(base, Direction::Backward);
  }
  const double tau0 = static_cast<double>(s0) * P.tau;

  std::vector<double> w(g.n());
  for (std::size_t i = 0; i < g.n(); ++i) w[i] = 0.5 * (r.u_minus[i] + r.v_plus[i]);
  const double Lambda = std::max(model.lambda_bound(), 1e-12);
  const double width = opts.mollify_width > 0.0 ? opts.mollify_width : 2.0 * g.dx();
  const int targets = std::max(1, opts.targets);

  r.runs.resize(eps.size());
  std::vector<std::string> failures(eps.size());
  parallel_for(eps.size(), [&](std::size_t e) {
    EpsilonRun& run = r.runs[e];
    run.epsilon = eps[e];
    run.tau0 = tau0;
    ScalarField psi = base;
    std::size_t s = 0;
    auto close = [&] {
      for (std::size_t i = 0; i < g.n(); ++i)
        if (psi[i] - r.v_plus[i] > 0.5 * eps[e]) return false;
      return true;
    };
    while (!close()) {
      if (++s > max_steps) {
        failures[e] = "forward evolution never came within eps/2 of v_+";
        return;
      }
      psi = op.step(psi, Direction::Forward);
    }
    run.tau_eps = static_cast<double>(s) * P.tau;
    // Widest smoothing that keeps the sandwich; a kink of v_+ caps it once eps is below the kink rounding.
    std::optional<ScalarField> phi_eps;
    for (double wd : {width, 0.5 * width, 0.0}) {
      if (wd > 0.0 && wd < g.dx()) continue;
      ScalarField cand = wd > 0.0 ? mollify(psi, wd) : psi;
      for (auto& v : cand.values()) v += 0.5 * eps[e];
      bool ok = true;
      for (std::size_t i = 0; i < g.n() && ok; ++i) ok = cand[i] > r.v_plus[i] && cand[i] < r.v_plus[i] + eps[e];
      if (ok) {
        phi_eps = std::move(cand);
        run.mollify_width = wd;
        break;
      }
    }
    if (!phi_eps) {
      failures[e] = "sandwich v_+ < phi_eps < v_+ + eps cannot be met";
      return;
    }
    run.t_lower = std::log(r.eps0 / eps[e]) / Lambda;
    const auto K = static_cast<std::size_t>(std::ceil((run.t_lower + opts.horizon_extra) / P.tau));
    const detail::FieldTable table = detail::build_field_table(op, *phi_eps, K, Direction::Backward);
    for (int j = 0; j < targets; ++j) {
      const double x = -std::numbers::pi + (j + 0.5) * 2.0 * std::numbers::pi / targets;
      const auto nodes = detail::backtrack_nodes(table, g.nearest(x), K);
      double prev = table.layers[0][nodes[0]] - w[nodes[0]];
      for (std::size_t k = 1; k <= K; ++k) {
        const double d = table.layers[k][nodes[k]] - w[nodes[k]];
        if (prev < 0.0 && d >= 0.0) {
          const double f = prev / (prev - d);
          const ScalarField la = table.layer(k - 1), lb = table.layer(k);
          const PhasePoint za{g.x(nodes[k - 1]), la[nodes[k - 1]], centered_gradient(la, nodes[k - 1])};
          const PhasePoint zb{g.x(nodes[k]), lb[nodes[k]], centered_gradient(lb, nodes[k])};
          run.t_cross.push_back((static_cast<double>(k - 1) + f) * P.tau);
          run.crossings.push_back({wrap_angle(za.x + f * periodic_offset(za.x, zb.x)), za.u + f * (zb.u - za.u),
                                   za.p + f * (zb.p - za.p)});
          break;
        }
        prev = d;
      }
      if (run.t_cross.size() == static_cast<std::size_t>(j + 1) && run.t_cross.back() < run.t_lower) run.below_lower_bound = true;
      if (run.t_cross.size() < static_cast<std::size_t>(j + 1)) {
        run.t_cross.push_back(kNaN);
        run.crossings.push_back({kNaN, kNaN, kNaN});
      }
    }
  });
  for (std::size_t e = 0; e < eps.size(); ++e)
    if (!failures[e].empty()) throw NumericalError("eps = " + fmt_double(eps[e]) + ": " + failures[e]);

  std::vector<PhasePoint> jets;
  std::vector<std::size_t> owner;
  for (std::size_t e = 0; e < eps.size(); ++e)
    for (const auto& z : r.runs[e].crossings)
      if (std::isfinite(z.x)) {
        jets.push_back(z);
        owner.push_back(e);
      }
  if (jets.empty()) {
    std::string lb;
    for (const auto& run : r.runs) lb += (lb.empty() ? "" : ", ") + fmt_double(run.t_lower);
    throw NumericalError("no crossing u_eps = w reached; t_eps lower bounds: " + lb);
  }
  const JetCluster cl = largest_cluster(jets, opts.cluster_tol);
  std::vector<bool> seen(eps.size(), false);
  for (auto m : cl.members) seen[owner[m]] = true;
  if (std::count(seen.begin(), seen.end(), true) < 2)
    throw NumericalError("clustering failure: no cluster of radius " + fmt_double(opts.cluster_tol) + " spans two epsilons");
  r.cluster_size = cl.members.size();
  r.limit_raw = cl.centroid;
  r.limit = r.limit_raw;

  const Orbit raw_back = flow_partial(model, r.limit_raw, -opts.span, opts.h);
  const Orbit raw_fwd = flow_partial(model, r.limit_raw, opts.span, opts.h);
  const Orbit raw = two_sided(raw_back, raw_fwd);
  const FixedPointScan scan = find_fixed_points(model);
  const Slice a = nearest_saddle(scan, raw_back, true);
  const Slice o = nearest_saddle(scan, raw_fwd, false);
  if (a.info != nullptr) r.alpha_slice = a.info->z;
  if (o.info != nullptr) r.omega_slice = o.info->z;
  if (a.info != nullptr) r.alpha_approach_raw = closest_approach(raw_back, a.info->z);
  if (o.info != nullptr) r.omega_approach_raw = closest_approach(raw_fwd, o.info->z);

  // Polish only an orbit that already visits both slices.
  if (opts.refine && a.info != nullptr && o.info != nullptr && a.info != o.info && r.alpha_approach_raw <= opts.refine_radius &&
      r.omega_approach_raw <= opts.refine_radius) {
    PhasePoint q;
    if (shoot(model, r.limit_raw, a, o, opts.span, opts.h, q)) {
      r.limit = q;
      r.refined = true;
    }
  }
  r.orbit = r.refined ? two_sided(flow_partial(model, r.limit, -opts.span, opts.h), flow_partial(model, r.limit, opts.span, opts.h)) : raw;

  auto end_distance = [&](const Orbit& orb, bool alpha) {
    const std::optional<PhasePoint>& sl = alpha ? r.alpha_slice : r.omega_slice;
    if (sl) return phase_distance(alpha ? orb.front() : orb.back(), *sl);
    const auto jets_uv = detail::pseudograph_jets(alpha ? r.v_plus : r.u_minus);
    return detail::window_distance(orb, alpha ? detail::head_window(orb) : detail::tail_window(orb), jets_uv);
  };
  r.alpha_distance_raw = end_distance(raw, true);
  r.omega_distance_raw = end_distance(raw, false);
  r.alpha_distance = end_distance(r.orbit, true);
  r.omega_distance = end_distance(r.orbit, false);
  r.max_abs_H = max_abs_energy(model, r.orbit);
  r.tail_abs_H = window_abs_H(model, r.orbit);
  r.accepted = r.alpha_distance <= opts.accept_tol && r.omega_distance <= opts.accept_tol &&
               r.orbit.t.front() <= -opts.span + 1e-9 && r.orbit.t.back() >= opts.span - 1e-9;
  return r;
}

SaddleConnection saddle_connection(const ContactModel& model, const FixedPointInfo& alpha, const FixedPointInfo& omega,
                                   const SaddleConnectionOptions& opts) {
  const Slice a = make_slice(alpha, true);
  const Slice o = make_slice(omega, false);
  if (a.info == nullptr || o.info == nullptr)
    throw PreconditionError("saddle connection needs a 2-d unstable manifold at the source and a 2-d stable manifold at the target");
  std::vector<PhasePoint> E;
  for (const auto& s : alpha.eigenvalues)
    if (s.imag() == 0.0 && s.real() > 1e-8) E.push_back(real_eigenvector(alpha.jacobian, s.real()));
  if (E.size() != 2) throw PreconditionError("unstable eigenvalues of the source are not real");
  const int N = std::max(8, opts.angles);
  std::vector<double> dmin(N);
  std::vector<Orbit> scans(N);
  parallel_for(static_cast<std::size_t>(N), [&](std::size_t k) {
    const double th = 2.0 * std::numbers::pi * static_cast<double>(k) / N;
    const double c = opts.radius * std::cos(th), s = opts.radius * std::sin(th);
    const PhasePoint z{alpha.z.x + c * E[0].x + s * E[1].x, alpha.z.u + c * E[0].u + s * E[1].u, alpha.z.p + c * E[0].p + s * E[1].p};
    dmin[k] = std::numeric_limits<double>::infinity();
    if (opts.energy_sign != 0 && opts.energy_sign * model.hamiltonian(z.x, z.u, z.p) <= 0.0) return;
    scans[k] = flow_partial(model, z, opts.t_max, opts.scan_h);
    dmin[k] = closest_approach(scans[k], omega.z);
  });
  const auto best = static_cast<std::size_t>(std::min_element(dmin.begin(), dmin.end()) - dmin.begin());
  if (!std::isfinite(dmin[best])) throw PreconditionError("no seed of the requested energy sign");
  SaddleConnection sc;
  sc.alpha = alpha.z;
  sc.omega = omega.z;
  sc.scan_min_distance = dmin[best];
  // Start from the first state no closer to the source than to the target.
  const Orbit& ob = scans[best];
  PhasePoint mid = ob.z.back();
  for (const auto& z : ob.z)
    if (phase_distance(z, omega.z) <= phase_distance(z, alpha.z)) {
      mid = z;
      break;
    }
  PhasePoint q;
  if (shoot(model, mid, a, o, opts.span, opts.h, q)) {
    sc.converged = true;
    sc.orbit = two_sided(flow_partial(model, q, -opts.span, opts.h), flow_partial(model, q, opts.span, opts.h));
  } else {
    sc.orbit = two_sided(flow_partial(model, mid, -opts.span, opts.h), flow_partial(model, mid, opts.span, opts.h));
  }
  sc.alpha_distance = phase_distance(sc.orbit.front(), alpha.z);
  sc.omega_distance = phase_distance(sc.orbit.back(), omega.z);
  sc.max_abs_H = max_abs_energy(model, sc.orbit);
  sc.tail_abs_H = window_abs_H(model, sc.orbit);
  return sc;
}

void write_heteroclinic(const std::filesystem::path& orbit_csv, const std::filesystem::path& summary, const ContactModel& model,
                        const HeteroclinicResult& r) {
  write_orbit_csv(orbit_csv, model, r.orbit, std::max<std::size_t>(1, r.orbit.size() / 4000));
  KeyValueFile kv;
  std::vector<double> eps, tcross, tlower, below, widths;
  for (const auto& run : r.runs) {
    eps.push_back(run.epsilon);
    tlower.push_back(run.t_lower);
    below.push_back(run.below_lower_bound ? 1.0 : 0.0);
    widths.push_back(run.mollify_width);
    double first = std::numeric_limits<double>::infinity();
    for (double t : run.t_cross)
      if (std::isfinite(t)) first = std::min(first, t);
    tcross.push_back(first);
  }
  kv.set("eps0", r.eps0);
  kv.set("epsilon_schedule", eps);
  kv.set("t_epsilon", tcross);
  kv.set("t_epsilon_lower_bound", tlower);
  kv.set("t_epsilon_below_bound", below);
  kv.set("mollify_width", widths);
  kv.set("cluster_size", static_cast<double>(r.cluster_size));
  kv.set("limit_raw", std::vector<double>{r.limit_raw.x, r.limit_raw.u, r.limit_raw.p});
  kv.set("limit", std::vector<double>{r.limit.x, r.limit.u, r.limit.p});
  kv.set("refined", r.refined ? "true" : "false");
  if (r.alpha_slice) kv.set("alpha_slice", std::vector<double>{r.alpha_slice->x, r.alpha_slice->u, r.alpha_slice->p});
  if (r.omega_slice) kv.set("omega_slice", std::vector<double>{r.omega_slice->x, r.omega_slice->u, r.omega_slice->p});
  kv.set("endpoint_distances", std::vector<double>{r.alpha_distance, r.omega_distance});
  kv.set("endpoint_distances_raw", std::vector<double>{r.alpha_distance_raw, r.omega_distance_raw});
  kv.set("closest_approach_raw", std::vector<double>{r.alpha_approach_raw, r.omega_approach_raw});
  kv.set("max_abs_H", r.max_abs_H);
  kv.set("tail_abs_H", r.tail_abs_H);
  kv.set("accepted", r.accepted ? "true" : "false");
  kv.write(summary);
}

}  // namespace contact_kam
