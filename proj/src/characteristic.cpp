#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "asymptotic_detail.hpp"
#include "contact_kam/asymptotic.hpp"
#include "contact_kam/errors.hpp"
#include "contact_kam/parallel.hpp"

namespace contact_kam {

using detail::FieldTable;

double pseudograph_distance(const PhasePoint& z, const std::vector<Jet>& jets) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& j : jets) best = std::min(best, phase_distance(z, {j.x, j.u, j.p}));
  return best;
}

CharacteristicOrbit characteristic_orbit(const ContactModel& model, const ScalarField& phi, double x_target, double t,
                                         const LaxParams& params, const CharacteristicOptions& opts) {
  const PeriodicGrid& g = phi.grid();
  if (!(t > 0.0)) throw PreconditionError("characteristic horizon must be positive");
  if (!phi.finite()) throw PreconditionError("initial field has non-finite values");
  params.validate(model);
  if (opts.require_smooth) {
    const double kt = opts.kink_tol > 0.0 ? opts.kink_tol : default_kink_tol(g, 4.0);
    const auto sample = pseudograph_sample(phi, kt);
    if (!sample.all_differentiable())
      throw PreconditionError("initial field is not smooth at grid resolution (" + std::to_string(sample.kink_count()) + " kinks)");
  }
  const double char_tol = opts.char_tol > 0.0 ? opts.char_tol : 5.0 * g.dx();
  const auto K = static_cast<std::size_t>(std::max(1.0, std::round(t / params.tau)));
  const LaxOperator op(model, g, params);
  const FieldTable table = detail::build_field_table(op, phi, K, Direction::Backward);
  const std::size_t start = g.nearest(x_target);
  if (!std::isfinite(table.layers[K][start]) || std::abs(table.layers[K][start]) >= params.u_clip)
    throw PreconditionError("target unreachable");
  const auto nodes = detail::backtrack_nodes(table, start, K);

  CharacteristicOrbit co;
  co.orbit.h = params.tau;
  for (std::size_t k = 0; k <= K; ++k) {
    const ScalarField layer = table.layer(k);
    co.orbit.t.push_back(static_cast<double>(k) * params.tau);
    co.orbit.z.push_back({g.x(nodes[k]), layer[nodes[k]], centered_gradient(layer, nodes[k])});
  }
  co.source = {co.orbit.z[0].x, co.orbit.z[0].u, co.orbit.z[0].p};

  const double span = std::min(opts.witness_span < 0.0 ? 4.0 : opts.witness_span, static_cast<double>(K) * params.tau);
  const auto Kw = static_cast<std::size_t>(std::round(span / params.tau));
  if (Kw == 0) return co;
  const int sub = std::max(1, opts.ode_substeps);
  try {
    co.ode = integrate_orbit(model, co.orbit.z[0], 0.0, static_cast<double>(Kw) * params.tau, params.tau / sub);
  } catch (const BlowUp& b) {
    throw NumericalError("characteristic re-integration left the blow-up box at t = " + std::to_string(b.t));
  }
  for (std::size_t k = 0; k <= Kw; ++k) {
    const PhasePoint& z = co.ode.z[k * static_cast<std::size_t>(sub)];
    const double d = std::abs(z.u - interpolate(table.layer(k), z.x));
    co.witness.push_back(d);
    co.max_witness = std::max(co.max_witness, d);
    co.ode_divergence = std::max(co.ode_divergence, phase_distance(z, co.orbit.z[k]));
  }
  if (co.max_witness > char_tol)
    throw NumericalError("witness defect " + std::to_string(co.max_witness) + " exceeds char_tol " + std::to_string(char_tol));
  return co;
}

JetCluster largest_cluster(const std::vector<PhasePoint>& jets, double radius) {
  JetCluster best;
  for (std::size_t a = 0; a < jets.size(); ++a) {
    std::vector<std::size_t> members;
    for (std::size_t b = 0; b < jets.size(); ++b)
      if (phase_distance(jets[a], jets[b]) <= radius) members.push_back(b);
    if (members.size() > best.members.size()) best.members = std::move(members);
  }
  if (best.members.empty()) return best;
  const PhasePoint& ref = jets[best.members.front()];
  double dx = 0.0, u = 0.0, p = 0.0;
  for (auto m : best.members) {
    dx += periodic_offset(ref.x, jets[m].x);
    u += jets[m].u;
    p += jets[m].p;
  }
  const auto c = static_cast<double>(best.members.size());
  best.centroid = {wrap_angle(ref.x + dx / c), u / c, p / c};
  return best;
}

namespace {

PhasePoint jet_of(const ScalarField& phi, double x) {
  return {wrap_angle(x), interpolate(phi, x), detail::interpolate_gradient(phi, x)};
}

}  // namespace

SemiInfiniteResult semi_infinite_orbit(const ContactModel& model, const ScalarField& phi, const LaxParams& params,
                                       const std::vector<double>& horizons, const SemiInfiniteOptions& opts) {
  if (horizons.empty()) throw PreconditionError("no horizons given");
  const PeriodicGrid& g = phi.grid();
  const WeakKamResult wk = weak_kam_limit(model, phi, params, Direction::Backward, opts.kam_tol, opts.t_max);
  if (wk.status != KamStatus::Converged)
    throw PreconditionError(std::string("backward weak KAM limit did not converge: ") + to_string(wk.status));

  std::vector<double> hs = horizons;
  std::sort(hs.begin(), hs.end());
  const auto Kmax = static_cast<std::size_t>(std::round(hs.back() / params.tau));
  const LaxOperator op(model, g, params);
  const FieldTable table = detail::build_field_table(op, phi, Kmax, Direction::Backward);

  SemiInfiniteResult r;
  r.u_minus = wk.field;
  std::vector<std::size_t> horizon_of;
  const int targets = std::max(1, opts.targets);
  for (std::size_t n = 0; n < hs.size(); ++n) {
    const auto K = static_cast<std::size_t>(std::max(1.0, std::round(hs[n] / params.tau)));
    for (int j = 0; j < targets; ++j) {
      const double x = -std::numbers::pi + (j + 0.5) * 2.0 * std::numbers::pi / targets;
      const auto nodes = detail::backtrack_nodes(table, g.nearest(x), K);
      const std::size_t i0 = nodes[0];
      r.source_jets.push_back({g.x(i0), phi[i0], centered_gradient(phi, i0)});
      horizon_of.push_back(n);
    }
  }
  const JetCluster cl = largest_cluster(r.source_jets, opts.cluster_tol);
  std::vector<bool> seen(hs.size(), false);
  for (auto m : cl.members) seen[horizon_of[m]] = true;
  if (std::count(seen.begin(), seen.end(), true) < 2)
    throw NumericalError("no convergent cluster of source jets within the horizon budget");
  r.cluster_size = cl.members.size();
  r.limit_jet = cl.centroid;

  // Shooting along the 1-jet curve of phi onto the stable manifold of the nearest saddle, if any.
  const double shoot_T = 0.5 * opts.span;
  Orbit rough;
  try {
    rough = integrate_orbit(model, r.limit_jet, 0.0, shoot_T, opts.h);
  } catch (const BlowUp& b) {
    rough = b.partial;
  }
  const FixedPointScan scan = find_fixed_points(model);
  const FixedPointInfo* target = nullptr;
  double best = 0.5;
  for (const auto& fp : scan.points) {
    if (!fp.hyperbolic || fp.unstable_dim != 1) continue;
    for (const auto& z : rough.z) {
      const double d = phase_distance(z, fp.z);
      if (d < best) {
        best = d;
        target = &fp;
      }
    }
  }
  PhasePoint start = r.limit_jet;
  PhasePoint ell;
  double mu = 0.0;
  if (target != nullptr && detail::left_eigenvector(*target, +1, ell, mu)) {
    r.slice = target->z;
    // Signed unstable component at time T; NaN if the orbit blows up first.
    auto gfun = [&](double x0, double T) {
      try {
        const PhasePoint e = integrate_orbit(model, jet_of(phi, x0), 0.0, T, opts.h).back();
        return detail::dot3(ell, {periodic_offset(target->z.x, e.x), e.u - target->z.u, e.p - target->z.p});
      } catch (const BlowUp&) {
        return std::numeric_limits<double>::quiet_NaN();
      }
    };
    // Continuation in the horizon: shoot to the closest approach, move there, repeat.
    double center = r.limit_jet.x;
    double half = 3.0 * g.dx();
    const int samples = 48;
    for (int pass = 0; pass < 16; ++pass) {
      Orbit o;
      try {
        o = integrate_orbit(model, jet_of(phi, center), 0.0, opts.span, opts.h);
      } catch (const BlowUp& b) {
        o = b.partial;
      }
      std::size_t kc = 0;
      double dc = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < o.size(); ++k) {
        const double d = phase_distance(o.z[k], target->z);
        if (d < dc) {
          dc = d;
          kc = k;
        }
      }
      const double Tc = o.t[kc];
      if (o.t.back() >= opts.span - 0.5 * opts.h && Tc >= opts.span - 0.5 * opts.h) break;
      if (!(Tc > 0.0)) break;
      std::vector<double> xs(samples + 1), gs(samples + 1);
      double found = std::numeric_limits<double>::quiet_NaN();
      double found_off = std::numeric_limits<double>::infinity();
      for (;;) {
        parallel_for(xs.size(), [&](std::size_t s) {
          xs[s] = center - half + 2.0 * half * static_cast<double>(s) / samples;
          gs[s] = gfun(xs[s], Tc);
        });
        bool any = false;
        for (int s = 1; s <= samples; ++s)
          any = any || (!std::isnan(gs[s - 1]) && !std::isnan(gs[s]) && (gs[s - 1] <= 0.0) != (gs[s] <= 0.0));
        // The grid limit jet can sit several cells off the manifold; widen on the first pass only.
        if (any || pass > 0 || half >= 0.5) break;
        half *= 2.0;
      }
      for (int s = 1; s <= samples; ++s) {
        if (std::isnan(gs[s - 1]) || std::isnan(gs[s]) || (gs[s - 1] <= 0.0) == (gs[s] <= 0.0)) continue;
        double a = xs[s - 1], b = xs[s], ga = gs[s - 1];
        for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
          const double m = 0.5 * (a + b);
          const double gm = gfun(m, Tc);
          if (std::isnan(gm)) break;
          if ((ga <= 0.0) == (gm <= 0.0)) {
            a = m;
            ga = gm;
          } else {
            b = m;
          }
        }
        const double root = 0.5 * (a + b);
        if (std::abs(root - center) < found_off) {
          found_off = std::abs(root - center);
          found = root;
        }
      }
      if (!std::isfinite(found)) break;
      const bool moved = found != center;
      center = found;
      r.refined = true;
      half = std::max(half / 16.0, 1e-13);
      if (!moved) break;
    }
    if (r.refined) start = jet_of(phi, center);
  }
  try {
    r.orbit = integrate_orbit(model, start, 0.0, opts.span, opts.h);
  } catch (const BlowUp& b) {
    throw NumericalError("limit orbit left the blow-up box at t = " + std::to_string(b.t) + " (start x " + std::to_string(start.x) + ", refined " + (r.refined ? "yes" : "no") + ", target " + (target ? "yes" : "no") + ")");
  }

  const auto tail = detail::tail_window(r.orbit);
  const auto jets = detail::pseudograph_jets(r.u_minus);
  r.tail_distance = detail::window_distance(r.orbit, tail, jets);
  const PhasePoint& ref = r.orbit.z[tail.first];
  double dx = 0.0, u = 0.0, p = 0.0;
  for (std::size_t k = tail.first; k < tail.second; ++k) {
    const PhasePoint& z = r.orbit.z[k];
    dx += periodic_offset(ref.x, z.x);
    u += z.u;
    p += z.p;
    r.tail_u_defect.push_back(std::abs(z.u - interpolate(r.u_minus, z.x)));
  }
  const auto c = static_cast<double>(tail.second - tail.first);
  r.omega_estimate = {wrap_angle(ref.x + dx / c), u / c, p / c};
  return r;
}

double pseudograph_attainment(const ContactModel& model, const ScalarField& phi, const ScalarField& u_minus, double T,
                              std::size_t sample_count, double h) {
  if (sample_count == 0) throw PreconditionError("sample_count must be positive");
  if (!(T >= 0.0)) throw PreconditionError("T must be non-negative");
  std::vector<std::vector<PhasePoint>> clouds(sample_count);
  parallel_for(sample_count, [&](std::size_t s) {
    const double x = -std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(s) / static_cast<double>(sample_count);
    Orbit o;
    try {
      o = integrate_orbit(model, jet_of(phi, x), 0.0, T + 1.0, h);
    } catch (const BlowUp& b) {
      o = b.partial;
    }
    for (std::size_t k = 0; k < o.size(); ++k)
      if (o.t[k] >= T - 1e-12) clouds[s].push_back(o.z[k]);
  });
  std::vector<PhasePoint> cloud;
  for (auto& c : clouds) cloud.insert(cloud.end(), c.begin(), c.end());
  const auto jets = pseudograph_sample(u_minus, default_kink_tol(u_minus.grid())).differentiable_jets();
  if (cloud.empty()) return std::numeric_limits<double>::infinity();
  std::vector<double> mins(jets.size(), std::numeric_limits<double>::infinity());
  parallel_for(jets.size(), [&](std::size_t i) {
    const PhasePoint j{jets[i].x, jets[i].u, jets[i].p};
    for (const auto& z : cloud) mins[i] = std::min(mins[i], phase_distance(j, z));
  });
  double worst = 0.0;
  for (double m : mins) worst = std::max(worst, m);
  return worst;
}

}  // namespace contact_kam
