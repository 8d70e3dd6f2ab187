#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "asymptotic_detail.hpp"
#include "contact_kam/asymptotic.hpp"
#include "contact_kam/errors.hpp"
#include "contact_kam/io.hpp"
#include "contact_kam/parallel.hpp"

namespace contact_kam {

const char* to_string(Verdict v) { return v == Verdict::Consistent ? "Consistent" : "Violation"; }

ObstructionReport obstruction_check(const ContactModel& model, const Orbit& orbit, const ScalarField& u_minus,
                                    const ScalarField& v_plus, double tol) {
  (void)model;
  if (orbit.size() < 2) throw PreconditionError("orbit too short for tail windows");
  if (!(tol > 0.0)) throw PreconditionError("tolerance must be positive");
  ObstructionReport rep;
  const auto head = detail::head_window(orbit);
  const auto tail = detail::tail_window(orbit);
  rep.alpha_to_u_minus = detail::window_distance(orbit, head, detail::pseudograph_jets(u_minus));
  rep.omega_to_v_plus = detail::window_distance(orbit, tail, detail::pseudograph_jets(v_plus));
  for (const auto& z : orbit.z)
    if (z.u > interpolate(v_plus, z.x)) {
      rep.above_v_plus = true;
      break;
    }
  if (rep.above_v_plus)
    for (std::size_t k = tail.first; k < tail.second; ++k)
      if (orbit.z[k].u < interpolate(u_minus, orbit.z[k].x) - tol) {
        rep.omega_above_u_minus = false;
        break;
      }
  if (rep.alpha_to_u_minus <= tol && rep.omega_to_v_plus <= tol) {
    rep.verdict = Verdict::Violation;
    rep.reason = "alpha tail on the pseudograph of u_- and omega tail on the pseudograph of v_+";
  } else if (!rep.omega_above_u_minus) {
    rep.verdict = Verdict::Violation;
    rep.reason = "orbit passes above v_+ but its omega tail drops below u_-";
  }
  return rep;
}

ClassificationReport classify_minimizer(const ContactModel& model, const ScalarField& u_bar_minus, const ScalarField& u_under_plus,
                                        double x0, double u0, double class_tol, const ClassifyOptions& opts) {
  if (!(class_tol > 0.0)) throw PreconditionError("class_tol must be positive");
  if (!u_bar_minus.finite() || !u_under_plus.finite()) throw PreconditionError("reference fields must be finite");
  ClassificationReport r;
  r.x0 = wrap_angle(x0);
  r.u0 = u0;
  r.u_bar_minus = interpolate(u_bar_minus, r.x0);
  r.u_under_plus = interpolate(u_under_plus, r.x0);
  const double dm = u0 - r.u_bar_minus;
  const double dp = u0 - r.u_under_plus;
  if (std::abs(dm) <= class_tol) {
    r.case_index = 2;
    r.boundary = true;
  } else if (std::abs(dp) <= class_tol) {
    r.case_index = 4;
    r.boundary = true;
  } else if (dm > 0.0) {
    r.case_index = 1;
  } else if (dp > 0.0) {
    r.case_index = 3;
  } else {
    r.case_index = 5;
  }
  switch (r.case_index) {
    case 1:
      r.alpha_behavior = "u(t) -> +inf as t -> -inf";
      r.omega_behavior = "omega-limit in the Mane slice of the maximal backward solution";
      break;
    case 2:
      r.alpha_behavior = "alpha-limit in the Mane slice of the maximal backward solution";
      r.omega_behavior = "omega-limit in the Mane slice of the maximal backward solution";
      break;
    case 3:
      r.alpha_behavior = "alpha-limit in the Mane slice of the minimal forward solution";
      r.omega_behavior = "omega-limit in the Mane slice of the maximal backward solution";
      break;
    case 4:
      r.alpha_behavior = "alpha-limit in the Mane slice of the minimal forward solution";
      r.omega_behavior = "omega-limit in the Mane slice of the minimal forward solution";
      break;
    default:
      r.alpha_behavior = "alpha-limit in the Mane slice of the minimal forward solution";
      r.omega_behavior = "u(t) -> -inf as t -> +inf";
      break;
  }
  r.note = "the seed is assumed to lie on a global minimizer; run minimality_test on the evidence orbit to check";
  if (r.boundary) r.note += "; equality declared within class_tol";
  if (opts.evidence_span > 0.0) {
    const ScalarField& ref = r.case_index <= 2 ? u_bar_minus : u_under_plus;
    const PhasePoint z0{r.x0, u0, detail::interpolate_gradient(ref, r.x0)};
    try {
      r.evidence = integrate_orbit(model, z0, 0.0, opts.evidence_span, opts.h);
    } catch (const BlowUp& b) {
      r.evidence = b.partial;
      r.evidence_blowup = true;
      r.evidence_blowup_t = b.t;
    }
  }
  return r;
}

void write_classification(const std::filesystem::path& path, const ClassificationReport& r) {
  KeyValueFile kv;
  kv.set("x0", r.x0);
  kv.set("u0", r.u0);
  kv.set("case", static_cast<double>(r.case_index));
  kv.set("boundary", r.boundary ? "true" : "false");
  kv.set("u_bar_minus", r.u_bar_minus);
  kv.set("u_under_plus", r.u_under_plus);
  kv.set("alpha", r.alpha_behavior);
  kv.set("omega", r.omega_behavior);
  kv.set("note", r.note);
  if (r.evidence) {
    kv.set("evidence_span", r.evidence->t.back());
    kv.set("evidence_blowup", r.evidence_blowup ? "true" : "false");
    if (r.evidence_blowup) kv.set("evidence_blowup_t", r.evidence_blowup_t);
    kv.set("evidence_end", std::vector<double>{r.evidence->back().x, r.evidence->back().u, r.evidence->back().p});
  }
  kv.write(path);
}

namespace {

// Nodewise minimum over all layers of an action table.
ScalarField layer_minimum(const ActionTable& t) {
  std::vector<double> m(t.grid.n(), std::numeric_limits<double>::infinity());
  for (const auto& layer : t.layers)
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::min(m[i], layer[i]);
  return ScalarField(t.grid, std::move(m));
}

}  // namespace

BusemannResult busemann_solution(const ContactModel& model, const Orbit& orbit, const LaxParams& params, const PeriodicGrid& grid,
                                 double s_max, const std::vector<double>& t_sequence, double tol) {
  if (t_sequence.empty()) throw PreconditionError("empty t sequence");
  if (!(s_max >= params.tau)) throw PreconditionError("s_max below one time step");
  for (std::size_t k = 1; k < t_sequence.size(); ++k)
    if (!(t_sequence[k] < t_sequence[k - 1])) throw PreconditionError("t sequence must be strictly decreasing");
  const auto K = static_cast<std::size_t>(std::round(s_max / params.tau));
  BusemannResult r;
  r.stages.assign(t_sequence.size(), ScalarField(grid));
  parallel_for(t_sequence.size(), [&](std::size_t k) {
    const PhasePoint z = detail::orbit_state_at(orbit, t_sequence[k]);
    r.stages[k] = layer_minimum(action_table(model, z.x, z.u, params, K, Direction::Backward, grid));
  });
  std::vector<double> inf(grid.n(), std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < r.stages.size(); ++k) {
    for (std::size_t i = 0; i < grid.n(); ++i) {
      inf[i] = std::min(inf[i], r.stages[k][i]);
      if (k > 0) r.monotonicity_violation = std::max(r.monotonicity_violation, r.stages[k][i] - r.stages[k - 1][i]);
    }
  }
  r.monotone = r.monotonicity_violation <= 5.0 * grid.dx();
  r.field = ScalarField(grid, std::move(inf));
  if (!r.field.finite()) throw NumericalError("Busemann field has unreachable nodes; increase s_max");
  r.stabilized = r.stages.size() < 2 || sup_distance(r.stages.back(), r.stages[r.stages.size() - 2]) <= tol;
  r.residual = sup_distance(lax_step(model, r.field, params, Direction::Backward), r.field);
  r.fixed_point = r.residual <= tol;
  return r;
}

MinimalityReport minimality_test(const ContactModel& model, const Orbit& orbit, const LaxParams& params, const PeriodicGrid& grid,
                                 MinimalityMode mode, std::size_t pair_count, const MinimalityOptions& opts) {
  if (orbit.size() < 2) throw PreconditionError("orbit too short");
  for (const auto& z : orbit.z)
    if (!std::isfinite(z.x) || !std::isfinite(z.u) || !std::isfinite(z.p)) throw PreconditionError("orbit is not finite");
  MinimalityReport rep;
  rep.mode = mode;
  rep.tol = opts.tol > 0.0 ? opts.tol : 5.0 * grid.dx();
  const double t0 = std::min(orbit.t.front(), orbit.t.back());
  const double t1 = std::max(orbit.t.front(), orbit.t.back());
  const auto steps_total = static_cast<long long>(std::floor((t1 - t0) / params.tau + 1e-9));
  if (steps_total < 1) throw PreconditionError("orbit shorter than one time step");
  const auto budget = static_cast<long long>(std::floor(opts.max_horizon / params.tau + 1e-9));
  std::mt19937_64 rng(opts.seed);
  std::vector<std::pair<double, std::size_t>> pairs;  // (a, K)
  for (std::size_t n = 0; n < pair_count; ++n) {
    const long long ka = std::uniform_int_distribution<long long>(0, steps_total - 1)(rng);
    const long long kb = std::uniform_int_distribution<long long>(ka + 1, steps_total)(rng);
    if (kb - ka > budget) {
      ++rep.skipped;
      continue;
    }
    pairs.emplace_back(t0 + static_cast<double>(ka) * params.tau, static_cast<std::size_t>(kb - ka));
  }
  const auto s_layers = static_cast<std::size_t>(std::round(opts.s_max / params.tau));
  rep.defects.assign(pairs.size(), 0.0);
  parallel_for(pairs.size(), [&](std::size_t n) {
    const double a = pairs[n].first;
    const std::size_t K = pairs[n].second;
    const double b = a + static_cast<double>(K) * params.tau;
    const PhasePoint za = detail::orbit_state_at(orbit, a);
    const PhasePoint zb = detail::orbit_state_at(orbit, b);
    const std::size_t layers = mode == MinimalityMode::Global ? K : std::max(K, s_layers);
    const ActionTable table = action_table(model, za.x, za.u, params, layers, Direction::Backward, grid);
    double h = interpolate(ScalarField(grid, table.layers[K - 1]), zb.x);
    if (mode == MinimalityMode::SemiStatic)
      for (const auto& layer : table.layers) h = std::min(h, interpolate(ScalarField(grid, layer), zb.x));
    rep.defects[n] = std::abs(zb.u - h);
  });
  for (std::size_t n = 0; n < pairs.size(); ++n) {
    const double a = pairs[n].first;
    rep.pairs.emplace_back(a, a + static_cast<double>(pairs[n].second) * params.tau);
    rep.max_defect = std::max(rep.max_defect, rep.defects[n]);
  }
  rep.pass = !pairs.empty() && rep.max_defect <= rep.tol;
  return rep;
}

}  // namespace contact_kam
