#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "config.hpp"
#include "contact_kam/asymptotic.hpp"
#include "contact_kam/expression.hpp"
#include "contact_kam/flow.hpp"
#include "contact_kam/io.hpp"
#include "contact_kam/properties.hpp"
#include "contact_kam/variational.hpp"
#include "svg.hpp"

namespace contact_kam::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : Error {
  using Error::Error;
};

struct Flags {
  std::string config;
  std::string phi;
  std::string direction = "backward";
  std::string t, x0, u0, p0, horizon;
  std::string out;
  bool svg = false;
};

std::optional<double> float_flag(const std::string& s, const char* name) {
  if (s.empty()) return std::nullopt;
  try {
    return parse_double(s);
  } catch (const Error&) {
    throw UsageError(std::string("--") + name + ": not a decimal number: '" + s + "'");
  }
}

double required_float(const std::string& s, const char* name) {
  auto v = float_flag(s, name);
  if (!v) throw UsageError(std::string("--") + name + " is required for this command");
  return *v;
}

// Output directory plus the list of produced files, in creation order.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir_.string() + ": " + ec.message());
  }
  fs::path file(const std::string& name) {
    if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
    return dir_ / name;
  }
  const fs::path& dir() const { return dir_; }
  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Context {
  std::string command;
  Flags flags;
  RunConfig cfg;
  PeriodicGrid grid{16};
  std::optional<Outputs> outputs;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  const ContactModel& model() const { return *cfg.model; }
  const Numerics& num() const { return cfg.num; }
  Outputs& files() { return *outputs; }
};

ScalarField field_from_phi(const std::string& spec, const PeriodicGrid& grid) {
  if (!spec.empty() && spec.front() == '@') {
    ScalarField f(grid);
    try {
      f = read_field_csv(spec.substr(1));
    } catch (const Error& e) {
      throw ConfigError(std::string("--phi: ") + e.what());
    }
    if (!(f.grid() == grid))
      throw ConfigError("--phi: field has " + std::to_string(f.size()) + " nodes, config grid has " + std::to_string(grid.n()));
    if (!f.finite()) throw ConfigError("--phi: field has non-finite values");
    return f;
  }
  Expression e;
  try {
    e = parse_expression(spec);
  } catch (const ParseError& ex) {
    throw ConfigError(std::string("--phi: ") + ex.what());
  }
  if (e.depends_on(Var::U) || e.depends_on(Var::P)) throw ConfigError("--phi may depend on x only");
  ScalarField f(grid);
  try {
    f = ScalarField::from_function(grid, [&](double x) { return e.eval(x); });
  } catch (const DomainError& ex) {
    throw ConfigError(std::string("--phi: ") + ex.what());
  }
  if (!f.finite()) throw ConfigError("--phi evaluates to non-finite values on the grid");
  return f;
}

ScalarField phi_or(const Context& c, const std::string& fallback) {
  return field_from_phi(c.flags.phi.empty() ? fallback : c.flags.phi, c.grid);
}

Direction direction(const Context& c) {
  try {
    return parse_direction(c.flags.direction);
  } catch (const Error&) {
    throw UsageError("--direction must be backward or forward");
  }
}

double horizon(const Context& c, std::optional<double> fallback = std::nullopt) {
  auto t = float_flag(c.flags.t, "t");
  auto h = float_flag(c.flags.horizon, "horizon");
  if (t && h && *t != *h) throw UsageError("--t and --horizon disagree");
  if (t) return *t;
  if (h) return *h;
  if (fallback) return *fallback;
  throw UsageError("--t (or --horizon) is required for this command");
}

bool svg_enabled(const Context& c) { return c.flags.svg || c.num().svg; }

std::vector<double> vec(const PhasePoint& z) { return {z.x, z.u, z.p}; }

void describe_fixed_points(KeyValueFile& kv, const FixedPointScan& scan) {
  kv.set("count", static_cast<double>(scan.points.size()));
  kv.set("degenerate", scan.degenerate ? "true" : "false");
  for (std::size_t k = 0; k < scan.points.size(); ++k) {
    const auto& fp = scan.points[k];
    const std::string p = "fp" + std::to_string(k) + "_";
    kv.set(p + "z", vec(fp.z));
    std::vector<double> re, im, J;
    for (const auto& s : fp.eigenvalues) {
      re.push_back(s.real());
      im.push_back(s.imag());
    }
    for (const auto& row : fp.jacobian) J.insert(J.end(), row.begin(), row.end());
    kv.set(p + "eigenvalues_re", re);
    kv.set(p + "eigenvalues_im", im);
    kv.set(p + "jacobian", J);
    kv.set(p + "stable_dim", static_cast<double>(fp.stable_dim));
    kv.set(p + "unstable_dim", static_cast<double>(fp.unstable_dim));
    kv.set(p + "hyperbolic", fp.hyperbolic ? "true" : "false");
    kv.set(p + "residual", fp.residual);
  }
  for (std::size_t k = 0; k < scan.warnings.size(); ++k) kv.set("warning" + std::to_string(k), scan.warnings[k]);
}

void write_minimality(KeyValueFile& kv, const std::string& prefix, const MinimalityReport& r) {
  kv.set(prefix + "pairs", static_cast<double>(r.pairs.size()));
  kv.set(prefix + "skipped", static_cast<double>(r.skipped));
  kv.set(prefix + "max_defect", r.max_defect);
  kv.set(prefix + "tol", r.tol);
  kv.set(prefix + "pass", r.pass ? "true" : "false");
}

// ---------------------------------------------------------------- commands

int cmd_parse_check(Context& c) {
  KeyValueFile kv;
  kv.set("model", c.model().describe());
  kv.set("kind", c.cfg.model_kind);
  kv.set("Lambda", c.model().lambda_bound());
  kv.set("n", static_cast<double>(c.grid.n()));
  kv.set("tau", c.num().lax.tau);
  kv.set("offsets", static_cast<double>(c.num().lax.offsets(c.grid)));
  if (!c.flags.phi.empty()) {
    const ScalarField f = field_from_phi(c.flags.phi, c.grid);
    if (c.flags.phi.front() != '@') kv.set("phi", parse_expression(c.flags.phi).serialize());
    kv.set("phi_range", std::vector<double>{f.min(), f.max()});
  }
  kv.write(c.files().file("parse_check.txt"));
  *c.out << "parse-check: ok (" << c.model().describe() << ")\n";
  return kOk;
}

int cmd_evolve(Context& c) {
  const Direction dir = direction(c);
  const double t = horizon(c);
  if (!(t > 0.0)) throw UsageError("--t must be positive");
  const EvolveResult r = semigroup_evolve(c.model(), phi_or(c, "0"), c.num().lax, t, dir);
  const ScalarField& f = r.final_field();
  write_field_csv(c.files().file("evolved.csv"), f);
  KeyValueFile kv;
  kv.set("direction", to_string(dir));
  kv.set("t", r.snapshots.back().t);
  kv.set("steps", static_cast<double>(std::llround(r.snapshots.back().t / c.num().lax.tau)));
  kv.set("clamped", static_cast<double>(r.report.clamped));
  kv.set("window_hits", static_cast<double>(r.report.window_hits));
  kv.set("range", std::vector<double>{f.min(), f.max()});
  kv.write(c.files().file("evolve.txt"));
  *c.out << "evolve: " << to_string(dir) << " to t=" << fmt_double(r.snapshots.back().t) << ", range [" << fmt_double(f.min()) << ", "
         << fmt_double(f.max()) << "]\n";
  return kOk;
}

int cmd_solve(Context& c) {
  const Direction dir = direction(c);
  const WeakKamResult r = weak_kam_limit(c.model(), phi_or(c, "0"), c.num().lax, dir, c.num().tol, c.num().t_max, c.num().window);
  const std::string stem = dir == Direction::Backward ? "u_minus" : "u_plus";
  write_weak_kam(c.files().file(stem + ".csv"), c.files().file(stem + ".txt"), r);
  *c.out << "solve: " << to_string(r.status) << " (" << to_string(dir) << ", residual " << fmt_double(r.residual) << ", t "
         << fmt_double(r.elapsed) << ")\n";
  return kOk;
}

int cmd_action(Context& c) {
  const Direction dir = direction(c);
  const double x0 = required_float(c.flags.x0, "x0");
  const double u0 = required_float(c.flags.u0, "u0");
  const double t = horizon(c);
  if (!(t > 0.0)) throw UsageError("--t must be positive");
  const auto K = static_cast<std::size_t>(std::max(1.0, std::round(t / c.num().lax.tau)));
  const ActionTable table = action_table(c.model(), x0, u0, c.num().lax, K, dir, c.grid);
  write_action_table_csv(c.files().file("action_table.csv"), table);
  std::size_t reach = 0;
  for (double v : table.layers.back()) reach += std::isfinite(v) ? 1 : 0;
  KeyValueFile kv;
  kv.set("direction", to_string(dir));
  kv.set("x0", table.x0);
  kv.set("u0", table.u0);
  kv.set("K", static_cast<double>(K));
  kv.set("t", static_cast<double>(K) * c.num().lax.tau);
  kv.set("value_at_x0", table.value(table.i0, K));
  kv.set("reachable_nodes", static_cast<double>(reach));
  kv.set("clamped", static_cast<double>(table.report.clamped));
  kv.set("window_hits", static_cast<double>(table.report.window_hits));
  kv.write(c.files().file("action.txt"));
  *c.out << "action: K=" << K << ", h(x0, t) = " << fmt_double(table.value(table.i0, K)) << ", " << reach << " nodes reachable\n";
  return kOk;
}

int cmd_orbit(Context& c) {
  const double t = horizon(c);
  if (!(t > 0.0)) throw UsageError("--t must be positive");
  KeyValueFile kv;
  if (!c.flags.phi.empty()) {
    const double x = required_float(c.flags.x0, "x0");
    CharacteristicOptions opts;
    opts.char_tol = c.num().char_tol;
    const CharacteristicOrbit co = characteristic_orbit(c.model(), phi_or(c, "0"), x, t, c.num().lax, opts);
    write_orbit_csv(c.files().file("characteristic.csv"), c.model(), co.orbit);
    if (!co.ode.empty()) write_orbit_csv(c.files().file("characteristic_ode.csv"), c.model(), co.ode);
    kv.set("mode", "characteristic");
    kv.set("source", std::vector<double>{co.source.x, co.source.u, co.source.p});
    kv.set("end", vec(co.orbit.back()));
    kv.set("max_witness", co.max_witness);
    kv.set("ode_divergence", co.ode_divergence);
    kv.write(c.files().file("orbit.txt"));
    if (svg_enabled(c)) {
      std::vector<SvgCurve> curves{{&co.orbit, "#1f77b4", "characteristic (DP)"}};
      if (!co.ode.empty()) curves.push_back({&co.ode, "#d62728", "re-integrated"});
      write_phase_svg(c.files().file("orbit.svg"), c.model(), curves);
    }
    *c.out << "orbit: characteristic from x=" << fmt_double(co.source.x) << ", witness " << fmt_double(co.max_witness) << "\n";
    return kOk;
  }
  const PhasePoint z0{required_float(c.flags.x0, "x0"), required_float(c.flags.u0, "u0"), float_flag(c.flags.p0, "p0").value_or(0.0)};
  Orbit o;
  bool blowup = false;
  double blowup_t = 0.0;
  try {
    o = integrate_orbit(c.model(), z0, 0.0, t, c.num().h);
  } catch (const BlowUp& b) {
    o = b.partial;
    blowup = true;
    blowup_t = b.t;
  }
  write_orbit_csv(c.files().file("orbit.csv"), c.model(), o, c.num().thin);
  kv.set("mode", "flow");
  kv.set("start", vec(z0));
  kv.set("end", vec(o.back()));
  kv.set("blowup", blowup ? "true" : "false");
  if (blowup) kv.set("blowup_t", blowup_t);
  kv.set("max_abs_H", max_abs_energy(c.model(), o));
  kv.set("energy_transport_residual", energy_transport_residual(c.model(), o));
  kv.write(c.files().file("orbit.txt"));
  if (svg_enabled(c)) write_phase_svg(c.files().file("orbit.svg"), c.model(), {{&o, "#1f77b4", "orbit"}});
  *c.out << "orbit: " << (blowup ? "blow-up at t=" + fmt_double(blowup_t) : "integrated to t=" + fmt_double(o.t.back())) << "\n";
  return kOk;
}

int cmd_fixed_points(Context& c) {
  const FixedPointScan scan = find_fixed_points(c.model());
  KeyValueFile kv;
  describe_fixed_points(kv, scan);
  kv.write(c.files().file("fixed_points.txt"));
  for (const auto& w : scan.warnings) *c.err << "notice: " << w << "\n";
  *c.out << "fixed-points: " << scan.points.size() << " isolated" << (scan.degenerate ? ", degenerate family flagged" : "") << "\n";
  return kOk;
}

// Traces every real stable and unstable direction of every fixed point; returns the orbits for plotting.
std::vector<Orbit> trace_all(Context& c, const FixedPointScan& scan, double t_max, KeyValueFile& kv) {
  std::vector<Orbit> traces;
  for (std::size_t k = 0; k < scan.points.size(); ++k)
    for (auto md : {ManifoldDirection::Unstable, ManifoldDirection::Stable})
      for (int branch : {+1, -1}) {
        const std::string name = "manifold_fp" + std::to_string(k) + (md == ManifoldDirection::Unstable ? "_unstable" : "_stable") +
                                 (branch > 0 ? "_plus" : "_minus");
        try {
          const ManifoldTrace tr = trace_invariant_manifold(c.model(), scan.points[k], md, branch, c.num().manifold_offset, t_max, c.num().h);
          write_orbit_csv(c.files().file(name + ".csv"), c.model(), tr.orbit, c.num().thin);
          kv.set(name + "_eigenvalue", tr.eigenvalue);
          kv.set(name + "_max_abs_H", tr.max_abs_H);
          kv.set(name + "_end", vec(tr.orbit.back()));
          traces.push_back(tr.orbit);
        } catch (const BlowUp& b) {
          write_orbit_csv(c.files().file(name + ".csv"), c.model(), b.partial, c.num().thin);
          kv.set(name + "_blowup_t", b.t);
          traces.push_back(b.partial);
        } catch (const PreconditionError& e) {
          kv.set(name, std::string("none: ") + e.what());
        }
      }
  return traces;
}

int cmd_manifold(Context& c) {
  const double t_max = horizon(c, 10.0);
  const FixedPointScan scan = find_fixed_points(c.model());
  if (scan.points.empty()) throw PreconditionError("the model has no isolated fixed points");
  KeyValueFile kv;
  kv.set("t_max", t_max);
  kv.set("offset", c.num().manifold_offset);
  const auto traces = trace_all(c, scan, t_max, kv);
  kv.write(c.files().file("manifold.txt"));
  if (svg_enabled(c)) {
    std::vector<SvgCurve> curves;
    for (const auto& o : traces) curves.push_back({&o, "#2ca02c", ""});
    std::vector<PhasePoint> markers;
    for (const auto& fp : scan.points) markers.push_back(fp.z);
    write_phase_svg(c.files().file("manifold.svg"), c.model(), curves, markers);
  }
  *c.out << "manifold: " << traces.size() << " branches traced\n";
  return kOk;
}

HeteroclinicOptions connect_options(const Context& c) {
  HeteroclinicOptions o;
  o.accept_tol = c.num().accept_tol;
  o.kam_tol = c.num().tol;
  o.t_max = c.num().t_max;
  o.h = c.num().h;
  if (auto s = float_flag(c.flags.horizon, "horizon")) o.span = *s;
  return o;
}

int cmd_connect(Context& c) {
  const ScalarField phi = phi_or(c, "0");
  const HeteroclinicResult r = heteroclinic_connect(c.model(), phi, c.num().lax, connect_options(c));
  write_heteroclinic(c.files().file("heteroclinic.csv"), c.files().file("heteroclinic.txt"), c.model(), r);
  write_field_csv(c.files().file("u_minus.csv"), r.u_minus);
  write_field_csv(c.files().file("v_plus.csv"), r.v_plus);
  const ObstructionReport ob = obstruction_check(c.model(), r.orbit, r.u_minus, r.v_plus, c.num().accept_tol);
  KeyValueFile kv;
  kv.set("verdict", to_string(ob.verdict));
  kv.set("alpha_to_u_minus", ob.alpha_to_u_minus);
  kv.set("omega_to_v_plus", ob.omega_to_v_plus);
  if (!ob.reason.empty()) kv.set("reason", ob.reason);
  kv.write(c.files().file("obstruction.txt"));
  if (svg_enabled(c)) write_phase_svg(c.files().file("heteroclinic.svg"), c.model(), {{&r.orbit, "#d62728", "connecting orbit"}});
  *c.out << "connect: endpoints at distance " << fmt_double(r.alpha_distance) << " / " << fmt_double(r.omega_distance)
         << " from the slices, max |H| " << fmt_double(r.max_abs_H) << (r.accepted ? ", accepted" : ", NOT accepted") << "\n";
  if (!r.accepted) {
    *c.err << "error: endpoint distances exceed accept_tol " << fmt_double(c.num().accept_tol) << "\n";
    return kNumerical;
  }
  return kOk;
}

struct Extremes {
  WeakKamResult high, low;
};

Extremes extreme_solutions(const Context& c) {
  const auto& n = c.num();
  Extremes e{weak_kam_limit(c.model(), ScalarField(c.grid, n.classify_high), n.lax, Direction::Backward, n.tol, n.t_max, n.window),
             weak_kam_limit(c.model(), ScalarField(c.grid, n.classify_low), n.lax, Direction::Forward, n.tol, n.t_max, n.window)};
  if (e.high.status != KamStatus::Converged)
    throw PreconditionError(std::string("maximal backward solution did not converge: ") + to_string(e.high.status));
  if (e.low.status != KamStatus::Converged)
    throw PreconditionError(std::string("minimal forward solution did not converge: ") + to_string(e.low.status));
  return e;
}

int cmd_classify(Context& c) {
  const double x0 = required_float(c.flags.x0, "x0");
  const double u0 = required_float(c.flags.u0, "u0");
  const Extremes e = extreme_solutions(c);
  ClassifyOptions opts;
  opts.evidence_span = c.num().evidence_span;
  opts.h = c.num().h;
  const ClassificationReport r = classify_minimizer(c.model(), e.high.field, e.low.field, x0, u0, c.num().class_tol, opts);
  write_classification(c.files().file("classification.txt"), r);
  write_field_csv(c.files().file("u_bar_minus.csv"), e.high.field);
  write_field_csv(c.files().file("u_under_plus.csv"), e.low.field);
  if (r.evidence) write_orbit_csv(c.files().file("evidence.csv"), c.model(), *r.evidence, c.num().thin);
  *c.out << "classify: case " << r.case_index << (r.boundary ? " (boundary)" : "") << "; alpha: " << r.alpha_behavior
         << "; omega: " << r.omega_behavior << "\n";
  return kOk;
}

int cmd_verify(Context& c) {
  PropertySuiteOptions o;
  o.n = c.num().verify_n;
  o.trials = c.num().verify_trials;
  o.seed = c.num().seed;
  const auto checks = run_property_suite(c.model(), c.num().lax, o);
  KeyValueFile kv;
  bool all = true;
  for (const auto& ch : checks) {
    kv.set(ch.name, std::vector<double>{static_cast<double>(ch.trials), static_cast<double>(ch.failures), ch.worst, ch.tol});
    all = all && ch.pass;
    *c.err << "  " << ch.name << ": " << (ch.pass ? "pass" : "FAIL") << " (" << ch.failures << "/" << ch.trials << " failed, worst "
           << fmt_double(ch.worst) << ", tol " << fmt_double(ch.tol) << ")\n";
  }
  kv.set("columns", "trials failures worst tol");
  kv.set("result", all ? "pass" : "fail");
  kv.write(c.files().file("verify.txt"));
  *c.out << "verify: " << (all ? "all " + std::to_string(checks.size()) + " properties hold" : std::string("property violations found"))
         << "\n";
  return all ? kOk : kNumerical;
}

int cmd_reproduce(Context& c) {
  if (c.cfg.model_kind != "example63") *c.err << "notice: reproduce-ex63 ignores the configured model\n";
  c.cfg.model = ContactModel::example63(c.model().v_max());
  const auto& n = c.num();

  const FixedPointScan scan = find_fixed_points(c.model());
  KeyValueFile fk;
  describe_fixed_points(fk, scan);
  fk.write(c.files().file("fixed_points.txt"));

  const Extremes e = extreme_solutions(c);
  write_weak_kam(c.files().file("u_bar_minus.csv"), c.files().file("u_bar_minus.txt"), e.high);
  write_weak_kam(c.files().file("u_under_plus.csv"), c.files().file("u_under_plus.txt"), e.low);

  const HeteroclinicResult r = heteroclinic_connect(c.model(), phi_or(c, "0"), n.lax, connect_options(c));
  write_heteroclinic(c.files().file("heteroclinic.csv"), c.files().file("heteroclinic.txt"), c.model(), r);

  KeyValueFile mk;
  mk.set("t_max", horizon(c, 12.0));
  const auto traces = trace_all(c, scan, horizon(c, 12.0), mk);
  mk.write(c.files().file("manifold.txt"));

  KeyValueFile mm;
  MinimalityOptions mo;
  mo.seed = n.seed;
  const MinimalityReport g = minimality_test(c.model(), r.orbit, n.lax, c.grid, MinimalityMode::Global, n.pair_count, mo);
  const MinimalityReport s = minimality_test(c.model(), r.orbit, n.lax, c.grid, MinimalityMode::SemiStatic, n.pair_count, mo);
  write_minimality(mm, "global_", g);
  write_minimality(mm, "semi_static_", s);
  mm.write(c.files().file("minimality.txt"));

  // Direct connection between the two saddles, for comparison with the constructed orbit.
  std::optional<SaddleConnection> sc;
  if (scan.points.size() == 2) {
    const auto& lo = scan.points[0].z.u < scan.points[1].z.u ? scan.points[0] : scan.points[1];
    const auto& hi = scan.points[0].z.u < scan.points[1].z.u ? scan.points[1] : scan.points[0];
    try {
      sc = saddle_connection(c.model(), lo, hi);
      write_orbit_csv(c.files().file("saddle_connection.csv"), c.model(), sc->orbit, n.thin);
      KeyValueFile sk;
      sk.set("converged", sc->converged ? "true" : "false");
      sk.set("scan_min_distance", sc->scan_min_distance);
      sk.set("endpoint_distances", std::vector<double>{sc->alpha_distance, sc->omega_distance});
      sk.set("max_abs_H", sc->max_abs_H);
      sk.set("tail_abs_H", sc->tail_abs_H);
      sk.write(c.files().file("saddle_connection.txt"));
    } catch (const Error& ex) {
      *c.err << "notice: saddle connection not found: " << ex.what() << "\n";
    }
  }

  std::vector<SvgCurve> curves{{&r.orbit, "#d62728", "constructed orbit"}};
  if (sc) curves.push_back({&sc->orbit, "#ff7f0e", "saddle connection"});
  for (const auto& o : traces) curves.push_back({&o, "#1f77b4", ""});
  std::vector<PhasePoint> markers;
  for (const auto& fp : scan.points) markers.push_back(fp.z);
  write_phase_svg(c.files().file("phase_portrait.svg"), c.model(), curves, markers);

  *c.out << "reproduce-ex63: " << scan.points.size() << " fixed points; u_bar_minus(pi/2) = "
         << fmt_double(interpolate(e.high.field, std::numbers::pi / 2)) << ", u_under_plus(-pi/2) = "
         << fmt_double(interpolate(e.low.field, -std::numbers::pi / 2)) << "; connecting orbit "
         << (r.accepted ? "accepted" : "not accepted") << "; minimality global " << (g.pass ? "pass" : "fail") << ", semi-static "
         << (s.pass ? "pass" : "fail") << "\n";
  return kOk;
}

void write_manifest(Context& c, int code, const std::vector<std::string>& args, const std::string& error) {
  nlohmann::ordered_json m;
  m["command"] = c.command;
  m["arguments"] = args;
  m["exit_code"] = code;
  if (!error.empty()) m["error"] = error;
  nlohmann::ordered_json in;
  in["config"] = c.cfg.path.string();
  in["config_fnv1a64"] = fnv1a_hex(c.cfg.text);
  if (!c.flags.phi.empty()) {
    in["phi"] = c.flags.phi;
    if (c.flags.phi.front() == '@') in["phi_fnv1a64"] = fnv1a_hex(read_bytes(c.flags.phi.substr(1)));
  }
  m["inputs"] = in;
  m["notices"] = c.cfg.notices;
  std::vector<std::string> names = c.files().files();
  std::sort(names.begin(), names.end());
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const auto& name : names) {
    const fs::path p = c.files().dir() / name;
    if (!fs::exists(p)) continue;
    const std::string bytes = read_bytes(p);
    files.push_back({{"name", name}, {"bytes", bytes.size()}, {"fnv1a64", fnv1a_hex(bytes)}});
  }
  m["files"] = files;
  std::ofstream out(c.files().dir() / "manifest.json", std::ios::binary);
  out << m.dump(2) << "\n";
}

}  // namespace

int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context c;
  c.out = &out;
  c.err = &err;
  CLI::App app{"Numerical weak KAM toolkit for contact Hamiltonians on the circle", "contact-kam"};
  app.require_subcommand(1);
  struct Cmd {
    const char* name;
    const char* help;
    int (*run)(Context&);
  };
  const std::vector<Cmd> cmds{
      {"parse-check", "validate the config and --phi", cmd_parse_check},
      {"evolve", "apply the semigroup up to --t", cmd_evolve},
      {"solve", "weak KAM solution as the long-time limit from --phi", cmd_solve},
      {"action", "action function table from (--x0, --u0) up to --t", cmd_action},
      {"orbit", "flow orbit from (--x0, --u0, --p0), or the characteristic through --x0 when --phi is given", cmd_orbit},
      {"fixed-points", "fixed points of the contact flow and their linearization", cmd_fixed_points},
      {"manifold", "stable and unstable manifolds of the fixed points up to --t", cmd_manifold},
      {"connect", "connecting orbit between the Mane slices of u_- and v_+", cmd_connect},
      {"classify", "case of (--x0, --u0) relative to the extreme solutions", cmd_classify},
      {"verify", "randomized semigroup property suite", cmd_verify},
      {"reproduce-ex63", "full pipeline for H = p^2 + sin(x) u - 1/4", cmd_reproduce},
  };
  Flags& f = c.flags;
  for (const auto& cmd : cmds) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("--config", f.config, "JSON run configuration")->required();
    sub->add_option("--phi", f.phi, "initial field: expression in x, or @file.csv");
    sub->add_option("--direction", f.direction, "backward|forward");
    sub->add_option("--t", f.t, "time horizon");
    sub->add_option("--x0", f.x0, "base point x");
    sub->add_option("--u0", f.u0, "base value u");
    sub->add_option("--p0", f.p0, "initial momentum for orbit");
    sub->add_option("--horizon", f.horizon, "time horizon (alias of --t; connect: integration half-span)");
    sub->add_option("--out", f.out, "output directory (overrides the config)");
    sub->add_flag("--svg", f.svg, "also write an SVG plot");
  }
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  for (const auto& cmd : cmds)
    if (app.got_subcommand(cmd.name)) c.command = cmd.name;
  const auto it = std::find_if(cmds.begin(), cmds.end(), [&](const Cmd& k) { return c.command == k.name; });
  if (it == cmds.end()) {
    err << "error: unknown command\n";
    return kUsage;
  }

  try {
    c.cfg = load_config(f.config);
    c.grid = PeriodicGrid(c.cfg.n);
    for (const auto& note : c.cfg.notices) err << "notice: " << note << "\n";
    c.outputs.emplace(f.out.empty() ? c.cfg.out : fs::path(f.out));
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  }

  int code = kOk;
  std::string message;
  try {
    code = it->run(c);
  } catch (const UsageError& e) {
    message = e.what();
    err << "usage error: " << message << "\n";
    code = kUsage;
  } catch (const ConfigError& e) {
    message = e.what();
    err << "config error: " << message << "\n";
    code = kConfig;
  } catch (const ParseError& e) {
    message = e.what();
    err << "parse error: " << message << "\n";
    code = kConfig;
  } catch (const PreconditionError& e) {
    message = e.what();
    err << "precondition violated: " << message << "\n";
    code = kPrecondition;
  } catch (const std::exception& e) {
    message = e.what();
    err << "numerical failure: " << message << "\n";
    code = kNumerical;
  }
  try {
    write_manifest(c, code, args, message);
  } catch (const std::exception& e) {
    err << "warning: manifest not written: " << e.what() << "\n";
  }
  return code;
}

}  // namespace contact_kam::cli
