#include <doctest.h>

#include "contact_kam/asymptotic.hpp"
#include "contact_kam/errors.hpp"
#include "support.hpp"

using namespace testing;

namespace {

Orbit constant_orbit(const PhasePoint& z, double t0, double t1, double h) {
  Orbit o;
  o.h = h;
  const auto steps = static_cast<std::size_t>(std::llround((t1 - t0) / h));
  for (std::size_t k = 0; k <= steps; ++k) {
    o.t.push_back(t0 + h * static_cast<double>(k));
    o.z.push_back(z);
  }
  return o;
}

// Shared reference data on a coarse grid.
struct Ex63 {
  ContactModel model = ContactModel::example63();
  PeriodicGrid grid{256};
  LaxParams params;
  ScalarField u_minus{grid}, v_plus{grid};
  Ex63() {
    u_minus = weak_kam_limit(model, ScalarField(grid, 0.0), params, Direction::Backward).field;
    v_plus = weak_kam_limit(model, ScalarField(grid, 0.0), params, Direction::Forward).field;
  }
};

const Ex63& ex63() {
  static const Ex63 data;
  return data;
}

}  // namespace

TEST_CASE("characteristic witness shrinks with the grid") {
  const auto m = monotone();
  const LaxParams P;
  for (std::size_t n : {128u, 256u}) {
    const PeriodicGrid g(n);
    const auto phi = ScalarField::from_function(g, [](double x) { return 0.25 + 0.1 * std::sin(x); });
    const auto co = characteristic_orbit(m, phi, 0.7, 3.0, P);
    CHECK(co.max_witness <= 5 * g.dx());
    CHECK(co.orbit.size() == static_cast<std::size_t>(std::llround(3.0 / P.tau)) + 1);
    CHECK(co.orbit.back().x == doctest::Approx(g.x(g.nearest(0.7))));
  }
  // H = p^2 from a constant: the minimizer stands still with zero momentum.
  const PeriodicGrid g(256);
  const auto co = characteristic_orbit(homogeneous(), ScalarField(g, 0.0), 0.7, 2.0, P);
  for (const auto& z : co.orbit.z) {
    CHECK(z.p == 0.0);
    CHECK(z.x == co.orbit.z.front().x);
  }
  // A kinked initial datum is rejected unless smoothness is waived.
  CharacteristicOptions strict;
  CHECK_THROWS_AS(characteristic_orbit(m, tent(g), 0.0, 1.0, P, strict), PreconditionError);
}

TEST_CASE("largest cluster") {
  std::vector<PhasePoint> jets{{0, 0, 0}, {1e-4, 0, 0}, {0, 2e-4, 0}, {2, 2, 2}, {2.0005, 2, 2}};
  const auto c = largest_cluster(jets, 1e-3);
  CHECK(c.members.size() == 3);
  CHECK(c.centroid.x == doctest::Approx(1e-4 / 3));
  CHECK(pseudograph_distance({0, 1, 0}, {{0, 0.5, 0}, {1, 1, 0}}) == doctest::Approx(0.5));
}

TEST_CASE("semi-infinite orbit of the monotone model") {
  const PeriodicGrid g(256);
  const auto phi = ScalarField::from_function(g, [](double x) { return std::sin(x); });
  const auto r = semi_infinite_orbit(monotone(), phi, LaxParams{}, {10, 20, 30});
  CHECK(r.tail_distance <= 1e-2);
  CHECK(std::abs(r.omega_estimate.u - 0.25) <= 1e-2);
  CHECK(std::abs(r.omega_estimate.p) <= 1e-2);
  CHECK(sup_distance(r.u_minus, ScalarField(g, 0.25)) <= 1e-3);
  CHECK(pseudograph_attainment(monotone(), phi, r.u_minus, 10.0, 1024) <= 0.1);
}

TEST_CASE("semi-infinite orbit of the reference model lands on the top saddle") {
  const PeriodicGrid g(256);
  const auto r = semi_infinite_orbit(ContactModel::example63(), ScalarField(g, 1.0), LaxParams{}, {10, 20, 30});
  REQUIRE(r.slice.has_value());
  CHECK(r.slice->x == doctest::Approx(pi / 2).epsilon(1e-6));
  CHECK(r.tail_distance <= 1e-2);
  CHECK(phase_distance(r.orbit.back(), *r.slice) <= 1e-2);
}

TEST_CASE("obstruction verdicts") {
  const auto& d = ex63();
  // The top saddle lies on the pseudograph of u_-; the bottom one on that of v_+.
  Orbit o = constant_orbit({pi / 2, 0.25, 0.0}, -5, 0, 1e-2);
  const auto tail = constant_orbit({-pi / 2, -0.25, 0.0}, 1e-2, 5, 1e-2);
  o.t.insert(o.t.end(), tail.t.begin(), tail.t.end());
  o.z.insert(o.z.end(), tail.z.begin(), tail.z.end());
  // Leaving the pseudograph of u_- and settling on that of v_+ is ruled out.
  const auto bad = obstruction_check(d.model, o, d.u_minus, d.v_plus, 1e-2);
  CHECK(bad.verdict == Verdict::Violation);
  CHECK_FALSE(bad.reason.empty());

  // Time reversal swaps the ends.
  Orbit rev;
  for (std::size_t k = o.size(); k-- > 0;) {
    rev.t.push_back(-o.t[k]);
    rev.z.push_back(o.z[k]);
  }
  const auto good = obstruction_check(d.model, rev, d.u_minus, d.v_plus, 1e-2);
  CHECK(good.verdict == Verdict::Consistent);
}

TEST_CASE("classification of fixed points and interior states") {
  const auto& d = ex63();
  const auto model = d.model;
  const auto ub = weak_kam_limit(model, ScalarField(d.grid, 1.0), d.params, Direction::Backward).field;
  const auto ul = weak_kam_limit(model, ScalarField(d.grid, -1.0), d.params, Direction::Forward).field;
  const double tol = 5 * d.grid.dx();
  auto c = classify_minimizer(model, ub, ul, pi / 2, 0.25, tol);
  CHECK(c.case_index == 2);
  CHECK(c.boundary);
  c = classify_minimizer(model, ub, ul, -pi / 2, -0.25, tol);
  CHECK(c.case_index == 4);
  CHECK(c.boundary);
  ClassifyOptions ev;
  ev.evidence_span = 30;
  c = classify_minimizer(model, ub, ul, 0.0, interpolate(ul, 0.0) - 0.5, tol, ev);
  CHECK(c.case_index == 5);
  CHECK(c.evidence_blowup);
  c = classify_minimizer(model, ub, ul, 0.0, 0.5 * (interpolate(ub, 0.0) + interpolate(ul, 0.0)), tol);
  CHECK(c.case_index == 3);
  CHECK_FALSE(c.boundary);
  c = classify_minimizer(model, ub, ul, 0.0, interpolate(ub, 0.0) + 0.5, tol);
  CHECK(c.case_index == 1);
}

TEST_CASE("busemann construction along the fixed orbit") {
  const auto& d = ex63();
  const auto ub = weak_kam_limit(d.model, ScalarField(d.grid, 1.0), d.params, Direction::Backward).field;
  const auto o = constant_orbit({pi / 2, 0.25, 0.0}, -40, 0, 1.0);
  const auto b = busemann_solution(d.model, o, d.params, d.grid, 40, {0, -10, -20, -40}, 1e-6);
  CHECK(b.stages.size() == 4);
  CHECK(b.monotone);
  CHECK(b.fixed_point);
  CHECK(sup_distance(b.field, ub) <= 1e-6);

  const auto flat = constant_orbit({0.3, 0.25, 0.0}, -40, 0, 1.0);
  const auto bm = busemann_solution(monotone(), flat, d.params, d.grid, 40, {0, -10, -20, -40}, 1e-6);
  CHECK(sup_distance(bm.field, ScalarField(d.grid, 0.25)) <= 1e-9);
}

TEST_CASE("minimality") {
  const auto& d = ex63();
  const auto fixed = constant_orbit({pi / 2, 0.25, 0.0}, 0, 10, 1e-2);
  for (auto mode : {MinimalityMode::Global, MinimalityMode::SemiStatic}) {
    const auto r = minimality_test(d.model, fixed, d.params, d.grid, mode, 8);
    CHECK(r.pass);
    CHECK(r.max_defect <= r.tol);
    CHECK(r.tol == doctest::Approx(5 * d.grid.dx()));
  }
  const auto wild = integrate_orbit(d.model, {0.3, 0.8, -1.2}, 0, 3, 1e-3);
  const auto r = minimality_test(d.model, wild, d.params, d.grid, MinimalityMode::Global, 8);
  CHECK_FALSE(r.pass);
  CHECK(r.max_defect > 1.0);
}

TEST_CASE("heteroclinic preconditions") {
  const auto& d = ex63();
  // The two-piece subsolution touches the forward limit: no gap to work in.
  CHECK_THROWS_AS(heteroclinic_connect(d.model, two_piece_phi(d.grid), d.params), PreconditionError);
}

TEST_CASE("direct saddle connection") {
  const auto model = ContactModel::example63();
  const auto scan = find_fixed_points(model);
  REQUIRE(scan.points.size() == 2);
  const auto& lo = scan.points[0].z.x < 0 ? scan.points[0] : scan.points[1];
  const auto& hi = scan.points[0].z.x < 0 ? scan.points[1] : scan.points[0];
  const auto sc = saddle_connection(model, lo, hi);
  CHECK(sc.converged);
  CHECK(sc.alpha_distance <= 1e-2);
  CHECK(sc.omega_distance <= 1e-2);
  CHECK(sc.max_abs_H >= 1e-3);
  CHECK(sc.tail_abs_H <= 1e-2);
}
