#include <doctest.h>

#include "contact_kam/errors.hpp"
#include "contact_kam/properties.hpp"
#include "contact_kam/variational.hpp"
#include "support.hpp"

using namespace testing;

TEST_CASE("lax step examples") {
  const PeriodicGrid g(128);
  const LaxParams P;
  const auto z = lax_step(homogeneous(), ScalarField(g, 0.0), P, Direction::Backward);
  for (std::size_t i = 0; i < g.n(); ++i) CHECK(z[i] == 0.0);
  for (auto dir : {Direction::Backward, Direction::Forward}) {
    const auto q = lax_step(monotone(), ScalarField(g, 0.25), P, dir);
    for (std::size_t i = 0; i < g.n(); ++i) CHECK(q[i] == 0.25);
  }
}

TEST_CASE("params validation") {
  LaxParams P;
  P.tau = 1.0;
  CHECK_THROWS_AS(P.validate(ContactModel::example63()), PreconditionError);
  P.tau = 0.0;
  CHECK_THROWS_AS(P.validate(ContactModel::example63()), PreconditionError);
  P.tau = 0.5;
  CHECK_NOTHROW(P.validate(ContactModel::example63()));
  CHECK(parse_direction("forward") == Direction::Forward);
  CHECK_THROWS(parse_direction("sideways"));
}

TEST_CASE("hopf-lax oracle at t = 1/2") {
  const PeriodicGrid g(512);
  const auto phi = tent(g);
  const auto r = semigroup_evolve(homogeneous(), phi, LaxParams{}, 0.5, Direction::Backward);
  double err = 0;
  for (std::size_t i = 0; i < g.n(); ++i) {
    const double exact = hopf_lax([](double y) { return std::max(0.0, 1.0 - std::abs(y)); }, g.x(i), 0.5);
    err = std::max(err, std::abs(r.final_field()[i] - exact));
  }
  CHECK(err <= 5e-3);
}

TEST_CASE("semigroup monotonicity") {
  const PeriodicGrid g(256);
  const auto ex = ContactModel::example63();
  const auto phi = two_piece_phi(g);
  const auto r = semigroup_evolve(ex, phi, LaxParams{}, 3.0, Direction::Backward, 0.5);
  CHECK(r.snapshots.size() == 6);
  CHECK(r.snapshots.back().t == doctest::Approx(3.0));
  const ScalarField* prev = &phi;
  for (const auto& s : r.snapshots) {
    for (std::size_t i = 0; i < g.n(); ++i) CHECK(s.field[i] >= (*prev)[i] - 5 * g.dx());
    prev = &s.field;
  }
  // Ordered data stay ordered.
  auto psi = phi;
  for (auto& v : psi.values()) v += 0.05;
  const auto a = semigroup_evolve(ex, phi, LaxParams{}, 1.0, Direction::Backward).final_field();
  const auto b = semigroup_evolve(ex, psi, LaxParams{}, 1.0, Direction::Backward).final_field();
  for (std::size_t i = 0; i < g.n(); ++i) CHECK(a[i] <= b[i]);
}

TEST_CASE("weak kam limits") {
  const PeriodicGrid g(256);
  const auto m = weak_kam_limit(monotone(), ScalarField::from_function(g, [](double x) { return std::sin(x); }), LaxParams{},
                                Direction::Backward);
  CHECK(m.status == KamStatus::Converged);
  CHECK(sup_distance(m.field, ScalarField(g, 0.25)) <= 1e-3);

  const auto ex = ContactModel::example63();
  const auto um = weak_kam_limit(ex, ScalarField(g, 1.0), LaxParams{}, Direction::Backward);
  REQUIRE(um.status == KamStatus::Converged);
  CHECK(interpolate(um.field, pi / 2) == doctest::Approx(0.25).epsilon(0.02));
  CHECK(um.field.min() > 0.0);
  const auto hr = hjb_residual(ex, um.field, default_kink_tol(g));
  CHECK(hr.nodes > 0);
  CHECK(hr.constant == doctest::Approx(hr.max_abs / g.dx()));
  CHECK(hr.constant <= 5.0);

  CHECK(weak_kam_limit(ex, ScalarField(g, -10.0), LaxParams{}, Direction::Backward).status == KamStatus::DivergedMinus);
}

TEST_CASE("action table examples") {
  const PeriodicGrid g(512);
  LaxParams P;
  const auto K = static_cast<std::size_t>(std::llround(1.0 / P.tau));  // t = 1
  const auto hom = action_table(homogeneous(), 0.0, 0.0, P, K, Direction::Backward, g);
  CHECK(std::abs(hom.value_at(pi / 2, K) - pi * pi / 16) <= 5e-3);

  const auto ex = ContactModel::example63();
  const auto fix = action_table(ex, pi / 2, 0.25, P, 64, Direction::Backward, g);
  for (std::size_t k = 1; k <= fix.K(); ++k) CHECK(std::abs(fix.value_at(pi / 2, k) - 0.25) <= 5e-3);

  // Constant lambda = 1: a shift of u0 decays like e^{-t}.
  const auto m = monotone();
  const auto a = action_table(m, 0.3, 0.0, P, K, Direction::Backward, g);
  const auto b = action_table(m, 0.3, 0.1, P, K, Direction::Backward, g);
  for (double x : {-2.0, 0.0, 0.3, 1.0, 2.5})
    CHECK(std::abs(b.value_at(x, K) - a.value_at(x, K) - 0.1 * std::exp(-1.0)) <= 1e-3);

  // Unreachable nodes in the first layer.
  CHECK(std::isinf(a.value(g.nearest(0.3 + pi), 1)));
}

TEST_CASE("backtracked minimizers") {
  const PeriodicGrid g(256);
  const LaxParams P;
  const auto K = static_cast<std::size_t>(std::llround(1.0 / P.tau));
  const auto hom = action_table(homogeneous(), 0.0, 0.0, P, K, Direction::Backward, g);
  const auto c = backtrack_minimizer(hom, 1.5, K);
  REQUIRE(c.size() == K + 1);
  CHECK(c.front().x == doctest::Approx(0.0));
  CHECK(c.back().u == hom.value_at(1.5, K));
  // Discrete geodesic: every step uses one of the two offsets nearest the mean speed.
  const double mean = static_cast<double>(c.back().i - c.front().i) / static_cast<double>(K);
  for (std::size_t k = 1; k < c.size(); ++k) {
    const double j = static_cast<double>(c[k].i) - static_cast<double>(c[k - 1].i);
    CHECK((j == std::floor(mean) || j == std::ceil(mean)));
  }

  const auto ex = ContactModel::example63();
  const auto fix = action_table(ex, pi / 2, 0.25, P, 32, Direction::Backward, g);
  for (const auto& q : backtrack_minimizer(fix, pi / 2, 32)) {
    CHECK(q.x == doctest::Approx(g.x(g.nearest(pi / 2))));
    CHECK(std::abs(q.u - 0.25) <= 5e-3);
  }
}

TEST_CASE("enumeration oracle and property suite") {
  const PeriodicGrid g(32);
  const auto ex = ContactModel::example63();
  const auto phi = random_field(g, 99);
  for (auto dir : {Direction::Backward, Direction::Forward}) {
    auto step = phi;
    for (int k = 0; k < 3; ++k) step = lax_step(ex, step, LaxParams{}, dir);
    CHECK(sup_distance(step, enumerate_paths(ex, phi, LaxParams{}, 3, dir)) <= 1e-12);
  }
  PropertySuiteOptions opts;
  opts.trials = 10;
  for (const auto& model : {ex, monotone()})
    for (const auto& c : run_property_suite(model, LaxParams{}, opts)) CHECK_MESSAGE(c.pass, c.name << " worst " << c.worst);
}
