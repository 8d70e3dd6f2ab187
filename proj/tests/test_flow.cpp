#include <doctest.h>

#include <random>

#include "contact_kam/errors.hpp"
#include "contact_kam/flow.hpp"
#include "support.hpp"

using namespace testing;

namespace {

const PhasePoint z_top{pi / 2, 0.25, 0.0};
const PhasePoint z_bottom{-pi / 2, -0.25, 0.0};

std::vector<double> sorted_real(const std::array<std::complex<double>, 3>& ev) {
  std::vector<double> r;
  for (const auto& e : ev) r.push_back(e.real());
  std::sort(r.begin(), r.end());
  return r;
}

}  // namespace

TEST_CASE("vector field examples") {
  const auto ex = ContactModel::example63();
  auto f = vector_field(ex, {0, 0, 1});
  CHECK(f.x == 2.0);
  CHECK(f.u == doctest::Approx(1.25));
  CHECK(f.p == 0.0);
  f = vector_field(ex, z_top);
  CHECK(phase_distance(f, {}) <= 1e-15);
  f = vector_field(ex, {0, 1, 0});
  CHECK(f.p == -1.0);
}

TEST_CASE("fixed points stay put") {
  const auto ex = ContactModel::example63();
  for (const auto& z : {z_top, z_bottom}) {
    // pi/2 is not exact in binary; the unstable direction amplifies the rounding.
    const auto o = integrate_orbit(ex, z, 0, 10, 1e-2);
    for (const auto& s : o.z) CHECK(phase_distance(s, z) <= 1e-10);
  }
}

TEST_CASE("rk4 is fourth order") {
  const auto ex = ContactModel::example63();
  const PhasePoint z0{0.3, 0.1, 0.2};
  const auto ref = integrate_orbit(ex, z0, 0, 1, 1e-4).back();
  const double e1 = phase_distance(integrate_orbit(ex, z0, 0, 1, 0.04).back(), ref);
  const double e2 = phase_distance(integrate_orbit(ex, z0, 0, 1, 0.02).back(), ref);
  CHECK(e1 / e2 >= 12.0);
  CHECK(e1 / e2 <= 20.0);
}

TEST_CASE("backward integration retraces") {
  const auto ex = ContactModel::example63();
  const PhasePoint z0{1.0, 0.2, -0.3};
  const auto fwd = integrate_orbit(ex, z0, 0, 2, 1e-3);
  const auto back = integrate_orbit(ex, fwd.back(), 2, 0, 1e-3);
  CHECK(phase_distance(back.back(), z0) <= 1e-9);
}

TEST_CASE("blow-up is reported with the partial orbit") {
  const auto ex = ContactModel::example63();
  try {
    integrate_orbit(ex, {0, -10, 0}, 0, 50, 1e-3);
    FAIL("expected blow-up");
  } catch (const BlowUp& b) {
    CHECK(b.t > 0.0);
    CHECK(b.t < 50.0);
    CHECK(b.partial.size() >= 2);
    CHECK(std::max(std::abs(b.state.u), std::abs(b.state.p)) > 1e4);
  }
}

TEST_CASE("energy transport") {
  const auto ex = ContactModel::example63();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> X(-pi, pi), U(-0.5, 0.5), P(-0.5, 0.5);
  for (int k = 0; k < 20; ++k) {
    const auto o = integrate_orbit(ex, {X(rng), U(rng), P(rng)}, 0, 1, 1e-3);
    CHECK(energy_transport_residual(ex, o) <= 1e-6);
  }
  // lambda = 0: H is a first integral.
  const auto cons = ContactModel::separable(1.0, parse_expression("0.3*cos(x)"), parse_expression("0"));
  const auto o = integrate_orbit(cons, {0.2, 0.0, 0.4}, 0, 10, 1e-3);
  CHECK(energy_transport_residual(cons, o) <= 1e-8);
  CHECK(std::abs(cons.hamiltonian(o.back().x, o.back().u, o.back().p) - cons.hamiltonian(0.2, 0.0, 0.4)) <= 1e-8);
}

TEST_CASE("fixed points of the reference model") {
  const auto ex = ContactModel::example63();
  const auto scan = find_fixed_points(ex);
  CHECK_FALSE(scan.degenerate);
  REQUIRE(scan.points.size() == 2);
  int matched = 0;
  for (const auto& fp : scan.points) {
    CHECK(fp.residual <= 1e-12);
    if (phase_distance(fp.z, z_top) <= 1e-10) {
      ++matched;
      CHECK(fp.stable_dim == 2);
      CHECK(fp.unstable_dim == 1);
      const auto ev = sorted_real(fp.eigenvalues);
      CHECK(ev[0] == doctest::Approx(-0.5 - std::sqrt(0.75)).epsilon(1e-9));
      CHECK(ev[1] == doctest::Approx(-1.0).epsilon(1e-9));
      CHECK(ev[2] == doctest::Approx(-0.5 + std::sqrt(0.75)).epsilon(1e-9));
    }
    if (phase_distance(fp.z, z_bottom) <= 1e-10) {
      ++matched;
      CHECK(fp.stable_dim == 1);
      CHECK(fp.unstable_dim == 2);
      const auto ev = sorted_real(fp.eigenvalues);
      CHECK(ev[0] == doctest::Approx(0.5 - std::sqrt(0.75)).epsilon(1e-9));
      CHECK(ev[1] == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(ev[2] == doctest::Approx(0.5 + std::sqrt(0.75)).epsilon(1e-9));
    }
  }
  CHECK(matched == 2);
}

TEST_CASE("fixed points of degenerate and perturbed models") {
  const auto deg = find_fixed_points(monotone());
  CHECK(deg.degenerate);
  CHECK_FALSE(deg.warnings.empty());

  const auto pert = ContactModel::separable(1.0, parse_expression("-0.25 + 0.01*cos(x)"), parse_expression("sin(x)"));
  const auto scan = find_fixed_points(pert);
  CHECK_FALSE(scan.degenerate);
  REQUIRE(scan.points.size() == 2);
  for (const auto& fp : scan.points) {
    CHECK(fp.residual <= 1e-10);
    CHECK(std::abs(fp.z.p) <= 1e-12);
    CHECK(std::abs(pert.hamiltonian(fp.z.x, fp.z.u, 0.0)) <= 1e-10);
  }
}

TEST_CASE("jacobian and spectrum") {
  const auto ex = ContactModel::example63();
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> X(-pi, pi), U(-1, 1), P(-1, 1);
  for (int k = 0; k < 50; ++k) {
    const PhasePoint z{X(rng), U(rng), P(rng)};
    const auto A = jacobian(ex, z);
    const auto B = jacobian_fd(ex, z);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(std::abs(A[i][j] - B[i][j]) <= 1e-6);
  }
  // Cubic solver against known factorizations.
  auto r = cubic_roots(-6, 11, -6);
  CHECK(r[0].real() == doctest::Approx(1.0));
  CHECK(r[1].real() == doctest::Approx(2.0));
  CHECK(r[2].real() == doctest::Approx(3.0));
  r = cubic_roots(0, 1, 0);  // s (s^2 + 1)
  int complex_count = 0;
  for (const auto& s : r) complex_count += std::abs(s.imag()) > 1e-12;
  CHECK(complex_count == 2);

  const auto J = jacobian(ex, z_top);
  const auto c = characteristic_polynomial(J);
  for (const auto& s : cubic_roots(c[0], c[1], c[2])) {
    const double v = ((s.real() + c[0]) * s.real() + c[1]) * s.real() + c[2];
    CHECK(std::abs(v) <= 1e-12);
    const auto e = real_eigenvector(J, s.real());
    const std::array<double, 3> ev{e.x, e.u, e.p};
    for (int i = 0; i < 3; ++i) {
      double row = 0;
      for (int j = 0; j < 3; ++j) row += J[i][j] * ev[j];
      CHECK(std::abs(row - s.real() * ev[i]) <= 1e-10);
    }
  }
}

TEST_CASE("invariant manifolds lie in the zero energy shell") {
  const auto ex = ContactModel::example63();
  const auto top = linearize_fixed_point(ex, z_top);
  const auto bottom = linearize_fixed_point(ex, z_bottom);
  for (int branch : {-1, 1}) {
    const auto wu = trace_invariant_manifold(ex, top, ManifoldDirection::Unstable, branch, 1e-6, 8.0);
    CHECK(wu.eigenvalue == doctest::Approx(-0.5 + std::sqrt(0.75)).epsilon(1e-9));
    CHECK(wu.max_abs_H <= 1e-6);
    const auto ws = trace_invariant_manifold(ex, bottom, ManifoldDirection::Stable, branch, 1e-6, 8.0);
    CHECK(ws.eigenvalue == doctest::Approx(0.5 - std::sqrt(0.75)).epsilon(1e-9));
    CHECK(ws.max_abs_H <= 1e-6);
  }
  // Halving the seed offset: the traced curve moves by at most O(offset).
  const auto a = trace_invariant_manifold(ex, top, ManifoldDirection::Unstable, 1, 1e-6, 6.0);
  const auto b = trace_invariant_manifold(ex, top, ManifoldDirection::Unstable, 1, 5e-7, 6.0 + std::log(2.0) / a.eigenvalue);
  CHECK(phase_distance(a.orbit.back(), b.orbit.back()) <= 1e-3);
}

TEST_CASE("polish is idempotent at a fixed point") {
  const auto ex = ContactModel::example63();
  const auto z = polish_fixed_point(ex, {1.5, 0.2, 0.01});
  CHECK(phase_distance(z, z_top) <= 1e-12);
  CHECK(phase_distance(polish_fixed_point(ex, z), z) <= 1e-15);
}
