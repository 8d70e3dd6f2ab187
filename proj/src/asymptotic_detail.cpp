#include "asymptotic_detail.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "contact_kam/errors.hpp"

namespace contact_kam::detail {

FieldTable build_field_table(const LaxOperator& op, const ScalarField& phi, std::size_t K, Direction dir) {
  if (!(phi.grid() == op.grid())) throw PreconditionError("field and operator grids differ");
  FieldTable t;
  t.grid = op.grid();
  t.direction = dir;
  const std::size_t n = phi.size();
  t.layers.assign(K + 1, std::vector<double>(n));
  t.bp.assign(K + 1, std::vector<std::int16_t>(n, 0));
  t.layers[0] = phi.values();
  StepReport rep;
  for (std::size_t k = 1; k <= K; ++k) op.apply(t.layers[k - 1].data(), t.layers[k].data(), dir, rep, t.bp[k].data());
  return t;
}

std::vector<std::size_t> backtrack_nodes(const FieldTable& table, std::size_t start, std::size_t K) {
  if (K > table.K()) throw PreconditionError("backtrack horizon outside the table");
  std::vector<std::size_t> nodes(K + 1);
  nodes[K] = start;
  const bool back = table.direction == Direction::Backward;
  for (std::size_t k = K; k >= 1; --k) {
    const int j = table.bp[k][nodes[k]];
    nodes[k - 1] = table.grid.wrap(static_cast<long long>(nodes[k]) + (back ? -j : j));
  }
  return nodes;
}

double interpolate_gradient(const ScalarField& field, double x) {
  const PeriodicGrid& g = field.grid();
  std::vector<double> d(g.n());
  for (std::size_t i = 0; i < g.n(); ++i) d[i] = centered_gradient(field, i);
  return interpolate(ScalarField(g, std::move(d)), x);
}

PhasePoint orbit_state_at(const Orbit& orbit, double t) {
  if (orbit.empty()) throw PreconditionError("empty orbit");
  const bool increasing = orbit.t.back() >= orbit.t.front();
  auto it = increasing ? std::lower_bound(orbit.t.begin(), orbit.t.end(), t)
                       : std::lower_bound(orbit.t.begin(), orbit.t.end(), t, std::greater<double>());
  if (it == orbit.t.begin()) return orbit.z.front();
  if (it == orbit.t.end()) return orbit.z.back();
  const std::size_t k = static_cast<std::size_t>(it - orbit.t.begin());
  const double t0 = orbit.t[k - 1], t1 = orbit.t[k];
  const double s = t1 == t0 ? 0.0 : (t - t0) / (t1 - t0);
  const PhasePoint& a = orbit.z[k - 1];
  const PhasePoint& b = orbit.z[k];
  return {wrap_angle(a.x + s * periodic_offset(a.x, b.x)), a.u + s * (b.u - a.u), a.p + s * (b.p - a.p)};
}

std::pair<std::size_t, std::size_t> head_window(const Orbit& orbit, double fraction) {
  const std::size_t n = orbit.size();
  const auto w = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n))));
  return {0, std::min(n, w)};
}

std::pair<std::size_t, std::size_t> tail_window(const Orbit& orbit, double fraction) {
  const std::size_t n = orbit.size();
  const auto w = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n))));
  return {n - std::min(n, w), n};
}

double window_distance(const Orbit& orbit, std::pair<std::size_t, std::size_t> window, const std::vector<Jet>& jets) {
  double worst = 0.0;
  for (std::size_t k = window.first; k < window.second; ++k) worst = std::max(worst, pseudograph_distance(orbit.z[k], jets));
  return worst;
}

std::vector<Jet> pseudograph_jets(const ScalarField& u) { return pseudograph_sample(u, default_kink_tol(u.grid())).jets(); }

Matrix3 transpose(const Matrix3& J) {
  Matrix3 T{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) T[i][j] = J[j][i];
  return T;
}

double dot3(const PhasePoint& a, const PhasePoint& b) { return a.x * b.x + a.u * b.u + a.p * b.p; }

bool left_eigenvector(const FixedPointInfo& info, int sign, PhasePoint& out, double& eigenvalue) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : info.eigenvalues) {
    if (s.imag() != 0.0) continue;
    if (sign * s.real() <= 1e-8) continue;
    if (std::abs(s.real()) < best) {
      best = std::abs(s.real());
      eigenvalue = s.real();
    }
  }
  if (!std::isfinite(best)) return false;
  out = real_eigenvector(transpose(info.jacobian), eigenvalue);
  return true;
}

}  // namespace contact_kam::detail
