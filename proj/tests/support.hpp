#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "contact_kam/expression.hpp"
#include "contact_kam/grid.hpp"
#include "contact_kam/model.hpp"

namespace testing {

using namespace contact_kam;

inline constexpr double pi = std::numbers::pi;

// H = p^2 - 1/4 + u: unique solution u = 1/4.
inline ContactModel monotone() { return ContactModel::separable(1.0, parse_expression("-0.25"), parse_expression("1")); }

// H = p^2.
inline ContactModel homogeneous() { return ContactModel::separable(1.0, parse_expression("0"), parse_expression("0")); }

inline ScalarField tent(const PeriodicGrid& g) {
  return ScalarField::from_function(g, [](double x) { return std::max(0.0, 1.0 - std::abs(x)); });
}

// 1/2 sin x + 1/4 on [-pi, 0], 1/4 on [0, pi].
inline ScalarField two_piece_phi(const PeriodicGrid& g) {
  return ScalarField::from_function(g, [](double x) { return x < 0.0 ? 0.5 * std::sin(x) + 0.25 : 0.25; });
}

// min_y phi(y) + d(x, y)^2 / (4t), y over a fine periodic sampling with exact values of f.
template <class F>
double hopf_lax(F f, double x, double t, int samples = 20000) {
  double best = INFINITY;
  for (int k = 0; k < samples; ++k) {
    const double y = -pi + 2.0 * pi * k / samples;
    const double d = periodic_distance(x, y);
    best = std::min(best, f(y) + d * d / (4.0 * t));
  }
  return best;
}

}  // namespace testing
