#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "contact_kam/model.hpp"
#include "contact_kam/variational.hpp"

namespace contact_kam {

struct PropertyCheck {
  std::string name;
  std::size_t trials = 0;
  std::size_t failures = 0;
  double worst = 0.0;  // largest observed defect, in the units of tol
  double tol = 0.0;
  bool pass = false;
};

struct PropertySuiteOptions {
  std::size_t n = 64;
  std::size_t trials = 100;
  std::uint64_t seed = 20240611;
  double t = 0.5;              // horizon of the duality and expansiveness checks
  std::size_t max_steps = 16;  // action-table depth for the monotonicity, Markov and reversibility checks
  std::size_t brute_n = 32;
  std::size_t brute_K = 4;
};

/// Random trigonometric polynomial of degree 3 with coefficients in [-amp, amp].
ScalarField random_field(const PeriodicGrid& grid, std::uint64_t seed, double amp = 0.5);

/// Brute-force T^K phi by enumerating every offset sequence of length K; compare with K lax steps.
ScalarField enumerate_paths(const ContactModel& model, const ScalarField& phi, const LaxParams& params, std::size_t K, Direction dir);

/// Randomized semigroup properties: u0-monotonicity, Markov recomposition, reversibility, duality,
/// expansiveness and path-enumeration equivalence. Deterministic for a fixed seed.
std::vector<PropertyCheck> run_property_suite(const ContactModel& model, const LaxParams& params, const PropertySuiteOptions& opts = {});

}  // namespace contact_kam
