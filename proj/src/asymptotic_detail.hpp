#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "contact_kam/asymptotic.hpp"

namespace contact_kam::detail {

/// T^-_{k tau} phi (or T^+) for k = 0..K with backpointers; layers[0] = phi.
struct FieldTable {
  PeriodicGrid grid{16};
  Direction direction = Direction::Backward;
  std::vector<std::vector<double>> layers;
  std::vector<std::vector<std::int16_t>> bp;  // bp[k] is the offset used into layer k (bp[0] unused)

  std::size_t K() const { return layers.size() - 1; }
  ScalarField layer(std::size_t k) const { return ScalarField(grid, layers.at(k)); }
};

FieldTable build_field_table(const LaxOperator& op, const ScalarField& phi, std::size_t K, Direction dir);

/// nodes[k] visited on layer k by the optimal path ending at `start` on layer K.
std::vector<std::size_t> backtrack_nodes(const FieldTable& table, std::size_t start, std::size_t K);

/// Linear interpolation of the centered nodal gradient.
double interpolate_gradient(const ScalarField& field, double x);

/// Linear interpolation of an orbit in time (x interpolated along the short arc).
PhasePoint orbit_state_at(const Orbit& orbit, double t);

/// Index ranges [first, last) of the first (alpha) and last (omega) `fraction` of the samples.
std::pair<std::size_t, std::size_t> head_window(const Orbit& orbit, double fraction = 0.2);
std::pair<std::size_t, std::size_t> tail_window(const Orbit& orbit, double fraction = 0.2);

/// Max over the window of the distance to the pseudograph jets.
double window_distance(const Orbit& orbit, std::pair<std::size_t, std::size_t> window, const std::vector<Jet>& jets);

/// All jets (one per smooth node, two per kink) of the pseudograph of u.
std::vector<Jet> pseudograph_jets(const ScalarField& u);

/// Transpose of a 3x3 matrix.
Matrix3 transpose(const Matrix3& J);

double dot3(const PhasePoint& a, const PhasePoint& b);

/// Left eigenvector (eigenvector of J^T) for the real eigenvalue of J with the given sign, closest to zero if several.
/// Returns false when no such eigenvalue exists.
bool left_eigenvector(const FixedPointInfo& info, int sign, PhasePoint& out, double& eigenvalue);

}  // namespace contact_kam::detail
