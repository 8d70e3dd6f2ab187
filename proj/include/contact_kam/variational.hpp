#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "contact_kam/grid.hpp"
#include "contact_kam/model.hpp"

namespace contact_kam {

enum class Direction { Backward, Forward };

const char* to_string(Direction d);
Direction parse_direction(const std::string& s);

/// How the u-argument of L is evaluated along one step.
enum class UUpdate {
  Explicit,  // L(x, y, v) at the departure value y
  Heun       // L at the predicted value y + (tau/2) L(x, y, v)
};

/// Where L is evaluated in x.
enum class LagrangianPoint { Arrival, Midpoint };

struct LaxParams {
  double tau = 1.0 / 8.0;
  double v_max = 8.0;
  double u_clip = 1e4;
  UUpdate u_update = UUpdate::Heun;
  LagrangianPoint l_point = LagrangianPoint::Midpoint;

  /// m = ceil(v_max tau / dx).
  int offsets(const PeriodicGrid& grid) const;
  /// Throws PreconditionError unless tau Lambda <= 1/2 and tau > 0.
  void validate(const ContactModel& model) const;
};

struct StepReport {
  std::size_t clamped = 0;      // nodes clipped to +-u_clip
  std::size_t window_hits = 0;  // nodes whose optimal offset sits on the window edge
};

/// One semi-Lagrangian step on raw nodal arrays, for a fixed model, grid and params.
class LaxOperator {
 public:
  LaxOperator(const ContactModel& model, const PeriodicGrid& grid, const LaxParams& params);

  const PeriodicGrid& grid() const { return grid_; }
  const LaxParams& params() const { return params_; }
  int m() const { return m_; }

  /// Candidate value of moving from departure value y with offset j into node i.
  double candidate(std::size_t i, int j, double y, Direction dir) const;

  /// out_i = min_j cand(i, j, in_{i-j}) backward, max_j cand(i, j, in_{i+j}) forward.
  /// Infinite inputs act as unreachable sentinels. bp (optional, size n) receives the optimal j.
  void apply(const double* in, double* out, Direction dir, StepReport& report, std::int16_t* bp = nullptr) const;

  ScalarField step(const ScalarField& phi, Direction dir, StepReport* report = nullptr) const;

 private:
  double lagrangian(std::size_t half_index, double u, int j) const;

  const ContactModel* model_;
  PeriodicGrid grid_;
  LaxParams params_;
  int m_;
  std::vector<double> V2_, lam2_;  // separable parts on the doubled grid (node i at index 2i)
  std::vector<int> order_;         // 0, -1, 1, -2, 2, ... (tie-break order)
};

ScalarField lax_step(const ContactModel& model, const ScalarField& phi, const LaxParams& params, Direction dir,
                     StepReport* report = nullptr);

struct Snapshot {
  double t = 0.0;
  ScalarField field;
};

struct EvolveResult {
  std::vector<Snapshot> snapshots;
  StepReport report;
  const ScalarField& final_field() const { return snapshots.back().field; }
};

/// round(t_final / tau) steps; a snapshot every `snapshot_every` model time (<= 0: final only). t = 0 is not included.
EvolveResult semigroup_evolve(const ContactModel& model, const ScalarField& phi, const LaxParams& params, double t_final,
                              Direction dir, double snapshot_every = 0.0);

enum class KamStatus { Converged, DivergedMinus, DivergedPlus, MaxTime };
const char* to_string(KamStatus s);

struct WeakKamResult {
  ScalarField field;
  Direction direction = Direction::Backward;
  KamStatus status = KamStatus::MaxTime;
  double residual = 0.0;  // sup-norm of one-step fixed-point defect
  double elapsed = 0.0;   // model time
  StepReport report;
};

/// Evolves until the change over a window of model time is below tol and the one-step defect is below tol.
WeakKamResult weak_kam_limit(const ContactModel& model, const ScalarField& phi, const LaxParams& params, Direction dir,
                             double tol = 1e-9, double t_max = 200.0, double window = 1.0);

/// |H(x_i, u_i, p_i)| at differentiable nodes of the pseudograph sample, and its ratio to dx.
struct HjbResidual {
  double max_abs = 0.0;
  double constant = 0.0;  // max_abs / dx
  std::size_t nodes = 0;
};
HjbResidual hjb_residual(const ContactModel& model, const ScalarField& u, double kink_tol);

/// Layers h(., k tau), k = 1..K, of the backward (h_{x0,u0}) or forward (h^{x0,u0}) action function.
struct ActionTable {
  double x0 = 0.0;
  double u0 = 0.0;
  std::size_t i0 = 0;
  Direction direction = Direction::Backward;
  PeriodicGrid grid{16};
  LaxParams params;
  std::vector<std::vector<double>> layers;                // layers[k-1][i]
  std::vector<std::vector<std::int16_t>> backpointers;    // optimal offset j per node and layer
  StepReport report;

  std::size_t K() const { return layers.size(); }
  double value(std::size_t i, std::size_t k) const { return layers.at(k - 1).at(i); }
  double value_at(double x, std::size_t k) const;  // nearest node
};

ActionTable action_table(const ContactModel& model, double x0, double u0, const LaxParams& params, std::size_t K,
                         Direction dir, const PeriodicGrid& grid);

struct CurvePoint {
  double t = 0.0;
  double x = 0.0;
  double u = 0.0;
  std::size_t i = 0;
};

/// Discrete minimizer (maximizer for forward tables) in increasing time, from x0 to x (backward) or x to x0 (forward).
std::vector<CurvePoint> backtrack_minimizer(const ActionTable& table, double x, std::size_t K);

/// CSV "k,i,x,h,backpointer".
void write_action_table_csv(const std::filesystem::path& path, const ActionTable& table);

/// WeakKamResult export: field CSV plus a key-value sidecar.
void write_weak_kam(const std::filesystem::path& field_csv, const std::filesystem::path& summary, const WeakKamResult& r);

}  // namespace contact_kam
