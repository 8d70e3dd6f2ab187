#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "contact_kam/flow.hpp"
#include "contact_kam/variational.hpp"

namespace contact_kam {

/// Distance from z to the nearest jet of a pseudograph sample in the phase metric.
double pseudograph_distance(const PhasePoint& z, const std::vector<Jet>& jets);

struct CharacteristicOptions {
  double char_tol = 0.0;       // <= 0: 5 dx
  double witness_span = -1.0;  // ODE re-integration window from the source jet; < 0: whole horizon
  int ode_substeps = 4;        // RK4 steps per tau
  double kink_tol = -1.0;      // smoothness check of phi; < 0: default_kink_tol(grid, 4)
  bool require_smooth = true;
};

/// Lifted minimizer of T_t^- phi through x_target, sampled at t_k = k tau.
struct CharacteristicOrbit {
  Orbit orbit;  // (x_k, u_k, p_k): DP minimizer, u_k = T_{t_k}^- phi(x_k), p_k its centered gradient
  Jet source;   // (x_0, phi(x_0), phi'(x_0))
  Orbit ode;    // contact flow from the source jet over the witness span
  std::vector<double> witness;  // |u_ode(t_k) - T_{t_k}^- phi(x_ode(t_k))| over the witness span
  double max_witness = 0.0;
  double ode_divergence = 0.0;  // max phase distance between ODE and DP states over the witness span
};

CharacteristicOrbit characteristic_orbit(const ContactModel& model, const ScalarField& phi, double x_target, double t,
                                         const LaxParams& params, const CharacteristicOptions& opts = {});

/// Greedy cluster: the jet with most neighbours within radius, its neighbourhood and centroid.
struct JetCluster {
  std::vector<std::size_t> members;
  PhasePoint centroid;
};
JetCluster largest_cluster(const std::vector<PhasePoint>& jets, double radius);

struct SemiInfiniteOptions {
  int targets = 8;
  double cluster_tol = 1e-3;
  double span = 40.0;  // forward integration of the limit jet
  double h = 1e-3;
  double witness_span = 2.0;
  double kam_tol = 1e-9;
  double t_max = 200.0;
};

struct SemiInfiniteResult {
  Orbit orbit;
  PhasePoint limit_jet;
  std::vector<PhasePoint> source_jets;
  std::size_t cluster_size = 0;
  ScalarField u_minus{PeriodicGrid(16)};
  PhasePoint omega_estimate;            // mean of the tail window
  double tail_distance = 0.0;           // max over the tail of the distance to the pseudograph of u_-
  std::vector<double> tail_u_defect;    // |u(t) - u_-(x(t))| over the tail window
  std::optional<PhasePoint> slice;      // saddle whose stable manifold the limit jet was shot onto
  bool refined = false;
};

SemiInfiniteResult semi_infinite_orbit(const ContactModel& model, const ScalarField& phi, const LaxParams& params,
                                       const std::vector<double>& horizons, const SemiInfiniteOptions& opts = {});

/// One-sided Hausdorff distance from the differentiable jets of u_minus to the flowed cloud of J^1_phi over [T, T+1].
double pseudograph_attainment(const ContactModel& model, const ScalarField& phi, const ScalarField& u_minus, double T,
                              std::size_t sample_count, double h = 1e-2);

struct HeteroclinicOptions {
  std::vector<double> epsilons;  // empty: eps0 2^-k, k = 1..8
  double accept_tol = 1e-2;
  double cluster_tol = 1e-3;
  double mollify_width = 0.0;  // <= 0: 2 dx
  double kam_tol = 1e-9;
  double t_max = 200.0;
  double horizon_extra = 20.0;  // DP horizon beyond the lower bound ln(eps0/eps)/Lambda
  int targets = 16;
  double span = 8.0;  // two-sided integration [-span, span]
  double h = 1e-3;
  bool refine = true;  // shooting correction of the cluster limit onto both invariant manifolds
  double refine_radius = 0.1;  // ... applied only when the raw orbit comes this close to both slices
  bool midpoint_rule = true;   // evaluate L at segment midpoints in every semigroup step of the construction
};

struct EpsilonRun {
  double epsilon = 0.0;
  double tau0 = 0.0;
  double tau_eps = 0.0;
  double t_lower = 0.0;
  double mollify_width = 0.0;  // smoothing actually used (0: none)
  std::vector<double> t_cross;         // per target, first crossing time
  std::vector<PhasePoint> crossings;   // per target, Z_eps(0)
  bool below_lower_bound = false;      // some crossing came earlier than ln(eps0/eps)/Lambda
};

struct HeteroclinicResult {
  Orbit orbit;  // time-ordered over [-span, span]
  ScalarField u_minus{PeriodicGrid(16)};
  ScalarField v_plus{PeriodicGrid(16)};
  double eps0 = 0.0;
  std::vector<EpsilonRun> runs;
  PhasePoint limit_raw;
  PhasePoint limit;
  std::size_t cluster_size = 0;
  std::optional<PhasePoint> alpha_slice, omega_slice;
  double alpha_distance = 0.0, omega_distance = 0.0;  // refined orbit ends to the slices
  double alpha_distance_raw = 0.0, omega_distance_raw = 0.0;
  double alpha_approach_raw = 0.0, omega_approach_raw = 0.0;  // closest approach of the raw halves to the slices
  double max_abs_H = 0.0;
  double tail_abs_H = 0.0;
  bool refined = false;
  bool accepted = false;
};

HeteroclinicResult heteroclinic_connect(const ContactModel& model, const ScalarField& phi, const LaxParams& params,
                                        const HeteroclinicOptions& opts = {});

struct SaddleConnectionOptions {
  int angles = 720;       // scan of the unstable plane of the source
  double radius = 1e-6;
  double t_max = 40.0;
  double scan_h = 1e-2;
  double span = 8.0;
  double h = 1e-3;
  int energy_sign = 0;  // +1 / -1: scan only seeds with H of that sign (H keeps its sign along orbits)
};

/// Direct connection from a saddle with a 2-d unstable manifold to one with a 2-d stable manifold:
/// angular scan of the unstable plane, then the same section shooting used to polish heteroclinic_connect.
struct SaddleConnection {
  Orbit orbit;
  PhasePoint alpha, omega;
  double scan_min_distance = 0.0;
  double alpha_distance = 0.0, omega_distance = 0.0;
  double max_abs_H = 0.0, tail_abs_H = 0.0;
  bool converged = false;
};

SaddleConnection saddle_connection(const ContactModel& model, const FixedPointInfo& alpha, const FixedPointInfo& omega,
                                   const SaddleConnectionOptions& opts = {});

void write_heteroclinic(const std::filesystem::path& orbit_csv, const std::filesystem::path& summary, const ContactModel& model,
                        const HeteroclinicResult& r);

enum class Verdict { Consistent, Violation };
const char* to_string(Verdict v);

struct ObstructionReport {
  Verdict verdict = Verdict::Consistent;
  double alpha_to_u_minus = 0.0;  // tail-window distances to the pseudographs
  double omega_to_v_plus = 0.0;
  bool above_v_plus = false;       // some orbit point has u > v_+(x)
  bool omega_above_u_minus = true; // every omega sample has u >= u_-(x) - tol
  std::string reason;
};

ObstructionReport obstruction_check(const ContactModel& model, const Orbit& orbit, const ScalarField& u_minus,
                                    const ScalarField& v_plus, double tol);

struct ClassificationReport {
  double x0 = 0.0, u0 = 0.0;
  int case_index = 0;
  bool boundary = false;  // equality declared within class_tol
  double u_bar_minus = 0.0;
  double u_under_plus = 0.0;
  std::string alpha_behavior, omega_behavior;
  std::string note;
  std::optional<Orbit> evidence;
  bool evidence_blowup = false;
  double evidence_blowup_t = 0.0;
};

struct ClassifyOptions {
  double evidence_span = 0.0;  // > 0: integrate a forward orbit as evidence
  double h = 1e-3;
};

ClassificationReport classify_minimizer(const ContactModel& model, const ScalarField& u_bar_minus, const ScalarField& u_under_plus,
                                        double x0, double u0, double class_tol, const ClassifyOptions& opts = {});

void write_classification(const std::filesystem::path& path, const ClassificationReport& r);

struct BusemannResult {
  ScalarField field{PeriodicGrid(16)};
  std::vector<ScalarField> stages;  // U_-(., t) along the t sequence
  double residual = 0.0;            // one-step backward fixed-point defect of the limit
  bool fixed_point = false;         // residual <= tol
  bool stabilized = false;          // last two stages within tol
  double monotonicity_violation = 0.0;  // max of U(., t_next) - U(., t) for t_next < t
  bool monotone = true;
};

/// U_-(x, t) = min over layers s <= s_max of h_{x(t), u(t)}(x, s), along a decreasing t sequence.
BusemannResult busemann_solution(const ContactModel& model, const Orbit& orbit, const LaxParams& params, const PeriodicGrid& grid,
                                 double s_max, const std::vector<double>& t_sequence, double tol = 1e-6);

enum class MinimalityMode { Global, SemiStatic };

struct MinimalityReport {
  MinimalityMode mode = MinimalityMode::Global;
  std::vector<double> defects;
  std::vector<std::pair<double, double>> pairs;
  std::size_t skipped = 0;
  double max_defect = 0.0;
  bool pass = false;
  double tol = 0.0;
};

struct MinimalityOptions {
  double tol = 0.0;        // <= 0: 5 dx
  double max_horizon = 40.0;
  double s_max = 40.0;     // semi-static search range
  std::uint64_t seed = 12345;
};

MinimalityReport minimality_test(const ContactModel& model, const Orbit& orbit, const LaxParams& params, const PeriodicGrid& grid,
                                 MinimalityMode mode, std::size_t pair_count, const MinimalityOptions& opts = {});

}  // namespace contact_kam
