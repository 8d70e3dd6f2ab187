#include "contact_kam/variational.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "contact_kam/errors.hpp"
#include "contact_kam/io.hpp"

namespace contact_kam {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

const char* to_string(Direction d) { return d == Direction::Backward ? "backward" : "forward"; }

Direction parse_direction(const std::string& s) {
  if (s == "backward" || s == "-") return Direction::Backward;
  if (s == "forward" || s == "+") return Direction::Forward;
  throw PreconditionError("direction must be backward or forward, got '" + s + "'");
}

const char* to_string(KamStatus s) {
  switch (s) {
    case KamStatus::Converged: return "Converged";
    case KamStatus::DivergedMinus: return "DivergedMinus";
    case KamStatus::DivergedPlus: return "DivergedPlus";
    default: return "MaxTime";
  }
}

int LaxParams::offsets(const PeriodicGrid& grid) const {
  return std::max(1, static_cast<int>(std::ceil(v_max * tau / grid.dx() - 1e-12)));
}

void LaxParams::validate(const ContactModel& model) const {
  if (!(tau > 0.0)) throw PreconditionError("time step tau must be positive");
  if (!(v_max > 0.0)) throw PreconditionError("velocity window must be positive");
  if (!(u_clip > 0.0)) throw PreconditionError("u_clip must be positive");
  if (tau * model.lambda_bound() > 0.5 + 1e-12)
    throw PreconditionError("tau * Lambda = " + fmt_double(tau * model.lambda_bound()) + " exceeds 1/2");
}

LaxOperator::LaxOperator(const ContactModel& model, const PeriodicGrid& grid, const LaxParams& params)
    : model_(&model), grid_(grid), params_(params), m_(params.offsets(grid)) {
  params_.validate(model);
  if (m_ > 32767) throw PreconditionError("velocity window spans too many grid cells");
  if (model.is_separable()) {
    V2_.resize(2 * grid.n());
    lam2_.resize(2 * grid.n());
    for (std::size_t h = 0; h < 2 * grid.n(); ++h) {
      const double x = -std::numbers::pi + 0.5 * grid.dx() * static_cast<double>(h);
      V2_[h] = model.potential(x);
      lam2_[h] = model.rate(x);
    }
  }
  order_.push_back(0);
  for (int k = 1; k <= m_; ++k) {
    order_.push_back(-k);
    order_.push_back(k);
  }
}

double LaxOperator::lagrangian(std::size_t h, double u, int j) const {
  const double v = static_cast<double>(j) * grid_.dx() / params_.tau;
  if (!V2_.empty()) return v * v / (4.0 * model_->alpha()) - V2_[h] - lam2_[h] * u;
  const double x = -std::numbers::pi + 0.5 * grid_.dx() * static_cast<double>(h);
  return model_->lagrangian(x, u, v).value;
}

double LaxOperator::candidate(std::size_t i, int j, double y, Direction dir) const {
  const long long n2 = 2 * static_cast<long long>(grid_.n());
  long long h = 2 * static_cast<long long>(i);
  if (params_.l_point == LagrangianPoint::Midpoint) h += dir == Direction::Backward ? -j : j;
  h %= n2;
  if (h < 0) h += n2;
  const auto hh = static_cast<std::size_t>(h);
  const double tau = params_.tau;
  if (dir == Direction::Backward) {
    double L = lagrangian(hh, y, j);
    if (params_.u_update == UUpdate::Heun) L = lagrangian(hh, y + 0.5 * tau * L, j);
    return y + tau * L;
  }
  double L = lagrangian(hh, y, j);
  if (params_.u_update == UUpdate::Heun) L = lagrangian(hh, y - 0.5 * tau * L, j);
  return y - tau * L;
}

void LaxOperator::apply(const double* in, double* out, Direction dir, StepReport& report, std::int16_t* bp) const {
  const std::size_t n = grid_.n();
  const bool back = dir == Direction::Backward;
  const double clip = params_.u_clip;
  for (std::size_t i = 0; i < n; ++i) {
    double best = back ? kInf : -kInf;
    int best_j = 0;
    bool any = false;
    for (int j : order_) {
      const std::size_t src = grid_.wrap(static_cast<long long>(i) + (back ? -j : j));
      const double y = in[src];
      if (!std::isfinite(y)) continue;
      const double c = candidate(i, j, y, dir);
      if (!any || (back ? c < best : c > best)) {
        best = c;
        best_j = j;
        any = true;
      }
    }
    if (any) {
      if (best > clip) best = clip, ++report.clamped;
      else if (best < -clip) best = -clip, ++report.clamped;
      if (m_ > 0 && std::abs(best_j) == m_) ++report.window_hits;
    }
    out[i] = best;
    if (bp) bp[i] = static_cast<std::int16_t>(best_j);
  }
}

ScalarField LaxOperator::step(const ScalarField& phi, Direction dir, StepReport* report) const {
  if (!(phi.grid() == grid_)) throw PreconditionError("field grid does not match the operator grid");
  ScalarField out(grid_);
  StepReport local;
  apply(phi.values().data(), out.values().data(), dir, report ? *report : local);
  return out;
}

ScalarField lax_step(const ContactModel& model, const ScalarField& phi, const LaxParams& params, Direction dir, StepReport* report) {
  if (!phi.finite()) throw PreconditionError("initial field has non-finite values");
  return LaxOperator(model, phi.grid(), params).step(phi, dir, report);
}

EvolveResult semigroup_evolve(const ContactModel& model, const ScalarField& phi, const LaxParams& params, double t_final,
                              Direction dir, double snapshot_every) {
  if (!(t_final > 0.0)) throw PreconditionError("t_final must be positive");
  if (!phi.finite()) throw PreconditionError("initial field has non-finite values");
  const LaxOperator op(model, phi.grid(), params);
  const auto K = static_cast<std::size_t>(std::max(1LL, std::llround(t_final / params.tau)));
  const std::size_t every =
      snapshot_every > 0.0 ? static_cast<std::size_t>(std::max(1LL, std::llround(snapshot_every / params.tau))) : K;
  EvolveResult r;
  ScalarField cur = phi, next(phi.grid());
  for (std::size_t k = 1; k <= K; ++k) {
    op.apply(cur.values().data(), next.values().data(), dir, r.report);
    std::swap(cur, next);
    if (k % every == 0 || k == K) r.snapshots.push_back({static_cast<double>(k) * params.tau, cur});
  }
  return r;
}

WeakKamResult weak_kam_limit(const ContactModel& model, const ScalarField& phi, const LaxParams& params, Direction dir, double tol,
                             double t_max, double window) {
  if (!(tol > 0.0)) throw PreconditionError("tolerance must be positive");
  if (!phi.finite()) throw PreconditionError("initial field has non-finite values");
  const LaxOperator op(model, phi.grid(), params);
  const auto window_steps = static_cast<std::size_t>(std::max(1LL, std::llround(window / params.tau)));
  const auto max_steps = static_cast<std::size_t>(std::max(1LL, std::llround(t_max / params.tau)));
  WeakKamResult r{phi, dir, KamStatus::MaxTime, 0.0, 0.0, {}};
  ScalarField cur = phi, next(phi.grid()), anchor = phi;
  auto one_step_defect = [&](const ScalarField& f) {
    StepReport ignore;
    ScalarField g(f.grid());
    op.apply(f.values().data(), g.values().data(), dir, ignore);
    return sup_distance(f, g);
  };
  for (std::size_t k = 1; k <= max_steps; ++k) {
    op.apply(cur.values().data(), next.values().data(), dir, r.report);
    std::swap(cur, next);
    r.elapsed = static_cast<double>(k) * params.tau;
    if (cur.min() <= -params.u_clip) {
      r.status = KamStatus::DivergedMinus;
      break;
    }
    if (cur.max() >= params.u_clip) {
      r.status = KamStatus::DivergedPlus;
      break;
    }
    if (k % window_steps == 0) {
      if (sup_distance(cur, anchor) <= tol) {
        r.residual = one_step_defect(cur);
        if (r.residual <= tol) {
          r.status = KamStatus::Converged;
          r.field = cur;
          return r;
        }
      }
      anchor = cur;
    }
  }
  r.field = cur;
  r.residual = one_step_defect(cur);
  return r;
}

HjbResidual hjb_residual(const ContactModel& model, const ScalarField& u, double kink_tol) {
  HjbResidual r;
  for (const auto& node : pseudograph_sample(u, kink_tol).nodes) {
    if (!node.differentiable) continue;
    ++r.nodes;
    r.max_abs = std::max(r.max_abs, std::abs(model.hamiltonian(node.x, node.u, node.p())));
  }
  r.constant = r.max_abs / u.grid().dx();
  return r;
}

double ActionTable::value_at(double x, std::size_t k) const { return value(grid.nearest(x), k); }

ActionTable action_table(const ContactModel& model, double x0, double u0, const LaxParams& params, std::size_t K, Direction dir,
                         const PeriodicGrid& grid) {
  if (K < 1) throw PreconditionError("action table needs K >= 1");
  const LaxOperator op(model, grid, params);
  ActionTable t;
  t.i0 = grid.nearest(x0);
  t.x0 = grid.x(t.i0);
  t.u0 = u0;
  t.direction = dir;
  t.grid = grid;
  t.params = params;
  const double sentinel = dir == Direction::Backward ? kInf : -kInf;
  std::vector<double> seed(grid.n(), sentinel);
  seed[t.i0] = u0;
  t.layers.assign(K, std::vector<double>(grid.n()));
  t.backpointers.assign(K, std::vector<std::int16_t>(grid.n()));
  op.apply(seed.data(), t.layers[0].data(), dir, t.report, t.backpointers[0].data());
  for (std::size_t k = 1; k < K; ++k)
    op.apply(t.layers[k - 1].data(), t.layers[k].data(), dir, t.report, t.backpointers[k].data());
  return t;
}

std::vector<CurvePoint> backtrack_minimizer(const ActionTable& table, double x, std::size_t K) {
  if (K < 1 || K > table.K()) throw PreconditionError("backtrack horizon outside the table");
  const PeriodicGrid& g = table.grid;
  const std::size_t start = g.nearest(x);
  if (!std::isfinite(table.value(start, K))) throw PreconditionError("target unreachable within the velocity window");
  const double tau = table.params.tau;
  const bool back = table.direction == Direction::Backward;
  // nodes[k] is the node visited on layer k; layer 0 is the base point.
  std::vector<std::size_t> nodes(K + 1);
  nodes[K] = start;
  for (std::size_t k = K; k >= 1; --k) {
    const int j = table.backpointers[k - 1][nodes[k]];
    nodes[k - 1] = g.wrap(static_cast<long long>(nodes[k]) + (back ? -j : j));
  }
  if (nodes[0] != table.i0) throw NumericalError("backtracking did not return to the base point");
  std::vector<CurvePoint> curve(K + 1);
  for (std::size_t k = 0; k <= K; ++k) {
    const double u = k == 0 ? table.u0 : table.value(nodes[k], k);
    const std::size_t slot = back ? k : K - k;
    curve[slot] = {static_cast<double>(slot) * tau, g.x(nodes[k]), u, nodes[k]};
  }
  return curve;
}

void write_action_table_csv(const std::filesystem::path& path, const ActionTable& table) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "k,i,x,h,backpointer\n";
  for (std::size_t k = 1; k <= table.K(); ++k)
    for (std::size_t i = 0; i < table.grid.n(); ++i)
      out << k << ',' << i << ',' << fmt_double(table.grid.x(i)) << ',' << fmt_double(table.value(i, k)) << ','
          << table.backpointers[k - 1][i] << '\n';
}

void write_weak_kam(const std::filesystem::path& field_csv, const std::filesystem::path& summary, const WeakKamResult& r) {
  write_field_csv(field_csv, r.field);
  KeyValueFile kv;
  kv.set("direction", to_string(r.direction));
  kv.set("status", to_string(r.status));
  kv.set("residual", r.residual);
  kv.set("elapsed", r.elapsed);
  kv.set("clamped", std::to_string(r.report.clamped));
  kv.set("window_hits", std::to_string(r.report.window_hits));
  kv.write(summary);
}

}  // namespace contact_kam
