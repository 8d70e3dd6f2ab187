#include "contact_kam/properties.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "contact_kam/errors.hpp"
#include "contact_kam/parallel.hpp"

namespace contact_kam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double uniform(std::mt19937_64& rng, double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

ScalarField evolve(const LaxOperator& op, ScalarField f, std::size_t K, Direction dir) {
  for (std::size_t k = 0; k < K; ++k) f = op.step(f, dir);
  return f;
}

// Per-trial results reduced in trial order.
struct Outcome {
  double defect = 0.0;
  bool ok = true;
};

PropertyCheck reduce(std::string name, const std::vector<Outcome>& out, double tol) {
  PropertyCheck c;
  c.name = std::move(name);
  c.trials = out.size();
  c.tol = tol;
  for (const auto& o : out) {
    c.worst = std::max(c.worst, o.defect);
    if (!o.ok) ++c.failures;
  }
  c.pass = c.failures == 0;
  return c;
}

}  // namespace

ScalarField random_field(const PeriodicGrid& grid, std::uint64_t seed, double amp) {
  std::mt19937_64 rng(seed);
  double a[4], b[4];
  for (int k = 0; k < 4; ++k) {
    a[k] = uniform(rng, -amp, amp);
    b[k] = uniform(rng, -amp, amp);
  }
  return ScalarField::from_function(grid, [&](double x) {
    double v = a[0];
    for (int k = 1; k < 4; ++k) v += a[k] * std::cos(k * x) + b[k] * std::sin(k * x);
    return v;
  });
}

ScalarField enumerate_paths(const ContactModel& model, const ScalarField& phi, const LaxParams& params, std::size_t K, Direction dir) {
  const PeriodicGrid& g = phi.grid();
  const LaxOperator op(model, g, params);
  const int m = op.m();
  const int width = 2 * m + 1;
  const bool back = dir == Direction::Backward;
  std::size_t paths = 1;
  for (std::size_t k = 0; k < K; ++k) paths *= static_cast<std::size_t>(width);
  ScalarField out(g);
  std::vector<int> js(K);
  for (std::size_t i = 0; i < g.n(); ++i) {
    double best = back ? kInf : -kInf;
    for (std::size_t code = 0; code < paths; ++code) {
      std::size_t c = code;
      long long shift = 0;
      for (std::size_t s = 0; s < K; ++s) {
        js[s] = static_cast<int>(c % width) - m;
        c /= width;
        shift += js[s];
      }
      // Departure node, then replay the steps forward in time.
      long long node = static_cast<long long>(i) + (back ? -shift : shift);
      double u = phi[g.wrap(node)];
      for (std::size_t s = 0; s < K; ++s) {
        node += back ? js[s] : -js[s];
        u = op.candidate(g.wrap(node), js[s], u, dir);
      }
      best = back ? std::min(best, u) : std::max(best, u);
    }
    out[i] = best;
  }
  return out;
}

std::vector<PropertyCheck> run_property_suite(const ContactModel& model, const LaxParams& params, const PropertySuiteOptions& opts) {
  if (opts.trials == 0) throw PreconditionError("property suite needs at least one trial");
  params.validate(model);
  const PeriodicGrid g(opts.n);
  const LaxOperator op(model, g, params);
  const double dx = g.dx();
  const std::size_t T = opts.trials;
  const auto steps_t = static_cast<std::size_t>(std::max(1.0, std::round(opts.t / params.tau)));
  const double t_eff = static_cast<double>(steps_t) * params.tau;
  std::vector<PropertyCheck> checks;

  {
    std::vector<Outcome> out(T);
    parallel_for(T, [&](std::size_t k) {
      std::mt19937_64 rng(opts.seed + 1000003 * k + 1);
      const double x0 = g.x(pick(rng, 0, g.n() - 1));
      const double u0 = uniform(rng, -1.0, 1.0);
      const double u1 = u0 + uniform(rng, 0.01, 0.5);
      const std::size_t K = pick(rng, 1, opts.max_steps);
      const auto a = action_table(model, x0, u0, params, K, Direction::Backward, g);
      const auto b = action_table(model, x0, u1, params, K, Direction::Backward, g);
      Outcome o;
      o.defect = -kInf;
      for (std::size_t l = 0; l < K; ++l)
        for (std::size_t i = 0; i < g.n(); ++i) {
          const double lo = a.layers[l][i], hi = b.layers[l][i];
          if (std::isfinite(lo) != std::isfinite(hi)) o.ok = false;
          if (!std::isfinite(lo) || !std::isfinite(hi)) continue;
          o.defect = std::max(o.defect, lo - hi);
          if (!(lo < hi)) o.ok = false;
        }
      o.defect = std::max(0.0, o.defect);
      out[k] = o;
    });
    checks.push_back(reduce("u0-monotonicity", out, 0.0));
  }
  {
    std::vector<Outcome> out(T);
    const double tol = 1e-9;
    parallel_for(T, [&](std::size_t k) {
      std::mt19937_64 rng(opts.seed + 1000003 * k + 2);
      const double x0 = g.x(pick(rng, 0, g.n() - 1));
      const double u0 = uniform(rng, -1.0, 1.0);
      const std::size_t K1 = pick(rng, 1, std::max<std::size_t>(1, opts.max_steps / 2));
      const std::size_t K2 = pick(rng, 1, std::max<std::size_t>(1, opts.max_steps / 2));
      const auto full = action_table(model, x0, u0, params, K1 + K2, Direction::Backward, g);
      std::vector<double> comp(g.n(), kInf);
      for (std::size_t y = 0; y < g.n(); ++y) {
        const double hy = full.layers[K1 - 1][y];
        if (!std::isfinite(hy)) continue;
        const auto part = action_table(model, g.x(y), hy, params, K2, Direction::Backward, g);
        for (std::size_t i = 0; i < g.n(); ++i) comp[i] = std::min(comp[i], part.layers[K2 - 1][i]);
      }
      Outcome o;
      for (std::size_t i = 0; i < g.n(); ++i) {
        const double a = full.layers[K1 + K2 - 1][i];
        if (std::isfinite(a) != std::isfinite(comp[i])) {
          o.ok = false;
          continue;
        }
        if (std::isfinite(a)) o.defect = std::max(o.defect, std::abs(a - comp[i]));
      }
      o.ok = o.ok && o.defect <= tol;
      out[k] = o;
    });
    checks.push_back(reduce("markov-recomposition", out, tol));
  }
  {
    std::vector<Outcome> out(T);
    const double tol = 5.0 * dx;
    parallel_for(T, [&](std::size_t k) {
      std::mt19937_64 rng(opts.seed + 1000003 * k + 3);
      const std::size_t i0 = pick(rng, 0, g.n() - 1);
      const double u0 = uniform(rng, -1.0, 1.0);
      const std::size_t K = pick(rng, 1, opts.max_steps);
      const auto fwd0 = action_table(model, g.x(i0), u0, params, K, Direction::Backward, g);
      std::vector<std::size_t> reach;
      for (std::size_t i = 0; i < g.n(); ++i)
        if (std::isfinite(fwd0.layers[K - 1][i])) reach.push_back(i);
      const std::size_t i1 = reach[pick(rng, 0, reach.size() - 1)];
      const double u1 = fwd0.layers[K - 1][i1];
      const auto back = action_table(model, g.x(i1), u1, params, K, Direction::Forward, g);
      Outcome o;
      o.defect = std::abs(back.layers[K - 1][i0] - u0);
      o.ok = o.defect <= tol;
      out[k] = o;
    });
    checks.push_back(reduce("reversibility", out, tol));
  }
  {
    std::vector<Outcome> out(T);
    const double tol = 5.0 * dx;
    parallel_for(T, [&](std::size_t k) {
      const ScalarField phi = random_field(g, opts.seed + 1000003 * k + 4);
      const ScalarField mp = evolve(op, evolve(op, phi, steps_t, Direction::Forward), steps_t, Direction::Backward);
      const ScalarField pm = evolve(op, evolve(op, phi, steps_t, Direction::Backward), steps_t, Direction::Forward);
      Outcome o;
      for (std::size_t i = 0; i < g.n(); ++i) o.defect = std::max({o.defect, phi[i] - mp[i], pm[i] - phi[i]});
      o.ok = o.defect <= tol;
      out[k] = o;
    });
    checks.push_back(reduce("duality", out, tol));
  }
  {
    std::vector<Outcome> out(T);
    const double tol = 10.0 * dx;
    const double growth = std::exp(model.lambda_bound() * t_eff);
    parallel_for(T, [&](std::size_t k) {
      const ScalarField phi = random_field(g, opts.seed + 1000003 * k + 5);
      const ScalarField psi = random_field(g, opts.seed + 1000003 * k + 6);
      Outcome o;
      for (Direction dir : {Direction::Backward, Direction::Forward}) {
        const double lhs = sup_distance(evolve(op, phi, steps_t, dir), evolve(op, psi, steps_t, dir));
        o.defect = std::max(o.defect, lhs - growth * sup_distance(phi, psi));
      }
      o.defect = std::max(0.0, o.defect);
      o.ok = o.defect <= tol;
      out[k] = o;
    });
    checks.push_back(reduce("expansiveness", out, tol));
  }
  {
    std::vector<Outcome> out(T);
    const double tol = 1e-12;
    const PeriodicGrid gb(opts.brute_n);
    const LaxOperator opb(model, gb, params);
    parallel_for(T, [&](std::size_t k) {
      std::mt19937_64 rng(opts.seed + 1000003 * k + 7);
      const std::size_t K = pick(rng, 1, opts.brute_K);
      const Direction dir = k % 2 == 0 ? Direction::Backward : Direction::Forward;
      const ScalarField phi = random_field(gb, opts.seed + 1000003 * k + 8);
      Outcome o;
      o.defect = sup_distance(evolve(opb, phi, K, dir), enumerate_paths(model, phi, params, K, dir));
      o.ok = o.defect <= tol;
      out[k] = o;
    });
    checks.push_back(reduce("path-enumeration", out, tol));
  }
  return checks;
}

}  // namespace contact_kam
