#include "contact_kam/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "contact_kam/errors.hpp"
#include "contact_kam/io.hpp"

namespace contact_kam {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

double wrap_angle(double x) {
  if (x >= -kPi && x < kPi) return x;
  double y = std::fmod(x + kPi, kTwoPi);
  if (y < 0.0) y += kTwoPi;
  y -= kPi;
  if (y >= kPi) y -= kTwoPi;
  return y;
}

double periodic_offset(double from, double to) { return wrap_angle(to - from); }

double periodic_distance(double x, double y) {
  double d = std::fmod(std::abs(x - y), kTwoPi);
  return std::min(d, kTwoPi - d);
}

PeriodicGrid::PeriodicGrid(std::size_t n) : n_(n), dx_(kTwoPi / static_cast<double>(n)) {
  if (n < 16 || n % 2 != 0) throw PreconditionError("grid size must be even and at least 16, got " + std::to_string(n));
}

double PeriodicGrid::x(std::size_t i) const { return -kPi + static_cast<double>(i) * dx_; }

std::size_t PeriodicGrid::wrap(long long i) const {
  const long long n = static_cast<long long>(n_);
  long long r = i % n;
  if (r < 0) r += n;
  return static_cast<std::size_t>(r);
}

std::size_t PeriodicGrid::nearest(double x) const {
  const double s = (wrap_angle(x) + kPi) / dx_;
  return wrap(std::llround(s));
}

ScalarField::ScalarField(PeriodicGrid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.n())
    throw PreconditionError("field has " + std::to_string(values_.size()) + " values for a grid of " + std::to_string(grid_.n()));
}

ScalarField::ScalarField(PeriodicGrid grid, double c) : grid_(grid), values_(grid.n(), c) {}

ScalarField ScalarField::from_function(PeriodicGrid grid, const std::function<double(double)>& f) {
  std::vector<double> v(grid.n());
  for (std::size_t i = 0; i < grid.n(); ++i) v[i] = f(grid.x(i));
  return ScalarField(grid, std::move(v));
}

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

bool ScalarField::finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double sup_distance(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid() == b.grid())) throw PreconditionError("fields live on different grids");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

double interpolate(const ScalarField& field, double x) {
  const PeriodicGrid& g = field.grid();
  const double s = (wrap_angle(x) + kPi) / g.dx();
  const double fl = std::floor(s);
  const double w = s - fl;
  const std::size_t i = g.wrap(static_cast<long long>(fl));
  if (w == 0.0) return field[i];
  return (1.0 - w) * field[i] + w * field[g.wrap(static_cast<long long>(i) + 1)];
}

ScalarField mollify(const ScalarField& field, double width) {
  const PeriodicGrid& g = field.grid();
  if (!(width >= g.dx() * (1.0 - 1e-12))) throw PreconditionError("mollifier width below grid spacing");
  const double sigma = 0.5 * width;
  const long long half = std::max<long long>(1, static_cast<long long>(std::ceil(3.0 * sigma / g.dx())));
  std::vector<double> w(static_cast<std::size_t>(2 * half + 1));
  double total = 0.0;
  for (long long k = -half; k <= half; ++k) {
    const double d = static_cast<double>(k) * g.dx();
    w[static_cast<std::size_t>(k + half)] = std::exp(-0.5 * d * d / (sigma * sigma));
    total += w[static_cast<std::size_t>(k + half)];
  }
  for (double& wk : w) wk /= total;
  // Work on deviations from the field minimum so a constant shift passes through unchanged.
  const double base = field.min();
  std::vector<double> out(g.n());
  for (std::size_t i = 0; i < g.n(); ++i) {
    double acc = 0.0;
    for (long long k = -half; k <= half; ++k)
      acc += w[static_cast<std::size_t>(k + half)] * (field[g.wrap(static_cast<long long>(i) + k)] - base);
    out[i] = std::clamp(base + acc, field.min(), field.max());
  }
  return ScalarField(g, std::move(out));
}

std::vector<Jet> PseudographSample::jets() const {
  std::vector<Jet> out;
  out.reserve(nodes.size());
  for (const auto& n : nodes) {
    if (n.differentiable) {
      out.push_back({n.x, n.u, n.p()});
    } else {
      out.push_back({n.x, n.u, n.p_back});
      out.push_back({n.x, n.u, n.p_fwd});
    }
  }
  return out;
}

std::vector<Jet> PseudographSample::differentiable_jets() const {
  std::vector<Jet> out;
  for (const auto& n : nodes)
    if (n.differentiable) out.push_back({n.x, n.u, n.p()});
  return out;
}

bool PseudographSample::all_differentiable() const {
  return std::all_of(nodes.begin(), nodes.end(), [](const PseudographNode& n) { return n.differentiable; });
}

std::size_t PseudographSample::kink_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const PseudographNode& n) { return !n.differentiable; }));
}

double default_kink_tol(const PeriodicGrid& grid, double curvature_bound) { return 10.0 * grid.dx() * curvature_bound; }

PseudographSample pseudograph_sample(const ScalarField& field, double kink_tol) {
  const PeriodicGrid& g = field.grid();
  PseudographSample s;
  s.nodes.resize(g.n());
  for (std::size_t i = 0; i < g.n(); ++i) {
    const double prev = field[g.wrap(static_cast<long long>(i) - 1)];
    const double next = field[g.wrap(static_cast<long long>(i) + 1)];
    PseudographNode& n = s.nodes[i];
    n.x = g.x(i);
    n.u = field[i];
    n.p_back = (field[i] - prev) / g.dx();
    n.p_fwd = (next - field[i]) / g.dx();
    n.differentiable = std::abs(n.p_fwd - n.p_back) < kink_tol;
  }
  return s;
}

double centered_gradient(const ScalarField& field, std::size_t i) {
  const PeriodicGrid& g = field.grid();
  return (field[g.wrap(static_cast<long long>(i) + 1)] - field[g.wrap(static_cast<long long>(i) - 1)]) / (2.0 * g.dx());
}

void write_field_csv(const std::filesystem::path& path, const ScalarField& field) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "x,value\n";
  for (std::size_t i = 0; i < field.size(); ++i) out << fmt_double(field.grid().x(i)) << ',' << fmt_double(field[i]) << '\n';
}

ScalarField read_field_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("x,value", 0) != 0) throw Error(path.string() + ": expected header x,value");
  std::vector<double> xs, vs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(path.string() + ": malformed row '" + line + "'");
    xs.push_back(parse_double(line.substr(0, comma)));
    vs.push_back(parse_double(line.substr(comma + 1)));
  }
  PeriodicGrid g(vs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (std::abs(xs[i] - g.x(i)) > 1e-9) throw Error(path.string() + ": row " + std::to_string(i) + " is not on the uniform grid");
  return ScalarField(g, std::move(vs));
}

}  // namespace contact_kam
