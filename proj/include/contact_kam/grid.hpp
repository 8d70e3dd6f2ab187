#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <vector>

namespace contact_kam {

/// Wraps an angle into [-pi, pi).
double wrap_angle(double x);

/// Geodesic distance on the circle of length 2 pi, in [0, pi].
double periodic_distance(double x, double y);

/// Signed shortest displacement from `from` to `to`, in [-pi, pi).
double periodic_offset(double from, double to);

/// Uniform grid x_i = -pi + i*dx on the circle.
class PeriodicGrid {
 public:
  explicit PeriodicGrid(std::size_t n);

  std::size_t n() const { return n_; }
  double dx() const { return dx_; }
  double x(std::size_t i) const;
  std::size_t wrap(long long i) const;
  std::size_t nearest(double x) const;

  friend bool operator==(const PeriodicGrid& a, const PeriodicGrid& b) { return a.n_ == b.n_; }

 private:
  std::size_t n_;
  double dx_;
};

/// Nodal samples of a continuous function on the circle.
class ScalarField {
 public:
  ScalarField(PeriodicGrid grid, std::vector<double> values);
  explicit ScalarField(PeriodicGrid grid, double c = 0.0);

  static ScalarField from_function(PeriodicGrid grid, const std::function<double(double)>& f);

  const PeriodicGrid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  double min() const;
  double max() const;
  bool finite() const;

 private:
  PeriodicGrid grid_;
  std::vector<double> values_;
};

double sup_distance(const ScalarField& a, const ScalarField& b);

/// Periodic piecewise-linear interpolation.
double interpolate(const ScalarField& field, double x);

/// Circular convolution with a normalized Gaussian of standard deviation width/2, cut at three deviations.
ScalarField mollify(const ScalarField& field, double width);

struct Jet {
  double x = 0.0;
  double u = 0.0;
  double p = 0.0;
};

struct PseudographNode {
  double x = 0.0;
  double u = 0.0;
  double p_back = 0.0;
  double p_fwd = 0.0;
  bool differentiable = true;
  double p() const { return 0.5 * (p_back + p_fwd); }
};

struct PseudographSample {
  std::vector<PseudographNode> nodes;

  // One jet per differentiable node, two (backward, forward) per kink.
  std::vector<Jet> jets() const;
  std::vector<Jet> differentiable_jets() const;
  bool all_differentiable() const;
  std::size_t kink_count() const;
};

/// Default kink tolerance 10*dx*curvature_bound.
double default_kink_tol(const PeriodicGrid& grid, double curvature_bound = 1.0);

PseudographSample pseudograph_sample(const ScalarField& field, double kink_tol);

/// Centered-difference derivative at node i.
double centered_gradient(const ScalarField& field, std::size_t i);

/// Field CSV: header "x,value", one row per node.
void write_field_csv(const std::filesystem::path& path, const ScalarField& field);
ScalarField read_field_csv(const std::filesystem::path& path);

}  // namespace contact_kam
