#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace vpfpnn {

// Strictly increasing 1D node set; the quadrature grid used everywhere.
struct Grid1D {
  std::vector<double> nodes;

  static Grid1D uniform(double lo, double hi, int n);
  static Grid1D from_sorted(std::vector<double> nodes);

  int size() const { return static_cast<int>(nodes.size()); }
  double front() const { return nodes.front(); }
  double back() const { return nodes.back(); }

  // Composite trapezoid weights: w0=(x1-x0)/2, wi=(x_{i+1}-x_{i-1})/2, ...
  std::vector<double> trapezoid_weights() const;
};

double trapezoid(std::span<const double> values, const Grid1D& grid);

// Running integral with prescribed value at the left endpoint.
std::vector<double> cumulative_trapezoid(std::span<const double> values, const Grid1D& grid,
                                         double anchor_value_at_left);

struct Norms {
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
};

// Quadrature-weighted L1/L2 and pointwise max of |a-b| on one grid.
Norms grid_norms(std::span<const double> a, std::span<const double> b, const Grid1D& grid);

// Same on a tensor grid; `a` and `b` are row-major [outer.size() x inner.size()].
Norms grid_norms_2d(std::span<const double> a, std::span<const double> b, const Grid1D& outer,
                    const Grid1D& inner);

// i.i.d. uniform draws from xoshiro256++, reproducible from the seed.
std::vector<double> uniform_sampler(uint64_t seed, double lo, double hi, int count);

// x*log(x) extended by 0 at x=0; x clamped to 1e-300 before the log so that
// underflowing softplus tails stay finite.
double xlogx(double x);

// Least-squares fit of log(y) = log_c - rate * t over the given samples.
struct DecayFit {
  double rate = 0.0;
  double log_c = 0.0;
  double r2 = 0.0;
  int n = 0;
  bool valid = false;
};
DecayFit fit_exponential_decay(std::span<const double> times, std::span<const double> values);

}  // namespace vpfpnn
