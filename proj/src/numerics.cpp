#include "vpfpnn/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "vpfpnn/errors.hpp"
#include "vpfpnn/rng.hpp"

namespace vpfpnn {

Grid1D Grid1D::uniform(double lo, double hi, int n) {
  if (n < 2) throw ConfigError("Grid1D::uniform: need at least 2 nodes");
  if (!(hi > lo)) throw ConfigError("Grid1D::uniform: empty interval");
  Grid1D g;
  g.nodes.resize(n);
  const double h = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) g.nodes[i] = lo + h * i;
  g.nodes.back() = hi;
  return g;
}

Grid1D Grid1D::from_sorted(std::vector<double> nodes) {
  if (nodes.size() < 2) throw ConfigError("Grid1D: need at least 2 nodes");
  for (size_t i = 1; i < nodes.size(); ++i)
    if (!(nodes[i] > nodes[i - 1])) throw ConfigError("Grid1D: nodes must be strictly increasing");
  Grid1D g;
  g.nodes = std::move(nodes);
  return g;
}

std::vector<double> Grid1D::trapezoid_weights() const {
  const int n = size();
  std::vector<double> w(n);
  w[0] = 0.5 * (nodes[1] - nodes[0]);
  for (int i = 1; i + 1 < n; ++i) w[i] = 0.5 * (nodes[i + 1] - nodes[i - 1]);
  w[n - 1] = 0.5 * (nodes[n - 1] - nodes[n - 2]);
  return w;
}

double trapezoid(std::span<const double> values, const Grid1D& grid) {
  if (static_cast<int>(values.size()) != grid.size())
    throw ConfigError("trapezoid: values/grid length mismatch");
  double sum = 0.0;
  for (int i = 0; i + 1 < grid.size(); ++i)
    sum += 0.5 * (grid.nodes[i + 1] - grid.nodes[i]) * (values[i] + values[i + 1]);
  return sum;
}

std::vector<double> cumulative_trapezoid(std::span<const double> values, const Grid1D& grid,
                                         double anchor_value_at_left) {
  if (static_cast<int>(values.size()) != grid.size())
    throw ConfigError("cumulative_trapezoid: values/grid length mismatch");
  std::vector<double> out(values.size());
  out[0] = anchor_value_at_left;
  for (int i = 1; i < grid.size(); ++i)
    out[i] = out[i - 1] + 0.5 * (grid.nodes[i] - grid.nodes[i - 1]) * (values[i] + values[i - 1]);
  return out;
}

Norms grid_norms(std::span<const double> a, std::span<const double> b, const Grid1D& grid) {
  if (a.size() != b.size() || static_cast<int>(a.size()) != grid.size())
    throw ConfigError("grid_norms: length mismatch");
  const auto w = grid.trapezoid_weights();
  Norms n;
  double l2sq = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(a[i] - b[i]);
    n.l1 += w[i] * d;
    l2sq += w[i] * d * d;
    n.linf = std::max(n.linf, d);
  }
  n.l2 = std::sqrt(l2sq);
  return n;
}

Norms grid_norms_2d(std::span<const double> a, std::span<const double> b, const Grid1D& outer,
                    const Grid1D& inner) {
  const size_t expect = static_cast<size_t>(outer.size()) * inner.size();
  if (a.size() != b.size() || a.size() != expect) throw ConfigError("grid_norms_2d: length mismatch");
  const auto wo = outer.trapezoid_weights();
  const auto wi = inner.trapezoid_weights();
  Norms n;
  double l2sq = 0.0;
  for (int i = 0; i < outer.size(); ++i) {
    for (int j = 0; j < inner.size(); ++j) {
      const double d = std::abs(a[i * inner.size() + j] - b[i * inner.size() + j]);
      const double w = wo[i] * wi[j];
      n.l1 += w * d;
      l2sq += w * d * d;
      n.linf = std::max(n.linf, d);
    }
  }
  n.l2 = std::sqrt(l2sq);
  return n;
}

std::vector<double> uniform_sampler(uint64_t seed, double lo, double hi, int count) {
  if (count < 1) throw ConfigError("uniform_sampler: count must be >= 1");
  if (!(hi > lo)) throw ConfigError("uniform_sampler: empty interval");
  Xoshiro256pp rng(seed);
  std::vector<double> out(count);
  for (auto& x : out) x = rng.uniform(lo, hi);
  return out;
}

double xlogx(double x) {
  if (x <= 0.0) return 0.0;
  const double c = std::max(x, 1e-300);
  return c * std::log(c);
}

DecayFit fit_exponential_decay(std::span<const double> times, std::span<const double> values) {
  DecayFit fit;
  if (times.size() != values.size() || times.size() < 3) return fit;
  const int n = static_cast<int>(times.size());
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (int i = 0; i < n; ++i) {
    const double y = std::log(values[i]);
    st += times[i];
    sy += y;
    stt += times[i] * times[i];
    sty += times[i] * y;
  }
  const double denom = n * stt - st * st;
  if (denom == 0.0) return fit;
  const double slope = (n * sty - st * sy) / denom;
  fit.log_c = (sy - slope * st) / n;
  fit.rate = -slope;
  double ss_res = 0, ss_tot = 0;
  const double ymean = sy / n;
  for (int i = 0; i < n; ++i) {
    const double y = std::log(values[i]);
    const double yhat = fit.log_c + slope * times[i];
    ss_res += (y - yhat) * (y - yhat);
    ss_tot += (y - ymean) * (y - ymean);
  }
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.n = n;
  fit.valid = true;
  return fit;
}

}  // namespace vpfpnn
