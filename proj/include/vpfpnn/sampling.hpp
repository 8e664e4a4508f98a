#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "vpfpnn/rng.hpp"

namespace vpfpnn {

struct SampleCounts {
  int nt = 10;
  int nx = 10;
  int nv = 1000;
};

struct SampleDomain {
  double t_max = 1.0;
  double x_min = -1.0, x_max = 1.0;
  double v_min = -10.0, v_max = 10.0;
};

// One epoch's collocation points. Interior kinetic points are grouped into
// (t,x) blocks sharing a sorted velocity grid so the v-integral can use the
// trapezoid rule; 2-input systems only consume interior_tx / initial_x /
// boundary_ts.
struct CollocationBatch {
  std::vector<double> interior_t, interior_x, interior_v;  // flattened blocks
  int v_block = 0;                                         // points per block
  std::vector<std::pair<double, double>> interior_tx;      // one per block

  std::vector<std::pair<double, double>> initial_xv;       // (x,v), tensorized
  std::vector<double> initial_x;                           // sorted

  std::vector<double> boundary_t, boundary_v;              // flattened, per (t,side)
  std::vector<int> boundary_side;                          // -1 or +1
  std::vector<std::pair<double, int>> boundary_ts;         // distinct (t, side)

  int n_blocks() const { return static_cast<int>(interior_tx.size()); }
  int n_interior() const { return static_cast<int>(interior_t.size()); }
};

// Highest-loss (t,x) pairs carried into the next epoch, sorted descending.
struct ReuseBuffer {
  struct Entry {
    std::pair<double, double> tx;
    double loss = 0.0;
  };
  std::vector<Entry> entries;
  int capacity = 50;
};

CollocationBatch sample_batch(Xoshiro256pp& rng, const SampleDomain& domain,
                              const SampleCounts& counts);

// k pairs with the largest losses; ties keep the earlier list index.
std::vector<std::pair<double, double>> select_topk(
    const std::vector<std::pair<std::pair<double, double>, double>>& pointwise_losses, int k);

ReuseBuffer rebuild_reuse_buffer(
    const std::vector<std::pair<std::pair<double, double>, double>>& pointwise_losses, int capacity);

// Appends one fresh sorted v-block per buffered (t,x) to the interior set (and
// the pair itself to interior_tx). The incoming batch is otherwise untouched.
CollocationBatch merge_reuse(CollocationBatch batch, const ReuseBuffer& buffer, Xoshiro256pp& rng,
                             const SampleDomain& domain, int nv);

}  // namespace vpfpnn
