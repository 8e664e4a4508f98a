#include "vpfpnn/sampling.hpp"

#include <algorithm>
#include <numeric>

#include "vpfpnn/errors.hpp"

namespace vpfpnn {

namespace {
std::vector<double> sorted_uniform(Xoshiro256pp& rng, double lo, double hi, int n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  std::sort(v.begin(), v.end());
  return v;
}
}  // namespace

CollocationBatch sample_batch(Xoshiro256pp& rng, const SampleDomain& domain,
                              const SampleCounts& counts) {
  if (counts.nt < 1 || counts.nx < 1 || counts.nv < 2)
    throw ConfigError("sample_batch: counts must be >= 1 (nv >= 2)");
  if (!(domain.t_max > 0) || !(domain.x_max > domain.x_min) || !(domain.v_max > domain.v_min))
    throw ConfigError("sample_batch: invalid domain");

  CollocationBatch b;
  std::vector<double> ts(counts.nt), xs(counts.nx);
  for (auto& t : ts) t = rng.uniform(0.0, domain.t_max);
  for (auto& x : xs) x = rng.uniform(domain.x_min, domain.x_max);
  const std::vector<double> vs = sorted_uniform(rng, domain.v_min, domain.v_max, counts.nv);

  b.v_block = counts.nv;
  b.interior_t.reserve(static_cast<size_t>(counts.nt) * counts.nx * counts.nv);
  b.interior_x.reserve(b.interior_t.capacity());
  b.interior_v.reserve(b.interior_t.capacity());
  for (double t : ts) {
    for (double x : xs) {
      b.interior_tx.emplace_back(t, x);
      for (double v : vs) {
        b.interior_t.push_back(t);
        b.interior_x.push_back(x);
        b.interior_v.push_back(v);
      }
    }
  }

  b.initial_x = xs;
  std::sort(b.initial_x.begin(), b.initial_x.end());
  for (double x : b.initial_x)
    for (double v : vs) b.initial_xv.emplace_back(x, v);

  for (double t : ts) {
    for (int side : {-1, +1}) {
      b.boundary_ts.emplace_back(t, side);
      for (double v : vs) {
        b.boundary_t.push_back(t);
        b.boundary_side.push_back(side);
        b.boundary_v.push_back(v);
      }
    }
  }
  return b;
}

std::vector<std::pair<double, double>> select_topk(
    const std::vector<std::pair<std::pair<double, double>, double>>& pointwise_losses, int k) {
  if (k < 0) throw ConfigError("select_topk: k must be >= 0");
  const int n = static_cast<int>(pointwise_losses.size());
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const int take = std::min(k, n);
  std::partial_sort(idx.begin(), idx.begin() + take, idx.end(), [&](int a, int b) {
    if (pointwise_losses[a].second != pointwise_losses[b].second)
      return pointwise_losses[a].second > pointwise_losses[b].second;
    return a < b;
  });
  std::vector<std::pair<double, double>> out;
  out.reserve(take);
  for (int i = 0; i < take; ++i) out.push_back(pointwise_losses[idx[i]].first);
  return out;
}

ReuseBuffer rebuild_reuse_buffer(
    const std::vector<std::pair<std::pair<double, double>, double>>& pointwise_losses,
    int capacity) {
  ReuseBuffer buf;
  buf.capacity = capacity;
  const auto picked = select_topk(pointwise_losses, capacity);
  // select_topk returns pairs only; recover losses in pick order
  std::vector<int> idx(pointwise_losses.size());
  std::iota(idx.begin(), idx.end(), 0);
  const int take = static_cast<int>(picked.size());
  std::partial_sort(idx.begin(), idx.begin() + take, idx.end(), [&](int a, int b) {
    if (pointwise_losses[a].second != pointwise_losses[b].second)
      return pointwise_losses[a].second > pointwise_losses[b].second;
    return a < b;
  });
  for (int i = 0; i < take; ++i)
    buf.entries.push_back({pointwise_losses[idx[i]].first, pointwise_losses[idx[i]].second});
  return buf;
}

CollocationBatch merge_reuse(CollocationBatch batch, const ReuseBuffer& buffer, Xoshiro256pp& rng,
                             const SampleDomain& domain, int nv) {
  if (buffer.entries.empty()) return batch;
  if (nv < 2) throw ConfigError("merge_reuse: nv must be >= 2");
  if (batch.v_block != 0 && batch.v_block != nv)
    throw ConfigError("merge_reuse: v-block size mismatch");
  batch.v_block = nv;
  for (const auto& e : buffer.entries) {
    const auto vs = sorted_uniform(rng, domain.v_min, domain.v_max, nv);
    batch.interior_tx.push_back(e.tx);
    for (double v : vs) {
      batch.interior_t.push_back(e.tx.first);
      batch.interior_x.push_back(e.tx.second);
      batch.interior_v.push_back(v);
    }
  }
  return batch;
}

}  // namespace vpfpnn
