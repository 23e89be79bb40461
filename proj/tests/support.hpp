#pragma once

// Generators and brute-force oracles shared by the unit tests.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "d2dcache/geometry.hpp"
#include "d2dcache/mwis.hpp"
#include "d2dcache/rng.hpp"

namespace testsupport {

using d2dcache::BinaryMatrix;
using d2dcache::RandomStream;
using d2dcache::Vector;
using d2dcache::WisInstance;

/// Symmetric conflict matrix with edge probability p.
inline BinaryMatrix random_graph(int n, double p, RandomStream& rng)
{
  BinaryMatrix E = BinaryMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (rng.uniform() < p) E(i, j) = E(j, i) = 1;
    }
  }
  return E;
}

/// Values in [lo, hi), with a `zero_share` fraction set to exactly zero.
inline Vector random_values(int n, RandomStream& rng, double lo = 0.1, double hi = 10.0,
                            double zero_share = 0.0)
{
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform() < zero_share ? 0.0 : rng.uniform(lo, hi);
  return v;
}

inline WisInstance random_instance(int n, double p, RandomStream& rng, double zero_share = 0.0)
{
  WisInstance inst{random_values(n, rng, 0.1, 10.0, zero_share), random_graph(n, p, rng)};
  return inst;
}

/// Maximum welfare over all 2^L subsets; L <= 20.
inline double brute_force_mwis(const WisInstance& inst, std::uint32_t* best_mask = nullptr)
{
  const int L = inst.size();
  double best = 0.0;
  std::uint32_t arg = 0;
  for (std::uint32_t mask = 0; mask < (1U << L); ++mask) {
    bool ok = true;
    double w = 0.0;
    for (int i = 0; i < L && ok; ++i) {
      if (!((mask >> i) & 1U)) continue;
      w += inst.values[i];
      for (int j = i + 1; j < L && ok; ++j) {
        if (((mask >> j) & 1U) && inst.conflicts(i, j)) ok = false;
      }
    }
    if (ok && w > best) {
      best = w;
      arg = mask;
    }
  }
  if (best_mask) *best_mask = arg;
  return best;
}

inline std::vector<std::uint8_t> mask_to_chi(std::uint32_t mask, int L)
{
  std::vector<std::uint8_t> chi(L);
  for (int i = 0; i < L; ++i) chi[i] = (mask >> i) & 1U;
  return chi;
}

/// Largest surplus product prod(v - p) over 0 <= p <= v with sum p = total, by exhaustive grid.
/// The grid spans the surplus simplex sum q = sum v - total in steps of `step` times its size,
/// plus the clipping points q_i = v_i, so the relative error is scale free. Supports k <= 3.
inline double grid_nbs_product(const Vector& v, double total, double step)
{
  const auto k = v.size();
  const double slack = v.sum() - total;
  if (k == 1) return slack;
  const double h = step * slack;
  const long steps = slack > 0.0 ? static_cast<long>(1.0 / step + 0.5) : 0;
  auto candidates = [&](double hi, std::vector<double> extra) {
    std::vector<double> out;
    for (long j = 0; j <= steps && j * h <= hi; ++j) out.push_back(j * h);
    for (double e : extra) {
      if (e >= 0.0 && e <= hi) out.push_back(e);
    }
    return out;
  };
  auto inside = [](double q, double hi) { return q >= -1e-15 && q <= hi + 1e-12 * std::max(1.0, hi); };
  double best = -1.0;
  if (k == 2) {
    for (double q0 : candidates(std::min(v[0], slack), {v[0], slack - v[1]})) {
      const double q1 = slack - q0;
      if (inside(q1, v[1])) best = std::max(best, q0 * std::max(q1, 0.0));
    }
    return best;
  }
  for (double q0 : candidates(std::min(v[0], slack), {v[0], slack - v[1] - v[2]})) {
    const double rest = slack - q0;
    for (double q1 : candidates(std::min(v[1], rest), {v[1], rest - v[2]})) {
      const double q2 = rest - q1;
      if (inside(q2, v[2])) best = std::max(best, q0 * q1 * std::max(q2, 0.0));
    }
  }
  return best;
}

}  // namespace testsupport
