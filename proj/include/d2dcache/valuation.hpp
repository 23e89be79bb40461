#pragma once

#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#include "d2dcache/errors.hpp"
#include "d2dcache/geometry.hpp"
#include "d2dcache/mobility.hpp"
#include "d2dcache/rng.hpp"
#include "d2dcache/scenario.hpp"

namespace d2dcache {

/// N x M request intensities; each row sums to one.
struct PreferenceMatrix
{
  Matrix f;

  [[nodiscard]] int uts() const noexcept { return static_cast<int>(f.rows()); }
  [[nodiscard]] int chunks() const noexcept { return static_cast<int>(f.cols()); }
};

/// Revenues v (N x M) and the per-entry participation flag (v > 0).
struct ValueVector
{
  Matrix v;
  BinaryMatrix participating;

  [[nodiscard]] int uts() const noexcept { return static_cast<int>(v.rows()); }
  [[nodiscard]] int chunks() const noexcept { return static_cast<int>(v.cols()); }

  /// Chunk-major stacking: entry (m * N + n) holds v(n, m).
  [[nodiscard]] Vector stacked() const
  {
    return Eigen::Map<const Vector>(v.data(), v.size());
  }

  /// Stacked values with non-participating entries set to zero.
  [[nodiscard]] Vector stacked_bids() const
  {
    Vector out = stacked();
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = std::max(out[i], 0.0);
    return out;
  }
};

/// p_m = m^-alpha / sum_j j^-alpha, m = 1..M.
inline Vector zipf_popularity(int chunks, double alpha)
{
  if (chunks < 1) throw Error("zipf_popularity: need at least one chunk");
  if (!(alpha >= 0.0)) throw Error("zipf_popularity: alpha must be >= 0");
  Vector p(chunks);
  for (int m = 0; m < chunks; ++m) p[m] = std::pow(static_cast<double>(m + 1), -alpha);
  return p / p.sum();
}

/**
 * Homogeneous mode gives every UT the Zipf law. Perturbed mode permutes
 * each UT's ranking by `preference_swaps` random adjacent transpositions
 * before assigning the Zipf weights.
 */
inline PreferenceMatrix generate_preferences(const ContentParams& cp, int uts, RandomStream rng)
{
  const int m_count = cp.chunk_count;
  const Vector p = zipf_popularity(m_count, cp.zipf_alpha);
  PreferenceMatrix out{Matrix(uts, m_count)};
  const int swaps = cp.preference_mode == PreferenceMode::perturbed ? cp.preference_swaps : 0;
  std::vector<int> rank_to_chunk(m_count);
  for (int n = 0; n < uts; ++n) {
    std::iota(rank_to_chunk.begin(), rank_to_chunk.end(), 0);
    if (m_count > 1) {
      for (int k = 0; k < swaps; ++k) {
        const auto i = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(m_count - 1)));
        std::swap(rank_to_chunk[i], rank_to_chunk[i + 1]);
      }
    }
    for (int r = 0; r < m_count; ++r) out.f(n, rank_to_chunk[r]) = p[r];
  }
  return out;
}

/// F_m = sum_n f(n, m) / sum_{n, m} f(n, m).
inline Vector local_popularity(const PreferenceMatrix& pref)
{
  const double total = pref.f.sum();
  if (!(total > 0.0)) throw Error("local_popularity: preferences sum to zero");
  return pref.f.colwise().sum().transpose() / total;
}

/**
 * Sharing profit of UT n for chunk m: theta * s * sum over conflict
 * neighbors n' of f(n', m) * mean_rate(n, n') * e(n, n').
 */
inline double sharing_profit(int n, int m, const PreferenceMatrix& pref, const Matrix& mean_rate,
                             const EncounterMatrix& em, const ConflictGraph& cg,
                             double unit_transmission_cost, double chunk_size_bits)
{
  double acc = 0.0;
  for (int k = 0; k < cg.size(); ++k) {
    if (k == n || !cg.E(n, k)) continue;
    acc += pref.f(k, m) * mean_rate(n, k) * em.e(n, k);
  }
  return unit_transmission_cost * chunk_size_bits * acc;
}

/// v = w - zeta * c_n, with c_n in chunk units.
inline double revenue(double w, double unit_cache_cost, double cached_chunks)
{
  return w - unit_cache_cost * cached_chunks;
}

inline ValueVector build_value_vector(const PreferenceMatrix& pref, const Matrix& mean_rate,
                                      const EncounterMatrix& em, const ConflictGraph& cg,
                                      const ContentParams& cp)
{
  const int n_count = pref.uts();
  const int m_count = pref.chunks();
  ValueVector out{Matrix(n_count, m_count), BinaryMatrix::Zero(n_count, m_count)};
  for (int m = 0; m < m_count; ++m) {
    for (int n = 0; n < n_count; ++n) {
      const double w = sharing_profit(n, m, pref, mean_rate, em, cg, cp.unit_transmission_cost,
                                      cp.chunk_size_bits);
      // One chunk occupies c_n = s bits; measured in chunk units so zeta is per chunk.
      const double v = revenue(w, cp.unit_cache_cost, 1.0);
      out.v(n, m) = v;
      out.participating(n, m) = v > 0.0 ? 1 : 0;
    }
  }
  return out;
}

}  // namespace d2dcache
