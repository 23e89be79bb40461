#pragma once

#include <algorithm>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "d2dcache/errors.hpp"
#include "d2dcache/geometry.hpp"
#include "d2dcache/mobility.hpp"
#include "d2dcache/mwis.hpp"
#include "d2dcache/pricing.hpp"
#include "d2dcache/scenario.hpp"
#include "d2dcache/valuation.hpp"

namespace d2dcache {

/// Cache placement x (N x M) with per-chunk winner sets.
struct Placement
{
  BinaryMatrix x;
  std::vector<std::vector<int>> winner_sets;
  double welfare = 0.0;

  [[nodiscard]] int uts() const noexcept { return static_cast<int>(x.rows()); }
  [[nodiscard]] int chunks() const noexcept { return static_cast<int>(x.cols()); }

  static Placement empty(int uts, int chunks)
  {
    return {BinaryMatrix::Zero(uts, chunks), std::vector<std::vector<int>>(chunks), 0.0};
  }
};

/// Rebuilds winner sets and welfare from x.
inline void refresh(Placement& pl, const Matrix& v)
{
  pl.winner_sets.assign(pl.chunks(), {});
  pl.welfare = 0.0;
  for (int m = 0; m < pl.chunks(); ++m) {
    for (int n = 0; n < pl.uts(); ++n) {
      if (!pl.x(n, m)) continue;
      pl.winner_sets[m].push_back(n);
      pl.welfare += v(n, m);
    }
  }
}

struct AuctionDiagnostics
{
  std::string solver;  ///< "sdp", "exact", "mixed", or "none"
  int sdp_calls = 0;
  int sdp_iterations = 0;
  double sdp_max_gap = 0.0;
  double sdp_bound = 0.0;  ///< sum of SDP dual bounds over solves
  bool exact_fallback = false;
  int rounds = 0;
  int sublease_adjusted = 0;
  int sublease_skipped = 0;
  int unpriceable = 0;
  std::vector<std::string> warnings;
};

struct AuctionOutcome
{
  Placement placement;
  PriceSchedule prices;
  AuctionDiagnostics diagnostics;
};

enum class PlacementSolver { sdp, exact };

/// Conflict feasibility per chunk and the per-UT capacity of `capacity` chunks.
inline bool placement_feasible(const Placement& pl, const BinaryMatrix& E, int capacity,
                               std::string* why = nullptr)
{
  for (int m = 0; m < pl.chunks(); ++m) {
    for (int a = 0; a < pl.uts(); ++a) {
      if (!pl.x(a, m)) continue;
      for (int b = a + 1; b < pl.uts(); ++b) {
        if (pl.x(b, m) && (E(a, b) || E(b, a))) {
          if (why) *why = "chunk " + std::to_string(m) + " cached by conflicting UTs " +
                          std::to_string(a) + " and " + std::to_string(b);
          return false;
        }
      }
    }
  }
  for (int n = 0; n < pl.uts(); ++n) {
    int held = 0;
    for (int m = 0; m < pl.chunks(); ++m) held += pl.x(n, m) ? 1 : 0;
    if (held > capacity) {
      if (why) *why = "UT " + std::to_string(n) + " holds " + std::to_string(held) + " chunks";
      return false;
    }
  }
  return true;
}

inline bool prices_valid(const PriceSchedule& ps, const Matrix& v, double tol = 1e-9)
{
  for (Eigen::Index n = 0; n < ps.p.rows(); ++n) {
    for (Eigen::Index m = 0; m < ps.p.cols(); ++m) {
      const double p = ps.p(n, m);
      if (p < -tol) return false;
      if (p > 0.0 && p > std::max(v(n, m), 0.0) + tol * std::max(1.0, std::abs(v(n, m)))) return false;
    }
  }
  return true;
}

/**
 * Stacked instance over all (chunk, UT, cache slot) triples. With a
 * capacity of h chunks, each UT contributes h slots; one slot holds at most
 * one chunk and one chunk occupies at most one slot of a UT. Vertex index
 * is (m * h + k) * N + n, which reduces to m * N + n for h = 1.
 */
inline WisInstance stacked_instance(const ValueVector& values, const BinaryMatrix& E, int capacity)
{
  const int N = values.uts();
  const int M = values.chunks();
  const int h = capacity;
  const int L = N * M * h;
  WisInstance inst{Vector(L), BinaryMatrix::Zero(L, L)};
  auto idx = [&](int m, int k, int n) { return (m * h + k) * N + n; };
  for (int m = 0; m < M; ++m) {
    for (int k = 0; k < h; ++k) {
      for (int n = 0; n < N; ++n) inst.values[idx(m, k, n)] = std::max(values.v(n, m), 0.0);
    }
  }
  for (int m = 0; m < M; ++m) {
    for (int k = 0; k < h; ++k) {
      for (int n = 0; n < N; ++n) {
        const int i = idx(m, k, n);
        for (int m2 = 0; m2 < M; ++m2) {
          for (int k2 = 0; k2 < h; ++k2) {
            for (int n2 = 0; n2 < N; ++n2) {
              const int j = idx(m2, k2, n2);
              if (i == j) continue;
              bool c = false;
              if (m == m2) {
                c = n == n2 || E(n, n2) || E(n2, n);
              } else {
                c = n == n2 && k == k2;
              }
              if (c) inst.conflicts(i, j) = 1;
            }
          }
        }
      }
    }
  }
  return inst;
}

inline Placement decompose(const Selection& sel, const ValueVector& values, int capacity)
{
  const int N = values.uts();
  const int M = values.chunks();
  Placement pl = Placement::empty(N, M);
  for (int m = 0; m < M; ++m) {
    for (int k = 0; k < capacity; ++k) {
      for (int n = 0; n < N; ++n) {
        if (sel.chi[(m * capacity + k) * N + n]) pl.x(n, m) = 1;
      }
    }
  }
  refresh(pl, values.v);
  return pl;
}

namespace detail {

/// SDP relaxation plus rounding, with the exact solver as fallback when the SDP fails.
inline Selection solve_with_sdp(const WisInstance& inst, const AuctionParams& params,
                                AuctionDiagnostics& diag)
{
  int positive = 0;
  for (int i = 0; i < inst.size(); ++i) positive += inst.values[i] > 0.0 ? 1 : 0;
  if (positive == 0) return {std::vector<std::uint8_t>(inst.size(), 0), 0.0};
  try {
    const auto sol = solve_sdp(inst, {params.sdp_gap_tol, params.sdp_max_iterations});
    ++diag.sdp_calls;
    diag.sdp_iterations += sol.iterations;
    diag.sdp_max_gap = std::max(diag.sdp_max_gap, sol.dual_gap);
    diag.sdp_bound += sol.dual_value;
    return round_solution(sol, inst, params.rounding_threshold);
  } catch (const SdpNonconvergence& e) {
    if (positive > params.exact_hard_limit) throw;
    diag.exact_fallback = true;
    diag.warnings.emplace_back(std::string("sdp fallback to exact: ") + e.what());
    return solve_exact(inst, {params.exact_limit, params.exact_hard_limit});
  }
}

inline void note_solver(AuctionDiagnostics& diag, const char* used)
{
  if (diag.solver.empty() || diag.solver == "none") {
    diag.solver = used;
  } else if (diag.solver != used) {
    diag.solver = "mixed";
  }
}

inline void record_price(AuctionOutcome& out, int m, const std::vector<int>& winners,
                         const ChunkPrice& cp)
{
  for (std::size_t a = 0; a < winners.size(); ++a) out.prices.p(winners[a], m) = cp.prices[a];
  out.prices.totals[m] = cp.prices.sum();
  out.prices.second_price[m] = cp.second_price;
  out.prices.status[m] = cp.sublease;
  switch (cp.sublease) {
    case SubleaseStatus::adjusted: ++out.diagnostics.sublease_adjusted; break;
    case SubleaseStatus::skipped:
      ++out.diagnostics.sublease_skipped;
      out.diagnostics.warnings.push_back("sublease guard skipped for chunk " + std::to_string(m) +
                                         ": " + std::to_string(winners.size()) + " winners");
      break;
    case SubleaseStatus::unpriceable: ++out.diagnostics.unpriceable; break;
    case SubleaseStatus::unchanged: break;
  }
}

}  // namespace detail

/**
 * Places all chunks in one weighted independent set problem over the
 * stacked instance, then prices each chunk against the UTs that won nothing.
 */
inline AuctionOutcome moac(const ValueVector& values, const BinaryMatrix& E,
                           const AuctionParams& params, int capacity = 1,
                           PlacementSolver solver = PlacementSolver::sdp)
{
  const int N = values.uts();
  const int M = values.chunks();
  if (E.rows() != N || E.cols() != N) throw Error("moac: conflict matrix dimension mismatch");
  AuctionOutcome out{Placement::empty(N, M), PriceSchedule(N, M), {}};
  out.diagnostics.solver = "none";
  out.diagnostics.rounds = 1;
  if (capacity < 1 || M == 0 || N == 0) return out;

  const WisInstance inst = stacked_instance(values, E, capacity);
  Selection sel;
  if (solver == PlacementSolver::exact) {
    sel = solve_exact(inst, {params.exact_limit, params.exact_hard_limit});
    detail::note_solver(out.diagnostics, "exact");
  } else {
    sel = detail::solve_with_sdp(inst, params, out.diagnostics);
    detail::note_solver(out.diagnostics, out.diagnostics.exact_fallback ? "exact" : "sdp");
  }
  out.placement = decompose(sel, values, capacity);

  std::vector<int> losers;
  for (int n = 0; n < N; ++n) {
    bool won = false;
    for (int m = 0; m < M && !won; ++m) won = out.placement.x(n, m) != 0;
    if (!won) losers.push_back(n);
  }
  for (int m = 0; m < M; ++m) {
    const auto& winners = out.placement.winner_sets[m];
    if (winners.empty()) continue;
    const Vector col = values.v.col(m);
    detail::record_price(out, m, winners, price_chunk(winners, losers, col, E, params));
  }
  return out;
}

inline AuctionOutcome moac(const ValueVector& values, const ConflictGraph& cg,
                           const AuctionParams& params, int capacity = 1,
                           PlacementSolver solver = PlacementSolver::sdp)
{
  return moac(values, cg.E, params, capacity, solver);
}

/// Chunk order for repeated auctions: popularity descending, ties by index.
inline std::vector<int> popularity_order(const Vector& F)
{
  std::vector<int> order(static_cast<std::size_t>(F.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return F[a] > F[b]; });
  return order;
}

/**
 * Auctions chunks one at a time in popularity order. Each round solves a
 * single-chunk problem over the remaining pool and prices the winners
 * against that round's losers. A UT leaves the pool once its cache is full.
 * Stops when the pool is empty, chunks run out, or no remaining pair
 * (UT in pool, unauctioned chunk) has positive value.
 */
inline AuctionOutcome mrac(const ValueVector& values, const BinaryMatrix& E, const Vector& F,
                           const AuctionParams& params, int capacity = 1)
{
  const int N = values.uts();
  const int M = values.chunks();
  if (E.rows() != N || E.cols() != N) throw Error("mrac: conflict matrix dimension mismatch");
  if (F.size() != M) throw Error("mrac: popularity length mismatch");
  AuctionOutcome out{Placement::empty(N, M), PriceSchedule(N, M), {}};
  out.diagnostics.solver = "none";
  if (capacity < 1) return out;

  std::vector<int> pool(N);
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<int> held(N, 0);
  const auto order = popularity_order(F);
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (pool.empty()) break;
    bool willing = false;
    for (std::size_t r2 = r; r2 < order.size() && !willing; ++r2) {
      for (int n : pool) {
        if (values.v(n, order[r2]) > 0.0) {
          willing = true;
          break;
        }
      }
    }
    if (!willing) break;

    const int m = order[r];
    ++out.diagnostics.rounds;
    const int k = static_cast<int>(pool.size());
    WisInstance inst{Vector(k), BinaryMatrix::Zero(k, k)};
    int positive = 0;
    for (int a = 0; a < k; ++a) {
      inst.values[a] = std::max(values.v(pool[a], m), 0.0);
      positive += inst.values[a] > 0.0 ? 1 : 0;
      for (int b = 0; b < k; ++b) {
        if (a != b && (E(pool[a], pool[b]) || E(pool[b], pool[a]))) inst.conflicts(a, b) = 1;
      }
    }
    if (positive == 0) continue;
    Selection sel;
    if (positive <= params.exact_limit) {
      sel = solve_exact(inst, {params.exact_limit, params.exact_hard_limit});
      detail::note_solver(out.diagnostics, "exact");
    } else {
      sel = detail::solve_with_sdp(inst, params, out.diagnostics);
      detail::note_solver(out.diagnostics, "sdp");
    }
    std::vector<int> winners, losers;
    for (int a = 0; a < k; ++a) (sel.chi[a] ? winners : losers).push_back(pool[a]);
    if (winners.empty()) continue;
    for (int n : winners) {
      out.placement.x(n, m) = 1;
      ++held[n];
    }
    const Vector col = values.v.col(m);
    detail::record_price(out, m, winners, price_chunk(winners, losers, col, E, params));
    std::erase_if(pool, [&](int n) { return held[n] >= capacity; });
  }
  refresh(out.placement, values.v);
  return out;
}

inline AuctionOutcome mrac(const ValueVector& values, const ConflictGraph& cg, const Vector& F,
                           const AuctionParams& params, int capacity = 1)
{
  return mrac(values, cg.E, F, params, capacity);
}

/// CSV rows chunk,ut,x,price for every (chunk, UT) pair.
inline void write_outcome_csv(std::ostream& os, const AuctionOutcome& out)
{
  std::ostringstream buf;
  buf.precision(17);
  buf << "chunk,ut,x,price\n";
  const auto& pl = out.placement;
  for (int m = 0; m < pl.chunks(); ++m) {
    for (int n = 0; n < pl.uts(); ++n) {
      buf << m << ',' << n << ',' << int(pl.x(n, m)) << ',' << out.prices.p(n, m) << '\n';
    }
  }
  os << buf.str();
}

/// Summary rows: welfare, then chunk,second_price,paid_total,sublease_status.
inline void write_outcome_summary(std::ostream& os, const AuctionOutcome& out)
{
  std::ostringstream buf;
  buf.precision(17);
  buf << "welfare," << out.placement.welfare << '\n';
  buf << "chunk,second_price,paid_total,sublease\n";
  for (int m = 0; m < out.placement.chunks(); ++m) {
    buf << m << ',' << out.prices.second_price[m] << ',' << out.prices.totals[m] << ','
        << to_string(out.prices.status[m]) << '\n';
  }
  os << buf.str();
}

}  // namespace d2dcache
