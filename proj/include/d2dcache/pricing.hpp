#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "d2dcache/errors.hpp"
#include "d2dcache/geometry.hpp"
#include "d2dcache/mwis.hpp"
#include "d2dcache/scenario.hpp"

namespace d2dcache {

/// Optimal welfare of a single-chunk auction over `pool`, exact when small enough.
struct ReauctionResult
{
  double welfare = 0.0;
  bool exact = true;
};

inline ReauctionResult reauction(const Vector& chunk_values, const BinaryMatrix& E,
                                 const std::vector<int>& pool, const AuctionParams& params)
{
  std::vector<int> bidders;
  for (int n : pool) {
    if (chunk_values[n] > 0.0) bidders.push_back(n);
  }
  if (bidders.empty()) return {};
  WisInstance inst{Vector(static_cast<Eigen::Index>(bidders.size())),
                   BinaryMatrix::Zero(static_cast<Eigen::Index>(bidders.size()),
                                      static_cast<Eigen::Index>(bidders.size()))};
  for (std::size_t a = 0; a < bidders.size(); ++a) {
    inst.values[a] = chunk_values[bidders[a]];
    for (std::size_t b = 0; b < bidders.size(); ++b) {
      if (a != b && (E(bidders[a], bidders[b]) || E(bidders[b], bidders[a]))) inst.conflicts(a, b) = 1;
    }
  }
  if (static_cast<int>(bidders.size()) <= params.exact_hard_limit) {
    return {solve_exact(inst, {params.exact_limit, params.exact_hard_limit}).welfare, true};
  }
  const auto sol = solve_sdp(inst, {params.sdp_gap_tol, params.sdp_max_iterations});
  return {round_solution(sol, inst, params.rounding_threshold).welfare, false};
}

/// U_{-W}: optimal single-chunk welfare among `losers`; 0 when none bid.
inline double second_price_total(const Vector& chunk_values, const BinaryMatrix& E,
                                 const std::vector<int>& losers, const AuctionParams& params = {})
{
  return reauction(chunk_values, E, losers, params).welfare;
}

/**
 * Product-maximizing split of `total` among winners with values v:
 * surpluses q_n = min(lambda, v_n) with sum q = sum v - total, p = v - q.
 */
inline Vector nbs_prices(const Vector& v, double total)
{
  const auto k = v.size();
  if (k == 0) {
    if (total > 0.0) throw Error("nbs_prices: positive total with no winners");
    return Vector(0);
  }
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!(v[i] >= 0.0)) throw Error("nbs_prices: winner values must be >= 0");
  }
  const double sum_v = v.sum();
  const double slack = 1e-12 * std::max(1.0, sum_v);
  if (!(total >= -slack)) throw Error("nbs_prices: total must be >= 0");
  if (total > sum_v + slack) throw Error("nbs_prices: total exceeds the winners' welfare");
  total = std::clamp(total, 0.0, sum_v);
  double budget = sum_v - total;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  Vector q(k);
  std::size_t i = 0;
  for (; i < order.size(); ++i) {
    const double lambda = budget / static_cast<double>(order.size() - i);
    if (lambda <= v[order[i]]) break;
    q[order[i]] = v[order[i]];
    budget -= v[order[i]];
  }
  if (i < order.size()) {
    const double lambda = budget / static_cast<double>(order.size() - i);
    for (std::size_t j = i; j < order.size(); ++j) q[order[j]] = lambda;
  }
  Vector p = (v - q).cwiseMax(0.0);
  // Put the rounding residue on the largest price so the sum is exact.
  Eigen::Index top = 0;
  p.maxCoeff(&top);
  p[top] = std::clamp(total - (p.sum() - p[top]), 0.0, v[top]);
  return p;
}

enum class SubleaseStatus { unchanged, adjusted, unpriceable, skipped };

inline const char* to_string(SubleaseStatus s)
{
  switch (s) {
    case SubleaseStatus::unchanged: return "unchanged";
    case SubleaseStatus::adjusted: return "adjusted";
    case SubleaseStatus::unpriceable: return "unpriceable";
    case SubleaseStatus::skipped: return "skipped";
  }
  return "?";
}

/// One subset constraint: sum of prices over `members` (bitmask over winners) >= bound.
struct SubleaseConstraint
{
  std::uint32_t members = 0;
  double bound = 0.0;
};

struct SubleaseResult
{
  Vector prices;
  SubleaseStatus status = SubleaseStatus::unchanged;
  std::vector<SubleaseConstraint> constraints;
};

/**
 * For each nonempty winner subset S, the losers free of conflict with the
 * remaining winners form the eligible pool; the subset must pay at least
 * the pool's re-auction optimum.
 */
inline std::vector<SubleaseConstraint> sublease_constraints(const std::vector<int>& winners,
                                                            const Vector& chunk_values,
                                                            const BinaryMatrix& E,
                                                            const std::vector<int>& losers,
                                                            const AuctionParams& params)
{
  const int k = static_cast<int>(winners.size());
  std::vector<SubleaseConstraint> out;
  for (std::uint32_t mask = 1; mask < (1U << k); ++mask) {
    std::vector<int> eligible;
    for (int l : losers) {
      bool free = true;
      for (int a = 0; a < k && free; ++a) {
        if (!((mask >> a) & 1U) && (E(l, winners[a]) || E(winners[a], l))) free = false;
      }
      if (free) eligible.push_back(l);
    }
    out.push_back({mask, reauction(chunk_values, E, eligible, params).welfare});
  }
  return out;
}

namespace detail {

/**
 * maximize sum log q  s.t.  G q <= h,  with q > 0, by a log-barrier
 * method: Newton centering for increasing t. `q0` must be strictly feasible.
 */
inline Vector barrier_max_log(const Matrix& G, const Vector& h, Vector q)
{
  const auto n = q.size();
  const double m = static_cast<double>(G.rows());
  auto phi = [&](const Vector& x, double t, bool& ok) {
    const Vector s = h - G * x;
    ok = (x.array() > 0.0).all() && (s.array() > 0.0).all();
    if (!ok) return std::numeric_limits<double>::infinity();
    return -t * x.array().log().sum() - s.array().log().sum();
  };
  for (double t = 1.0; (m + static_cast<double>(n)) / t > 1e-13; t *= 8.0) {
    for (int it = 0; it < 100; ++it) {
      const Vector s = h - G * q;
      const Vector inv_s = s.cwiseInverse();
      const Vector grad = -t * q.cwiseInverse() + G.transpose() * inv_s;
      Matrix H = G.transpose() * inv_s.cwiseAbs2().asDiagonal() * G;
      H.diagonal() += t * q.cwiseInverse().cwiseAbs2();
      const Vector dx = -H.ldlt().solve(grad);
      const double decrement = -grad.dot(dx);
      if (!(decrement > 1e-14)) break;
      double step = 1.0;
      bool ok = false;
      const double f0 = phi(q, t, ok);
      for (int ls = 0; ls < 60; ++ls) {
        const double f1 = phi(q + step * dx, t, ok);
        if (ok && f1 <= f0 - 0.25 * step * decrement) break;
        step *= 0.5;
      }
      if (!ok) break;
      q += step * dx;
    }
  }
  return q;
}

}  // namespace detail

/**
 * Enforces the anti-sublease subset constraints on NBS prices. Subsets whose
 * surplus capacity is (numerically) zero pin their members' surplus to zero;
 * the rest is re-solved as a log-barrier program in the surpluses q = v - p.
 */
inline SubleaseResult sublease_guard(const std::vector<int>& winners, const Vector& prices,
                                     const Vector& chunk_values, const BinaryMatrix& E,
                                     const std::vector<int>& losers, const AuctionParams& params)
{
  SubleaseResult out{prices, SubleaseStatus::unchanged, {}};
  const int k = static_cast<int>(winners.size());
  if (k == 0) return out;
  if (k > params.sublease_enum_limit || k > 30) {
    out.status = SubleaseStatus::skipped;
    return out;
  }
  out.constraints = sublease_constraints(winners, chunk_values, E, losers, params);

  Vector v(k);
  for (int a = 0; a < k; ++a) v[a] = chunk_values[winners[a]];
  const double scale = std::max(v.maxCoeff(), 1e-300);
  const double tol = 1e-9 * std::max(1.0, v.sum());

  auto subset_sum = [&](const Vector& x, std::uint32_t mask) {
    double s = 0.0;
    for (int a = 0; a < k; ++a) {
      if ((mask >> a) & 1U) s += x[a];
    }
    return s;
  };
  bool violated = false;
  for (const auto& c : out.constraints) {
    if (subset_sum(prices, c.members) < c.bound - tol) violated = true;
  }
  if (!violated) return out;

  // Surplus caps: sum_{a in S} q_a <= sum_{a in S} v_a - U_S.
  std::vector<double> cap(out.constraints.size());
  for (std::size_t j = 0; j < cap.size(); ++j) {
    cap[j] = subset_sum(v, out.constraints[j].members) - out.constraints[j].bound;
    if (cap[j] < -tol) {
      out.prices = v;
      out.status = SubleaseStatus::unpriceable;
      return out;
    }
  }
  std::uint32_t pinned = 0;
  for (std::size_t j = 0; j < cap.size(); ++j) {
    if (cap[j] <= tol) pinned |= out.constraints[j].members;
  }
  std::vector<int> free_idx;
  for (int a = 0; a < k; ++a) {
    if (!((pinned >> a) & 1U) && v[a] > tol) free_idx.push_back(a);
  }
  Vector q = Vector::Zero(k);
  if (!free_idx.empty()) {
    const int nf = static_cast<int>(free_idx.size());
    std::vector<Eigen::RowVectorXd> rows;
    std::vector<double> rhs;
    for (std::size_t j = 0; j < cap.size(); ++j) {
      const std::uint32_t mem = out.constraints[j].members;
      if (mem & pinned) continue;
      Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(nf);
      for (int f = 0; f < nf; ++f) {
        if ((mem >> free_idx[f]) & 1U) r[f] = 1.0;
      }
      if (r.sum() == 0.0) continue;
      rows.push_back(r);
      rhs.push_back(cap[j] / scale);
    }
    for (int f = 0; f < nf; ++f) {
      Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(nf);
      r[f] = 1.0;
      rows.push_back(r);
      rhs.push_back(v[free_idx[f]] / scale);
    }
    Matrix G(static_cast<Eigen::Index>(rows.size()), nf);
    Vector h(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t j = 0; j < rows.size(); ++j) {
      G.row(static_cast<Eigen::Index>(j)) = rows[j];
      h[static_cast<Eigen::Index>(j)] = rhs[j];
    }
    // Strictly feasible start: each q_f well inside every cap it appears in.
    Vector q0(nf);
    for (int f = 0; f < nf; ++f) {
      double lim = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < G.rows(); ++j) {
        if (G(j, f) > 0.0) lim = std::min(lim, h[j] / G.row(j).sum());
      }
      q0[f] = 0.5 * lim;
    }
    const Vector qf = detail::barrier_max_log(G, h, q0);
    for (int f = 0; f < nf; ++f) q[free_idx[f]] = qf[f] * scale;
  }
  out.prices = (v - q).cwiseMax(0.0).cwiseMin(v);
  out.status = SubleaseStatus::adjusted;
  return out;
}

/// Prices of every (UT, chunk) pair with per-chunk totals and second prices.
struct PriceSchedule
{
  Matrix p;
  std::vector<double> totals;
  std::vector<double> second_price;
  std::vector<SubleaseStatus> status;

  explicit PriceSchedule(int uts = 0, int chunks = 0)
    : p(Matrix::Zero(uts, chunks)), totals(chunks, 0.0), second_price(chunks, 0.0),
      status(chunks, SubleaseStatus::unchanged)
  {}
};

struct ChunkPrice
{
  Vector prices;  ///< aligned with the winner list
  double second_price = 0.0;
  SubleaseStatus sublease = SubleaseStatus::unchanged;
  bool exact_second_price = true;
};

/**
 * Second price over `losers`, NBS split among `winners`, then the sublease
 * guard. A second price above the winners' welfare cannot be split and
 * marks the chunk unpriceable (p = v).
 */
inline ChunkPrice price_chunk(const std::vector<int>& winners, const std::vector<int>& losers,
                              const Vector& chunk_values, const BinaryMatrix& E,
                              const AuctionParams& params)
{
  ChunkPrice out;
  const int k = static_cast<int>(winners.size());
  out.prices = Vector::Zero(k);
  if (k == 0) return out;
  Vector v(k);
  for (int a = 0; a < k; ++a) v[a] = std::max(chunk_values[winners[a]], 0.0);
  const auto re = reauction(chunk_values, E, losers, params);
  out.second_price = re.welfare;
  out.exact_second_price = re.exact;
  if (out.second_price > v.sum() * (1.0 + 1e-12)) {
    out.prices = v;
    out.sublease = SubleaseStatus::unpriceable;
    return out;
  }
  out.prices = nbs_prices(v, std::min(out.second_price, v.sum()));
  const auto guarded = sublease_guard(winners, out.prices, chunk_values, E, losers, params);
  out.prices = guarded.prices;
  out.sublease = guarded.status;
  return out;
}

}  // namespace d2dcache
