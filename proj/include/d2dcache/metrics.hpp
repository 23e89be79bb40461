#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

#include "d2dcache/auction.hpp"
#include "d2dcache/errors.hpp"
#include "d2dcache/geometry.hpp"
#include "d2dcache/radio.hpp"
#include "d2dcache/scenario.hpp"
#include "d2dcache/valuation.hpp"

namespace d2dcache {

struct MetricsReport
{
  double avg_delay = 0.0;             ///< seconds
  double backhaul_delay = 0.0;        ///< seconds; backhaul share of avg_delay
  double offloading_self = 0.0;       ///< cached locally
  double offloading_reachable = 0.0;  ///< cached locally or at a contact
  double welfare = 0.0;
  std::vector<double> per_ut_delay;
};

inline Point base_station_position(double side) { return {0.5 * side, 0.5 * side}; }

/// U = sum of v over cached (UT, chunk) pairs.
inline double social_welfare(const BinaryMatrix& x, const Matrix& v)
{
  if (x.rows() != v.rows() || x.cols() != v.cols()) throw Error("social_welfare: dimension mismatch");
  double u = 0.0;
  for (Eigen::Index n = 0; n < x.rows(); ++n) {
    for (Eigen::Index m = 0; m < x.cols(); ++m) {
      if (x(n, m)) u += v(n, m);
    }
  }
  return u;
}

/**
 * O_self counts demand served from the UT's own cache; O_reach also counts
 * demand for chunks cached at a UT it was in contact with (`reach(n, n')`).
 */
inline std::pair<double, double> offloading_ratio(const BinaryMatrix& x, const Matrix& f,
                                                  const BinaryMatrix& reach)
{
  const int N = static_cast<int>(x.rows());
  const int M = static_cast<int>(x.cols());
  double total = 0.0, self = 0.0, reachable = 0.0;
  for (int n = 0; n < N; ++n) {
    for (int m = 0; m < M; ++m) {
      total += f(n, m);
      if (x(n, m)) {
        self += f(n, m);
        reachable += f(n, m);
        continue;
      }
      for (int k = 0; k < N; ++k) {
        if (k != n && x(k, m) && reach(n, k)) {
          reachable += f(n, m);
          break;
        }
      }
    }
  }
  if (!(total > 0.0)) return {0.0, 0.0};
  return {self / total, reachable / total};
}

namespace detail {

struct WindowDelay
{
  std::vector<double> per_ut;
  std::vector<double> per_ut_backhaul;
  BinaryMatrix reach;
};

/**
 * Delay over one delivery window. Own-cache requests cost nothing. Other
 * requests go over D2D to the cached contact with the strongest worst-slot
 * signal, or else through the BS and backhaul. N_D counts distinct active
 * (receiver, provider) links; N_C counts UTs with any BS delivery.
 */
inline WindowDelay window_delay(const BinaryMatrix& x, const Matrix& f, const Trace& window,
                                const RadioParams& radio, double chunk_bits)
{
  const int N = static_cast<int>(x.rows());
  const int M = static_cast<int>(x.cols());
  const double neg_inf = -std::numeric_limits<double>::infinity();
  Matrix min_rx = Matrix::Constant(N, N, neg_inf);
  WindowDelay out{std::vector<double>(N, 0.0), std::vector<double>(N, 0.0),
                  BinaryMatrix::Zero(N, N)};
  for (int a = 0; a < N; ++a) {
    for (int b = a + 1; b < N; ++b) {
      double lo = std::numeric_limits<double>::infinity();
      bool contact = false;
      for (int t = 0; t < window.slots; ++t) {
        const double rx = link_rx_power_dbm(window, t, a, b, radio);
        if (!in_contact(rx, radio)) continue;
        contact = true;
        lo = std::min(lo, rx);
      }
      // Reachable on any contact slot; the rate uses the weakest contact slot.
      if (contact) {
        min_rx(a, b) = min_rx(b, a) = lo;
        out.reach(a, b) = out.reach(b, a) = 1;
      }
    }
  }

  // provider(n, m): -1 own cache, -2 BS, else the D2D provider.
  Eigen::MatrixXi provider(N, M);
  std::set<std::pair<int, int>> links;
  std::vector<bool> needs_bs(N, false);
  for (int n = 0; n < N; ++n) {
    for (int m = 0; m < M; ++m) {
      if (x(n, m)) {
        provider(n, m) = -1;
        continue;
      }
      int best = -2;
      double best_rx = neg_inf;
      for (int k = 0; k < N; ++k) {
        if (k == n || !x(k, m) || !out.reach(n, k)) continue;
        if (min_rx(n, k) > best_rx) {
          best_rx = min_rx(n, k);
          best = k;
        }
      }
      provider(n, m) = best;
      if (best >= 0) {
        links.emplace(n, best);
      } else if (f(n, m) > 0.0) {
        needs_bs[n] = true;
      }
    }
  }
  const int n_d = std::max<int>(1, static_cast<int>(links.size()));
  const int n_c = std::max<int>(1, static_cast<int>(std::count(needs_bs.begin(), needs_bs.end(), true)));
  const Point bs = base_station_position(window.area_side);
  for (int n = 0; n < N; ++n) {
    double bs_time = 0.0;
    if (needs_bs[n]) {
      const auto path = window.path(n);
      const Point mean = torus_mean(path, window.area_side);
      const double d_km = std::max(wrap_distance(mean, bs, window.area_side) / 1000.0,
                                   kMinLinkDistanceKm);
      bs_time = chunk_bits / rate_cellular(d_km, n_c, radio);
    }
    const double backhaul_time = chunk_bits / radio.backhaul_rate_bps;
    for (int m = 0; m < M; ++m) {
      const int p = provider(n, m);
      if (p == -1 || f(n, m) == 0.0) continue;
      if (p >= 0) {
        out.per_ut[n] += f(n, m) * chunk_bits / rate_d2d_from_rx(min_rx(n, p), n_d, radio);
      } else {
        out.per_ut[n] += f(n, m) * (bs_time + backhaul_time);
        out.per_ut_backhaul[n] += f(n, m) * backhaul_time;
      }
    }
  }
  return out;
}

}  // namespace detail

/**
 * Average access delay and offloading over independent delivery windows;
 * each window is a short trace of fresh positions.
 */
inline MetricsReport evaluate_placement(const BinaryMatrix& x, const PreferenceMatrix& pref,
                                        const Matrix& v, const std::vector<Trace>& windows,
                                        const RadioParams& radio, double chunk_bits)
{
  const int N = static_cast<int>(x.rows());
  if (pref.uts() != N || pref.chunks() != x.cols()) throw Error("evaluate_placement: dimension mismatch");
  if (windows.empty()) throw Error("evaluate_placement: need at least one delivery window");
  MetricsReport rep;
  rep.per_ut_delay.assign(N, 0.0);
  double backhaul = 0.0;
  for (const auto& w : windows) {
    if (w.uts != N) throw Error("evaluate_placement: window UT count mismatch");
    const auto wd = detail::window_delay(x, pref.f, w, radio, chunk_bits);
    for (int n = 0; n < N; ++n) {
      rep.per_ut_delay[n] += wd.per_ut[n];
      backhaul += wd.per_ut_backhaul[n];
    }
    const auto [o_self, o_reach] = offloading_ratio(x, pref.f, wd.reach);
    rep.offloading_self += o_self;
    rep.offloading_reachable += o_reach;
  }
  const double W = static_cast<double>(windows.size());
  for (auto& d : rep.per_ut_delay) d /= W;
  rep.avg_delay = N > 0 ? std::accumulate(rep.per_ut_delay.begin(), rep.per_ut_delay.end(), 0.0) / N : 0.0;
  rep.backhaul_delay = N > 0 ? backhaul / (W * N) : 0.0;
  rep.offloading_self /= W;
  rep.offloading_reachable /= W;
  rep.welfare = v.size() > 0 ? social_welfare(x, v) : 0.0;
  return rep;
}

inline MetricsReport access_delay(const Placement& pl, const std::vector<Trace>& windows,
                                  const PreferenceMatrix& pref, const RadioParams& radio,
                                  double chunk_bits)
{
  return evaluate_placement(pl.x, pref, Matrix(), windows, radio, chunk_bits);
}

}  // namespace d2dcache
